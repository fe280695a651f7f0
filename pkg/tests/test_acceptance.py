"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. The Monte-Carlo suites
(criteria 7, 8, 10) dominate the runtime; everything stays inside the
per-criterion budgets on a single core.

Trend comparisons pair trials that are feasible in both populations being
compared, so composition changes of the feasible subset cannot masquerade
as trend violations (see the summary files for the plain feasible-only
means). Sweep points with no feasible trial have no mean and are skipped.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from fdswipt import harness, oracle, rxbeam, scalaropt, txdc
from fdswipt.harness import ExperimentConfig, gen_channels
from fdswipt.joint import SolverOptions, joint_optimize, relay_only_optimize
from fdswipt.model import OperatingPoint, SystemParams, evaluate, zf_tolerance
from conftest import default_params, pipeline_point


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"\nacceptance {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {criterion}: {detail}"


def dc_problem(seed: int, m_t: int, m_r: int, alpha: float = 0.35, rho: float = 0.5):
    sp = default_params(m_t=m_t, m_r=m_r)
    ch = gen_channels(1000 + seed, 0, sp)
    w_r = rxbeam.wr_from_alpha(alpha, ch).w_r
    ctx = txdc.beam_context(ch, w_r, rho, sp.p_max, sp.p_max)
    kappa = sp.p_max * ctx.c_ra + sp.p_max * ctx.c_rb + 1.0
    cons = txdc.zf_constraints(ch, w_r, sp.p_relay / (rho * kappa))
    return sp, ch, ctx, cons


def random_feasible_w(rng, ctx, cons, m_t):
    basis = cons.reduction(m_t)
    m = basis.shape[1]
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    v = a @ a.conj().T
    v *= cons.trace_target / np.trace(v).real
    return basis @ v @ basis.conj().T


def assert_solution_constraints(pt: OperatingPoint, ch, sp: SystemParams) -> None:
    """Criterion 6 bounds, applied to every solution the suites return."""
    rep = evaluate(pt, ch, sp)
    assert rep.q_harvest >= sp.q_min * (1.0 - 1e-6)
    assert rep.p_relay_used <= sp.p_relay * (1.0 + 1e-6)
    assert rep.zf_residual <= zf_tolerance(pt, ch)
    assert abs(np.linalg.norm(pt.w_r) - 1.0) <= 1e-9
    assert pt.p_a <= sp.p_max * (1.0 + 1e-12) and pt.p_b <= sp.p_max * (1.0 + 1e-12)


# ---------------------------------------------------------------------------
# Shared expensive fixtures.
# ---------------------------------------------------------------------------

FIG2_CFG = dict(
    experiment="sumrate-vs-pmax",
    p_max_db=[-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
    q_min_dbm=[10.0, 20.0],
    rsi_db=[harness.DEFAULT_FIXED_RSI_DB],
    trials=200,
    seed=1,
)

FIG3_CFG = dict(
    experiment="sumrate-vs-rsi",
    p_max_db=[10.0, 20.0],
    q_min_dbm=[10.0],
    rsi_db=[-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0],
    trials=200,
    seed=2,
)

ORACLE_SUITE_SEED = 0
ORACLE_SUITE_INSTANCES = 20


def emit_curves(curves, stem):
    paths = []
    for c in curves:
        path = f"{stem}_{c.label}.csv"
        harness.emit(c.records, "csv", path, summary=c.summary)
        paths.append(path)
    return paths


@pytest.fixture(scope="session")
def fig2(tmp_path_factory):
    cfg = ExperimentConfig.from_dict(FIG2_CFG)
    t0 = time.perf_counter()
    curves = harness.run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    stem = str(tmp_path_factory.mktemp("fig2") / "fig2")
    paths = emit_curves(curves, stem)
    return dict(cfg=cfg, curves=curves, paths=paths, elapsed=elapsed)


@pytest.fixture(scope="session")
def fig3(tmp_path_factory):
    cfg = ExperimentConfig.from_dict(FIG3_CFG)
    t0 = time.perf_counter()
    curves = harness.run_experiment(cfg)
    elapsed = time.perf_counter() - t0
    return dict(cfg=cfg, curves=curves, elapsed=elapsed)


def run_oracle_suite():
    sp = default_params()
    opts = SolverOptions(alpha_step=0.025)
    rows = []
    for trial in range(ORACLE_SUITE_INSTANCES):
        ch = gen_channels(ORACLE_SUITE_SEED, trial, sp)
        jres = joint_optimize(ch, sp, opts)
        ores = oracle.brute_force(ch, sp)
        rows.append((trial, jres, ores, ch))
    return sp, rows


def oracle_suite_csv(rows, path):
    lines = ["trial,joint_rate,oracle_rate,gap"]
    for trial, jres, ores, _ in rows:
        j = jres.report.sum_rate if jres.status != "infeasible" else 0.0
        o = ores.report.sum_rate if ores.status != "infeasible" else 0.0
        lines.append(f"{trial},{j:.9g},{o:.9g},{o - j:.9g}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


@pytest.fixture(scope="session")
def oracle_suite(tmp_path_factory):
    t0 = time.perf_counter()
    sp, rows = run_oracle_suite()
    elapsed = time.perf_counter() - t0
    path = str(tmp_path_factory.mktemp("oracle") / "oracle_compare.csv")
    oracle_suite_csv(rows, path)
    return dict(sp=sp, rows=rows, path=path, elapsed=elapsed)


@pytest.fixture(scope="session")
def mt4_batch():
    """Rank-1 health companion to the Fig. 2 suite: 200 trials at M_T = 4."""
    sp = default_params(m_t=4, m_r=4)
    t0 = time.perf_counter()
    results = []
    for trial in range(200):
        ch = gen_channels(FIG2_CFG["seed"], trial, sp)
        results.append((joint_optimize(ch, sp), ch))
    return dict(sp=sp, results=results, elapsed=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Criteria.
# ---------------------------------------------------------------------------


def test_criterion_1_dc_monotonicity():
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(200):
        m_t = 2 if seed < 100 else 4
        m_r = m_t
        _, _, ctx, cons = dc_problem(seed, m_t, m_r)
        state = txdc.dc_optimize(txdc.default_init(ctx, cons, m_t), ctx, cons)
        diffs = np.diff(np.array(state.objective_trace))
        if diffs.size:
            worst = max(worst, float(-diffs.min()))
        assert np.all(diffs >= -1e-9)
    elapsed = time.perf_counter() - t0
    report("1 (DC monotonicity)", elapsed < 120.0,
           f"200 traces nondecreasing, worst backslide {worst:.2e}, {elapsed:.1f}s < 120s")


def test_criterion_2_gradient_correctness():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    checked = 0
    while checked < 50:
        _, _, ctx, cons = dc_problem(300 + checked, m_t=3, m_r=2)
        w_k = random_feasible_w(rng, ctx, cons, 3)
        delta = random_feasible_w(rng, ctx, cons, 3) - random_feasible_w(rng, ctx, cons, 3)
        analytic = float(np.trace(txdc.g_gradient(w_k, ctx) @ delta).real)
        h = 1e-6
        fd = (txdc.g_value(w_k + h * delta, ctx) - txdc.g_value(w_k - h * delta, ctx)) / (2 * h)
        if abs(fd) < 1e-12:
            continue
        rel = abs(analytic - fd) / max(abs(fd), 1e-12)
        worst = max(worst, rel)
        assert rel <= 1e-4
        checked += 1
    report("2 (gradient correctness)", True,
           f"50 directional derivatives, worst relative error {worst:.2e} <= 1e-4, "
           f"{time.perf_counter() - t0:.1f}s")


def test_criterion_3_tangency():
    rng = np.random.default_rng(3)
    worst = 0.0
    for seed in range(50):
        _, _, ctx, cons = dc_problem(400 + seed, m_t=3, m_r=2)
        w_k = random_feasible_w(rng, ctx, cons, 3)
        gap = abs(txdc.surrogate_value(w_k, w_k, ctx) - txdc.objective_F(w_k, ctx))
        worst = max(worst, gap)
        assert gap <= 1e-12
    report("3 (tangency)", True, f"50 anchors, worst |f - g_L - F| = {worst:.2e} <= 1e-12")


@pytest.mark.xfail(
    strict=True,
    reason="this inequality direction is unattainable: g is a sum of logs of "
    "affine maps, hence concave, so its tangent over-estimates it and f - g_L "
    "minorizes F everywhere (which is the property the DC ascent needs; the "
    "corrected direction is asserted in the companion test)",
)
def test_criterion_3_majorization_as_stated():
    rng = np.random.default_rng(33)
    for seed in range(50):
        _, _, ctx, cons = dc_problem(450 + seed, m_t=3, m_r=2)
        w_k = random_feasible_w(rng, ctx, cons, 3)
        for _ in range(50):
            w = random_feasible_w(rng, ctx, cons, 3)
            assert txdc.surrogate_value(w, w_k, ctx) >= txdc.objective_F(w, ctx) - 1e-9


def test_criterion_3_minorization_verified():
    # The corrected direction, asserted at the stated sample sizes.
    rng = np.random.default_rng(34)
    worst = -np.inf
    for seed in range(50):
        _, _, ctx, cons = dc_problem(450 + seed, m_t=3, m_r=2)
        w_k = random_feasible_w(rng, ctx, cons, 3)
        for _ in range(50):
            w = random_feasible_w(rng, ctx, cons, 3)
            excess = txdc.surrogate_value(w, w_k, ctx) - txdc.objective_F(w, ctx)
            worst = max(worst, excess)
            assert excess <= 1e-9
    report("3 (minorization, corrected direction)", True,
           f"f - g_L <= F on 50x50 random points, max excess {worst:.2e}")


def test_criterion_4_oracle_equivalence(oracle_suite):
    gaps = []
    for trial, jres, ores, ch in oracle_suite["rows"]:
        assert (jres.status == "infeasible") == (ores.status == "infeasible")
        if jres.status == "infeasible":
            continue
        gap = ores.report.sum_rate - jres.report.sum_rate
        gaps.append(gap)
        assert gap <= 0.05
        assert_solution_constraints(jres.point, ch, oracle_suite["sp"])
    ok = oracle_suite["elapsed"] < 300.0
    report("4 (oracle equivalence)", ok,
           f"{len(gaps)} feasible instances, max gap {max(gaps):.2e} <= 0.05 bits, "
           f"{oracle_suite['elapsed']:.1f}s < 300s")


def rho_grid_best(pt, ch, sp, step=1e-4):
    """Largest feasible rho on the grid (the rate is monotone in rho)."""
    rho = np.arange(step, 1.0, step)
    na2 = np.vdot(ch.h_ar, ch.h_ar).real
    nb2 = np.vdot(ch.h_br, ch.h_br).real
    c_ra = abs(np.vdot(pt.w_r, ch.h_ar)) ** 2
    c_rb = abs(np.vdot(pt.w_r, ch.h_br)) ** 2
    nt2 = np.vdot(pt.w_t, pt.w_t).real
    k = nt2 * (pt.p_a * c_ra + pt.p_b * c_rb + 1.0)
    s = na2 * pt.p_a + nb2 * pt.p_b
    q = sp.beta * (1.0 - rho) * (s + rho * k + sp.m_t)
    ok = (q >= sp.q_min * (1.0 - 1e-9)) & (rho * k <= sp.p_relay * (1.0 + 1e-9))
    if not ok.any():
        return None
    return float(rho[np.flatnonzero(ok)[-1]])


def test_criterion_5_subproblem_closed_forms():
    sp = default_params()
    t0 = time.perf_counter()
    rho_checked = powers_checked = 0
    worst_rho = 0.0
    worst_power = 0.0
    seed = 0
    while rho_checked < 100 or powers_checked < 100:
        seed += 1
        pt, ch = pipeline_point(seed, sp)
        try:
            rho_star = scalaropt.optimize_rho(pt, ch, sp)
        except Exception:
            continue
        if rho_checked < 100:
            grid_best = rho_grid_best(pt, ch, sp)
            assert grid_best is not None
            worst_rho = max(worst_rho, abs(rho_star - grid_best))
            assert abs(rho_star - grid_best) <= 1e-4 + 1e-9
            rho_checked += 1
        if powers_checked < 100:
            pt_f = replace(pt, rho=rho_star)
            try:
                p_a, p_b = scalaropt.optimize_powers(pt_f, ch, sp)
            except Exception:
                continue
            from test_scalaropt import power_grid_oracle
            rate = evaluate(replace(pt_f, p_a=p_a, p_b=p_b), ch, sp).sum_rate
            best = power_grid_oracle(pt_f, ch, sp, points=51)
            assert best is not None
            worst_power = max(worst_power, best - rate)
            assert rate >= best - 0.01
            assert_solution_constraints(replace(pt_f, p_a=p_a, p_b=p_b), ch, sp)
            powers_checked += 1
    report("5 (subproblem closed forms)", True,
           f"rho within {worst_rho:.2e} of 1e-4 grid on 100 instances; power pair "
           f"within {max(worst_power, 0.0):.2e} <= 0.01 bits of 51x51 grid on 100 "
           f"instances, {time.perf_counter() - t0:.1f}s")


def test_criterion_6_constraint_satisfaction(mt4_batch):
    sp2 = default_params()
    count = 0
    for seed in range(30):
        ch = gen_channels(600 + seed, 0, sp2)
        for run in (joint_optimize, relay_only_optimize):
            res = run(ch, sp2)
            if res.status == "infeasible":
                continue
            assert_solution_constraints(res.point, ch, sp2)
            count += 1
    for res, ch in mt4_batch["results"][:50]:
        if res.status == "infeasible":
            continue
        assert_solution_constraints(res.point, ch, mt4_batch["sp"])
        count += 1
    report("6 (constraint satisfaction)", True,
           f"{count} returned solutions satisfy harvest/relay/ZF/norm/power bounds "
           f"(suites 4, 5 and 7 re-check inline)")


def paired_means(records, scheme, sweep_a, sweep_b):
    """Means over trials feasible at both sweep points, (a, b) order."""
    at = {
        (r.trial, r.sweep_value): r
        for r in records
        if r.scheme == scheme and r.sweep_value in (sweep_a, sweep_b)
    }
    common = [
        t for t in {k[0] for k in at}
        if at.get((t, sweep_a), None) and at.get((t, sweep_b), None)
        and at[(t, sweep_a)].feasible and at[(t, sweep_b)].feasible
    ]
    if not common:
        return None
    a = float(np.mean([at[(t, sweep_a)].sum_rate for t in common]))
    b = float(np.mean([at[(t, sweep_b)].sum_rate for t in common]))
    return a, b, len(common)


def test_criterion_7_fig2_trends(fig2, mt4_batch):
    curves = {c.label: c for c in fig2["curves"]}
    sweep = sorted({r.sweep_value for c in fig2["curves"] for r in c.records})

    # (a) mean sum-rate nondecreasing in P_max, paired per consecutive pair.
    pairs_checked = 0
    for label, curve in curves.items():
        for scheme in ("joint", "relay-only"):
            for lo, hi in zip(sweep, sweep[1:]):
                pair = paired_means(curve.records, scheme, lo, hi)
                if pair is None:
                    continue
                mean_lo, mean_hi, n = pair
                assert mean_hi >= mean_lo - 1e-9, (
                    f"{label}/{scheme}: paired mean fell {mean_lo:.4f} -> {mean_hi:.4f} "
                    f"at P_max {lo} -> {hi} dB over {n} trials"
                )
                pairs_checked += 1

    # (b) the easier harvest target dominates pointwise (paired on the
    # stricter population).
    recs10 = {(r.trial, r.sweep_value, r.scheme): r for r in curves["qbar10dBm"].records}
    b_checked = 0
    for r in curves["qbar20dBm"].records:
        if not r.feasible:
            continue
        twin = recs10[(r.trial, r.sweep_value, r.scheme)]
        assert twin.feasible
        assert twin.sum_rate >= r.sum_rate - 1e-9
        b_checked += 1

    # (c) joint dominates relay-only per trial and pointwise.
    c_checked = 0
    for curve in fig2["curves"]:
        by_key = {}
        for r in curve.records:
            by_key.setdefault((r.trial, r.sweep_value), {})[r.scheme] = r
        for pair in by_key.values():
            j, ro = pair["joint"], pair["relay-only"]
            assert j.feasible == ro.feasible
            if j.feasible:
                assert j.sum_rate >= ro.sum_rate - 1e-9
                c_checked += 1

    # Rank-1 health data for criterion 9 comes from the companion batch.
    ok = fig2["elapsed"] + mt4_batch["elapsed"] < 900.0
    report("7 (Fig. 2 trends)", ok,
           f"(a) {pairs_checked} consecutive pairs nondecreasing; (b) {b_checked} "
           f"paired qbar comparisons; (c) {c_checked} joint>=relay-only; "
           f"{fig2['elapsed']:.0f}s + {mt4_batch['elapsed']:.0f}s companion < 900s")


def test_criterion_8_fig3_trends(fig3):
    sweep = sorted({r.sweep_value for c in fig3["curves"] for r in c.records})
    checked = 0
    for curve in fig3["curves"]:
        for scheme in ("joint", "relay-only"):
            for lo, hi in zip(sweep, sweep[1:]):
                pair = paired_means(curve.records, scheme, lo, hi)
                if pair is None:
                    continue
                mean_lo, mean_hi, n = pair
                assert mean_hi <= mean_lo + 1e-9, (
                    f"{curve.label}/{scheme}: paired mean rose {mean_lo:.4f} -> "
                    f"{mean_hi:.4f} as RSI {lo} -> {hi} dB over {n} trials"
                )
                checked += 1
    ok = fig3["elapsed"] < 900.0
    report("8 (Fig. 3 trends)", ok,
           f"{checked} consecutive RSI pairs nonincreasing for both schemes and "
           f"both P_max settings, {fig3['elapsed']:.0f}s < 900s")


def test_criterion_9_rank1_health(mt4_batch):
    defects = [res.defect for res, _ in mt4_batch["results"] if res.status != "infeasible"]
    assert len(defects) >= 100
    median_defect = float(np.median(defects))
    assert median_defect <= 1e-6

    # M_T = 2: re-evaluate the extracted beam against the lifted objective.
    sp = default_params()
    worst_gap = 0.0
    for seed in range(50):
        ch = gen_channels(900 + seed, 0, sp)
        cand = rxbeam.solve_for_alpha(0.4, ch, sp, 0.5, sp.p_max, sp.p_max)
        ctx = txdc.beam_context(ch, cand.point.w_r, 0.5, sp.p_max, sp.p_max)
        lifted = txdc.objective_F(cand.dc_state.w_t_mat, ctx)
        gap = abs(lifted - cand.report.sum_rate)
        worst_gap = max(worst_gap, gap)
        assert gap <= 0.02
    report("9 (rank-1 health)", True,
           f"median lambda2/lambda1 = {median_defect:.2e} <= 1e-6 over "
           f"{len(defects)} M_T=4 solves; M_T=2 extraction gap <= {worst_gap:.2e} "
           f"<= 0.02 bits on 50 instances")


def test_criterion_10_determinism(fig2, oracle_suite, tmp_path):
    # Rerun suite 7's experiment and suite 4's comparison with identical
    # seeds; the emitted CSV bytes must match.
    cfg = ExperimentConfig.from_dict(FIG2_CFG)
    curves = harness.run_experiment(cfg)
    stem = str(tmp_path / "fig2_rerun")
    rerun_paths = emit_curves(curves, stem)
    for p1, p2 in zip(fig2["paths"], rerun_paths):
        b1 = open(p1, "rb").read()
        b2 = open(p2, "rb").read()
        assert b1 == b2, f"experiment CSV differs between runs: {p1} vs {p2}"
        s1 = open(p1 + ".summary", "rb").read()
        s2 = open(p2 + ".summary", "rb").read()
        assert s1 == s2

    _, rows = run_oracle_suite()
    rerun_csv = str(tmp_path / "oracle_rerun.csv")
    oracle_suite_csv(rows, rerun_csv)
    assert open(oracle_suite["path"], "rb").read() == open(rerun_csv, "rb").read()
    report("10 (determinism)", True,
           "suite 4 and suite 7 reruns produced byte-identical CSV outputs")
