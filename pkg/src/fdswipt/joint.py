"""Alternating joint optimization of beams, power split and source powers.

One outer iteration updates, in order: (a) both relay beams via the alpha
search with the DC transmit solve, (b) the power-splitting ratio in closed
form, (c) the source powers via the pinned subproblems. Every stage
maximizes the evaluated sum-rate over its own block, so the rate trace is
nondecreasing. The "relay optimization only" baseline skips stage (c).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import rxbeam, scalaropt
from .model import (
    ChannelSet,
    Infeasible,
    OperatingPoint,
    PerformanceReport,
    SystemParams,
    evaluate,
    relay_power,
)

OUTER_TOL = 1e-4
MAX_OUTER = 50
RHO_INIT = 0.5


@dataclass(frozen=True)
class SolverOptions:
    alpha_step: float = rxbeam.DEFAULT_ALPHA_STEP
    rho_init: float = RHO_INIT
    outer_tol: float = OUTER_TOL
    max_outer: int = MAX_OUTER
    power_grid_points: int = scalaropt.POWER_GRID_POINTS
    dc_tol: float = 1e-6
    dc_max_iters: int = 100
    # Rerun the alternation from asymmetric power seeds and keep the best
    # run. The rate landscape has distinct basins for which source backs
    # off; a single start can converge to the wrong one.
    power_multistart: bool = True


def _repin(pt: OperatingPoint, ch: ChannelSet, sp: SystemParams) -> OperatingPoint:
    """Rescale the transmit gain so the relay spends exactly its budget.

    The sum-rate is nondecreasing in the gain, and after the rho update the
    cap always allows at least the current gain, so this never hurts.
    """
    used = relay_power(pt, ch)
    if used <= 0.0:
        return pt
    return replace(pt, w_t=pt.w_t * np.sqrt(sp.p_relay / used))


@dataclass
class JointResult:
    point: OperatingPoint
    report: PerformanceReport
    outer_iters: int
    rate_trace: list[float]
    status: str                      # converged | max_iters | infeasible
    scheme: str = "joint"
    defect: float = 0.0              # rank-1 defect of the final transmit beam
    midrun_infeasible: int = 0       # stages that went infeasible after iter 1
    infeasible_reason: str = ""


def _optimize(ch: ChannelSet, sp: SystemParams, opts: SolverOptions, update_powers: bool, scheme: str) -> JointResult:
    sp.validate()
    ch.validate(sp)
    starts = [(sp.p_max, sp.p_max)]
    if update_powers and opts.power_multistart:
        starts += [(sp.p_max, 0.0), (0.0, sp.p_max)]
    best: JointResult | None = None
    for p_a0, p_b0 in starts:
        res = _optimize_from(ch, sp, opts, update_powers, scheme, p_a0, p_b0)
        if best is None:
            best = res
            continue
        if res.status != "infeasible" and (
            best.status == "infeasible" or res.report.sum_rate > best.report.sum_rate
        ):
            best = res
    assert best is not None
    return best


def _optimize_from(
    ch: ChannelSet,
    sp: SystemParams,
    opts: SolverOptions,
    update_powers: bool,
    scheme: str,
    p_a0: float,
    p_b0: float,
) -> JointResult:
    grid = rxbeam.AlphaGrid.from_step(opts.alpha_step)
    rho = opts.rho_init
    p_a, p_b = p_a0, p_b0
    incumbent_w_t: np.ndarray | None = None

    best_pt: OperatingPoint | None = None
    best_rep: PerformanceReport | None = None
    best_defect = 0.0
    rate_trace: list[float] = []
    prev_rate = -np.inf
    status = "max_iters"
    midrun = 0
    defect = 0.0
    it = 0

    for it in range(1, opts.max_outer + 1):
        # (a) beams. On the very first pass the initial rho may violate the
        # harvest constraint for every alpha; the rho stage below can still
        # repair that, so only later iterations treat it as fatal.
        try:
            res = rxbeam.alpha_search(
                ch, sp, rho, p_a, p_b, grid,
                incumbent_w_t=incumbent_w_t,
                require_feasible=(it > 1),
                dc_tol=opts.dc_tol, dc_max_iters=opts.dc_max_iters,
            )
        except Infeasible as exc:
            midrun += 1
            if best_pt is None:
                return _infeasible_result(ch, sp, rho, p_a, p_b, scheme, str(exc))
            status = "converged"
            break
        pt = OperatingPoint(w_t=res.w_t, w_r=res.w_r, rho=rho, p_a=p_a, p_b=p_b)
        defect = res.defect
        incumbent_w_t = res.w_t

        # (b) power-splitting ratio. The rho step can only shrink rho (the
        # relay cap binds at the incoming iterate), which frees cap headroom;
        # re-pinning the gain afterwards recovers it.
        try:
            rho = scalaropt.optimize_rho(pt, ch, sp)
        except Infeasible as exc:
            if it == 1 or best_pt is None:
                return _infeasible_result(ch, sp, rho, p_a, p_b, scheme, str(exc))
            midrun += 1
            status = "converged"
            break
        pt = _repin(replace(pt, rho=rho), ch, sp)

        # (c) source powers, scored with the gain tracking the relay cap
        # (the trace equality the next beam stage imposes anyway). Each
        # candidate carries the closed-form rho restoring its harvest
        # feasibility; the rate is rho-invariant on the cap manifold.
        if update_powers:
            try:
                p_a, p_b, rho_c = scalaropt.optimize_powers_cap_tracking(
                    pt, ch, sp, grid_points=opts.power_grid_points
                )
            except Infeasible as exc:
                if it == 1 or best_pt is None:
                    return _infeasible_result(ch, sp, rho, p_a, p_b, scheme, str(exc))
                midrun += 1
                status = "converged"
                break
            cand = _repin(replace(pt, p_a=p_a, p_b=p_b, rho=rho_c), ch, sp)
            cand_rep = evaluate(cand, ch, sp)
            cur_rep = evaluate(pt, ch, sp)
            if cand_rep.feasible and cand_rep.sum_rate >= cur_rep.sum_rate - 1e-12:
                pt = cand
                rho = rho_c
            else:
                # Keep the incumbent powers when the grid pick cannot improve.
                p_a, p_b = pt.p_a, pt.p_b

        rep = evaluate(pt, ch, sp)
        rate_trace.append(rep.sum_rate)
        if rep.feasible and (best_rep is None or rep.sum_rate >= best_rep.sum_rate):
            best_pt, best_rep, best_defect = pt, rep, defect
        if rep.sum_rate - prev_rate < opts.outer_tol and it > 1:
            status = "converged"
            break
        prev_rate = rep.sum_rate

    if best_pt is None or best_rep is None:
        return _infeasible_result(ch, sp, rho, p_a, p_b, scheme, "no feasible iterate found")
    return JointResult(
        point=best_pt,
        report=best_rep,
        outer_iters=it,
        rate_trace=rate_trace,
        status=status,
        scheme=scheme,
        defect=best_defect,
        midrun_infeasible=midrun,
    )


def _infeasible_result(ch, sp, rho, p_a, p_b, scheme, reason) -> JointResult:
    w_r = np.zeros(sp.m_r, dtype=np.complex128)
    w_r[0] = 1.0
    pt = OperatingPoint(
        w_t=np.zeros(sp.m_t, dtype=np.complex128), w_r=w_r,
        rho=float(np.clip(rho, 0.0, 1.0)), p_a=p_a, p_b=p_b,
    )
    return JointResult(
        point=pt,
        report=evaluate(pt, ch, sp),
        outer_iters=0,
        rate_trace=[],
        status="infeasible",
        scheme=scheme,
        infeasible_reason=reason,
    )


def joint_optimize(ch: ChannelSet, sp: SystemParams, opts: SolverOptions | None = None) -> JointResult:
    """Full joint optimization of (w_t, w_r, rho, P_A, P_B)."""
    return _optimize(ch, sp, opts or SolverOptions(), update_powers=True, scheme="joint")


def relay_only_optimize(ch: ChannelSet, sp: SystemParams, opts: SolverOptions | None = None) -> JointResult:
    """Baseline: both sources at full power, only beams and rho optimized."""
    return _optimize(ch, sp, opts or SolverOptions(), update_powers=False, scheme="relay-only")
