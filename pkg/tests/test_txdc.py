import math

import numpy as np
import pytest

from fdswipt import cxla, rxbeam, txdc
from fdswipt.model import Infeasible, OperatingPoint, evaluate
from conftest import default_params, random_channels


def build_problem(seed, m_t=2, m_r=2, rho=0.5, alpha=0.3, p_a=None, p_b=None):
    sp = default_params(m_t=m_t, m_r=m_r)
    ch = random_channels(seed, sp)
    p_a = sp.p_max if p_a is None else p_a
    p_b = sp.p_max if p_b is None else p_b
    w_r = rxbeam.wr_from_alpha(alpha, ch).w_r
    ctx = txdc.beam_context(ch, w_r, rho, p_a, p_b)
    kappa = p_a * ctx.c_ra + p_b * ctx.c_rb + 1.0
    cons = txdc.zf_constraints(ch, w_r, sp.p_relay / (rho * kappa))
    return sp, ch, w_r, ctx, cons


def random_psd(rng, m, trace):
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    v = a @ a.conj().T
    return v * (trace / np.trace(v).real)


def feasible_w(rng, ctx, cons, m_t):
    basis = cons.reduction(m_t)
    m = basis.shape[1]
    v = random_psd(rng, m, cons.trace_target)
    return basis @ v @ basis.conj().T


class TestObjective:
    def test_zero_matrix_gives_zero(self):
        _, _, _, ctx, _ = build_problem(0)
        assert txdc.objective_F(np.zeros((2, 2), dtype=complex), ctx) == pytest.approx(0.0, abs=1e-12)

    def test_rank1_matches_evaluated_sum_rate(self):
        sp, ch, w_r, ctx, cons = build_problem(1)
        rng = np.random.default_rng(5)
        for _ in range(10):
            w_t = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            f_val = txdc.objective_F(cxla.outer(w_t), ctx)
            pt = OperatingPoint(w_t=w_t, w_r=w_r, rho=ctx.rho, p_a=ctx.p_a, p_b=ctx.p_b)
            assert f_val == pytest.approx(evaluate(pt, ch, sp).sum_rate, abs=1e-9)

    def test_f_and_g_both_concave(self):
        # Midpoint value dominates the chord for both pieces: logs of
        # affine maps are concave, and the DC ascent relies on exactly that
        # for the subtracted piece (its tangent then over-estimates,
        # making the surrogate a minorant of F).
        rng = np.random.default_rng(6)
        _, _, _, ctx, cons = build_problem(2, m_t=4)
        for _ in range(25):
            w1 = feasible_w(rng, ctx, cons, 4)
            w2 = feasible_w(rng, ctx, cons, 4)
            mid = 0.5 * (w1 + w2)
            for fun in (txdc.f_value, txdc.g_value):
                assert fun(mid, ctx) >= 0.5 * (fun(w1, ctx) + fun(w2, ctx)) - 1e-9


class TestLinearization:
    def test_anchor_equality(self):
        rng = np.random.default_rng(7)
        _, _, _, ctx, cons = build_problem(3, m_t=3)
        w_k = feasible_w(rng, ctx, cons, 3)
        assert txdc.linearize_g(w_k, w_k, ctx) == pytest.approx(txdc.g_value(w_k, ctx), abs=1e-12)

    def test_tangent_lies_above_g(self):
        # Concave g: the first-order expansion over-estimates away from the
        # anchor.
        rng = np.random.default_rng(8)
        _, _, _, ctx, cons = build_problem(4, m_t=4)
        w_k = feasible_w(rng, ctx, cons, 4)
        for _ in range(25):
            w = feasible_w(rng, ctx, cons, 4)
            assert txdc.linearize_g(w, w_k, ctx) >= txdc.g_value(w, ctx) - 1e-9

    def test_directional_derivative_matches_finite_difference(self):
        rng = np.random.default_rng(9)
        _, _, _, ctx, cons = build_problem(5, m_t=3)
        for _ in range(20):
            w_k = feasible_w(rng, ctx, cons, 3)
            delta = feasible_w(rng, ctx, cons, 3) - feasible_w(rng, ctx, cons, 3)
            grad = txdc.g_gradient(w_k, ctx)
            analytic = np.trace(grad @ delta).real
            h = 1e-6
            fd = (txdc.g_value(w_k + h * delta, ctx) - txdc.g_value(w_k - h * delta, ctx)) / (2 * h)
            assert analytic == pytest.approx(fd, rel=1e-4, abs=1e-10)

    def test_surrogate_minorizes_objective(self):
        # f - g_L <= F everywhere, equality at the anchor: the property the
        # monotone ascent actually uses.
        rng = np.random.default_rng(10)
        _, _, _, ctx, cons = build_problem(6, m_t=4)
        w_k = feasible_w(rng, ctx, cons, 4)
        assert txdc.surrogate_value(w_k, w_k, ctx) == pytest.approx(
            txdc.objective_F(w_k, ctx), abs=1e-12
        )
        for _ in range(25):
            w = feasible_w(rng, ctx, cons, 4)
            assert txdc.surrogate_value(w, w_k, ctx) <= txdc.objective_F(w, ctx) + 1e-9


class TestSubproblem:
    def test_single_log_vertex_optimality(self):
        # With the second forward channel removed, the surrogate is a single
        # increasing log of one quadratic form; its maximizer on the
        # trace-fixed cone is the top-eigenvector vertex of the reduced
        # gradient. None of 10^5 random feasible points may beat it.
        sp, ch, w_r, ctx, cons = build_problem(11, m_t=3)
        ctx = txdc.BeamContext(
            rho=ctx.rho, p_a=ctx.p_a, p_b=ctx.p_b, c_ra=ctx.c_ra, c_rb=ctx.c_rb,
            h_ra=ctx.h_ra, h_rb=np.zeros_like(ctx.h_rb), rsi_a=ctx.rsi_a, rsi_b=ctx.rsi_b,
        )
        basis = cons.reduction(3)
        m = basis.shape[1]
        T = cons.trace_target
        w_k = txdc.default_init(ctx, cons, 3)
        w_star = txdc.solve_convex_subproblem(w_k, ctx, cons)
        best = txdc.surrogate_value(w_star, w_k, ctx)

        a_red = basis.conj().T @ ctx.h_ra
        vertex = T * cxla.outer(basis @ (a_red / np.linalg.norm(a_red)))
        assert best == pytest.approx(txdc.surrogate_value(vertex, w_k, ctx), abs=1e-9)

        # Vectorized surrogate over 10^5 random rank-1 feasible points: the
        # value depends on V only through t_A (and the linear anchor terms).
        rng = np.random.default_rng(0)
        n = 100_000
        raw = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
        raw /= np.linalg.norm(raw, axis=1, keepdims=True)
        t_a = T * np.abs(raw.conj() @ a_red) ** 2
        t_ak = float(np.real(ctx.h_ra.conj() @ w_k @ ctx.h_ra))
        slope = ctx.rho / (np.log(2) * (ctx.rho * t_ak + ctx.const_a))
        phi = (
            np.log2(ctx.coef_a * t_a + ctx.const_a)
            + np.log2(ctx.const_b)
            - (txdc.g_value(w_k, ctx) + slope * (t_a - t_ak))
        )
        assert float(phi.max()) <= best + 1e-9
        # spot-check the vectorized formula against the reference evaluator
        for i in rng.integers(0, n, size=50):
            w_i = T * cxla.outer(basis @ raw[i])
            assert txdc.surrogate_value(w_i, w_k, ctx) == pytest.approx(float(phi[i]), abs=1e-9)

    def test_constraint_contract(self):
        rng = np.random.default_rng(12)
        for m_t in (2, 3, 4):
            sp, ch, w_r, ctx, cons = build_problem(13 + m_t, m_t=m_t)
            w_k = txdc.default_init(ctx, cons, m_t)
            w = txdc.solve_convex_subproblem(w_k, ctx, cons)
            T = cons.trace_target
            assert abs(np.trace(w).real - T) <= 1e-8 * T
            assert np.linalg.eigvalsh(w).min() >= -1e-10 * T
            b = ch.h_rr.conj().T @ w_r
            assert abs(b.conj() @ w @ b) <= 1e-10 * np.linalg.norm(w) * np.linalg.norm(ch.h_rr) ** 2

    def test_improves_on_feasible_anchor(self):
        rng = np.random.default_rng(14)
        for m_t in (2, 3, 4):
            _, _, _, ctx, cons = build_problem(20 + m_t, m_t=m_t)
            w_k = feasible_w(rng, ctx, cons, m_t)
            w = txdc.solve_convex_subproblem(w_k, ctx, cons)
            assert txdc.surrogate_value(w, w_k, ctx) >= txdc.surrogate_value(w_k, w_k, ctx) - 1e-9

    def test_nonpositive_trace_target_infeasible(self):
        _, _, _, ctx, cons = build_problem(25)
        bad = txdc.TraceCone(trace_target=-1.0, basis=cons.basis)
        with pytest.raises(Infeasible):
            txdc.solve_convex_subproblem(np.zeros((2, 2), dtype=complex), ctx, bad)


class TestDcOptimize:
    def test_fixed_point_terminates_immediately(self):
        _, _, _, ctx, cons = build_problem(30, m_t=3)
        w0 = txdc.default_init(ctx, cons, 3)
        first = txdc.dc_optimize(w0, ctx, cons)
        again = txdc.dc_optimize(first.w_t_mat, ctx, cons)
        assert again.k == 1
        assert again.objective_trace[-1] == pytest.approx(first.objective_trace[-1], abs=1e-9)
        np.testing.assert_allclose(again.w_t_mat, first.w_t_mat, atol=1e-9)

    @pytest.mark.parametrize("m_t", [2, 4])
    def test_objective_trace_monotone_100_instances(self, m_t):
        for seed in range(100):
            _, _, _, ctx, cons = build_problem(seed, m_t=m_t, alpha=0.35)
            state = txdc.dc_optimize(txdc.default_init(ctx, cons, m_t), ctx, cons)
            trace = np.array(state.objective_trace)
            assert np.all(np.diff(trace) >= -1e-9)

    def test_mt2_matches_pinned_point(self):
        # With two transmit antennas the ZF-feasible cone is a single ray;
        # the DC answer must coincide with the trace-pinned point for any
        # phase (a 10^4-point phase grid collapses to one value).
        for seed in range(10):
            _, _, _, ctx, cons = build_problem(40 + seed, m_t=2)
            state = txdc.dc_optimize(txdc.default_init(ctx, cons, 2), ctx, cons)
            basis = cons.reduction(2)
            pinned = cons.trace_target * (basis @ basis.conj().T)
            assert state.objective_trace[-1] == pytest.approx(
                txdc.objective_F(pinned, ctx), abs=1e-9
            )

    def test_mt3_matches_angle_grid_oracle(self):
        # Reduced space has two complex dimensions: exhaustive rank-1 grid
        # over (theta, psi) brackets the optimum.
        for seed in range(5):
            _, _, _, ctx, cons = build_problem(50 + seed, m_t=3)
            state = txdc.dc_optimize(txdc.default_init(ctx, cons, 3), ctx, cons)
            basis = cons.reduction(3)
            T = cons.trace_target
            thetas = np.linspace(0.0, np.pi / 2, 100)
            psis = np.linspace(0.0, 2 * np.pi, 100, endpoint=False)
            best = -np.inf
            for th in thetas:
                for ps in psis:
                    u = np.array([math.cos(th), math.sin(th) * np.exp(1j * ps)])
                    w = T * cxla.outer(basis @ u)
                    best = max(best, txdc.objective_F(w, ctx))
            assert state.objective_trace[-1] >= best - 0.02

    def test_final_iterate_rank1(self):
        for m_t in (2, 3, 4, 5):
            _, _, _, ctx, cons = build_problem(60 + m_t, m_t=m_t)
            state = txdc.dc_optimize(txdc.default_init(ctx, cons, m_t), ctx, cons)
            assert state.defect <= 1e-9


class TestExtract:
    def test_scaled_basis_vector(self):
        w = 4.0 * np.outer(np.array([1.0, 0.0]), np.array([1.0, 0.0]))
        ext = txdc.extract_rank1(w.astype(complex))
        assert not ext.zero
        assert np.abs(np.abs(ext.w_t[0]) - 2.0) < 1e-12
        assert np.abs(ext.w_t[1]) < 1e-12

    def test_rank1_reconstruction(self):
        rng = np.random.default_rng(70)
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        w = cxla.outer(h)
        ext = txdc.extract_rank1(w)
        assert np.linalg.norm(cxla.outer(ext.w_t) - w) <= 1e-8 * np.linalg.norm(w)
        assert ext.defect <= 1e-12

    def test_zero_matrix_flagged(self):
        ext = txdc.extract_rank1(np.zeros((3, 3), dtype=complex))
        assert ext.zero
        assert np.linalg.norm(ext.w_t) == 0.0

    def test_defect_reported(self):
        w = np.diag([4.0, 1.0, 0.0]).astype(complex)
        ext = txdc.extract_rank1(w)
        assert ext.defect == pytest.approx(0.25)
