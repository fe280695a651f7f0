"""Closed-form-plus-search optimizers for the power-splitting ratio and the
source transmit powers, with beams held fixed.

Both optimizers follow the same pattern: the binding constraints are
inverted in closed form treating the relay output power E_bar as a constant
taken from the incoming iterate, then the candidate is re-checked against
the self-consistent evaluator and repaired if needed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import (
    ChannelSet,
    Infeasible,
    OperatingPoint,
    SystemParams,
    evaluate,
    relay_power,
)

RHO_EPS = 1e-6          # returned rho is clipped to [RHO_EPS, 1 - RHO_EPS]
BISECT_ITERS = 40
BISECT_TOL = 1e-9
POWER_GRID_POINTS = 401


@dataclass(frozen=True)
class RhoBounds:
    rho_l: float   # largest rho satisfying the harvest constraint to equality
    rho_m: float   # largest rho satisfying the relay power cap to equality


@dataclass(frozen=True)
class PowerBounds:
    p_bs: float    # smallest free power meeting the harvest constraint
    p_bm: float    # largest free power meeting the relay power cap


def _norms(ch: ChannelSet) -> tuple[float, float]:
    return (
        float(np.real(np.vdot(ch.h_ar, ch.h_ar))),
        float(np.real(np.vdot(ch.h_br, ch.h_br))),
    )


def _beam_stats(pt: OperatingPoint, ch: ChannelSet) -> tuple[float, float, float]:
    c_ra = float(np.abs(np.vdot(pt.w_r, ch.h_ar)) ** 2)
    c_rb = float(np.abs(np.vdot(pt.w_r, ch.h_br)) ** 2)
    nt2 = float(np.real(np.vdot(pt.w_t, pt.w_t)))
    return c_ra, c_rb, nt2


def rho_bounds(pt: OperatingPoint, ch: ChannelSet, sp: SystemParams) -> RhoBounds:
    """Closed-form rho bounds with E_bar frozen at the incoming iterate.

    rho_l = 1 - (q_min/beta) / (||h_AR||^2 P_A + ||h_BR||^2 P_B + E_bar + M_T)
    rho_m = p_relay / (P_A ||w_t||^2 C_rA + P_B ||w_t||^2 C_rB + ||w_t||^2)

    rho_m is +inf when w_t = 0 (the relay cap cannot bind).
    """
    na2, nb2 = _norms(ch)
    c_ra, c_rb, nt2 = _beam_stats(pt, ch)
    e_bar = relay_power(pt, ch)
    denom_l = na2 * pt.p_a + nb2 * pt.p_b + e_bar + sp.m_t
    if denom_l <= 0:
        raise Infeasible("harvest", "no received power at the relay")
    if sp.beta > 0:
        rho_l = 1.0 - (sp.q_min / sp.beta) / denom_l
    else:
        rho_l = 1.0 if sp.q_min <= 0 else -np.inf
    denom_m = nt2 * (pt.p_a * c_ra + pt.p_b * c_rb + 1.0)
    rho_m = sp.p_relay / denom_m if denom_m > 0 else np.inf
    return RhoBounds(rho_l=rho_l, rho_m=rho_m)


def _harvest_at(rho: float, pt: OperatingPoint, ch: ChannelSet, sp: SystemParams) -> float:
    """Self-consistent harvested energy as a function of rho only."""
    na2, nb2 = _norms(ch)
    c_ra, c_rb, nt2 = _beam_stats(pt, ch)
    k = nt2 * (pt.p_a * c_ra + pt.p_b * c_rb + 1.0)  # relay power per unit rho
    s = na2 * pt.p_a + nb2 * pt.p_b
    return sp.beta * (1.0 - rho) * (s + rho * k + sp.m_t)


def optimize_rho(pt: OperatingPoint, ch: ChannelSet, sp: SystemParams) -> float:
    """Largest rho in (0, 1) satisfying harvest and relay-power constraints.

    The sum-rate is nondecreasing in rho for fixed beams and powers, so the
    optimum is min(rho_l, rho_m) clipped to [RHO_EPS, 1 - RHO_EPS]. The
    closed form freezes E_bar at the incoming iterate; the result is
    re-checked self-consistently and repaired by bisection when the frozen
    bound was optimistic.
    """
    bounds = rho_bounds(pt, ch, sp)
    rho_star = min(bounds.rho_l, bounds.rho_m)
    if rho_star <= 0.0:
        binding = "harvest" if bounds.rho_l <= 0 else "relay_power"
        raise Infeasible(binding, f"rho_l={bounds.rho_l:.4g}, rho_m={bounds.rho_m:.4g}")
    rho_star = float(np.clip(rho_star, RHO_EPS, 1.0 - RHO_EPS))

    cand = replace(pt, rho=rho_star)
    rep = evaluate(cand, ch, sp)
    if rep.flags.harvest and rep.flags.relay_power:
        return rho_star

    # The frozen-E_bar closed form overshot: find the largest self-consistent
    # rho below the relay cap. Q(rho) is concave in rho, so bisect on its
    # decreasing branch starting from the unconstrained peak.
    rho_cap = float(np.clip(min(bounds.rho_m, 1.0 - RHO_EPS), RHO_EPS, 1.0 - RHO_EPS))
    q_target = sp.q_min * (1.0 - 1e-12)
    if _harvest_at(rho_cap, pt, ch, sp) >= q_target:
        return rho_cap
    na2, nb2 = _norms(ch)
    c_ra, c_rb, nt2 = _beam_stats(pt, ch)
    k = nt2 * (pt.p_a * c_ra + pt.p_b * c_rb + 1.0)
    s = na2 * pt.p_a + nb2 * pt.p_b
    peak = (k - s - sp.m_t) / (2.0 * k) if k > 0 else RHO_EPS
    peak = float(np.clip(peak, RHO_EPS, rho_cap))
    if _harvest_at(peak, pt, ch, sp) < q_target:
        raise Infeasible("harvest", "harvest threshold unreachable for any rho")
    lo, hi = peak, rho_cap
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if _harvest_at(mid, pt, ch, sp) >= q_target:
            lo = mid
        else:
            hi = mid
        if hi - lo < BISECT_TOL:
            break
    return lo


def power_bounds(
    pt: OperatingPoint,
    ch: ChannelSet,
    sp: SystemParams,
    pinned: str,
) -> PowerBounds:
    """Bounds on the free source power with the other pinned at p_max.

    ``pinned`` is "A" (optimize P_B) or "B" (optimize P_A). E_bar is frozen
    at the incoming iterate, matching the closed forms.
    """
    na2, nb2 = _norms(ch)
    c_ra, c_rb, nt2 = _beam_stats(pt, ch)
    e_bar = relay_power(pt, ch)
    if pt.rho >= 1.0:
        raise Infeasible("harvest", "rho = 1 leaves nothing to harvest")
    if pinned == "A":
        n_pin, n_free, c_pin, c_free = na2, nb2, c_ra, c_rb
    elif pinned == "B":
        n_pin, n_free, c_pin, c_free = nb2, na2, c_rb, c_ra
    else:
        raise ValueError("pinned must be 'A' or 'B'")
    need = (sp.q_min / sp.beta) / (1.0 - pt.rho) - n_pin * sp.p_max - e_bar - sp.m_t
    p_s = need / n_free if n_free > 0 else (np.inf if need > 0 else -np.inf)
    cap = sp.p_relay / pt.rho - sp.p_max * nt2 * c_pin - nt2
    if nt2 * c_free > 0:
        p_m = cap / (nt2 * c_free)
    else:
        p_m = np.inf if cap >= 0 else -np.inf
    return PowerBounds(p_bs=float(p_s), p_bm=float(p_m))


def _rates_on_power_line(
    free: np.ndarray,
    pinned: str,
    pt: OperatingPoint,
    ch: ChannelSet,
    sp: SystemParams,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized sum-rate and feasibility along one pinned-power line.

    Uses the same formulas as model.evaluate, including the self-consistent
    E_bar inside the harvest constraint.
    """
    na2, nb2 = _norms(ch)
    c_ra, c_rb, nt2 = _beam_stats(pt, ch)
    g_a = float(np.abs(np.vdot(ch.h_ra, pt.w_t)) ** 2)
    g_b = float(np.abs(np.vdot(ch.h_rb, pt.w_t)) ** 2)
    rsi_a = float(np.abs(ch.h_aa) ** 2)
    rsi_b = float(np.abs(ch.h_bb) ** 2)
    if pinned == "A":
        p_a = np.full_like(free, sp.p_max)
        p_b = free
    else:
        p_a = free
        p_b = np.full_like(free, sp.p_max)
    gamma_a = pt.rho * p_b * c_rb * g_a / (pt.rho * g_a + p_a * rsi_a + 1.0)
    gamma_b = pt.rho * p_a * c_ra * g_b / (pt.rho * g_b + p_b * rsi_b + 1.0)
    rates = np.log2(1.0 + gamma_a) + np.log2(1.0 + gamma_b)
    p_used = pt.rho * nt2 * (p_a * c_ra + p_b * c_rb + 1.0)
    q = sp.beta * (1.0 - pt.rho) * (na2 * p_a + nb2 * p_b + p_used + sp.m_t)
    ok = (q >= sp.q_min * (1.0 - 1e-9)) & (p_used <= sp.p_relay * (1.0 + 1e-9))
    return rates, ok


def optimize_powers_cap_tracking(
    pt: OperatingPoint,
    ch: ChannelSet,
    sp: SystemParams,
    grid_points: int = POWER_GRID_POINTS,
) -> tuple[float, float, float]:
    """Pinned-line power search with the transmit gain tracking the relay cap.

    Candidate pairs are scored as the next beam stage will see them: the
    transmit direction is kept and its gain rescaled so the relay spends
    exactly p_relay. On that manifold the sum-rate does not depend on rho
    (rho * gain * kappa = p_relay), so each candidate is paired with the
    closed-form rho that restores its harvest feasibility, never above the
    incoming rho. Without both adjustments, power choices that free up
    relay amplification or harvest headroom are undervalued and the
    alternation stalls below the joint optimum.

    Returns (p_a, p_b, rho). Used by the outer loop only; the plain
    fixed-beam subproblem is optimize_powers below.
    """
    nt2 = float(np.real(np.vdot(pt.w_t, pt.w_t)))
    if nt2 <= 0.0:
        p_a, p_b = optimize_powers(pt, ch, sp, grid_points)
        return p_a, p_b, pt.rho
    d = pt.w_t / np.sqrt(nt2)
    na2, nb2 = _norms(ch)
    c_ra = float(np.abs(np.vdot(pt.w_r, ch.h_ar)) ** 2)
    c_rb = float(np.abs(np.vdot(pt.w_r, ch.h_br)) ** 2)
    ga_unit = float(np.abs(np.vdot(ch.h_ra, d)) ** 2)
    gb_unit = float(np.abs(np.vdot(ch.h_rb, d)) ** 2)
    rsi_a = float(np.abs(ch.h_aa) ** 2)
    rsi_b = float(np.abs(ch.h_bb) ** 2)

    best_rate = -np.inf
    best: tuple[float, float, float] | None = None
    free = np.linspace(0.0, sp.p_max, grid_points)
    for pinned in ("A", "B"):
        if pinned == "A":
            p_a, p_b = np.full_like(free, sp.p_max), free
        else:
            p_a, p_b = free, np.full_like(free, sp.p_max)
        kappa = p_a * c_ra + p_b * c_rb + 1.0
        big_ga = sp.p_relay * ga_unit / kappa   # rho * gain_a at the cap
        big_gb = sp.p_relay * gb_unit / kappa
        gamma_a = p_b * c_rb * big_ga / (big_ga + p_a * rsi_a + 1.0)
        gamma_b = p_a * c_ra * big_gb / (big_gb + p_b * rsi_b + 1.0)
        rates = np.log2(1.0 + gamma_a) + np.log2(1.0 + gamma_b)
        # Largest rho at which the candidate still meets the harvest
        # threshold (E_bar is pinned to p_relay on the cap manifold).
        received = na2 * p_a + nb2 * p_b + sp.p_relay + sp.m_t
        rho_l = 1.0 - (sp.q_min / sp.beta) / received
        ok = rho_l >= RHO_EPS
        if not np.any(ok):
            continue
        rates = np.where(ok, rates, -np.inf)
        k = int(np.argmax(rates))
        if rates[k] > best_rate:
            best_rate = float(rates[k])
            rho_c = float(np.clip(min(pt.rho, rho_l[k]), RHO_EPS, 1.0 - RHO_EPS))
            best = (float(p_a[k]), float(p_b[k]), rho_c)
    if best is None:
        raise Infeasible("harvest", "no power pair meets the harvest threshold")
    return best


def optimize_powers(
    pt: OperatingPoint,
    ch: ChannelSet,
    sp: SystemParams,
    grid_points: int = POWER_GRID_POINTS,
) -> tuple[float, float]:
    """Best (P_A, P_B) with beams and rho fixed; one power always at p_max.

    Solves the two pinned subproblems (P_A = p_max and P_B = p_max). For
    each, the free power's feasible interval comes from the closed-form
    bounds, then a grid search maximizes the evaluated sum-rate over the
    interval (the objective is not monotone in the free power once the
    opposite node's self-interference is accounted for).
    """
    best_rate = -np.inf
    best: tuple[float, float] | None = None
    for pinned in ("A", "B"):
        try:
            pb = power_bounds(pt, ch, sp, pinned)
        except Infeasible:
            continue
        lo = max(pb.p_bs, 0.0)
        hi = min(pb.p_bm, sp.p_max)
        if hi < lo:
            continue
        grid = np.linspace(lo, hi, grid_points)
        rates, ok = _rates_on_power_line(grid, pinned, pt, ch, sp)
        if not np.any(ok):
            continue
        rates = np.where(ok, rates, -np.inf)
        k = int(np.argmax(rates))
        if rates[k] > best_rate:
            best_rate = float(rates[k])
            if pinned == "A":
                best = (sp.p_max, float(grid[k]))
            else:
                best = (float(grid[k]), sp.p_max)
    if best is None:
        raise Infeasible("power_box", "both pinned subproblems have empty intervals")
    cand = replace(pt, p_a=best[0], p_b=best[1])
    rep = evaluate(cand, ch, sp)
    if not (rep.flags.harvest and rep.flags.relay_power):
        raise Infeasible("power_box", "grid optimum failed the self-consistent re-check")
    return best
