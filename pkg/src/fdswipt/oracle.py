"""Exhaustive grid reference solver for desk-scale instances.

Used only by tests and acceptance runs, never by the production solver.
For M_T = 2 the zero-forcing constraint leaves a single transmit direction
per receive beam and the relay-power cap pins its gain, so the grid over
(alpha, rho, P_A, P_B) is exhaustive up to its resolution. For M_T > 2 the
transmit direction is sampled on the reduced unit sphere.

With the gain pinned to the cap, rho cancels out of both SINRs
(rho * T = p_relay / kappa), so the sum-rate at a grid point depends on rho
only through feasibility. Ties across rho are broken toward the smallest
value, part of the lexicographic (alpha, rho, P_A, P_B) tie-break.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import cxla, rxbeam
from .joint import JointResult
from .model import ChannelSet, OperatingPoint, SystemParams, evaluate

_SPHERE_SEED = 0x5EED


@dataclass(frozen=True)
class OracleConfig:
    alpha_points: int = 41
    rho_points: int = 101
    power_points: int = 51
    beam_angle_points: int = 64   # only used when m_t > 2

    def validate(self) -> "OracleConfig":
        if min(self.alpha_points, self.rho_points, self.power_points, self.beam_angle_points) < 2:
            raise ValueError("all oracle grid resolutions must be >= 2")
        return self


def _beam_directions(basis: np.ndarray, cfg: OracleConfig) -> np.ndarray:
    """Candidate unit directions in the reduced space, one per row."""
    m = basis.shape[1]
    if m == 1:
        return np.ones((1, 1), dtype=np.complex128)
    rng = np.random.Generator(np.random.Philox(key=_SPHERE_SEED))
    raw = rng.standard_normal((cfg.beam_angle_points, m)) + 1j * rng.standard_normal(
        (cfg.beam_angle_points, m)
    )
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def brute_force(ch: ChannelSet, sp: SystemParams, cfg: OracleConfig | None = None) -> JointResult:
    """Best feasible grid point by exhaustive evaluation."""
    cfg = (cfg or OracleConfig()).validate()
    sp.validate()
    ch.validate(sp)

    alphas = np.linspace(0.0, 1.0, cfg.alpha_points)
    # Interior rho grid: both endpoints are excluded by the model.
    rhos = np.linspace(0.0, 1.0, cfg.rho_points + 2)[1:-1]
    powers = np.linspace(0.0, sp.p_max, cfg.power_points)
    p_a = powers[:, None]
    p_b = powers[None, :]

    na2 = float(np.real(np.vdot(ch.h_ar, ch.h_ar)))
    nb2 = float(np.real(np.vdot(ch.h_br, ch.h_br)))
    rsi_a = float(np.abs(ch.h_aa) ** 2)
    rsi_b = float(np.abs(ch.h_bb) ** 2)

    best_rate = -np.inf
    best: tuple[float, float, float, float, np.ndarray, np.ndarray] | None = None
    evaluations = 0

    for alpha in alphas:
        w_r = rxbeam.wr_from_alpha(float(alpha), ch).w_r
        c_ra = float(np.abs(np.vdot(w_r, ch.h_ar)) ** 2)
        c_rb = float(np.abs(np.vdot(w_r, ch.h_br)) ** 2)
        b = ch.h_rr.conj().T @ w_r
        if np.linalg.norm(b) <= 1e-12 * (1.0 + np.linalg.norm(ch.h_rr)):
            basis = np.eye(sp.m_t, dtype=np.complex128)
        else:
            basis = cxla.null_basis(b)
        for v in _beam_directions(basis, cfg):
            direction = basis @ v
            ga_unit = float(np.abs(np.vdot(ch.h_ra, direction)) ** 2)  # gain per unit trace
            gb_unit = float(np.abs(np.vdot(ch.h_rb, direction)) ** 2)
            kappa = p_a * c_ra + p_b * c_rb + 1.0
            # Trace pinned to the relay cap: rho * T = p_relay / kappa.
            rho_ga = sp.p_relay * ga_unit / kappa
            rho_gb = sp.p_relay * gb_unit / kappa
            gamma_a = p_b * c_rb * rho_ga / (rho_ga + p_a * rsi_a + 1.0)
            gamma_b = p_a * c_ra * rho_gb / (rho_gb + p_b * rsi_b + 1.0)
            rates = np.log2(1.0 + gamma_a) + np.log2(1.0 + gamma_b)
            # Harvest decreases in rho here (E_bar is pinned to p_relay), so a
            # power pair is feasible iff the smallest grid rho works.
            s = na2 * p_a + nb2 * p_b
            q_at = sp.beta * (1.0 - rhos[:, None, None]) * (s + sp.p_relay + sp.m_t)
            feas = q_at >= sp.q_min * (1.0 - 1e-9)
            evaluations += rhos.size * rates.size
            any_feas = feas.any(axis=0)
            if not np.any(any_feas):
                continue
            masked = np.where(any_feas, rates, -np.inf)
            k = int(np.argmax(masked))
            ia, ib = np.unravel_index(k, masked.shape)
            if masked[ia, ib] > best_rate + 1e-15:
                rho_idx = int(np.argmax(feas[:, ia, ib]))  # smallest feasible rho
                rho = float(rhos[rho_idx])
                trace = sp.p_relay / (rho * float(kappa[ia, ib]))
                w_t = np.sqrt(trace) * direction
                best_rate = float(masked[ia, ib])
                best = (float(alpha), rho, float(powers[ia]), float(powers[ib]), w_r, w_t)

    if best is None:
        w_r = np.zeros(sp.m_r, dtype=np.complex128)
        w_r[0] = 1.0
        pt = OperatingPoint(
            w_t=np.zeros(sp.m_t, dtype=np.complex128), w_r=w_r, rho=0.5,
            p_a=sp.p_max, p_b=sp.p_max,
        )
        return JointResult(
            point=pt, report=evaluate(pt, ch, sp), outer_iters=evaluations,
            rate_trace=[], status="infeasible", scheme="oracle",
        )

    alpha, rho, pa, pb, w_r, w_t = best
    pt = OperatingPoint(w_t=w_t, w_r=w_r, rho=rho, p_a=pa, p_b=pb)
    rep = evaluate(pt, ch, sp)
    return JointResult(
        point=pt, report=rep, outer_iters=evaluations,
        rate_trace=[rep.sum_rate], status="converged", scheme="oracle",
    )
