"""System model for the full-duplex two-way SWIPT relay link.

Holds the scalar budgets, one channel realization, a candidate operating
point and the closed-form evaluators for SINR, sum-rate, relay output
power, harvested energy and the zero-forcing residual.

Noise power is normalized to 1 per receive dimension, so every power in
this module is a ratio against that noise floor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


# Relative slack used when flagging constraint satisfaction; absorbs the
# floating-point error of solutions that sit exactly on a boundary.
FEAS_RTOL = 1e-9


class Infeasible(Exception):
    """A subproblem has an empty feasible set.

    ``binding`` names the constraint that closed the feasible set
    ("harvest", "relay_power", "power_box", ...).
    """

    def __init__(self, binding: str, detail: str = ""):
        self.binding = binding
        super().__init__(f"infeasible ({binding})" + (f": {detail}" if detail else ""))


@dataclass(frozen=True)
class SystemParams:
    """Scalar budgets and dimensions, all powers linear on the unit-noise scale."""

    p_max: float            # per-source transmit power budget
    p_relay: float          # relay transmit power budget
    q_min: float            # minimum harvested energy at the relay
    m_t: int = 2            # relay transmit antennas
    m_r: int = 2            # relay receive antennas
    sigma2_a: float = 0.0   # residual self-interference variance at source A
    sigma2_b: float = 0.0   # ... at source B
    sigma2_r: float = 0.0   # ... at the relay
    beta: float = 1.0       # energy conversion efficiency of the harvester

    def validate(self) -> "SystemParams":
        if min(self.p_max, self.p_relay, self.q_min) < 0:
            raise ValueError("power budgets must be nonnegative")
        if min(self.sigma2_a, self.sigma2_b, self.sigma2_r) < 0:
            raise ValueError("RSI variances must be nonnegative")
        if self.m_t < 2 or self.m_r < 2:
            raise ValueError("relay needs at least two transmit and receive antennas")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        return self


@dataclass
class ChannelSet:
    """One realization of every channel coefficient in the network."""

    h_ar: np.ndarray   # source A -> relay receive array, dim m_r
    h_br: np.ndarray   # source B -> relay receive array, dim m_r
    h_ra: np.ndarray   # relay transmit array -> source A, dim m_t
    h_rb: np.ndarray   # relay transmit array -> source B, dim m_t
    h_rr: np.ndarray   # relay transmit -> relay receive loopback, m_r x m_t
    h_aa: complex      # source A self-interference
    h_bb: complex      # source B self-interference

    def validate(self, sp: SystemParams) -> "ChannelSet":
        for name, dim in (("h_ar", sp.m_r), ("h_br", sp.m_r), ("h_ra", sp.m_t), ("h_rb", sp.m_t)):
            v = getattr(self, name)
            if v.shape != (dim,):
                raise ValueError(f"{name} has shape {v.shape}, expected ({dim},)")
        if self.h_rr.shape != (sp.m_r, sp.m_t):
            raise ValueError(f"h_rr has shape {self.h_rr.shape}, expected ({sp.m_r}, {sp.m_t})")
        return self


@dataclass
class OperatingPoint:
    """Candidate solution: relay beams, power-split ratio and source powers."""

    w_t: np.ndarray    # relay transmit beam, dim m_t (unnormalized; gain carrier)
    w_r: np.ndarray    # relay receive beam, dim m_r, unit norm
    rho: float         # power-splitting ratio, fraction routed to the IR
    p_a: float
    p_b: float

    def validate(self, sp: SystemParams | None = None) -> "OperatingPoint":
        if abs(np.linalg.norm(self.w_r) - 1.0) > 1e-9:
            raise ValueError("w_r must have unit norm")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")
        if self.p_a < 0 or self.p_b < 0:
            raise ValueError("source powers must be nonnegative")
        if sp is not None and max(self.p_a, self.p_b) > sp.p_max * (1 + FEAS_RTOL):
            raise ValueError("source powers exceed p_max")
        return self


@dataclass
class ConstraintFlags:
    harvest: bool
    relay_power: bool
    p_a: bool
    p_b: bool
    zf: bool

    def all_ok(self) -> bool:
        return self.harvest and self.relay_power and self.p_a and self.p_b and self.zf


@dataclass
class PerformanceReport:
    """Evaluated figures of merit for one operating point."""

    gamma_a: float
    gamma_b: float
    rate_a: float
    rate_b: float
    sum_rate: float
    q_harvest: float
    p_relay_used: float
    zf_residual: float
    feasible: bool
    flags: ConstraintFlags = field(repr=False)


def _gains(pt: OperatingPoint, ch: ChannelSet) -> tuple[float, float, float, float]:
    """(C_rA, C_rB, g_A, g_B): receive-beam captures and transmit-beam gains."""
    c_ra = float(np.abs(np.vdot(pt.w_r, ch.h_ar)) ** 2)
    c_rb = float(np.abs(np.vdot(pt.w_r, ch.h_br)) ** 2)
    g_a = float(np.abs(np.vdot(ch.h_ra, pt.w_t)) ** 2)
    g_b = float(np.abs(np.vdot(ch.h_rb, pt.w_t)) ** 2)
    return c_ra, c_rb, g_a, g_b


def sinr(node: str, pt: OperatingPoint, ch: ChannelSet) -> float:
    """Received SINR at source ``node`` ("A" or "B").

    gamma_A = rho P_B C_rB |h_RA† w_t|^2 / (rho |h_RA† w_t|^2 + P_A |h_AA|^2 + 1)
    and symmetrically for B with C_rA and |h_BB|^2.
    """
    if pt.w_t.shape != ch.h_ra.shape or pt.w_r.shape != ch.h_ar.shape:
        raise ValueError("operating point dimensions do not match the channel set")
    c_ra, c_rb, g_a, g_b = _gains(pt, ch)
    if node == "A":
        num = pt.rho * pt.p_b * c_rb * g_a
        den = pt.rho * g_a + pt.p_a * float(np.abs(ch.h_aa) ** 2) + 1.0
    elif node == "B":
        num = pt.rho * pt.p_a * c_ra * g_b
        den = pt.rho * g_b + pt.p_b * float(np.abs(ch.h_bb) ** 2) + 1.0
    else:
        raise ValueError(f"node must be 'A' or 'B', got {node!r}")
    return num / den


def relay_power(pt: OperatingPoint, ch: ChannelSet) -> float:
    """Relay output power rho ||w_t||^2 (P_A C_rA + P_B C_rB + 1).

    Equals the trace of the relay transmit covariance
    rho (P_A ||W h_AR||^2 + P_B ||W h_BR||^2 + trace(W W†)) for W = w_t w_r†
    with ||w_r|| = 1.
    """
    c_ra, c_rb, _, _ = _gains(pt, ch)
    nt2 = float(np.real(np.vdot(pt.w_t, pt.w_t)))
    return pt.rho * nt2 * (pt.p_a * c_ra + pt.p_b * c_rb + 1.0)


def harvested_energy(
    pt: OperatingPoint, ch: ChannelSet, sp: SystemParams, e_bar: float | None = None
) -> float:
    """Energy collected by the relay harvester.

    Q = beta (1 - rho) (||h_AR||^2 P_A + ||h_BR||^2 P_B + E_bar + M_T)
    where E_bar is the relay output power. By default E_bar is evaluated
    self-consistently from ``pt``; pass ``e_bar`` to pin it (the scalar
    subproblems treat it as a constant from the incoming iterate).
    """
    if e_bar is None:
        e_bar = relay_power(pt, ch)
    s = float(np.real(np.vdot(ch.h_ar, ch.h_ar))) * pt.p_a
    s += float(np.real(np.vdot(ch.h_br, ch.h_br))) * pt.p_b
    return sp.beta * (1.0 - pt.rho) * (s + e_bar + sp.m_t)


def zf_residual(pt: OperatingPoint, ch: ChannelSet) -> float:
    """Magnitude of the self-loop leakage |w_r† H_RR w_t|."""
    return float(np.abs(pt.w_r.conj() @ ch.h_rr @ pt.w_t))


def zf_tolerance(pt: OperatingPoint, ch: ChannelSet) -> float:
    """Acceptance threshold for the zero-forcing residual."""
    return float(1e-8 * (1.0 + np.linalg.norm(ch.h_rr) * np.linalg.norm(pt.w_t)))


def evaluate(pt: OperatingPoint, ch: ChannelSet, sp: SystemParams) -> PerformanceReport:
    """Full report: SINRs, rates, harvest, relay power, ZF residual, feasibility."""
    gamma_a = sinr("A", pt, ch)
    gamma_b = sinr("B", pt, ch)
    rate_a = float(np.log2(1.0 + gamma_a))
    rate_b = float(np.log2(1.0 + gamma_b))
    p_used = relay_power(pt, ch)
    q = harvested_energy(pt, ch, sp)
    res = zf_residual(pt, ch)
    flags = ConstraintFlags(
        harvest=bool(q >= sp.q_min * (1.0 - FEAS_RTOL)),
        relay_power=bool(p_used <= sp.p_relay * (1.0 + FEAS_RTOL)),
        p_a=bool(pt.p_a <= sp.p_max * (1.0 + FEAS_RTOL)),
        p_b=bool(pt.p_b <= sp.p_max * (1.0 + FEAS_RTOL)),
        zf=bool(res <= zf_tolerance(pt, ch)),
    )
    return PerformanceReport(
        gamma_a=gamma_a,
        gamma_b=gamma_b,
        rate_a=rate_a,
        rate_b=rate_b,
        sum_rate=rate_a + rate_b,
        q_harvest=q,
        p_relay_used=p_used,
        zf_residual=res,
        feasible=flags.all_ok(),
        flags=flags,
    )
