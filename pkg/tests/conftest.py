import pytest

from fdswipt import harness, rxbeam, scalaropt
from fdswipt.model import OperatingPoint, SystemParams, evaluate


def default_params(m_t: int = 2, m_r: int = 2, rsi_db: float = -10.0,
                   p_max_db: float = 10.0, q_min_dbm: float = 10.0) -> SystemParams:
    sigma2 = harness.db2lin(rsi_db)
    return SystemParams(
        p_max=harness.db2lin(p_max_db),
        p_relay=harness.db2lin(-5.0),
        q_min=harness.db2lin(q_min_dbm),
        m_t=m_t,
        m_r=m_r,
        sigma2_a=sigma2,
        sigma2_b=sigma2,
        sigma2_r=sigma2,
    )


def random_channels(seed: int, sp: SystemParams):
    return harness.gen_channels(seed, 0, sp)


def pipeline_point(seed: int, sp: SystemParams, alpha: float = 0.4,
                   rho: float = 0.5) -> tuple[OperatingPoint, object]:
    """A realistic operating point: beams from one solver pass at full power.

    Mirrors how iterates arise inside the outer loop, so subproblem tests
    exercise the states they actually see (relay cap active at the incoming
    powers, feasible harvest where possible).
    """
    ch = random_channels(seed, sp)
    cand = rxbeam.solve_for_alpha(alpha, ch, sp, rho, sp.p_max, sp.p_max)
    return cand.point, ch


def feasible_pipeline_point(seed: int, sp: SystemParams):
    """Like pipeline_point but with rho repaired to a feasible value."""
    pt, ch = pipeline_point(seed, sp)
    rho = scalaropt.optimize_rho(pt, ch, sp)
    pt = OperatingPoint(w_t=pt.w_t, w_r=pt.w_r, rho=rho, p_a=pt.p_a, p_b=pt.p_b)
    assert evaluate(pt, ch, sp).feasible
    return pt, ch


@pytest.fixture
def sp2():
    return default_params()
