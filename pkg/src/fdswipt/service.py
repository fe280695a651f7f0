"""HTTP service wrapping the solver library.

Endpoints are stateless: each request carries the full problem description
(seeded channel draw plus budgets in dB) and the response carries the
evaluated solution. The CLI is a thin client of this app; it talks to it
in-process by default or to a remote instance over the network.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import harness, oracle
from .joint import SolverOptions, joint_optimize, relay_only_optimize
from .model import SystemParams
from .oracle import OracleConfig


class SolveRequest(BaseModel):
    seed: int = 0
    trial: int = 0
    p_max_db: float = 10.0
    p_relay_db: float = harness.DEFAULT_P_RELAY_DB
    q_min_dbm: float = 10.0
    rsi_db: float = harness.DEFAULT_FIXED_RSI_DB
    m_t: int = Field(default=2, ge=2)
    m_r: int = Field(default=2, ge=2)
    beta: float = Field(default=1.0, ge=0.0, le=1.0)
    scheme: str = Field(default="joint", pattern="^(joint|relay-only)$")
    alpha_step: float = Field(default=0.05, gt=0.0, le=1.0)
    power_grid_points: int = Field(default=401, ge=2)
    outer_tol: float = 1e-4
    max_outer: int = Field(default=50, ge=1)


class SolveResponse(BaseModel):
    status: str
    scheme: str
    sum_rate: float
    rate_a: float
    rate_b: float
    gamma_a: float
    gamma_b: float
    q_harvest: float
    p_relay_used: float
    zf_residual: float
    rho: float
    p_a: float
    p_b: float
    feasible: bool
    outer_iters: int
    infeasible_reason: str = ""


class ExperimentRequest(BaseModel):
    experiment: str = "single"
    p_max_db: list[float] = list(harness.DEFAULT_PMAX_DB)
    q_min_dbm: list[float] = list(harness.DEFAULT_QMIN_DBM)
    rsi_db: list[float] = [harness.DEFAULT_FIXED_RSI_DB]
    p_relay_db: float = harness.DEFAULT_P_RELAY_DB
    trials: int = Field(default=harness.DEFAULT_TRIALS, ge=1)
    seed: int = 0
    m_t: int = Field(default=2, ge=2)
    m_r: int = Field(default=2, ge=2)
    beta: float = Field(default=1.0, ge=0.0, le=1.0)
    alpha_step: float = Field(default=0.05, gt=0.0, le=1.0)
    power_grid_points: int = Field(default=401, ge=2)
    outer_tol: float = 1e-4
    max_outer: int = Field(default=50, ge=1)
    include_timing: bool = False


class RecordModel(BaseModel):
    seed: int
    trial: int
    sweep_value: float
    scheme: str
    sum_rate: float
    rate_a: float
    rate_b: float
    rho: float
    p_a: float
    p_b: float
    q_harvest: float
    feasible: bool
    outer_iters: int
    wall_time_ms: float


class SummaryModel(BaseModel):
    sweep_value: float
    scheme: str
    trials: int
    feasible_trials: int
    feasibility_ratio: float
    mean_sum_rate: float


class CurveModel(BaseModel):
    label: str
    records: list[RecordModel]
    summary: list[SummaryModel]


class ExperimentResponse(BaseModel):
    curves: list[CurveModel]


class OracleCompareRequest(BaseModel):
    instances: int = Field(default=20, ge=1)
    seed: int = 0
    p_max_db: float = 10.0
    p_relay_db: float = harness.DEFAULT_P_RELAY_DB
    q_min_dbm: float = 10.0
    rsi_db: float = harness.DEFAULT_FIXED_RSI_DB
    m_t: int = Field(default=2, ge=2)
    m_r: int = Field(default=2, ge=2)
    beta: float = Field(default=1.0, ge=0.0, le=1.0)
    alpha_step: float = Field(default=0.025, gt=0.0, le=1.0)
    alpha_points: int = Field(default=41, ge=2)
    rho_points: int = Field(default=101, ge=2)
    power_points: int = Field(default=51, ge=2)
    beam_angle_points: int = Field(default=64, ge=2)


class OracleInstanceModel(BaseModel):
    trial: int
    joint_rate: float
    oracle_rate: float
    gap: float
    joint_feasible: bool
    oracle_feasible: bool


class OracleCompareResponse(BaseModel):
    instances: list[OracleInstanceModel]
    max_gap: float


app = FastAPI(
    title="fdswipt",
    description="Sum-rate optimizer for a full-duplex two-way SWIPT relay",
)


@app.get("/health")
def health() -> dict:
    return {"status": "ok"}


def _system_params(req) -> SystemParams:
    sigma2 = harness.db2lin(req.rsi_db)
    return SystemParams(
        p_max=harness.db2lin(req.p_max_db),
        p_relay=harness.db2lin(req.p_relay_db),
        q_min=harness.db2lin(req.q_min_dbm),
        m_t=req.m_t,
        m_r=req.m_r,
        sigma2_a=sigma2,
        sigma2_b=sigma2,
        sigma2_r=sigma2,
        beta=req.beta,
    )


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    sp = _system_params(req)
    ch = harness.gen_channels(req.seed, req.trial, sp)
    opts = SolverOptions(
        alpha_step=req.alpha_step,
        outer_tol=req.outer_tol,
        max_outer=req.max_outer,
        power_grid_points=req.power_grid_points,
    )
    run = joint_optimize if req.scheme == "joint" else relay_only_optimize
    res = run(ch, sp, opts)
    rep = res.report
    return SolveResponse(
        status=res.status,
        scheme=res.scheme,
        sum_rate=rep.sum_rate,
        rate_a=rep.rate_a,
        rate_b=rep.rate_b,
        gamma_a=rep.gamma_a,
        gamma_b=rep.gamma_b,
        q_harvest=rep.q_harvest,
        p_relay_used=rep.p_relay_used,
        zf_residual=rep.zf_residual,
        rho=res.point.rho,
        p_a=res.point.p_a,
        p_b=res.point.p_b,
        feasible=rep.feasible,
        outer_iters=res.outer_iters,
        infeasible_reason=res.infeasible_reason,
    )


@app.post("/experiment", response_model=ExperimentResponse)
def experiment(req: ExperimentRequest) -> ExperimentResponse:
    try:
        cfg = harness.ExperimentConfig.from_dict(req.model_dump())
    except harness.ConfigError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    curves = harness.run_experiment(cfg)
    return ExperimentResponse(
        curves=[
            CurveModel(
                label=c.label,
                records=[
                    RecordModel(**{f: getattr(r, f) for f in harness.RECORD_FIELDS})
                    for r in c.records
                ],
                summary=[SummaryModel(**vars(s)) for s in c.summary],
            )
            for c in curves
        ]
    )


@app.post("/oracle-compare", response_model=OracleCompareResponse)
def oracle_compare(req: OracleCompareRequest) -> OracleCompareResponse:
    sp = _system_params(req)
    ocfg = OracleConfig(
        alpha_points=req.alpha_points,
        rho_points=req.rho_points,
        power_points=req.power_points,
        beam_angle_points=req.beam_angle_points,
    )
    opts = SolverOptions(alpha_step=req.alpha_step)
    rows = []
    max_gap = -float("inf")
    for trial in range(req.instances):
        ch = harness.gen_channels(req.seed, trial, sp)
        jres = joint_optimize(ch, sp, opts)
        ores = oracle.brute_force(ch, sp, ocfg)
        j_rate = jres.report.sum_rate if jres.status != "infeasible" else 0.0
        o_rate = ores.report.sum_rate if ores.status != "infeasible" else 0.0
        gap = o_rate - j_rate
        max_gap = max(max_gap, gap)
        rows.append(
            OracleInstanceModel(
                trial=trial,
                joint_rate=j_rate,
                oracle_rate=o_rate,
                gap=gap,
                joint_feasible=jres.status != "infeasible",
                oracle_feasible=ores.status != "infeasible",
            )
        )
    return OracleCompareResponse(instances=rows, max_gap=max_gap)
