"""Seeded channel generation, Monte-Carlo experiment runner and file output.

Every random draw is keyed by (seed, trial) through a counter-based Philox
stream, so records are reproducible bit-for-bit and trials can be computed
in any order or in parallel. Powers cross this boundary in dB (dBm values
are treated on the same normalized unit-noise scale) and are converted to
linear ratios here.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .joint import JointResult, SolverOptions, joint_optimize, relay_only_optimize
from .model import ChannelSet, SystemParams

EXPERIMENTS = ("sumrate-vs-pmax", "sumrate-vs-rsi", "single")

DEFAULT_PMAX_DB = [-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0]
DEFAULT_QMIN_DBM = [10.0, 20.0]
DEFAULT_RSI_DB = [-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0]
DEFAULT_P_RELAY_DB = -5.0
# RSI level for the transmit-power sweep. Both schemes' sum-rates rise with
# the source budget only while residual self-interference stays well below
# the noise floor across the whole sweep; -40 dB is typical of a good
# cancellation front end and keeps the full-power baseline in that regime.
DEFAULT_FIXED_RSI_DB = -40.0
DEFAULT_TRIALS = 500

THREADS_ENV = "SWIPT_THREADS"


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


def db2lin(x_db: float) -> float:
    return float(10.0 ** (np.asarray(x_db, dtype=float) / 10.0))


def lin2db(x: float) -> float:
    return float(10.0 * np.log10(x))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str = "single"
    p_max_db: tuple[float, ...] = tuple(DEFAULT_PMAX_DB)
    q_min_dbm: tuple[float, ...] = tuple(DEFAULT_QMIN_DBM)
    rsi_db: tuple[float, ...] = (DEFAULT_FIXED_RSI_DB,)
    p_relay_db: float = DEFAULT_P_RELAY_DB
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    m_t: int = 2
    m_r: int = 2
    beta: float = 1.0
    alpha_step: float = 0.05
    power_grid_points: int = 401
    outer_tol: float = 1e-4
    max_outer: int = 50
    output: str | None = None
    fmt: str = "csv"
    include_timing: bool = False

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs = dict(raw)
        for key in ("p_max_db", "q_min_dbm", "rsi_db"):
            if key in kwargs:
                val = kwargs[key]
                if isinstance(val, (int, float)):
                    val = [val]
                kwargs[key] = tuple(float(x) for x in val)
        try:
            cfg = cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        for name in ("p_max_db", "q_min_dbm", "rsi_db"):
            vals = getattr(self, name)
            if len(vals) == 0:
                raise ConfigError(f"{name} must be nonempty")
            if not all(np.isfinite(v) for v in vals):
                raise ConfigError(f"{name} must contain finite dB values")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("fmt must be 'csv' or 'json'")
        if self.m_t < 2 or self.m_r < 2:
            raise ConfigError("m_t and m_r must be >= 2")
        if not 0.0 < self.alpha_step <= 1.0:
            raise ConfigError("alpha_step must lie in (0, 1]")
        return self

    def solver_options(self) -> SolverOptions:
        return SolverOptions(
            alpha_step=self.alpha_step,
            outer_tol=self.outer_tol,
            max_outer=self.max_outer,
            power_grid_points=self.power_grid_points,
        )


RECORD_FIELDS = (
    "seed", "trial", "sweep_value", "scheme", "sum_rate", "rate_a", "rate_b",
    "rho", "p_a", "p_b", "q_harvest", "feasible", "outer_iters", "wall_time_ms",
)


@dataclass
class TrialRecord:
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


@dataclass
class SummaryRow:
    sweep_value: float
    scheme: str
    trials: int
    feasible_trials: int
    feasibility_ratio: float
    mean_sum_rate: float      # over feasible trials; nan when none


@dataclass
class CurveResult:
    label: str
    records: list[TrialRecord]
    summary: list[SummaryRow]


def gen_channels(seed: int, trial: int, sp: SystemParams) -> ChannelSet:
    """One i.i.d. Rayleigh channel realization, deterministic in (seed, trial).

    The underlying standard complex-Gaussian draws do not depend on the RSI
    variances; sweeping an RSI value rescales the same fading realization,
    which keeps sweep curves comparable trial by trial.
    """
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF), np.uint64(trial & 0xFFFFFFFFFFFFFFFF)])
    rng = np.random.Generator(np.random.Philox(key=key))

    def cn(*shape) -> np.ndarray:
        re = rng.standard_normal(shape)
        im = rng.standard_normal(shape)
        return ((re + 1j * im) / np.sqrt(2.0)).astype(np.complex128)

    h_ar = cn(sp.m_r)
    h_br = cn(sp.m_r)
    h_ra = cn(sp.m_t)
    h_rb = cn(sp.m_t)
    h_rr_std = cn(sp.m_r, sp.m_t)
    h_aa_std = complex(cn(1)[0])
    h_bb_std = complex(cn(1)[0])
    return ChannelSet(
        h_ar=h_ar, h_br=h_br, h_ra=h_ra, h_rb=h_rb,
        h_rr=np.sqrt(sp.sigma2_r) * h_rr_std,
        h_aa=np.sqrt(sp.sigma2_a) * h_aa_std,
        h_bb=np.sqrt(sp.sigma2_b) * h_bb_std,
    )


def _record_from_result(
    res: JointResult, seed: int, trial: int, sweep_value: float, wall_ms: float
) -> TrialRecord:
    rep = res.report
    return TrialRecord(
        seed=seed,
        trial=trial,
        sweep_value=float(sweep_value),
        scheme=res.scheme,
        sum_rate=float(rep.sum_rate) if res.status != "infeasible" else 0.0,
        rate_a=float(rep.rate_a) if res.status != "infeasible" else 0.0,
        rate_b=float(rep.rate_b) if res.status != "infeasible" else 0.0,
        rho=float(res.point.rho),
        p_a=float(res.point.p_a),
        p_b=float(res.point.p_b),
        q_harvest=float(rep.q_harvest),
        feasible=res.status != "infeasible",
        outer_iters=int(res.outer_iters),
        wall_time_ms=float(wall_ms),
    )


def _run_trial(args: tuple) -> list[TrialRecord]:
    """One (sweep value, trial) work item; module-level for process pools."""
    cfg_dict, sweep_value, sp_kwargs, trial = args
    cfg = ExperimentConfig(**cfg_dict)
    sp = SystemParams(**sp_kwargs)
    ch = gen_channels(cfg.seed, trial, sp)
    opts = cfg.solver_options()
    out = []
    for run in (joint_optimize, relay_only_optimize):
        t0 = time.perf_counter()
        res = run(ch, sp, opts)
        wall = (time.perf_counter() - t0) * 1e3
        out.append(_record_from_result(res, cfg.seed, trial, sweep_value, wall))
    return out


def _curve_plan(cfg: ExperimentConfig) -> list[tuple[str, float, list[tuple[float, dict]]]]:
    """(label, fixed-value, [(sweep value, SystemParams kwargs)]) per curve."""
    plans = []
    if cfg.experiment == "sumrate-vs-pmax":
        for q_dbm in cfg.q_min_dbm:
            label = f"qbar{q_dbm:g}dBm"
            points = [
                (p_db, _sp_kwargs(cfg, p_max_db=p_db, q_min_dbm=q_dbm, rsi_db=cfg.rsi_db[0]))
                for p_db in cfg.p_max_db
            ]
            plans.append((label, q_dbm, points))
    elif cfg.experiment == "sumrate-vs-rsi":
        for p_db in cfg.p_max_db:
            label = f"pmax{p_db:g}dB"
            points = [
                (r_db, _sp_kwargs(cfg, p_max_db=p_db, q_min_dbm=cfg.q_min_dbm[0], rsi_db=r_db))
                for r_db in cfg.rsi_db
            ]
            plans.append((label, p_db, points))
    else:  # single
        points = [
            (
                cfg.p_max_db[0],
                _sp_kwargs(cfg, p_max_db=cfg.p_max_db[0], q_min_dbm=cfg.q_min_dbm[0], rsi_db=cfg.rsi_db[0]),
            )
        ]
        plans.append(("single", cfg.p_max_db[0], points))
    return plans


def _sp_kwargs(cfg: ExperimentConfig, p_max_db: float, q_min_dbm: float, rsi_db: float) -> dict:
    sigma2 = db2lin(rsi_db)
    return dict(
        p_max=db2lin(p_max_db),
        p_relay=db2lin(cfg.p_relay_db),
        q_min=db2lin(q_min_dbm),
        m_t=cfg.m_t,
        m_r=cfg.m_r,
        sigma2_a=sigma2,
        sigma2_b=sigma2,
        sigma2_r=sigma2,
        beta=cfg.beta,
    )


def worker_count() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        return max(1, n)
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig, progress=None) -> list[CurveResult]:
    """Run every curve of the configured experiment.

    Trials are independent; with more than one worker they are dispatched to
    a process pool and the records re-sorted deterministically afterwards.
    """
    cfg.validate()
    workers = worker_count()
    curves: list[CurveResult] = []
    for label, _, points in _curve_plan(cfg):
        records: list[TrialRecord] = []
        for sweep_value, sp_kwargs in points:
            jobs = [(asdict(cfg), sweep_value, sp_kwargs, t) for t in range(cfg.trials)]
            if workers > 1:
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    for recs in pool.map(_run_trial, jobs, chunksize=8):
                        records.extend(recs)
            else:
                for job in jobs:
                    records.extend(_run_trial(job))
            if progress is not None:
                progress(label, sweep_value, cfg.trials)
        records.sort(key=lambda r: (r.sweep_value, r.trial, r.scheme))
        curves.append(CurveResult(label=label, records=records, summary=summarize(records)))
    return curves


def summarize(records: list[TrialRecord]) -> list[SummaryRow]:
    """Feasible-only means plus the feasibility ratio, per (sweep, scheme)."""
    keys = sorted({(r.sweep_value, r.scheme) for r in records})
    rows = []
    for sweep, scheme in keys:
        group = [r for r in records if r.sweep_value == sweep and r.scheme == scheme]
        feas = [r for r in group if r.feasible]
        mean = float(np.mean([r.sum_rate for r in feas])) if feas else float("nan")
        rows.append(
            SummaryRow(
                sweep_value=sweep,
                scheme=scheme,
                trials=len(group),
                feasible_trials=len(feas),
                feasibility_ratio=len(feas) / len(group) if group else 0.0,
                mean_sum_rate=mean,
            )
        )
    return rows


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def _prepared(records: list[TrialRecord], include_timing: bool) -> list[TrialRecord]:
    # Wall time is a measurement, not a function of (cfg, seed); it is
    # zeroed on output by default so emitted files are reproducible.
    if include_timing:
        return records
    return [replace(r, wall_time_ms=0.0) for r in records]


def emit(
    records: list[TrialRecord],
    fmt: str,
    path: str,
    summary: list[SummaryRow] | None = None,
    include_timing: bool = False,
) -> None:
    """Write records (and a .summary sidecar) as CSV or JSON."""
    if not records:
        raise ValueError("no records to emit")
    rows = _prepared(records, include_timing)
    try:
        if fmt == "csv":
            lines = [",".join(RECORD_FIELDS)]
            for r in rows:
                lines.append(",".join(_fmt(getattr(r, f)) for f in RECORD_FIELDS))
            data = "\n".join(lines) + "\n"
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                fh.write(data)
        elif fmt == "json":
            payload = [{f: getattr(r, f) for f in RECORD_FIELDS} for r in rows]
            with open(path, "w", encoding="ascii", newline="\n") as fh:
                json.dump(payload, fh, indent=1)
                fh.write("\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
        if summary is not None:
            _emit_summary(summary, path + ".summary")
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def _emit_summary(summary: list[SummaryRow], path: str) -> None:
    fields = ("sweep_value", "scheme", "trials", "feasible_trials", "feasibility_ratio", "mean_sum_rate")
    lines = [",".join(fields)]
    for row in summary:
        lines.append(",".join(_fmt(getattr(row, f)) for f in fields))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_records_csv(path: str) -> list[TrialRecord]:
    """Inverse of the CSV writer, for round-trip checks and the CLI."""
    with open(path, "r", encoding="ascii") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    header = lines[0].split(",")
    if tuple(header) != RECORD_FIELDS:
        raise ValueError(f"unexpected CSV header in {path}")
    out = []
    for ln in lines[1:]:
        vals = ln.split(",")
        kw = dict(zip(RECORD_FIELDS, vals))
        out.append(
            TrialRecord(
                seed=int(kw["seed"]),
                trial=int(kw["trial"]),
                sweep_value=float(kw["sweep_value"]),
                scheme=kw["scheme"],
                sum_rate=float(kw["sum_rate"]),
                rate_a=float(kw["rate_a"]),
                rate_b=float(kw["rate_b"]),
                rho=float(kw["rho"]),
                p_a=float(kw["p_a"]),
                p_b=float(kw["p_b"]),
                q_harvest=float(kw["q_harvest"]),
                feasible=kw["feasible"] == "true",
                outer_iters=int(kw["outer_iters"]),
                wall_time_ms=float(kw["wall_time_ms"]),
            )
        )
    return out


def check_output_writable(path: str) -> None:
    """Fail before any compute starts when the output target is unusable."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(directory):
        raise IOError(f"output directory does not exist: {directory}")
    if not os.access(directory, os.W_OK):
        raise IOError(f"output directory is not writable: {directory}")


def output_paths(cfg: ExperimentConfig) -> list[str]:
    """Predict the per-curve output files for a config (stem + curve label)."""
    if cfg.output is None:
        return []
    stem, ext = os.path.splitext(cfg.output)
    ext = ext or ("." + cfg.fmt)
    return [f"{stem}_{label}{ext}" for label, _, _ in _curve_plan(cfg)]
