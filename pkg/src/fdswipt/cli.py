"""Command-line client for the solver service.

Subcommands: ``solve`` (single instance), ``experiment`` (Monte-Carlo
sweeps with file output), ``oracle-compare`` (solver vs. brute-force grid)
and ``serve`` (run the HTTP service). The first three are thin clients:
they POST to the service app, in-process by default or at --url, and do
all file I/O locally.

Exit codes: 0 success, 2 configuration error, 3 infeasible single-instance
solve, 4 I/O error.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys

import httpx

from . import harness

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4


async def _post_inproc(path: str, payload: dict) -> httpx.Response:
    from .service import app  # deferred: keeps --help fast

    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(
        transport=transport, base_url="http://fdswipt.local", timeout=None
    ) as client:
        return await client.post(path, json=payload)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise harness.ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise harness.ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise harness.ConfigError("config file must hold a JSON object")
    return raw


def _post(url: str | None, path: str, payload: dict) -> dict:
    """POST to the service: remote at ``url`` or the in-process app."""
    if url:
        with httpx.Client(base_url=url, timeout=None) as client:
            resp = client.post(path, json=payload)
    else:
        resp = asyncio.run(_post_inproc(path, payload))
    if resp.status_code == 422:
        raise harness.ConfigError(f"service rejected the request: {resp.text}")
    resp.raise_for_status()
    return resp.json()


def cmd_solve(args) -> int:
    payload = _load_config(args.config)
    body = _post(args.url, "/solve", payload)
    print(json.dumps(body, indent=1))
    if body["status"] == "infeasible":
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_experiment(args) -> int:
    raw = _load_config(args.config)
    if args.output:
        raw["output"] = args.output
    if args.format:
        raw["fmt"] = args.format
    cfg = harness.ExperimentConfig.from_dict(raw)
    if cfg.output is None:
        raise harness.ConfigError("experiment needs an output path ('output' key or --output)")
    paths = harness.output_paths(cfg)
    for p in paths:
        harness.check_output_writable(p)

    payload = {k: v for k, v in raw.items() if k not in ("output", "fmt")}
    body = _post(args.url, "/experiment", payload)

    for curve, path in zip(body["curves"], paths):
        records = [harness.TrialRecord(**r) for r in curve["records"]]
        summary = [harness.SummaryRow(**s) for s in curve["summary"]]
        harness.emit(records, cfg.fmt, path, summary=summary, include_timing=cfg.include_timing)
        print(f"wrote {len(records)} records to {path}", file=sys.stderr)
    return EXIT_OK


def cmd_oracle_compare(args) -> int:
    payload = _load_config(args.config)
    if args.instances is not None:
        payload["instances"] = args.instances
    body = _post(args.url, "/oracle-compare", payload)
    for row in body["instances"]:
        print(
            f"instance {row['trial']:3d}: joint {row['joint_rate']:.6f}"
            f"  oracle {row['oracle_rate']:.6f}  gap {row['gap']:+.6f}"
        )
    print(f"max gap: {body['max_gap']:.6f} bits")
    if args.output:
        try:
            harness.check_output_writable(args.output)
            lines = ["trial,joint_rate,oracle_rate,gap,joint_feasible,oracle_feasible"]
            for row in body["instances"]:
                lines.append(
                    f"{row['trial']},{row['joint_rate']:.9g},{row['oracle_rate']:.9g},"
                    f"{row['gap']:.9g},{str(row['joint_feasible']).lower()},"
                    f"{str(row['oracle_feasible']).lower()}"
                )
            with open(args.output, "w", encoding="ascii", newline="\n") as fh:
                fh.write("\n".join(lines) + "\n")
        except OSError as exc:
            raise IOError(str(exc)) from exc
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdswipt",
        description="Full-duplex two-way SWIPT relay sum-rate optimizer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one seeded instance and print the report")
    p_solve.add_argument("--config", help="JSON config file (SolveRequest keys)")
    p_solve.add_argument("--url", help="remote service URL (default: in-process)")
    p_solve.set_defaults(func=cmd_solve)

    p_exp = sub.add_parser("experiment", help="run a Monte-Carlo sweep and write data files")
    p_exp.add_argument("--config", required=True, help="JSON config file (ExperimentConfig keys)")
    p_exp.add_argument("--output", help="override the output path stem")
    p_exp.add_argument("--format", choices=("csv", "json"), help="override the output format")
    p_exp.add_argument("--url", help="remote service URL (default: in-process)")
    p_exp.set_defaults(func=cmd_experiment)

    p_cmp = sub.add_parser("oracle-compare", help="joint solver vs. brute-force grid on seeded instances")
    p_cmp.add_argument("--config", help="JSON config file (OracleCompareRequest keys)")
    p_cmp.add_argument("--instances", type=int, help="number of seeded instances")
    p_cmp.add_argument("--output", help="optional CSV of per-instance results")
    p_cmp.add_argument("--url", help="remote service URL (default: in-process)")
    p_cmp.set_defaults(func=cmd_oracle_compare)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IOError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
