"""Command-line client for the planning service.

``run`` executes a benchmark through the HTTP API (an in-process app
by default, a remote server with ``--server``) and writes the report
files.  ``replay`` inspects a saved tree dump.  ``serve`` starts the
HTTP service.  Exit code 0 on completion, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import SOLVERS
from .core import ConfigError
from .solver.tree import parse_dump


def _parse_seeds(text: str) -> list[int]:
    """``"20"`` means seeds 0..19; ``"3,5,9"`` is an explicit list."""
    if "," in text:
        return [int(part) for part in text.split(",") if part.strip()]
    n = int(text)
    if n < 1:
        raise ConfigError("seed count must be positive")
    return list(range(n))


def _client(server: str | None):
    import httpx

    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=None)
    # in-process transport: same API surface, no socket
    from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app())


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        seeds = _parse_seeds(args.seeds)
    except (ValueError, ConfigError) as exc:
        print(f"error: bad --seeds value: {exc}", file=sys.stderr)
        return 2
    episodes = args.budget_episodes
    if episodes is None and args.budget_ms is None:
        episodes = 160
    body = {
        "scenarios": [args.scenario],
        "solvers": [args.solver],
        "seeds": seeds,
        "budget_episodes": episodes,
        "budget_ms": args.budget_ms,
        "step_cap": args.step_cap,
        "workers": args.workers,
    }
    with _client(args.server) as client:
        resp = client.post("/bench/runs", json=body)
        if resp.status_code != 200:
            try:
                detail = resp.json().get("detail", resp.text)
            except ValueError:
                detail = resp.text
            print(f"error: {detail}", file=sys.stderr)
            return 2
        data = resp.json()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(data["csv"])
    (out / "summary.json").write_text(
        json.dumps(data["summary"], sort_keys=True, indent=2) + "\n"
    )
    for scenario, solvers in sorted(data["summary"].items()):
        for solver, agg in sorted(solvers.items()):
            print(
                f"{scenario} {solver}: return {agg['mean_return']:.1f} "
                f"± {agg['ci95_return']:.1f}, steps {agg['mean_steps']:.1f}, "
                f"success {100.0 * agg['success_rate']:.0f}%"
            )
    print(f"wrote {out / 'results.csv'} and {out / 'summary.json'}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    path = Path(args.tree_dump)
    try:
        rows = parse_dump(path.read_text())
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: malformed tree dump: {exc}", file=sys.stderr)
        return 2
    kinds = {"belief": 0, "sphere": 0, "discrete": 0}
    for r in rows:
        kinds[r.kind] = kinds.get(r.kind, 0) + 1
    max_depth = max((r.depth for r in rows), default=0)
    print(f"{path}: {len(rows)} rows, max depth {max_depth}")
    print(
        f"belief nodes {kinds['belief']}, sphere actions {kinds['sphere']}, "
        f"discrete actions {kinds['discrete']}"
    )
    if rows:
        root = rows[0]
        print(f"root: {root.visits} visits, value {root.value}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    uvicorn.run("deskplan.service.app:app", host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deskplan", description="Object-search planning toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a benchmark and write reports")
    run_p.add_argument("--scenario", required=True, help="builtin name or YAML path")
    run_p.add_argument("--solver", required=True, choices=SOLVERS)
    run_p.add_argument("--seeds", required=True, help="count, or comma-separated list")
    budget = run_p.add_mutually_exclusive_group()
    budget.add_argument("--budget-ms", type=float, help="per-step planning budget")
    budget.add_argument("--budget-episodes", type=int, help="per-step episode budget")
    run_p.add_argument("--step-cap", type=int, default=50)
    run_p.add_argument("--out", required=True, help="report directory")
    run_p.add_argument("--server", help="remote service URL; default in-process")
    run_p.add_argument("--workers", type=int, help="parallel runs")
    run_p.set_defaults(func=_cmd_run)

    replay_p = sub.add_parser("replay", help="summarize a saved tree dump")
    replay_p.add_argument("--tree-dump", required=True)
    replay_p.set_defaults(func=_cmd_replay)

    serve_p = sub.add_parser("serve", help="start the HTTP service")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8000)
    serve_p.set_defaults(func=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
