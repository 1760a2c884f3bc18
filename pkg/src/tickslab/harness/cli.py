"""Command-line entry points: run, gen-tasks, metrics, serve."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..config import Config
from ..errors import TickslabError
from ..params import build_model
from ..transport import StdioTransport, ToolServer
from .episode import Policy, run_episode
from .metrics import compute_metrics, read_log_dir, write_logs, write_report
from .tasks import gen_tasks, load_tasks, save_tasks
from .world import WorldSession, build_registry, demo_world

EXIT_OK = 0
EXIT_CONFIG = 2


def _load_config(args) -> Config:
    config = Config.load(args.config) if args.config else Config()
    if getattr(args, "seed", None) is not None:
        import dataclasses

        config = dataclasses.replace(config, seed=args.seed)
    config.validate()
    return config


def cmd_run(args) -> int:
    config = _load_config(args)
    tasks = load_tasks(args.tasks)
    registry = build_registry()
    model = build_model(config, len(registry), registry.max_slots)
    policy = Policy(args.policy)

    logs = [run_episode(task, config, policy, model=model) for task in tasks]

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_logs(out / "episodes.jsonl", logs)
    report = compute_metrics(logs)
    write_report(out / "metrics.json", report)
    print(
        f"episodes={report.episode_count} tsr={report.tsr:.6f} "
        f"esr={report.esr:.6f} ael={report.ael:.6f}"
    )
    return EXIT_OK


def cmd_gen_tasks(args) -> int:
    tasks = gen_tasks(args.seed, args.count)
    save_tasks(args.out, tasks)
    print(f"wrote {len(tasks)} tasks to {args.out}")
    return EXIT_OK


def cmd_metrics(args) -> int:
    logs = read_log_dir(args.logs)
    report = compute_metrics(logs)
    print(
        f"episodes={report.episode_count} tsr={report.tsr:.6f} "
        f"esr={report.esr:.6f} ael={report.ael:.6f}"
    )
    return EXIT_OK


def cmd_serve(args) -> int:
    config = _load_config(args)
    registry = build_registry()
    model = build_model(config, len(registry), registry.max_slots)
    session = WorldSession(demo_world(), model.actuator)
    server = ToolServer(registry, session.handler)
    if args.transport == "stdio":
        server.serve_stream(StdioTransport())
        return EXIT_OK
    host, _, port = args.addr.rpartition(":")
    if not host or not port.isdigit():
        raise TickslabError(f"bad --addr {args.addr!r}, expected HOST:PORT")
    server.serve_tcp(host, int(port))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tickslab",
        description="Deterministic tick-slab reasoning runtime and task harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run episodes over a task file")
    run.add_argument("--tasks", required=True, help="tasks JSONL file")
    run.add_argument("--config", default=None, help="config JSON (defaults apply)")
    run.add_argument("--policy", choices=["ctm", "oracle"], default="ctm")
    run.add_argument("--seed", type=int, default=None, help="override config seed")
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=cmd_run)

    gen = sub.add_parser("gen-tasks", help="synthesize a task file")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--count", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_gen_tasks)

    met = sub.add_parser("metrics", help="recompute metrics from logs")
    met.add_argument("--logs", required=True, help="directory of episode JSONL logs")
    met.set_defaults(func=cmd_metrics)

    serve = sub.add_parser("serve", help="expose the tool registry")
    serve.add_argument("--transport", choices=["stdio", "tcp"], default="stdio")
    serve.add_argument("--addr", default="127.0.0.1:7351", help="HOST:PORT for tcp")
    serve.add_argument("--config", default=None)
    serve.add_argument("--seed", type=int, default=None)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TickslabError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
