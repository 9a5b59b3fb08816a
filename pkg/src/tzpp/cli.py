"""Command-line entry point: run episodes, ablation suites, and the
operator service."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import G1_GO2, G1_ONLY, SimConfig
from .engine import read_trace, replay_oracle, run_episode, write_trace
from .geometry import Scene
from .metrics import (
    METRIC_COLUMNS,
    compute_report,
    csv_header,
    csv_row,
    format_value,
    report_table,
)
from .perception import RemoteOracle
from .scenarios import ScenarioError, builtin_scene, load_scene

SUITE_CONFIGS = ("full", "-X", "-Y", "g1-only")


def resolve_scene(spec: str) -> Scene:
    if spec.startswith("builtin:"):
        which = spec.split(":", 1)[1]
        return builtin_scene(int(which) if which.isdigit() else which)
    return load_scene(spec)


def build_config(args, agents=None, disable_x=None, disable_y=None,
                 seed=None) -> SimConfig:
    return SimConfig(
        agents=(agents if agents is not None else args.agents).replace("-", "_"),
        disable_mode_x=disable_x if disable_x is not None else args.disable_mode_x,
        disable_mode_y=disable_y if disable_y is not None else args.disable_mode_y,
        seed=seed if seed is not None else args.seed,
        turn_budget=args.turn_budget,
        oracle_latency=args.oracle_latency,
    )


def build_oracle(args, scene):
    spec = args.oracle
    if spec == "geometric":
        return None  # run_episode builds the default geometric oracle
    if spec == "remote":
        return RemoteOracle(url=args.remote_url)
    if spec.startswith("replay:"):
        return replay_oracle(read_trace(spec.split(":", 1)[1]))
    raise ValueError(f"unknown oracle {spec!r}")


def cmd_run(args) -> int:
    scene = resolve_scene(args.scene)
    successes = 0
    for i in range(args.repeat):
        config = build_config(args, seed=args.seed + i)
        oracle = build_oracle(args, scene)
        trace = run_episode(scene, config, oracle)
        report = compute_report(trace, scene)
        if args.out:
            out = Path(args.out)
            if args.repeat > 1:
                out = out.with_name(f"{out.stem}.{i}{out.suffix}")
            write_trace(trace, out)
            print(f"trace written to {out}")
        label = f"run {i}: " if args.repeat > 1 else ""
        print(f"{label}{scene.name}: {trace.result.status} "
              f"({trace.result.detail}) in {len(trace.records)} turns")
        if args.report == "csv":
            print(csv_header())
            print(csv_row(report))
        else:
            print(report_table(report))
        if trace.result.status == "aborted":
            print(f"episode aborted: {trace.result.detail}", file=sys.stderr)
            return 1
        successes += int(trace.result.success)
    if args.repeat > 1:
        print(f"aggregate CR over {args.repeat} runs: "
              f"{100.0 * successes / args.repeat:.2f}%")
    return 0


SUITE_COLUMNS = ("TIME", "PS", "CR", "RMSE", "V_avoid")
_SUITE_FIELDS = {"TIME": "time_total", "PS": "path_score", "CR": "completion",
                 "RMSE": "rmse", "V_avoid": "avoidance_ratio"}


def cmd_suite(args) -> int:
    rows = []
    for idx in range(1, 6):
        scene = builtin_scene(idx)
        for label in SUITE_CONFIGS:
            config = build_config(
                args,
                agents=G1_ONLY if label == "g1-only" else G1_GO2,
                disable_x=label == "-X",
                disable_y=label == "-Y",
            )
            trace = run_episode(scene, config)
            report = compute_report(trace, scene)
            cells = {"scene": scene.name, "config": label,
                     "CR": format_value("completion", report.completion,
                                        csv=args.report == "csv")}
            for col in ("TIME", "PS", "RMSE", "V_avoid"):
                value = getattr(report, _SUITE_FIELDS[col])
                if not trace.result.success:
                    value = None  # failed runs report N/A, matching the tables
                cells[col] = format_value(_SUITE_FIELDS[col], value,
                                          csv=args.report == "csv")
            rows.append(cells)
    headers = ["scene", "config", *SUITE_COLUMNS]
    if args.report == "csv":
        print(",".join(headers))
        for row in rows:
            print(",".join(row[h] for h in headers))
    else:
        widths = {h: max(len(h), *(len(row[h]) for row in rows)) for h in headers}
        print("  ".join(h.ljust(widths[h]) for h in headers))
        for row in rows:
            print("  ".join(row[h].ljust(widths[h]) for h in headers))
    return 0


def cmd_serve(args) -> int:
    from .service import run_service

    scene = resolve_scene(args.scene)
    config = build_config(args)
    return run_service(scene, config, role=args.role, host=args.host,
                       port=args.port, trace_path=args.out)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tzpp",
        description="Coordinator-explorer navigation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scene", default="builtin:1",
                       help="scene file path or builtin:N")
        p.add_argument("--agents", choices=["g1-go2", "g1-only"],
                       default="g1-go2")
        p.add_argument("--disable-mode-x", action="store_true")
        p.add_argument("--disable-mode-y", action="store_true")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--turn-budget", type=int, default=60)
        p.add_argument("--oracle-latency", type=float, default=0.0)

    run_p = sub.add_parser("run", help="run one configuration")
    common(run_p)
    run_p.add_argument("--oracle", default="geometric",
                       help="geometric | remote | replay:<trace path>")
    run_p.add_argument("--remote-url", default=None,
                       help="remote oracle endpoint (or TZPP_ORACLE_URL)")
    run_p.add_argument("--repeat", type=int, default=1,
                       help="repeat runs, aggregating the completion rate")
    run_p.add_argument("--out", default=None, help="trace output path")
    run_p.add_argument("--report", choices=["table", "csv"], default="table")
    run_p.set_defaults(func=cmd_run)

    suite_p = sub.add_parser("suite",
                             help="all builtins x {full, -X, -Y, g1-only}")
    common(suite_p)
    suite_p.add_argument("--report", choices=["table", "csv"], default="table")
    suite_p.set_defaults(func=cmd_suite)

    serve_p = sub.add_parser("serve", help="host an operator session")
    common(serve_p)
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8765)
    serve_p.add_argument("--role", choices=["human-humanoid", "human-both"],
                         default="human-humanoid")
    serve_p.add_argument("--out", default="operator.trace",
                         help="trace output path")
    serve_p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
