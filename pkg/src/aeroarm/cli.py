"""Command-line entry point: run scenarios, list them, dump the default config."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import default_config_toml, load_config
from .errors import AeroArmError
from .harness import check_thresholds, emit_logs, run_scenario
from .scenarios import SCENARIOS, get_scenario

OUT_ENV_VAR = "AEROARM_OUT"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aeroarm",
        description="Closed-loop aerial continuum-arm simulation scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario (or 'all')")
    run.add_argument("scenario", help="scenario name, or 'all' for the full suite")
    run.add_argument("--config", type=Path, default=None, help="TOML config file")
    run.add_argument("--out", type=Path, default=None,
                     help=f"output directory (default $" + OUT_ENV_VAR + " or ./aeroarm-out)")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--disable-tension-loop", action="store_true",
                     help="bypass the tension-floor regulator (A/B comparison)")
    run.add_argument("--disable-imu-correction", action="store_true",
                     help="use the raw actuation-implied configuration estimate")
    run.add_argument("--check", action="store_true",
                     help="exit nonzero if any scenario threshold is violated")

    sub.add_parser("list-scenarios", help="list available scenarios")
    sub.add_parser("dump-default-config", help="print the documented default config")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-scenarios":
        cfg = load_config(None)
        for name in SCENARIOS:
            print(f"{name}: {get_scenario(name, cfg).description}")
        return 0

    if args.command == "dump-default-config":
        sys.stdout.write(default_config_toml())
        return 0

    try:
        cfg = load_config(args.config)
    except (OSError, ValueError) as exc:
        print(f"error: cannot load config: {exc}", file=sys.stderr)
        return 2

    out_dir = args.out or Path(os.environ.get(OUT_ENV_VAR, "aeroarm-out"))
    names = list(SCENARIOS) if args.scenario == "all" else [args.scenario]
    failures: list[str] = []
    for name in names:
        try:
            scenario = get_scenario(name, cfg)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return 2
        try:
            result = run_scenario(
                scenario, cfg,
                tension_loop=False if args.disable_tension_loop else None,
                imu_correction=False if args.disable_imu_correction else None,
                seed=args.seed)
        except AeroArmError as exc:
            print(f"error: {name}: {type(exc).__name__}: {exc}", file=sys.stderr)
            return 1
        csv_path, summary_path = emit_logs(result, out_dir)
        rtf = scenario.duration / result.wall_time if result.wall_time > 0 else float("inf")
        print(f"== {name} ({result.wall_time:.2f}s wall, {rtf:.1f}x realtime)")
        for key, val in result.summary.items():
            print(f"  {key}: {val}")
        print(f"  logs: {csv_path} {summary_path}")
        if args.check:
            failures.extend(check_thresholds(scenario, result.summary))

    if failures:
        for f in failures:
            print(f"CHECK FAILED {f}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
