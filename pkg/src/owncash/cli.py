"""Command-line entry point: run registered scenarios and write reports."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from owncash.scenarios import SCENARIOS, UsageError, run_scenario

ALL_SEEDS = range(1, 11)


def _policy_pair(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    return key.strip(), value.strip()


def _u64(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="owncash",
        description="Run ownership-transfer e-cash scenarios on a simulated broadcast network.",
    )
    mode = parser.add_mutually_exclusive_group(required=True)
    mode.add_argument("--scenario", choices=sorted(SCENARIOS), help="scenario to run")
    mode.add_argument("--list", action="store_true", help="print scenario names and exit")
    mode.add_argument("--all", action="store_true", help="run every scenario for seeds 1..10")
    parser.add_argument("--seed", type=_u64, default=1, help="simulation seed (default: 1)")
    parser.add_argument(
        "--report",
        type=Path,
        help="report file; with --all, a directory receiving <scenario>-<seed>.report",
    )
    parser.add_argument(
        "--trace",
        type=Path,
        help="trace file; with --all, a directory receiving <scenario>-<seed>.trace",
    )
    parser.add_argument(
        "--policy",
        type=_policy_pair,
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override require_acceptance_signature, retain_history or quorum_threshold",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.list:
        for name in SCENARIOS:
            print(name)
        return 0

    overrides = dict(args.policy)
    if args.all:
        runs = [(name, seed) for name in SCENARIOS for seed in ALL_SEEDS]
        for d in (args.report, args.trace):
            if d is not None:
                d.mkdir(parents=True, exist_ok=True)
    else:
        runs = [(args.scenario, args.seed)]

    failed = 0
    for name, seed in runs:
        if args.all:
            report_path = args.report / f"{name}-{seed}.report" if args.report else None
            trace_path = args.trace / f"{name}-{seed}.trace" if args.trace else None
        else:
            report_path, trace_path = args.report, args.trace
        try:
            report = run_scenario(name, seed, overrides, report_path, trace_path)
        except UsageError as exc:
            parser.print_usage(sys.stderr)
            print(f"owncash: error: {exc}", file=sys.stderr)
            return 2
        status = "PASS" if report.passed else "FAIL"
        print(f"{status} {name} seed={seed}")
        if not args.all or not report.passed:
            for v in report.verdicts:
                print(f"  {v.line()}")
        failed += not report.passed
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
