"""Command-line entry point.

    matchmix <kind> [--config file.json] [flags]

Kinds: sample, walk, tv-exact, couple, contraction, giant, verify.
Flags override config-file values. Exit codes: 0 success, 1 usage error,
2 infeasible at desk scale, 3 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .harness import (
    EXIT_USAGE,
    KINDS,
    ExperimentConfig,
    config_from_dict,
    run_experiment,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="matchmix", description=__doc__)
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", help="JSON config file; flags win on conflict")
    parser.add_argument("--n", type=int)
    parser.add_argument("--k", type=int)
    parser.add_argument(
        "--t",
        type=int,
        action="append",
        dest="times",
        help="round to record (repeatable)",
    )
    parser.add_argument(
        "--beta",
        type=float,
        action="append",
        help="time multiple beta (repeatable)",
    )
    parser.add_argument("--delta", type=float)
    parser.add_argument("--reps", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output file; stdout when omitted")
    parser.add_argument("--format", choices=("csv", "jsonl"), dest="fmt")
    parser.add_argument(
        "--no-plot",
        action="store_true",
        help="skip the companion figure next to --out",
    )
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    base = {}
    if args.config:
        try:
            with open(args.config) as fh:
                base = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"cannot read config {args.config}: {exc}", file=sys.stderr)
            return EXIT_USAGE
    overrides = {
        key: getattr(args, key)
        for key in ("n", "k", "times", "beta", "delta", "reps", "seed", "out", "fmt")
        if getattr(args, key) is not None
    }
    if args.no_plot:
        overrides["plot"] = False
    merged = {**base, **overrides}
    try:
        cfg = config_from_dict(merged, kind=args.kind)
        cfg.validate()
    except (ValueError, TypeError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run_experiment(cfg)


if __name__ == "__main__":
    sys.exit(main())
