"""Command-line entry point: ``onlinesearch <command> [options]``."""

from __future__ import annotations

import argparse
import os
import sys

from .errors import OnlineSearchError, ValidationError
from .harness import ExperimentConfig, emit_report, run_experiment

COMMANDS = {
    "simulate": ("double-bound", "DOUBLE on random monotone curves; metrics max_cr, mean_worst_cr, tight_fixture_cr"),
    "frontier": ("pad-frontier", "PREDICT-AND-DOUBLE consistency/robustness per epsilon on a smooth curve"),
    "sweep": ("standard-sweep", "learned pipeline mean/std test CR per sample size m (realizable lookup tables)"),
    "estimate-delta": ("agnostic-delta", "Δ_F brute force vs doubling estimate on agnostic fixtures"),
    "compare-losses": ("loss-compare", "competitive vs absolute vs squared loss on the symmetric two-atom fixture"),
    "lowerbound": ("lowerbound-demo", "exact optimal ratios on the lower-bound constructions"),
}

EPILOG = """\
Output columns (CSV, CRLF line endings, RFC 4180 quoting):
  experiment  suite name
  params      compact JSON of the settings behind the row
  metric      metric name (listed per command above)
  value       metric value, printed with full float precision
  trials      number of trials aggregated into the row
  seed        base seed

Exit codes: 0 success, 2 invalid config or arguments, 1 runtime error.
"""


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="onlinesearch",
        description="Seeded experiments for online search with learned predictions.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text, epilog=EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("--config", help="JSON config file (unknown keys are rejected)")
        p.add_argument("--seed", type=_seed, help="base seed, overrides the config")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker processes (default: machine parallelism)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    experiment = COMMANDS[args.command][0]
    try:
        if args.config:
            cfg = ExperimentConfig.load(args.config, experiment)
        else:
            cfg = ExperimentConfig.from_dict({}, experiment)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.threads < 1:
            raise ValidationError("--threads", "must be >= 1")
        rows = run_experiment(cfg, threads=args.threads)
        out = args.out or cfg.output
        text = emit_report(rows, out, args.format)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OnlineSearchError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if out is None:
        sys.stdout.write(text)
    return 0
