"""Command-line entry point: ``fairbandit {run,sweep,trace,validate}``.

Exit codes: 0 success, 1 runtime failure, 2 invalid config, 3 infeasible
fairness constraint.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .bandit import format_rate
from .errors import ConfigError, InfeasibleError
from .harness import format_trace_csv, load_config, run_experiment, run_replication, sweep

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3

log = logging.getLogger("fairbandit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairbandit", description="Fairness-constrained allocation experiments.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="path to a TOML experiment config")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config value with a dotted key, e.g. policy.min_rate=1/3 (repeatable)")
    common.add_argument("--quiet", action="store_true", help="only report errors")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", parents=[common], help="run the configured experiment")
    p.add_argument("--workers", type=int, default=None, help="worker processes (0 = all cores)")
    p = sub.add_parser("sweep", parents=[common], help="run once per swept minimum rate")
    p.add_argument("--workers", type=int, default=None, help="worker processes (0 = all cores)")
    p = sub.add_parser("trace", parents=[common], help="replay one replication and print its decisions")
    p.add_argument("--rep", type=int, default=0, help="replication index (default 0)")
    sub.add_parser("validate", parents=[common], help="check a config without running it")
    return parser


def _dispatch(args) -> int:
    config = load_config(args.config, args.overrides)
    if args.command == "validate":
        if not args.quiet:
            print(f"ok: {args.config} ({config.arm_count} arms, policy {config.policy.kind}, "
                  f"min_rate {format_rate(config.policy.min_rate)})")
        return EXIT_OK

    if args.command == "trace":
        if args.rep < 0:
            raise ConfigError(f"must be non-negative, got {args.rep}", "--rep")
        rep = run_replication(config, args.rep)
        sys.stdout.write(format_trace_csv([rep.trace], [args.rep]))
        return EXIT_OK

    if args.command == "run":
        result = run_experiment(config, workers=args.workers)
        if not args.quiet:
            row = result.summary_row()
            where = f" -> {config.out_dir}" if config.out_dir else ""
            print(f"{row['policy']} min_rate={row['min_rate']} mean_total_reward={row['mean_total_reward']} "
                  f"mean_pseudo_regret={row['mean_pseudo_regret']}{where}")
        return EXIT_OK

    if not config.sweep:
        raise ConfigError("the config has no sweep list", "sweep")
    result = sweep(config, workers=args.workers)
    if not args.quiet:
        rates = ",".join(format_rate(v) for v in result.runs)
        where = f" -> {config.out_dir}" if config.out_dir else ""
        print(f"swept min_rate over {rates} ({config.replications} replications each){where}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the config-error code
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return _dispatch(args)
    except InfeasibleError as exc:
        print(f"error: infeasible fairness constraint: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - every other failure is a runtime error
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
