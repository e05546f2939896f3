"""Command-line entry point: one subcommand per experiment.

Exit codes: 0 on success, 2 when a grid point violates its regime
precondition, 3 on any configuration problem (bad flags, unreadable or
malformed config file, invalid grid).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ConfigError, RegimeViolationError
from .experiments import ExperimentConfig, run_experiment

_SUBCOMMANDS = {
    "transition": "transition_constant",
    "critical": "critical_scaling",
    "sweep": "regime_sweep",
    "mm1d": "mm_1d_profile",
    "audit": "sandwich_audit",
}


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as ConfigError (exit code 3)."""

    def error(self, message):
        raise ConfigError(message)


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        seeds = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"--seeds wants comma-separated integers: {text!r}") from exc
    if not seeds:
        raise ConfigError("--seeds must name at least one seed")
    return seeds


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="chiralab",
        description="Frustrated-chain transition-energy experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, experiment in _SUBCOMMANDS.items():
        p = sub.add_parser(name, help=f"run the {experiment} experiment")
        p.add_argument("--config", metavar="FILE",
                       help="TOML or JSON config; flags below override it")
        p.add_argument("--out", metavar="DIR",
                       help="output directory (default: results)")
        p.add_argument("--seeds", metavar="S0,S1,...",
                       help="comma-separated seeds for the randomized parts")
        p.add_argument("--plots", action="store_true", default=None,
                       help="also write SVG plots next to the CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        seeds = _parse_seeds(args.seeds) if args.seeds is not None else None
        cfg = ExperimentConfig.from_sources(
            _SUBCOMMANDS[args.command],
            config_path=args.config,
            out=args.out,
            seeds=seeds,
            plots=args.plots,
        )
        rows, summary, paths = run_experiment(cfg)
    except ConfigError as exc:
        print(f"chiralab: config error: {exc}", file=sys.stderr)
        return 3
    except RegimeViolationError as exc:
        print(f"chiralab: regime violation: {exc}", file=sys.stderr)
        return 2
    print(f"{cfg.experiment}: {len(rows)} rows -> {paths['csv']}")
    print(f"summary -> {paths['summary']}")
    for path in paths.get("plots", []):
        print(f"plot -> {path}")
    if summary.get("infeasible_rows"):
        print(f"note: {summary['infeasible_rows']} infeasible rows flagged")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
