"""Command-line entry point: run, validate, and list experiments.

Exit codes: 0 success, 2 invalid config, 3 run finished but some replicates
failed (degenerate or non-convergent — their rows carry a status), 4
unexpected internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from ..errors import ConfigError, InvalidParameter
from .config import resolve_config
from .engine import run_experiment
from .runners import EXPERIMENTS

__all__ = ["cli", "build_parser"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARTIAL = 3
EXIT_INTERNAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hollowpca",
        description="Monte Carlo experiments for hollowed-Gram spectral clustering.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a config file and write CSV + JSON results")
    run.add_argument("config", type=Path, help="JSON experiment config")
    run.add_argument("--workers", type=int, default=None, metavar="N",
                     help="worker processes (default: all cores)")
    run.add_argument("--out", type=Path, default=Path("."), metavar="DIR",
                     help="output directory (default: current directory)")
    run.add_argument("--seed", type=int, default=None, metavar="S",
                     help="override the config's master seed")

    sub.add_parser("list-experiments", help="list runnable experiments")

    validate = sub.add_parser(
        "validate", help="check a config's schema and parameter invariants without sampling"
    )
    validate.add_argument("config", type=Path, help="JSON experiment config")
    return parser


def _load(path: Path, seed_override: int | None):
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path} is not valid JSON: {exc}"]) from exc
    if seed_override is not None:
        if not isinstance(raw, dict):
            raise ConfigError(["config must be a JSON object"])
        raw["seed"] = seed_override
    return resolve_config(raw, EXPERIMENTS)


def cli(argv=None) -> int:
    args = build_parser().parse_args(argv)

    if args.command == "list-experiments":
        width = max(len(name) for name in EXPERIMENTS)
        for name in sorted(EXPERIMENTS):
            print(f"{name:<{width}}  {EXPERIMENTS[name].summary}")
        return EXIT_OK

    try:
        config = _load(args.config, getattr(args, "seed", None))
    except InvalidParameter as exc:
        problems = getattr(exc, "problems", (str(exc),))
        for problem in problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "validate":
        print(
            f"{args.config}: valid {config.experiment} config "
            f"({config.grid_size} grid points x {config.replicates} replicates)"
        )
        return EXIT_OK

    try:
        result = run_experiment(config, workers=args.workers, out_dir=args.out)
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL

    print(f"wrote {len(result.records)} records to {result.csv_path}")
    print(f"wrote summary to {result.sidecar_path}")
    for extra in result.extra_paths:
        print(f"wrote {extra}")
    if result.n_failures:
        print(f"{result.n_failures} replicate(s) failed; see the status column", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(cli())
