"""Command line entry point.

    shc-sim <experiment> [--config FILE] [--set key=value ...] --out CSV

Exit code 0 on success; on failure a single machine-readable JSON line goes
to stderr ("error: {...}") and the exit code is nonzero.  SHCSIM_WORKERS
bounds the sweep worker processes, SHCSIM_DISABLE_NUMBA=1 selects the pure
Python equalizer kernels.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigurationError
from .experiments import EXPERIMENTS, load_config, run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shc-sim",
        description="Self-homodyne coherent link experiments (Alamouti + DSCM).",
    )
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config value (repeatable)",
    )
    parser.add_argument("--out", required=True, help="output CSV path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # The subcommand pins the experiment regardless of file or --set values.
        cfg = load_config(args.config, args.overrides + ["experiment=" + args.experiment])
        run_experiment(cfg, args.out)
    except (ConfigurationError, OSError, ValueError) as exc:
        print(
            "error: " + json.dumps(
                {"experiment": args.experiment, "type": type(exc).__name__,
                 "message": str(exc)}
            ),
            file=sys.stderr,
        )
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
