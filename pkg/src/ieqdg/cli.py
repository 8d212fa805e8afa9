"""Command line entry point: ``ieqdg run --config FILE [--output DIR] [--override k=v ...]``.

Exit codes: 0 success, 1 bad configuration, 2 energy check failed, 3 solver failure.
"""
import argparse
import logging
import sys
from dataclasses import replace

from .config import load_config
from .errors import (ConfigError, ContractError, ConvergenceError, EnergyViolation,
                     NumericError, SolverError)
from .experiments import run

EXIT_OK, EXIT_CONFIG, EXIT_ASSERT, EXIT_SOLVER = 0, 1, 2, 3


def build_parser():
    parser = argparse.ArgumentParser(prog="ieqdg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a key = value config file")
    r.add_argument("--config", required=True, help="path to the config file")
    r.add_argument("--output", help="output directory (overrides output_dir)")
    r.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                   help="override one setting; may be repeated")
    r.add_argument("-q", "--quiet", action="store_true", help="only log warnings")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.override)
        if args.output:
            cfg = replace(cfg, output_dir=args.output)
        run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EnergyViolation as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERT
    except (SolverError, ConvergenceError, NumericError, ContractError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
