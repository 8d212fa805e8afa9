#!/usr/bin/env python3
"""Run a named preset with optional ``key=value`` overrides.

    python3 scripts/run_preset.py ex41_case1 meshes=8,16 output_dir=runs/t1
"""
import argparse
import logging
import sys

from ieqdg.config import PRESETS, parse_assignments, preset_config
from ieqdg.errors import IEQDGError
from ieqdg.experiments import run


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("preset", choices=sorted(PRESETS))
    ap.add_argument("overrides", nargs="*", metavar="key=value")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        settings = parse_assignments(args.overrides, "argv")
        cfg = preset_config(args.preset, **settings)
        result = run(cfg)
    except IEQDGError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, tuple):
        for row in result[0]:
            print(*row, sep="\t")
    print(f"outputs in {cfg.output_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
