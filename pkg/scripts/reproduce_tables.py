#!/usr/bin/env python3
"""Rerun the convergence studies and print measured errors next to the
reference values.  ``--quick`` drops the finest mesh / step for a fast look."""
import argparse
import logging
import sys

from ieqdg.config import preset_config
from ieqdg.experiments import run

REFERENCE_L2 = {
    "ex41_case1": [3.96917e-01, 9.53330e-02, 2.34412e-02, 5.86903e-03],
    "ex41_case2": [7.40928e-03, 9.91089e-04, 1.26183e-04],
    "ex41_case3": [7.40926e-03, 9.91089e-04, 1.26183e-04],
    "ex42": [6.90060e-03, 1.10206e-03, 1.34465e-04],
}
TEMPORAL = {"ieq1": [0.99, 1.07, 1.21], "ieq2": [2.38, 2.18, 2.15]}


def spatial(preset, quick, out):
    reference = REFERENCE_L2[preset]
    meshes = (8, 16, 32, 64)[:len(reference) - quick]
    rows, _ = run(preset_config(preset, meshes=meshes, output_dir=f"{out}/{preset}"))
    print(f"{preset}  N  L2  reference  EOC")
    for row, ref in zip(rows, reference):
        print(f"  {row[0]:>3}  {row[1]:.5e}  {ref:.5e}  {row[3]:.2f}")


def temporal(quick, out):
    dts = tuple(2.0 ** -m for m in range(3, 7 - quick))
    for scheme, ref in TEMPORAL.items():
        cfg = preset_config("ex43", scheme=scheme, dts=dts, output_dir=f"{out}/ex43_{scheme}")
        rows, _ = run(cfg)
        print(f"ex43 {scheme}: EOC {[round(r[3], 2) for r in rows[1:]]}  reference {ref}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("presets", nargs="*", default=[*REFERENCE_L2, "ex43"],
                    help=f"subset of {', '.join([*REFERENCE_L2, 'ex43'])}")
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--output", default="runs/tables")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    for name in args.presets:
        if name == "ex43":
            temporal(int(args.quick), args.output)
        elif name in REFERENCE_L2:
            spatial(name, int(args.quick), args.output)
        else:
            ap.error(f"no reference values for {name!r}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
