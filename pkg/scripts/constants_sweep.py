"""Discrete Korn, inf-sup and first-eigenvalue constants under refinement.

    python scripts/constants_sweep.py --dirichlet 3 4 --levels 0 1 2
"""
import argparse
from pathlib import Path

from mixed_stokes.analysis import SWEEP_COLUMNS, constant_sweep
from mixed_stokes.io import write_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/constants")
    ap.add_argument("--quantities", nargs="+", default=["korn3", "infsup", "lambda1", "korn1"])
    ap.add_argument("--levels", nargs="+", type=int, default=[0, 1, 2])
    ap.add_argument("--dirichlet", nargs="*", type=int, default=[3, 4],
                    help="side tags on Gamma_D (1 left, 2 right, 3 bottom, 4 top)")
    ap.add_argument("--L", type=float, default=2.0)
    ap.add_argument("--H", type=float, default=1.0)
    args = ap.parse_args()

    rows = constant_sweep(args.quantities, args.levels, args.L, args.H,
                          dirichlet_tags=tuple(args.dirichlet))
    path = write_csv(Path(args.out) / "constants.csv", SWEEP_COLUMNS, rows)
    by_quantity = {}
    for level, h, q, v in rows:
        by_quantity.setdefault(q, []).append(v)
        print(f"level={level} h_max={h:.4f} {q:>8} = {v:.10f}")
    for q, vals in by_quantity.items():
        if len(vals) > 1:
            print(f"{q}: finest-pair ratio {vals[-1] / vals[-2]:.5f}")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
