"""Thin-channel study: rescaled moments of the velocity and pressure against
fixed test functions as the height shrinks.

    python scripts/asymptotics.py --heights 0.5 0.25 0.125 --ny 16
"""
import argparse
from pathlib import Path

from mixed_stokes.cli import monotone_discrepancies
from mixed_stokes.io import write_csv
from mixed_stokes.validation import (ASYMPTOTIC_COLUMNS, ChannelParams, asymptotic_study,
                                     asymptotic_table)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/asymptotics")
    ap.add_argument("--heights", nargs="+", type=float, default=[0.5, 0.25, 0.125])
    ap.add_argument("--ny", type=int, default=16)
    ap.add_argument("--aspect", type=float, default=1.0)
    args = ap.parse_args()

    rows = asymptotic_study(args.heights, ChannelParams(), ny=args.ny, aspect=args.aspect)
    path = write_csv(Path(args.out) / "asymptotics.csv", ASYMPTOTIC_COLUMNS,
                     asymptotic_table(rows))
    for phi in dict.fromkeys(r.phi for r in rows):
        sel = [r for r in rows if r.phi == phi]
        for r in sel:
            print(f"H={r.H:<6} phi={phi:<5} u={r.moment_u[0]:.6f} (limit {r.limit_u[0]:.6f})  "
                  f"p={r.moment_p:.6f} (limit {r.limit_p:.6f})")
        du = monotone_discrepancies([r.discrepancy_u for r in sel])
        dp = monotone_discrepancies([r.discrepancy_p for r in sel])
        print(f"phi={phi}: velocity discrepancy decreasing={du}, pressure decreasing={dp}")
    print(f"wrote {path}")


if __name__ == "__main__":
    main()
