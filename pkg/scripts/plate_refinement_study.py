"""Clamped plate solve under grid refinement against a doubled-grid reference.

Usage: python scripts/plate_refinement_study.py [--family quadratic] [--sizes 6 8 10 12]
"""

import argparse

import numpy as np

from viscosity_lab import ViscosityField, build_disk_domain, solve_plate


def solve(nr: int, family: str):
    d = build_disk_domain(nr, 4 * nr)
    c, s = np.cos(d.theta), np.sin(d.theta)
    return d, solve_plate(d, ViscosityField.family(d, family), np.exp(c) * np.sin(2 * s), np.cos(c - s))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--family", default="quadratic")
    parser.add_argument("--sizes", type=int, nargs="+", default=[6, 8, 10, 12])
    args = parser.parse_args()
    errs = []
    for nr in args.sizes:
        dc, coarse = solve(nr, args.family)
        df, fine = solve(2 * nr, args.family)
        errs.append(float(np.max(np.abs(df.interpolate(fine, dc.x, dc.y).real - coarse))))
        print(f"n_r = {nr:3d}  max error {errs[-1]:.3e}")
    order = -np.polyfit(np.log(args.sizes), np.log(errs), 1)[0]
    print(f"observed order {order:.2f}")


if __name__ == "__main__":
    main()
