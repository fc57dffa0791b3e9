"""Residual of the order-1 and order-2 d-bar solution operators against quadrature density.

Usage: python scripts/dbar_density_study.py [--resolution NR NT]
"""

import argparse

import numpy as np

from viscosity_lab import QuadratureDensity, build_disk_domain, dzbar, solve_dbar
from viscosity_lab.complex_calculus import relative_residual

LEVELS = [QuadratureDensity(8, 24, 128), QuadratureDensity(16, 48, 256), QuadratureDensity(32, 96, 256)]


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--resolution", type=int, nargs=2, default=(16, 64))
    args = parser.parse_args()
    d = build_disk_domain(*args.resolution)
    z = d.z
    sources = {"1": np.ones(d.size, complex), "z": z, "zbar": np.conj(z),
               "bump": np.exp(-4.0 * np.abs(z) ** 2) + 0j}
    print(f"{'f':6s} {'order':5s} " + " ".join(f"{'(%d,%d,%d)' % (q.n_s, q.n_psi, q.n_boundary):>14s}"
                                           for q in LEVELS))
    for name, f in sources.items():
        for order in (1, 2):
            res = [relative_residual(d, dzbar(d, solve_dbar(d, f, "zbar", order, "polar", q), order), f)
                   for q in LEVELS]
            print(f"{name:6s} {order:5d} " + " ".join(f"{r:14.3e}" for r in res))


if __name__ == "__main__":
    main()
