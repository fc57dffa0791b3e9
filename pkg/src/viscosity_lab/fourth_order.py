"""Clamped fourth-order collocation solver shared by the plate and flow modules.

Both the Airy-function equation and the streamfunction form of the
variable-viscosity Stokes system are instances of

    L_c[phi] = 1/2 (dxx - dyy)[c (dxx - dyy) phi] + 2 dxy[c dxy phi]

with a positive coefficient c.  The discrete problem collocates L_c on every
ring except the boundary and appends one Dirichlet and one normal-derivative
row per boundary node.  The overdetermined system is solved in the least
squares sense after scaling both row blocks to unit size.  Round-off in
the fourth-order rows near the boundary limits a plain double-precision
solve to roughly 1e-6 at moderate resolution, so the solution is polished by
iterative refinement with residuals evaluated in long double.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .errors import SolverError
from .geometry import Domain


def plate_like_matrix(d: Domain, c) -> np.ndarray:
    """Dense matrix of L_c on the grid."""
    c = np.asarray(c, dtype=float)
    A = d.Dxx - d.Dyy
    B = d.Dxy
    return 0.5 * (A @ (c[:, None] * A)) + 2.0 * (B @ (c[:, None] * B))


def apply_plate_like(ops, c, phi):
    """L_c[phi] by successive differentiation with ``ops.dx`` and ``ops.dy``.

    ``ops`` is a Domain (double precision) or its ``extended`` operators.
    """
    s = ops.dx(ops.dx(phi)) - ops.dy(ops.dy(phi))
    q = ops.dx(ops.dy(phi))
    cs, cq = c * s, c * q
    return 0.5 * (ops.dx(ops.dx(cs)) - ops.dy(ops.dy(cs))) + 2.0 * ops.dx(ops.dy(cq))


class ClampedSolver:
    """Least-squares factorization of L_c with clamped boundary rows.

    Parameters
    ----------
    d : Domain
        Grid on which the operator acts.
    c : array_like
        Positive nodal coefficient of L_c.
    rcond : float
        Relative threshold on the diagonal of the triangular factor below
        which the system is reported as singular.
    refine : int
        Maximum number of extended-precision refinement sweeps.
    """

    def __init__(self, d: Domain, c, rcond: float = 1e-14, refine: int = 8):
        nt = d.n_theta
        self.domain = d
        self.c = np.asarray(c, dtype=float)
        self._c_ext = self.c.astype(np.longdouble)
        self.refine = refine
        operator = plate_like_matrix(d, self.c)
        self._pde_scale = float(np.abs(operator[nt:]).max())
        self._bc_scale = float(np.abs(d.D_r[:nt]).max())
        M = np.vstack([
            operator[nt:] / self._pde_scale,
            np.eye(d.size)[:nt],
            d.D_r[:nt] / self._bc_scale,
        ])
        self._Q, self._R = sla.qr(M, mode="economic")
        diag = np.abs(np.diag(self._R))
        self.condition_estimate = float(diag.max() / max(diag.min(), 1e-300))
        if diag.min() < rcond * diag.max():
            raise SolverError(
                "clamped fourth-order system is numerically singular",
                condition=self.condition_estimate,
            )

    def _residual(self, v, rhs, dirichlet, neumann):
        ext = self.domain.extended
        nt = self.domain.n_theta
        pde = (rhs - apply_plate_like(ext, self._c_ext, v))[nt:] / self._pde_scale
        vn = ext.d_r(v)[:nt]
        return np.concatenate([pde, dirichlet - v[:nt], (neumann - vn) / self._bc_scale])

    def _correction(self, b) -> np.ndarray:
        return sla.solve_triangular(self._R, self._Q.T @ np.asarray(b, dtype=float))

    def solve(self, rhs, dirichlet, neumann) -> np.ndarray:
        """Solve L phi = rhs in the interior with phi = dirichlet, phi_n = neumann."""
        d = self.domain
        LD = np.longdouble
        rhs = np.broadcast_to(np.asarray(rhs, dtype=float), (d.size,)).astype(LD)
        dirichlet = np.asarray(dirichlet, dtype=float).astype(LD)
        neumann = np.asarray(neumann, dtype=float).astype(LD)
        v = np.zeros(d.size, dtype=LD)
        last = np.inf
        for _ in range(self.refine + 1):
            delta = self._correction(self._residual(v, rhs, dirichlet, neumann))
            v = v + delta
            size = float(np.abs(delta).max())
            if size <= 1e-15 * max(float(np.abs(v).max()), 1e-300) or size > 0.5 * last:
                break
            last = size
        return v.astype(float)
