"""Plate-like fourth-order equation, its Neumann data and its complex form.

With c = 1/(2 mu) and the trace-free Hessian B = grad^2 phi - (lap phi / 2) I,
the operator is P_mu(phi) = div div (c B).  Its Cauchy data on the unit
circle are the clamped pair (phi, phi_n) and the moment pair

    M_n     = n . (c B) n,
    (M_t)_t = div(c B) . n + d/dt (t . (c B) n).

Dividing P_mu by 4/mu gives the nondivergence form

    dzb^2 dz^2 phi + alpha dz^2 dzb phi + beta dz^2 phi
                   + conj(alpha) dz dzb^2 phi + conj(beta) dzb^2 phi = 0

with the potentials of :func:`viscosity_lab.first_order.alpha_beta`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex_calculus import dz, dzbar, residual_targets
from .errors import ConfigurationError
from .fourth_order import ClampedSolver, apply_plate_like
from .geometry import Domain, boundary_frame, tangential_derivative


def _mu_values(d: Domain, mu) -> np.ndarray:
    values = np.asarray(getattr(mu, "values", mu), dtype=float)
    values = np.broadcast_to(values, (d.size,)).copy()
    if np.any(values <= 0.0) or not np.all(np.isfinite(values)):
        raise ConfigurationError("viscosity must be finite and positive")
    return values


@dataclass
class PlateCauchyDatum:
    """Boundary traces (phi, phi_n, M_n, (M_t)_t), each of length n_theta."""

    phi: np.ndarray
    phi_n: np.ndarray
    m_n: np.ndarray
    mt_t: np.ndarray

    def circulation(self, d: Domain) -> float:
        """Boundary integral of (M_t)_t; zero for data of a smooth solution."""
        return float(d.boundary_integral(self.mt_t))

    def as_array(self) -> np.ndarray:
        return np.stack([self.phi, self.phi_n, self.m_n, self.mt_t])


def plate_residual(d: Domain, mu, phi) -> np.ndarray:
    """Nodal values of P_mu(phi)."""
    return apply_plate_like(d, 0.5 / _mu_values(d, mu), np.asarray(phi, dtype=float))


class PlateSolver:
    """Factorized clamped problem P_mu(phi) = 0 for one viscosity."""

    def __init__(self, d: Domain, mu, **solver_kwargs):
        self.domain = d
        self.mu = _mu_values(d, mu)
        self.clamped = ClampedSolver(d, 0.5 / self.mu, **solver_kwargs)

    @property
    def condition_estimate(self) -> float:
        return self.clamped.condition_estimate

    def solve(self, phi_d, phin_d, rhs=0.0) -> np.ndarray:
        nt = self.domain.n_theta
        phi_d = np.asarray(phi_d, dtype=float)
        phin_d = np.asarray(phin_d, dtype=float)
        if phi_d.shape != (nt,) or phin_d.shape != (nt,):
            raise ConfigurationError("boundary traces must have one value per boundary node")
        return self.clamped.solve(rhs, phi_d, phin_d)


def solve_plate(d: Domain, mu, phi_d, phin_d, solver: PlateSolver | None = None) -> np.ndarray:
    """Solve P_mu(phi) = 0 with phi = phi_d and phi_n = phin_d on the circle.

    Raises
    ------
    SolverError
        If the discrete clamped system is numerically singular.
    """
    solver = solver or PlateSolver(d, mu)
    return solver.solve(phi_d, phin_d)


def moment_tensor(d: Domain, mu, phi) -> np.ndarray:
    """c (grad^2 phi - lap phi / 2 I) with c = 1/(2 mu), shape (2, 2, N)."""
    c = 0.5 / _mu_values(d, mu)
    phi = np.asarray(phi, dtype=float)
    half = 0.5 * (d.dx(d.dx(phi)) - d.dy(d.dy(phi)))
    off = d.dx(d.dy(phi))
    return c * np.array([[half, off], [off, -half]])


def plate_neumann(d: Domain, mu, phi) -> tuple[np.ndarray, np.ndarray]:
    """Moment traces (M_n, (M_t)_t) of phi on the boundary."""
    n, t = boundary_frame(d)
    A = moment_tensor(d, mu, phi)
    divA = np.stack([d.dx(A[0, 0]) + d.dy(A[0, 1]), d.dx(A[1, 0]) + d.dy(A[1, 1])])
    Ab = d.boundary(A)
    An = np.einsum("ijk,jk->ik", Ab, n)
    m_n = np.sum(n * An, axis=0)
    twist = np.sum(t * An, axis=0)
    mt_t = np.sum(d.boundary(divA) * n, axis=0) + tangential_derivative(d, twist)
    return m_n, mt_t


def plate_datum(d: Domain, mu, phi) -> PlateCauchyDatum:
    """All four boundary traces of phi."""
    phi = np.asarray(phi, dtype=float)
    m_n, mt_t = plate_neumann(d, mu, phi)
    return PlateCauchyDatum(d.boundary(phi), d.boundary(d.normal_derivative(phi)), m_n, mt_t)


def nondiv_field(d: Domain, phi, alpha, beta) -> np.ndarray:
    """Complex nodal residual of the nondivergence form."""
    phi = np.asarray(phi, dtype=complex)
    a, b = np.asarray(alpha, dtype=complex), np.asarray(beta, dtype=complex)
    p_z2 = dz(d, phi, 2)
    p_zb2 = dzbar(d, phi, 2)
    u1 = dzbar(d, p_z2)
    u3 = dz(d, p_zb2)
    return dzbar(d, u1) + a * u1 + b * p_z2 + np.conj(a) * u3 + np.conj(b) * p_zb2


def nondiv_residual(d: Domain, phi, alpha, beta, margin: float = 1.0) -> float:
    """Max modulus of the nondivergence residual over the residual region.

    ``margin`` is the width of the excluded boundary band in units of the
    boundary node spacing (see :func:`residual_targets`).
    """
    idx = residual_targets(d, margin)
    return float(np.max(np.abs(nondiv_field(d, phi, alpha, beta)[idx])))
