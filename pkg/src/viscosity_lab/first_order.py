"""Complex potentials of a viscosity and the first-order system built from them.

For a positive viscosity mu the potentials are

    alpha = mu dzb(1/mu) = -dzb log mu,    beta = (mu/2) dzb^2 (1/mu),

and they satisfy 2 beta = dzb alpha + alpha^2.  The 4x4 system (D + V) U = 0
with D = diag(dzb, dzb, dz, dz) and

    V = [[alpha, beta, conj(alpha), conj(beta)],
         [-1,    0,    0,           0         ],
         [alpha, beta, conj(alpha), conj(beta)],
         [0,     0,    -1,          0         ]]

is solved by U = (dz^2 dzb Phi, dz^2 Phi, dz dzb^2 Phi, dzb^2 Phi) exactly
when Phi solves the plate-like equation for mu.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complex_calculus import (
    QuadratureDensity,
    dz,
    dzbar,
    relative_residual,
    residual_targets,
    solve_bi_dbar2,
    solve_dbar,
)
from .errors import CompatibilityError, InconsistencyError
from .flow import ViscosityField
from .geometry import Domain


@dataclass
class PotentialPair:
    """Nodal complex potentials (alpha, beta)."""

    alpha: np.ndarray
    beta: np.ndarray


@dataclass
class FirstOrderState:
    """Four complex nodal fields, stacked as ``components`` of shape (4, N)."""

    components: np.ndarray

    def __getitem__(self, i):
        return self.components[i]


@dataclass
class TransportFactor:
    """Nonvanishing r with 2 dzb r = (alpha_1 - alpha_2) r.

    Attributes
    ----------
    r : ndarray
    residual : float
        Relative residual of the transport equation over the residual region.
    discrepancy : ndarray
        Field that equals (alpha_1^2 - alpha_2^2)/2 whenever both pairs
        satisfy the potential identity.
    """

    r: np.ndarray
    residual: float
    discrepancy: np.ndarray


def alpha_beta(mu: ViscosityField) -> PotentialPair:
    """Potentials of a viscosity by spectral differentiation of 1/mu."""
    d = mu.domain
    inv = 1.0 / mu.values
    first = dzbar(d, inv + 0j)
    return PotentialPair(mu.values * first, 0.5 * mu.values * dzbar(d, first))


def ab_identity_field(d: Domain, p: PotentialPair) -> np.ndarray:
    return 2.0 * p.beta - dzbar(d, p.alpha) - p.alpha ** 2


def check_ab_identity(d: Domain, p: PotentialPair) -> float:
    """max |2 beta - dzb alpha - alpha^2| over all nodes."""
    return float(np.max(np.abs(ab_identity_field(d, p))))


def assemble_V(p: PotentialPair) -> np.ndarray:
    """Coefficient matrix field, shape (4, 4, N)."""
    a = np.asarray(p.alpha, dtype=complex)
    b = np.broadcast_to(np.asarray(p.beta, dtype=complex), a.shape)
    zero = np.zeros_like(a)
    top = [a, b, np.conj(a), np.conj(b)]
    return np.array([
        top,
        [zero - 1.0, zero, zero, zero],
        top,
        [zero, zero, zero - 1.0, zero],
    ])


def lift_to_U(d: Domain, phi) -> FirstOrderState:
    """U = (dz^2 dzb Phi, dz^2 Phi, dz dzb^2 Phi, dzb^2 Phi)."""
    phi = np.asarray(phi, dtype=complex)
    u2 = dz(d, phi, 2)
    u4 = dzbar(d, phi, 2)
    return FirstOrderState(np.stack([dzbar(d, u2), u2, dz(d, u4), u4]))


def dv_field(d: Domain, U: FirstOrderState, V) -> np.ndarray:
    """(D + V) U at every node, shape (4, N)."""
    u = np.asarray(U.components, dtype=complex)
    Du = np.stack([dzbar(d, u[0]), dzbar(d, u[1]), dz(d, u[2]), dz(d, u[3])])
    return Du + np.einsum("ijn,jn->in", V, u)


def dv_residual(d: Domain, U: FirstOrderState, V, margin: float = 1.0) -> float:
    """Max modulus of (D + V) U over the residual region."""
    idx = residual_targets(d, margin)
    return float(np.max(np.abs(dv_field(d, U, V)[:, idx])))


def potential_from_U(d: Domain, U: FirstOrderState, tol: float = 1e-6,
                     density: QuadratureDensity | None = None,
                     operator_route: str = "polar") -> np.ndarray:
    """Phi with dz^2 Phi = u2 and dzb^2 Phi = u4.

    Raises
    ------
    CompatibilityError
        If dzb u2 = u1, dz u4 = u3 or dzb^2 u2 = dz^2 u4 fails beyond ``tol``
        (relative, over the residual region).
    """
    u = np.asarray(U.components, dtype=complex)
    for value, target, label in ((dzbar(d, u[1]), u[0], "dzb u2 = u1"),
                                 (dz(d, u[3]), u[2], "dz u4 = u3")):
        res = relative_residual(d, value, target) if np.any(target) else float(np.max(np.abs(value)))
        if res > tol:
            raise CompatibilityError(f"state violates {label} (residual {res:.2e})", residual=res)
    return solve_bi_dbar2(d, u[1], u[3], density=density, operator_route=operator_route,
                          compat_tol=tol)


def mu_from_alpha(d: Domain, alpha, boundary_mu, curl_tol: float = 1e-6,
                  anchor_tol: float = 1e-6, tag: str = "from-alpha") -> ViscosityField:
    """Viscosity whose potential is ``alpha``, pinned to boundary_mu at node 0.

    grad log mu = (-2 Re alpha, -2 Im alpha) is integrated along the circle
    and then along rays; the remaining boundary values must reproduce
    ``boundary_mu``.

    Raises
    ------
    InconsistencyError
        If the gradient field has curl or boundary circulation above
        ``curl_tol`` relative to max(|grad log mu|, 1), or the
        recovered boundary trace misses ``boundary_mu`` beyond ``anchor_tol``.
    """
    alpha = np.broadcast_to(np.asarray(alpha, dtype=complex), (d.size,))
    mub = np.broadcast_to(np.asarray(boundary_mu, dtype=float), (d.n_theta,))
    G = np.stack([-2.0 * alpha.real, -2.0 * alpha.imag])
    scale = max(float(np.max(np.abs(G))), 1.0)
    rot = float(np.max(np.abs(d.dx(G[1]) - d.dy(G[0])))) / scale
    if rot > curl_tol:
        raise InconsistencyError(f"alpha is not the potential of a real viscosity (curl {rot:.2e})")
    c, s = np.cos(d.theta), np.sin(d.theta)
    circ = abs(float(np.mean(-s * d.boundary(G[0]) + c * d.boundary(G[1]))))
    if circ > curl_tol * scale:
        raise InconsistencyError(f"grad log mu has boundary circulation {circ:.2e}")
    log_mu = d.potential_from_gradient(G, anchor_value=float(np.log(mub[0])))
    mu = np.exp(log_mu)
    miss = float(np.max(np.abs(d.boundary(mu) - mub))) / float(np.max(mub))
    if miss > anchor_tol:
        raise InconsistencyError(f"recovered viscosity misses the boundary trace by {miss:.2e}")
    return ViscosityField(d, mu, tag)


def discrepancy_field(d: Domain, p1: PotentialPair, p2: PotentialPair) -> np.ndarray:
    """(2 b1 - 2 b2 - a2 (a1 - a2)) - (dzb (a1 - a2) + (a1 - a2)^2 / 2)."""
    da = p1.alpha - p2.alpha
    lhs = 2.0 * p1.beta - 2.0 * p2.beta - p2.alpha * da
    return lhs - (dzbar(d, da) + 0.5 * da ** 2)


def transport_factor(d: Domain, p1: PotentialPair, p2: PotentialPair,
                     route: str = "polar", density: QuadratureDensity | None = None,
                     margin: float = 1.0) -> TransportFactor:
    """r = exp(T[(alpha_1 - alpha_2)/2]) and the discrepancy field."""
    da = np.asarray(p1.alpha - p2.alpha, dtype=complex)
    if np.any(da):
        s = solve_dbar(d, 0.5 * da, "zbar", 1, route, density)
    else:
        s = np.zeros(d.size, dtype=complex)
    r = np.exp(s)
    res = 2.0 * dzbar(d, r) - da * r
    idx = residual_targets(d, margin)
    scale = max(float(np.max(np.abs((da * r)[idx]))), 1e-300)
    residual = float(np.max(np.abs(res[idx]))) / scale if np.any(da) else float(np.max(np.abs(res)))
    return TransportFactor(r, residual, discrepancy_field(d, p1, p2))
