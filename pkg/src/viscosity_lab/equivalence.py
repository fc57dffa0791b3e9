"""Dictionary between Stokes Cauchy data and plate-like Cauchy data.

Conventions: (grad u)_ij = d u_i / d x_j, n is the outward normal and
t = R_perp^T n the positive tangent with R_perp = [[0, 1], [-1, 0]].  A
divergence-free stress is written sigma = [[phi_22, -phi_12], [-phi_12,
phi_11]] through the Airy function phi, and on the boundary

    R_perp^T sigma n = (grad^2 phi) t = d/dt grad phi,
    u_t = -M_t n + M_n t,    M_t = -n . (grad u) t,    M_n = t . (grad u) t.

Every boundary antiderivative starts at node 0 (theta = 0) and runs in the
positive direction; the integration constants are returned as zero
anchors unless the caller supplies values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompatibilityError, ConfigurationError, SolverError
from .flow import FlowState, divergence_of_tensor, stress
from .geometry import Domain, boundary_frame, differentiate, integrate_trace, tangential_derivative
from .plate import PlateCauchyDatum

JET_INDICES = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3))


def _rperp(v):
    """R_perp applied to a stacked vector (2, ...)."""
    return np.stack([v[1], -v[0]])


def _rperp_t(v):
    return np.stack([-v[1], v[0]])


# -- Airy function and strain integration --------------------------------------


def airy_from_stokes(d: Domain, state: FlowState, mu, tol: float = 1e-5,
                     margin: float = 1.0) -> np.ndarray:
    """Airy function of the stress of a Stokes state.

    The rows of sigma are divergence free, so (sigma_22, -sigma_21) and
    (-sigma_12, sigma_11) are the gradients of phi_1 and phi_2.  All three
    potentials vanish at node 0, so phi and grad phi are zero there.  Each
    potential is recovered by a spectral Poisson solve, since nesting three
    ray integrations amplifies roundoff in the second derivatives of phi.

    Raises
    ------
    CompatibilityError
        If the divergence of sigma over the interior band, relative to
        max(|sigma|, 1), exceeds ``tol``; the potentials would then be path
        dependent.
    """
    from .complex_calculus import residual_targets

    sig = stress(d, state.u, state.p, mu)
    div = divergence_of_tensor(d, sig)
    idx = residual_targets(d, margin)
    scale = max(float(np.max(np.abs(sig))), 1.0)
    res = float(np.max(np.abs(div[:, idx]))) / scale
    if res > tol:
        raise CompatibilityError(f"stress is not divergence free (relative {res:.2e})", residual=res)
    pot = lambda F: d.potential_from_gradient(F, method="poisson")
    phi1 = pot(np.stack([sig[1, 1], -sig[1, 0]]))
    phi2 = pot(np.stack([-sig[0, 1], sig[0, 0]]))
    return pot(np.stack([phi1, phi2]))


def saint_venant(d: Domain, eps) -> np.ndarray:
    """eps_22,11 + eps_11,22 - 2 eps_12,12 at every node."""
    return (differentiate(d, eps[1, 1], (2, 0)) + differentiate(d, eps[0, 0], (0, 2))
            - 2.0 * differentiate(d, eps[0, 1], (1, 1)))


def velocity_from_strain(d: Domain, eps, u_anchor=(0.0, 0.0), vorticity_anchor: float = 0.0,
                         tol: float = 1e-4, margin: float = 1.0) -> np.ndarray:
    """Velocity with symmetric gradient ``eps``, pinned at node 0.

    The rotation w = (u_2,1 - u_1,2)/2 has gradient (eps_12,1 - eps_11,2,
    eps_22,1 - eps_12,2); with w known, grad u_1 = (eps_11, eps_12 - w) and
    grad u_2 = (eps_12 + w, eps_22).  ``vorticity_anchor`` is u_2,1 - u_1,2
    at node 0.

    Raises
    ------
    CompatibilityError
        If eps is not trace free or violates the Saint-Venant condition by
        more than ``tol`` relative to max(|eps|, 1).  The Saint-Venant
        residual of a strain obtained by grid differentiation carries
        roundoff growing like the fourth power of the radial node count,
        about 1e-5 at (20, 80), hence the default.
    """
    from .complex_calculus import residual_targets

    eps = np.asarray(eps, dtype=float)
    scale = max(float(np.max(np.abs(eps))), 1.0)
    idx = residual_targets(d, margin)
    trace_res = float(np.max(np.abs(eps[0, 0] + eps[1, 1]))) / scale
    sv_res = float(np.max(np.abs(saint_venant(d, eps)[idx]))) / scale
    if trace_res > tol:
        raise CompatibilityError(f"strain is not trace free ({trace_res:.2e})", residual=trace_res)
    if sv_res > tol:
        raise CompatibilityError(f"Saint-Venant condition violated ({sv_res:.2e})", residual=sv_res)
    grad_w = np.stack([d.dx(eps[0, 1]) - d.dy(eps[0, 0]), d.dx(eps[1, 1]) - d.dy(eps[0, 1])])
    w = d.potential_from_gradient(grad_w, anchor_value=0.5 * vorticity_anchor)
    u1 = d.potential_from_gradient(np.stack([eps[0, 0], eps[0, 1] - w]), anchor_value=u_anchor[0])
    u2 = d.potential_from_gradient(np.stack([eps[0, 1] + w, eps[1, 1]]), anchor_value=u_anchor[1])
    return np.stack([u1, u2])


# -- boundary bridges ----------------------------------------------------------


def dirichlet_bridge(d: Domain, direction: str, data, tol: float = 1e-8):
    """Traction <-> clamped Airy data (phi, phi_n).

    ``direction="forward"`` takes the traction (2, n_theta) and returns
    (phi, phi_n) with phi and grad phi zero at node 0.  ``"backward"``
    takes (phi, phi_n) and returns the traction.

    Raises
    ------
    MultivaluednessError
        Forward only: nonzero net force (grad phi multivalued) or net
        torque (phi multivalued) beyond ``tol``.
    """
    n, t = boundary_frame(d)
    if direction == "forward":
        T = np.asarray(data, dtype=float)
        grad_phi = integrate_trace(d, _rperp_t(T), tol=tol)
        phi_n = np.sum(grad_phi * n, axis=0)
        phi = integrate_trace(d, np.sum(grad_phi * t, axis=0), tol=tol)
        return phi, phi_n
    if direction == "backward":
        phi, phi_n = (np.asarray(v, dtype=float) for v in data)
        grad_phi = phi_n * n + tangential_derivative(d, phi) * t
        return _rperp(tangential_derivative(d, grad_phi))
    raise ConfigurationError(f"direction must be 'forward' or 'backward', got {direction!r}")


def neumann_bridge(d: Domain, direction: str, data, mt_anchor: float = 0.0,
                   u_anchor=(0.0, 0.0), tol: float = 1e-8):
    """Velocity trace <-> moment data (M_n, (M_t)_t).

    ``"forward"`` takes g (2, n_theta) and returns (M_n, (M_t)_t).
    ``"backward"`` takes (M_n, (M_t)_t), fixes M_t = ``mt_anchor`` and
    u = ``u_anchor`` at node 0, and returns the velocity trace.  A change
    of ``mt_anchor`` adds a rigid rotation to the result.

    Raises
    ------
    MultivaluednessError
        Backward only: (M_t)_t or u_t has nonzero circulation.
    """
    n, t = boundary_frame(d)
    if direction == "forward":
        g = np.asarray(data, dtype=float)
        u_t = tangential_derivative(d, g)
        m_t = -np.sum(n * u_t, axis=0)
        return np.sum(t * u_t, axis=0), tangential_derivative(d, m_t)
    if direction == "backward":
        m_n, mt_t = (np.asarray(v, dtype=float) for v in data)
        m_t = integrate_trace(d, mt_t, anchor_value=mt_anchor, tol=tol)
        u_t = -m_t * n + m_n * t
        return integrate_trace(d, u_t, anchor_value=np.asarray(u_anchor, dtype=float), tol=tol)
    raise ConfigurationError(f"direction must be 'forward' or 'backward', got {direction!r}")


def moment_twist(d: Domain, g) -> np.ndarray:
    """M_t = -n . (grad u) t from a velocity trace; its value at node 0 is the
    ``mt_anchor`` that makes :func:`neumann_bridge` invert exactly."""
    n, _ = boundary_frame(d)
    return -np.sum(n * tangential_derivative(d, np.asarray(g, dtype=float)), axis=0)


def remove_rigid_motion(d: Domain, g, reference) -> np.ndarray:
    """g minus the boundary-L2 best rigid motion a + w (-y, x) fitting g - reference."""
    g = np.asarray(g, dtype=float)
    diff = g - np.asarray(reference, dtype=float)
    c, s = np.cos(d.theta), np.sin(d.theta)
    one, zero = np.ones_like(c), np.zeros_like(c)
    basis = np.stack([np.stack([one, zero]), np.stack([zero, one]), np.stack([-s, c])])
    G = basis.reshape(3, -1)
    coef, *_ = np.linalg.lstsq(G.T, diff.ravel(), rcond=None)
    return g - (coef @ G).reshape(g.shape)


def stokes_to_plate(d: Domain, g, traction, tol: float = 1e-8) -> PlateCauchyDatum:
    """Both bridges forward: (g, sigma n) -> (phi, phi_n, M_n, (M_t)_t)."""
    phi, phi_n = dirichlet_bridge(d, "forward", traction, tol)
    m_n, mt_t = neumann_bridge(d, "forward", g)
    return PlateCauchyDatum(phi, phi_n, m_n, mt_t)


def plate_to_stokes(d: Domain, datum: PlateCauchyDatum, mt_anchor: float = 0.0,
                    u_anchor=(0.0, 0.0), tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Both bridges backward: plate datum -> (g, sigma n)."""
    T = dirichlet_bridge(d, "backward", (datum.phi, datum.phi_n))
    g = neumann_bridge(d, "backward", (datum.m_n, datum.mt_t), mt_anchor, u_anchor, tol)
    return g, T


# -- boundary jets -------------------------------------------------------------


@dataclass
class BoundaryJet:
    """Boundary traces of every partial derivative of order at most three.

    ``traces`` maps a multi-index (a, b), meaning d^a/dx^a d^b/dy^b, to a
    trace of length n_theta.
    """

    traces: dict

    def __getitem__(self, key):
        return self.traces[key]

    @classmethod
    def from_field(cls, d: Domain, phi) -> "BoundaryJet":
        return cls({k: d.boundary(differentiate(d, phi, k)) for k in JET_INDICES})

    def as_array(self) -> np.ndarray:
        return np.stack([self.traces[k] for k in JET_INDICES])

    def tangential_mismatch(self, d: Domain) -> float:
        """Max over orders 0..2 of |d/dt D^k phi - t . grad D^k phi|."""
        _, t = boundary_frame(d)
        worst = 0.0
        for a, b in JET_INDICES[:6]:
            lhs = tangential_derivative(d, self.traces[(a, b)])
            rhs = t[0] * self.traces[(a + 1, b)] + t[1] * self.traces[(a, b + 1)]
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
        return worst

    def relative_error(self, other: "BoundaryJet", orders=(0, 1, 2, 3)) -> float:
        keys = [k for k in JET_INDICES if sum(k) in orders]
        a = np.stack([self.traces[k] for k in keys])
        b = np.stack([other.traces[k] for k in keys])
        return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def local_matrices(n1, n2) -> tuple[np.ndarray, np.ndarray]:
    """Local systems for the second- and third-order jets at normal (n1, n2).

    Unknowns are (phi_11, phi_12, phi_22) and (phi_111, phi_112, phi_122,
    phi_222).
    """
    second = np.array([
        [-n2, n1, 0.0],
        [0.0, -n2, n1],
        [n1 * n1 - n2 * n2, 4.0 * n1 * n2, n2 * n2 - n1 * n1],
    ])
    third = np.array([
        [-n2, n1, 0.0, 0.0],
        [0.0, -n2, n1, 0.0],
        [0.0, 0.0, -n2, n1],
        [n1, n2, n1, n2],
    ])
    return second, third


def recover_boundary_jets(d: Domain, datum: PlateCauchyDatum, mu_jet,
                          det_floor: float = 1e-10) -> BoundaryJet:
    """Boundary derivatives of a plate solution up to order three from its datum.

    Parameters
    ----------
    datum : PlateCauchyDatum
    mu_jet : tuple
        (mu, grad mu) on the boundary nodes, grad of shape (2, n_theta),
        e.g. from :meth:`ViscosityField.boundary_jet`.

    Notes
    -----
    Second order: the tangential derivatives of phi_1 and phi_2 together
    with 4 mu M_n = (n1^2 - n2^2)(phi_11 - phi_22) + 4 n1 n2 phi_12.
    Third order: the tangential derivatives of the second-order traces
    together with n . grad(lap phi), which follows from (M_t)_t =
    (c/2) n . grad(lap phi) + n . B grad c + d/dt(t . c B n) with c = 1/(2 mu)
    and B the trace-free Hessian.

    Raises
    ------
    SolverError
        If a local matrix is numerically singular.
    """
    n, t = boundary_frame(d)
    mu_b = np.broadcast_to(np.asarray(mu_jet[0], dtype=float), (d.n_theta,))
    if np.any(mu_b <= 0.0):
        raise ConfigurationError("boundary viscosity must be positive")
    grad_mu = np.asarray(mu_jet[1], dtype=float)
    c = 0.5 / mu_b
    grad_c = -0.5 * grad_mu / mu_b ** 2

    phi = np.asarray(datum.phi, dtype=float)
    grad = datum.phi_n * n + tangential_derivative(d, phi) * t
    rhs2 = np.stack([tangential_derivative(d, grad[0]), tangential_derivative(d, grad[1]),
                     4.0 * mu_b * datum.m_n])
    second = np.empty((3, d.n_theta))
    mats = [local_matrices(n[0, k], n[1, k]) for k in range(d.n_theta)]
    for k, (A2, _) in enumerate(mats):
        if abs(np.linalg.det(A2)) < det_floor:
            raise SolverError("second-order local matrix is singular", condition=np.linalg.cond(A2))
        second[:, k] = np.linalg.solve(A2, rhs2[:, k])
    p11, p12, p22 = second
    half = 0.5 * (p11 - p22)
    B = np.array([[half, p12], [p12, -half]])
    Bn = np.einsum("ijk,jk->ik", B, n)
    twist = c * np.sum(t * Bn, axis=0)
    n_grad_lap = (2.0 / c) * (datum.mt_t - tangential_derivative(d, twist)
                              - np.sum(Bn * grad_c, axis=0))
    rhs3 = np.stack([tangential_derivative(d, p11), tangential_derivative(d, p12),
                     tangential_derivative(d, p22), n_grad_lap])
    third = np.empty((4, d.n_theta))
    for k, (_, A3) in enumerate(mats):
        if abs(np.linalg.det(A3)) < det_floor:
            raise SolverError("third-order local matrix is singular", condition=np.linalg.cond(A3))
        third[:, k] = np.linalg.solve(A3, rhs3[:, k])
    values = [phi, grad[0], grad[1], p11, p12, p22, *third]
    return BoundaryJet(dict(zip(JET_INDICES, values)))
