"""Variable-viscosity Stokes and stationary Navier-Stokes solvers on the disk.

The velocity is represented through a streamfunction, u = (psi_y, -psi_x),
so incompressibility holds identically.  Taking the curl of the momentum
balance div(2 mu eps(u)) = grad p + f eliminates the pressure and leaves the
clamped fourth-order problem

    L_{2 mu}[psi] = -curl f,    psi = int g.n ds,    psi_n = -g.t,

solved by :class:`ClampedSolver`.  The pressure is then recovered from its
gradient by path integration, first along the boundary and then along
diameters, and fixed by the zero-mean gauge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CompatibilityError,
    ConfigurationError,
    PicardDivergenceError,
    SolverError,
)
from .fourth_order import ClampedSolver
from .geometry import Domain, boundary_frame, integrate_trace


# -- viscosity -----------------------------------------------------------------


def _family(name: str, params: dict):
    """Return (mu, grad mu) callables for a named analytic family."""
    if name == "constant":
        mu0 = float(params.get("mu0", 1.0))
        return (lambda x, y: mu0 + 0.0 * x,
                lambda x, y: (0.0 * x, 0.0 * x))
    if name == "exp":
        a = float(params.get("a", 2.0))
        return (lambda x, y: np.exp(a * x),
                lambda x, y: (a * np.exp(a * x), 0.0 * x))
    if name == "quadratic":
        a = float(params.get("a", 1.0))
        return (lambda x, y: 1.0 + a * x ** 2,
                lambda x, y: (2.0 * a * x, 0.0 * x))
    if name == "bump":
        c = float(params.get("c", 0.3))
        return (lambda x, y: 1.0 + c * (1.0 - x ** 2 - y ** 2) ** 2,
                lambda x, y: (-4.0 * c * x * (1.0 - x ** 2 - y ** 2),
                              -4.0 * c * y * (1.0 - x ** 2 - y ** 2)))
    raise ConfigurationError(f"unknown viscosity family {name!r}")


VISCOSITY_FAMILIES = ("constant", "exp", "quadratic", "bump")


@dataclass(frozen=True, eq=False)
class ViscosityField:
    """Positive viscosity sampled on a domain.

    Attributes
    ----------
    domain : Domain
    values : ndarray
        Nodal values of mu.
    tag : str
        Human-readable description used in manifests and reports.
    func, grad : callable, optional
        Analytic mu(x, y) and grad mu(x, y) when the field came from a
        closed form; the boundary jet uses them when present.
    """

    domain: Domain
    values: np.ndarray
    tag: str = "sampled"
    func: Callable | None = None
    grad: Callable | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.domain.size,):
            raise ConfigurationError("viscosity array does not match the grid")
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise ConfigurationError(f"viscosity {self.tag!r} is not positive on the grid")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, d: Domain, func, tag: str = "custom", grad=None):
        return cls(d, np.asarray(func(d.x, d.y), dtype=float) + 0.0 * d.x, tag, func, grad)

    @classmethod
    def family(cls, d: Domain, name: str, **params):
        func, grad = _family(name, params)
        label = name + "".join(f":{k}={params[k]}" for k in sorted(params))
        return cls.from_function(d, func, label, grad)

    def boundary_jet(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (mu, grad mu) on the boundary nodes; grad has shape (2, n_theta)."""
        d = self.domain
        if self.func is not None and self.grad is not None:
            c, s = np.cos(d.theta), np.sin(d.theta)
            mu = np.asarray(self.func(c, s), dtype=float) + 0.0 * c
            gx, gy = self.grad(c, s)
            return mu, np.stack([gx + 0.0 * c, gy + 0.0 * c])
        g = d.gradient(self.values)
        return d.boundary(self.values), d.boundary(g)


# -- records -------------------------------------------------------------------


@dataclass
class FlowState:
    """Velocity (2, N), pressure (N,) and the pressure gauge convention."""

    u: np.ndarray
    p: np.ndarray
    gauge: str = "zero-mean"
    psi: np.ndarray | None = None
    history: list = field(default_factory=list)


@dataclass
class StokesCauchyDatum:
    """Velocity trace and traction trace, each of shape (2, n_theta)."""

    g: np.ndarray
    traction: np.ndarray

    def net_force(self, d: Domain) -> np.ndarray:
        return d.boundary_integral(self.traction)

    def net_torque(self, d: Domain) -> float:
        n, _ = boundary_frame(d)
        return float(d.boundary_integral(n[0] * self.traction[1] - n[1] * self.traction[0]))


@dataclass
class LinearizationReport:
    """Scaled Cauchy-data errors of the Navier-Stokes data against Stokes.

    ``rows`` holds (eps, velocity-trace error, traction error, interior
    velocity error) with absolute boundary or area L2 norms.
    """

    rows: list
    slope_velocity: float
    slope_traction: float
    slope_interior: float
    reference: FlowState


# -- kinematics ----------------------------------------------------------------


def check_flux(d: Domain, g) -> float:
    """Net outflow of a velocity trace through the unit circle."""
    n, _ = boundary_frame(d)
    return float(d.boundary_integral(np.sum(np.asarray(g) * n, axis=0)))


def velocity_gradient(d: Domain, u) -> np.ndarray:
    """grad u with entries G[i, j] = d u_i / d x_j, shape (2, 2, N)."""
    return np.stack([d.gradient(u[0]), d.gradient(u[1])])


def strain(d: Domain, u) -> np.ndarray:
    G = velocity_gradient(d, u)
    return 0.5 * (G + G.transpose(1, 0, 2))


def stress(d: Domain, u, p, mu) -> np.ndarray:
    mu = getattr(mu, "values", mu)
    eps = strain(d, u)
    return 2.0 * mu * eps - np.eye(2)[:, :, None] * np.asarray(p)


def divergence_of_tensor(d: Domain, A) -> np.ndarray:
    """Row-wise divergence (div A)_i = sum_j d_j A_ij."""
    return np.stack([d.dx(A[i, 0]) + d.dy(A[i, 1]) for i in range(2)])


def convective_term(d: Domain, u) -> np.ndarray:
    G = velocity_gradient(d, u)
    return np.einsum("ijn,jn->in", G, u)


def curl(d: Domain, F) -> np.ndarray:
    return d.dx(F[1]) - d.dy(F[0])


# -- solvers -------------------------------------------------------------------


def _flux_guard(d: Domain, g, tol: float):
    flux = check_flux(d, g)
    scale = 2.0 * np.pi * max(float(np.max(np.abs(g))), 1.0)
    if abs(flux) > tol * scale:
        raise CompatibilityError(f"boundary flux {flux:.3e} violates compatibility", residual=flux)


def _streamfunction_bc(d: Domain, g) -> tuple[np.ndarray, np.ndarray]:
    n, t = boundary_frame(d)
    g = np.asarray(g, dtype=float)
    gn = np.sum(g * n, axis=0)
    gn = gn - gn.mean()  # remove the round-off flux so the trace integrates
    return integrate_trace(d, gn, tol=np.inf), -np.sum(g * t, axis=0)


class StokesOperator:
    """Factorized streamfunction and pressure systems for one (domain, mu) pair."""

    def __init__(self, d: Domain, mu: ViscosityField):
        if mu.domain is not d and (mu.domain.n_r, mu.domain.n_theta) != (d.n_r, d.n_theta):
            raise ConfigurationError("viscosity and domain grids differ")
        self.domain = d
        self.mu = mu
        self.clamped = ClampedSolver(d, 2.0 * mu.values)

    def velocity(self, psi) -> np.ndarray:
        d = self.domain
        return np.stack([d.dy(psi), -d.dx(psi)])

    def pressure(self, F) -> np.ndarray:
        """Zero-mean p with grad p = F, by path integration."""
        d = self.domain
        p = d.potential_from_gradient(F)
        return p - d.integrate(p) / np.pi

    def solve(self, g, body=None) -> FlowState:
        """Solve div sigma = body with u = g on the boundary (body may be None)."""
        d = self.domain
        psi_d, psi_n = _streamfunction_bc(d, g)
        rhs = 0.0 if body is None else -curl(d, body)
        psi = self.clamped.solve(rhs, psi_d, psi_n)
        u = self.velocity(psi)
        F = divergence_of_tensor(d, 2.0 * self.mu.values * strain(d, u))
        if body is not None:
            F = F - body
        return FlowState(u, self.pressure(F), "zero-mean", psi)


def solve_stokes(d: Domain, mu: ViscosityField, g, flux_tol: float = 1e-8,
                 operator: StokesOperator | None = None) -> FlowState:
    """Velocity and zero-mean pressure of div sigma(u, p) = 0, div u = 0, u = g."""
    _flux_guard(d, g, flux_tol)
    op = operator or StokesOperator(d, mu)
    return op.solve(g)


def traction(d: Domain, state: FlowState, mu) -> np.ndarray:
    """sigma(u, p) n on the boundary, shape (2, n_theta)."""
    n, _ = boundary_frame(d)
    sig = d.boundary(stress(d, state.u, state.p, mu))
    return np.einsum("ijk,jk->ik", sig, n)


def cauchy_datum(d: Domain, state: FlowState, mu) -> StokesCauchyDatum:
    return StokesCauchyDatum(d.boundary(state.u), traction(d, state, mu))


def solve_nse(d: Domain, mu: ViscosityField, g, tol: float = 1e-10, max_iter: int = 50,
              max_contraction: float = 0.9, flux_tol: float = 1e-8,
              operator: StokesOperator | None = None) -> FlowState:
    """Stationary Navier-Stokes by Picard iteration from the Stokes solution.

    Each step solves the Stokes problem with the convective term of the
    previous iterate as body force.  The iteration is abandoned when the
    ratio of successive updates over the first three steps reaches
    ``max_contraction``; it stops when the relative update drops below
    ``tol``.
    """
    _flux_guard(d, g, flux_tol)
    op = operator or StokesOperator(d, mu)
    state = op.solve(g)
    history = []
    for it in range(max_iter):
        new = op.solve(g, body=convective_term(d, state.u))
        size = d.l2_norm(new.u)
        update = d.l2_norm(new.u - state.u) / size if size > 0 else 0.0
        history.append(update)
        state = new
        if update < tol:
            state.history = history
            return state
        if 1 <= it <= 2 and history[it - 1] > tol:
            rho = history[it] / history[it - 1]
            if rho >= max_contraction:
                raise PicardDivergenceError(
                    f"Picard contraction factor {rho:.3f} >= {max_contraction}",
                    condition=rho, history=history,
                )
    raise SolverError(f"Picard iteration did not converge in {max_iter} steps",
                      history=history)


def _loglog_slope(eps, err) -> float:
    eps, err = np.asarray(eps, float), np.asarray(err, float)
    if eps.size < 2 or np.any(err <= 0):
        return float("nan")
    return float(np.polyfit(np.log(eps), np.log(err), 1)[0])


def linearization_experiment(d: Domain, mu: ViscosityField, psi,
                             eps_list: Sequence[float], **nse_kwargs) -> LinearizationReport:
    """Compare rescaled Navier-Stokes Cauchy data at data eps*psi to Stokes data.

    Raises
    ------
    SolverError
        Propagated from the first failing solve; ``history`` carries the
        table computed so far.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigurationError("eps_list must be positive and strictly decreasing")
    op = StokesOperator(d, mu)
    ref = solve_stokes(d, mu, psi, operator=op)
    t_ref = traction(d, ref, mu)
    rows = []
    for eps in eps_list:
        try:
            s = solve_nse(d, mu, eps * np.asarray(psi), operator=op, **nse_kwargs)
        except SolverError as exc:
            exc.history = list(rows)
            raise
        ev = d.boundary_l2(d.boundary(s.u) / eps - d.boundary(ref.u))
        et = d.boundary_l2(traction(d, s, mu) / eps - t_ref)
        ei = d.l2_norm(s.u / eps - ref.u)
        rows.append((eps, ev, et, ei))
    cols = np.array(rows).T if rows else np.zeros((4, 0))
    return LinearizationReport(
        rows,
        _loglog_slope(cols[0], cols[1]),
        _loglog_slope(cols[0], cols[2]),
        _loglog_slope(cols[0], cols[3]),
        ref,
    )
