import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from viscosity_lab import (
    CompatibilityError,
    ConfigurationError,
    FlowState,
    PicardDivergenceError,
    ViscosityField,
    build_disk_domain,
    linearization_experiment,
    solve_nse,
    solve_stokes,
    traction,
)
from viscosity_lab.flow import (
    StokesOperator,
    cauchy_datum,
    check_flux,
    divergence_of_tensor,
    stress,
)
from viscosity_lab.geometry import boundary_frame

X, Y = sp.symbols("x y", real=True)


def _trace(d, u):
    return d.boundary(np.stack(u))


def _sym_stress(u1, u2, p, mu):
    e11, e22 = sp.diff(u1, X), sp.diff(u2, Y)
    e12 = (sp.diff(u1, Y) + sp.diff(u2, X)) / 2
    return sp.Matrix([[2 * mu * e11 - p, 2 * mu * e12], [2 * mu * e12, 2 * mu * e22 - p]])


def _lam(expr):
    f = sp.lambdify((X, Y), expr, "numpy")
    return lambda x, y: np.asarray(f(x, y), dtype=float) + 0.0 * x


# -- flux ---------------------------------------------------------------------


def test_flux_of_normal(d16):
    n, t = boundary_frame(d16)
    assert abs(check_flux(d16, n) - 2 * np.pi) < 1e-12
    assert abs(check_flux(d16, t)) < 1e-14


def test_flux_of_rotation(d16):
    assert abs(check_flux(d16, _trace(d16, (-d16.y, d16.x)))) < 1e-10


def test_incompatible_flux_rejected(d16):
    n, _ = boundary_frame(d16)
    mu = ViscosityField.family(d16, "constant")
    with pytest.raises(CompatibilityError):
        solve_stokes(d16, mu, n)


# -- Stokes -------------------------------------------------------------------


@pytest.mark.parametrize("family, params", [("constant", {}), ("bump", {"c": 0.3}), ("exp", {"a": 1.0})])
def test_rigid_rotation(d16, family, params):
    mu = ViscosityField.family(d16, family, **params)
    s = solve_stokes(d16, mu, _trace(d16, (-d16.y, d16.x)))
    assert np.max(np.abs(s.u - np.stack([-d16.y, d16.x]))) < 1e-10
    assert np.max(np.abs(s.p)) < 1e-8
    assert np.max(np.abs(traction(d16, s, mu))) < 1e-8


def test_linear_manufactured(d16):
    mu = ViscosityField.from_function(d16, lambda x, y: 1 + x ** 2)
    s = solve_stokes(d16, mu, _trace(d16, (d16.x, -d16.y)))
    assert np.max(np.abs(s.u - np.stack([d16.x, -d16.y]))) < 1e-6
    # mean of 2 x^2 over the unit disk is 1/2
    assert np.max(np.abs(s.p - (2 * d16.x ** 2 - 0.5))) < 1e-6
    assert abs(d16.integrate(s.p)) < 1e-10


def test_shear_manufactured(d16):
    mu0 = 1.5
    mu = ViscosityField.family(d16, "constant", mu0=mu0)
    s = solve_stokes(d16, mu, _trace(d16, (d16.y ** 2, 0 * d16.y)))
    assert np.max(np.abs(s.u - np.stack([d16.y ** 2, 0 * d16.y]))) < 1e-6
    assert np.max(np.abs(s.p - 2 * mu0 * d16.x)) < 1e-6


def test_traction_of_isotropic_stress(d16):
    mu = ViscosityField.family(d16, "bump", c=0.3)
    state = FlowState(np.zeros((2, d16.size)), np.ones(d16.size), gauge="none")
    n, _ = boundary_frame(d16)
    np.testing.assert_allclose(traction(d16, state, mu), -n, atol=1e-14)


def test_traction_matches_symbolic_oracle(d16):
    mu_s = 1 + X ** 2
    sig = _sym_stress(X, -Y, 2 * X ** 2 - sp.Rational(1, 2), mu_s)
    mu = ViscosityField.from_function(d16, _lam(mu_s))
    s = solve_stokes(d16, mu, _trace(d16, (d16.x, -d16.y)))
    n, _ = boundary_frame(d16)
    c, sn = n
    exact = np.stack([_lam(sig[i, 0])(c, sn) * c + _lam(sig[i, 1])(c, sn) * sn for i in range(2)])
    assert np.max(np.abs(traction(d16, s, mu) - exact)) < 1e-6


def test_flow_state_residuals(d16):
    mu = ViscosityField.family(d16, "bump", c=0.3)
    th = d16.theta
    n, t = boundary_frame(d16)
    g = np.cos(2 * th) * t + np.sin(th) * np.stack([np.ones_like(th), 0 * th])
    g -= np.mean(np.sum(g * n, axis=0)) * n
    s = solve_stokes(d16, mu, g)
    div_u = d16.dx(s.u[0]) + d16.dy(s.u[1])
    assert np.max(np.abs(div_u)) < 1e-8
    assert np.max(np.abs(d16.boundary(s.u) - g)) < 1e-8
    mom = divergence_of_tensor(d16, stress(d16, s.u, s.p, mu))
    assert np.max(np.abs(mom[:, d16.n_theta:])) < 1e-6


def test_refinement_order_on_nonpolynomial_solution():
    # streamfunction exp(x) sin(y), pressure x y, bump viscosity; body force
    # from symbolic substitution
    psi = sp.exp(X) * sp.sin(Y)
    u1, u2 = sp.diff(psi, Y), -sp.diff(psi, X)
    mu_s = 1 + sp.Rational(3, 10) * (1 - X ** 2 - Y ** 2) ** 2
    sig = _sym_stress(u1, u2, X * Y, mu_s)
    body = [sp.diff(sig[i, 0], X) + sp.diff(sig[i, 1], Y) for i in range(2)]
    errors = []
    for nr, nt in [(5, 20), (6, 24), (7, 28)]:
        d = build_disk_domain(nr, nt)
        mu = ViscosityField.from_function(d, _lam(mu_s))
        exact = np.stack([_lam(u1)(d.x, d.y), _lam(u2)(d.x, d.y)])
        F = np.stack([_lam(b)(d.x, d.y) for b in body])
        s = StokesOperator(d, mu).solve(d.boundary(exact), body=F)
        errors.append(np.max(np.abs(s.u - exact)) / np.max(np.abs(exact)))
    h = np.array([1 / 5, 1 / 6, 1 / 7])
    order = np.polyfit(np.log(h), np.log(errors), 1)[0]
    assert errors[-1] < errors[0]
    assert order >= 2


# -- Navier-Stokes ------------------------------------------------------------


def test_nse_rigid_rotation(d16):
    mu = ViscosityField.family(d16, "quadratic", a=1.0)
    s = solve_nse(d16, mu, _trace(d16, (-d16.y, d16.x)))
    r2 = d16.x ** 2 + d16.y ** 2
    assert np.max(np.abs(s.u - np.stack([-d16.y, d16.x]))) < 1e-8
    # mean of |z|^2 / 2 over the disk is 1/4
    assert np.max(np.abs(s.p - (r2 / 2 - 0.25))) < 1e-8


def test_nse_zero_data(d16):
    mu = ViscosityField.family(d16, "constant")
    s = solve_nse(d16, mu, np.zeros((2, d16.n_theta)))
    assert np.max(np.abs(s.u)) == 0.0
    assert np.max(np.abs(s.p)) == 0.0


def test_nse_small_data_close_to_stokes(d16):
    mu = ViscosityField.family(d16, "quadratic", a=1.0)
    th = d16.theta
    n, t = boundary_frame(d16)
    g = 1e-3 * (np.sin(2 * th) * t + np.cos(th) * n)
    stokes = solve_stokes(d16, mu, g)
    nse = solve_nse(d16, mu, g)
    diff = np.max(np.abs(nse.u - stokes.u))
    assert 0 < diff < 1e-5


def test_nse_large_data_diverges(d16):
    mu = ViscosityField.family(d16, "constant", mu0=0.01)
    th = d16.theta
    _, t = boundary_frame(d16)
    with pytest.raises(PicardDivergenceError) as info:
        solve_nse(d16, mu, 50 * np.sin(3 * th) * t)
    assert info.value.history


def test_linearization_rigid_rotation(d12):
    mu = ViscosityField.family(d12, "bump", c=0.3)
    rep = linearization_experiment(d12, mu, _trace(d12, (-d12.y, d12.x)), [1e-1, 1e-2])
    for eps, ev, et, _ in rep.rows:
        assert ev < 1e-10
        # scaled traction error comes from p = eps^2 (|z|^2/2 - 1/4), which is
        # eps^2/4 on the circle
        assert abs(et - eps * np.sqrt(2 * np.pi) / 4) < 1e-8


def test_linearization_single_eps(d12):
    mu = ViscosityField.family(d12, "constant")
    _, t = boundary_frame(d12)
    rep = linearization_experiment(d12, mu, np.sin(2 * d12.theta) * t, [1e-2])
    assert len(rep.rows) == 1
    assert np.isnan(rep.slope_traction)


def test_linearization_rejects_unordered_eps(d12):
    mu = ViscosityField.family(d12, "constant")
    with pytest.raises(ConfigurationError):
        linearization_experiment(d12, mu, np.zeros((2, d12.n_theta)), [1e-2, 1e-1])


# -- properties ---------------------------------------------------------------

amp = st.floats(-1.0, 1.0, allow_nan=False)


@given(a=amp, b=amp, c=amp, k=st.integers(1, 4), bump=st.floats(0.0, 0.8))
def test_solved_states_are_in_equilibrium(d16, a, b, c, k, bump):
    mu = ViscosityField.family(d16, "bump", c=bump)
    th = d16.theta
    n, t = boundary_frame(d16)
    g = a * np.cos(k * th) * t + b * np.sin(k * th) * n + c * np.stack([np.cos(th), 0 * th])
    g -= np.mean(np.sum(g * n, axis=0)) * n
    datum = cauchy_datum(d16, solve_stokes(d16, mu, g), mu)
    scale = max(float(np.max(np.abs(datum.traction))), 1.0)
    assert np.max(np.abs(datum.net_force(d16))) < 1e-7 * scale
    assert abs(datum.net_torque(d16)) < 1e-7 * scale


@given(cx=amp, cy=amp, w=amp, bump=st.floats(0.0, 2.0), a=st.floats(-1.0, 1.0))
def test_rigid_traction_is_viscosity_independent(d12, cx, cy, w, bump, a):
    x, y = d12.x, d12.y
    g = d12.boundary(np.stack([cx - w * y, cy + w * x]))
    for mu in (ViscosityField.family(d12, "bump", c=bump), ViscosityField.family(d12, "exp", a=a)):
        assert np.max(np.abs(traction(d12, solve_stokes(d12, mu, g), mu))) < 1e-8
