import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from viscosity_lab import (
    BoundaryJet,
    CompatibilityError,
    ConfigurationError,
    FlowState,
    MultivaluednessError,
    ViscosityField,
    airy_from_stokes,
    dirichlet_bridge,
    neumann_bridge,
    recover_boundary_jets,
    solve_plate,
    solve_stokes,
    velocity_from_strain,
)
from viscosity_lab.equivalence import (
    JET_INDICES,
    local_matrices,
    moment_twist,
    plate_to_stokes,
    remove_rigid_motion,
    stokes_to_plate,
)
from viscosity_lab.flow import strain, stress, traction
from viscosity_lab.geometry import boundary_frame
from viscosity_lab.plate import plate_datum

X, Y = sp.symbols("x y", real=True)
PHI_STAR = Y ** 2 - X ** 2 - X ** 4 / 3


def _lam(expr):
    f = sp.lambdify((X, Y), expr, "numpy")
    return lambda x, y: np.asarray(f(x, y), dtype=float) + 0.0 * x


def _affine_residual(d, f):
    """Max deviation of f from its best affine fit on the grid."""
    A = np.stack([np.ones(d.size), d.x, d.y], axis=1)
    coef, *_ = np.linalg.lstsq(A, f, rcond=None)
    return float(np.max(np.abs(f - A @ coef)))


# -- Airy function ------------------------------------------------------------


def test_airy_of_constant_pressure(d16):
    p0 = 1.3
    state = FlowState(np.zeros((2, d16.size)), np.full(d16.size, p0))
    phi = airy_from_stokes(d16, state, ViscosityField.family(d16, "constant"))
    r2 = d16.x ** 2 + d16.y ** 2
    # anchored so that phi and grad phi vanish at (1, 0)
    assert np.max(np.abs(phi - (-p0 * r2 / 2 + p0 * d16.x - p0 / 2))) < 1e-10


def test_airy_of_shear_flow(d16):
    mu0 = 1.5
    mu = ViscosityField.family(d16, "constant", mu0=mu0)
    x, y = d16.x, d16.y
    state = FlowState(np.stack([y ** 2, 0 * y]), 2 * mu0 * x)
    phi = airy_from_stokes(d16, state, mu)
    assert _affine_residual(d16, phi + mu0 * (x * y ** 2 + x ** 3 / 3)) < 1e-9
    sig = stress(d16, state.u, state.p, mu)
    assert np.max(np.abs(d16.dy(d16.dy(phi)) - sig[0, 0])) < 1e-8
    assert np.max(np.abs(-d16.dx(d16.dy(phi)) - sig[0, 1])) < 1e-8
    assert np.max(np.abs(d16.dx(d16.dx(phi)) - sig[1, 1])) < 1e-8


def test_airy_of_rigid_rotation(d16):
    mu = ViscosityField.family(d16, "bump", c=0.3)
    state = FlowState(np.stack([-d16.y, d16.x]), np.zeros(d16.size))
    assert np.max(np.abs(airy_from_stokes(d16, state, mu))) < 1e-12


def test_airy_rejects_unbalanced_stress(d16):
    mu = ViscosityField.family(d16, "constant")
    state = FlowState(np.stack([d16.x ** 2, 0 * d16.x]), np.zeros(d16.size))
    with pytest.raises(CompatibilityError):
        airy_from_stokes(d16, state, mu)


# -- strain integration -------------------------------------------------------


def test_zero_strain(d16):
    assert np.max(np.abs(velocity_from_strain(d16, np.zeros((2, 2, d16.size))))) == 0.0


def test_pure_strain(d16):
    one = np.ones(d16.size)
    eps = np.array([[one, 0 * one], [0 * one, -one]])
    u = velocity_from_strain(d16, eps, u_anchor=(1.0, 0.0))
    assert np.max(np.abs(u - np.stack([d16.x, -d16.y]))) < 1e-12


def test_shear_strain(d16):
    y = d16.y
    eps = np.array([[0 * y, y], [y, 0 * y]])
    u = velocity_from_strain(d16, eps)
    assert np.max(np.abs(u - np.stack([y ** 2, 0 * y]))) < 1e-12


def test_compressible_strain_rejected(d16):
    one = np.ones(d16.size)
    with pytest.raises(CompatibilityError):
        velocity_from_strain(d16, np.array([[one, 0 * one], [0 * one, one]]))


def test_incompatible_strain_rejected(d16):
    x2 = d16.x ** 2
    with pytest.raises(CompatibilityError):
        velocity_from_strain(d16, np.array([[x2, 0 * x2], [0 * x2, -x2]]))


# -- bridges ------------------------------------------------------------------


def test_dirichlet_bridge_isotropic(d16):
    p0 = 0.7
    n, _ = boundary_frame(d16)
    phi, phi_n = dirichlet_bridge(d16, "forward", -p0 * n)
    # -p0 |z|^2 / 2 up to the affine terms fixed by the anchor at (1, 0)
    th = d16.theta
    assert np.max(np.abs(phi_n - (-p0 + p0 * np.cos(th)))) < 1e-12
    assert np.max(np.abs(phi - (-p0 + p0 * np.cos(th)))) < 1e-12


def test_dirichlet_bridge_zero(d16):
    phi, phi_n = dirichlet_bridge(d16, "forward", np.zeros((2, d16.n_theta)))
    assert not np.any(phi) and not np.any(phi_n)


def test_dirichlet_bridge_round_trip_shear(d16):
    mu0 = 1.5
    mu = ViscosityField.family(d16, "constant", mu0=mu0)
    state = solve_stokes(d16, mu, d16.boundary(np.stack([d16.y ** 2, 0 * d16.y])))
    T = traction(d16, state, mu)
    back = dirichlet_bridge(d16, "backward", dirichlet_bridge(d16, "forward", T))
    assert np.max(np.abs(back - T)) < 1e-6


def test_dirichlet_bridge_net_force_rejected(d16):
    T = np.stack([np.ones(d16.n_theta), np.zeros(d16.n_theta)])
    with pytest.raises(MultivaluednessError):
        dirichlet_bridge(d16, "forward", T)


def test_bridge_direction_validated(d16):
    with pytest.raises(ConfigurationError):
        dirichlet_bridge(d16, "sideways", np.zeros((2, d16.n_theta)))
    with pytest.raises(ConfigurationError):
        neumann_bridge(d16, "sideways", np.zeros((2, d16.n_theta)))


def test_neumann_bridge_rotation(d16):
    g = d16.boundary(np.stack([-d16.y, d16.x]))
    m_n, mt_t = neumann_bridge(d16, "forward", g)
    assert np.max(np.abs(moment_twist(d16, g) - 1.0)) < 1e-12
    assert np.max(np.abs(m_n)) < 1e-12
    assert np.max(np.abs(mt_t)) < 1e-12


def test_neumann_bridge_constant(d16):
    g = np.stack([np.full(d16.n_theta, 2.0), np.full(d16.n_theta, -1.0)])
    m_n, mt_t = neumann_bridge(d16, "forward", g)
    assert np.max(np.abs(m_n)) < 1e-14
    assert np.max(np.abs(moment_twist(d16, g))) < 1e-14


def test_neumann_bridge_round_trip_linear(d16):
    g = d16.boundary(np.stack([d16.x, -d16.y]))
    moments = neumann_bridge(d16, "forward", g)
    back = neumann_bridge(d16, "backward", moments, moment_twist(d16, g)[0], g[:, 0])
    assert np.max(np.abs(back - g)) < 1e-6


def test_neumann_bridge_circulation_rejected(d16):
    z = np.zeros(d16.n_theta)
    with pytest.raises(MultivaluednessError):
        neumann_bridge(d16, "backward", (z, np.ones(d16.n_theta)))


def test_mt_anchor_adds_rotation(d16):
    g = d16.boundary(np.stack([d16.x, -d16.y]))
    moments = neumann_bridge(d16, "forward", g)
    a = neumann_bridge(d16, "backward", moments, 0.0)
    b = neumann_bridge(d16, "backward", moments, 1.0)
    # changing M_t at node 0 by one adds the rotation (-y, x) - (0, 1)
    rot = d16.boundary(np.stack([-d16.y, d16.x - 1.0]))
    assert np.max(np.abs(b - a - rot)) < 1e-12


def test_full_round_trip_stokes_plate(d16):
    mu = ViscosityField.family(d16, "bump", c=0.3)
    th = d16.theta
    n, t = boundary_frame(d16)
    g = np.cos(2 * th) * t + 0.5 * np.sin(3 * th) * n
    T = traction(d16, solve_stokes(d16, mu, g), mu)
    datum = stokes_to_plate(d16, g, T)
    phi = solve_plate(d16, mu, datum.phi, datum.phi_n)
    recomputed = plate_datum(d16, mu, phi)
    bridged = np.stack([datum.m_n, datum.mt_t])
    err = np.linalg.norm(np.stack([recomputed.m_n, recomputed.mt_t]) - bridged) / np.linalg.norm(bridged)
    assert err < 1e-4
    g_back, T_back = plate_to_stokes(d16, datum)
    assert np.max(np.abs(T_back - T)) < 1e-6 * np.max(np.abs(T))
    assert np.max(np.abs(remove_rigid_motion(d16, g_back, g) - g)) < 1e-6


# -- boundary jets ------------------------------------------------------------


def test_local_matrices_at_first_node():
    A2, A3 = local_matrices(1.0, 0.0)
    np.testing.assert_array_equal(A2, [[0, 1, 0], [0, 0, 1], [1, 0, -1]])
    np.testing.assert_array_equal(A3, [[0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1], [1, 0, 1, 0]])
    assert round(np.linalg.det(A2), 14) == 1.0
    assert round(np.linalg.det(A3), 14) == -1.0


def test_local_determinants_symbolic():
    n1, n2 = sp.symbols("n1 n2", real=True)
    A2 = sp.Matrix([[-n2, n1, 0], [0, -n2, n1], [n1 ** 2 - n2 ** 2, 4 * n1 * n2, n2 ** 2 - n1 ** 2]])
    A3 = sp.Matrix([[-n2, n1, 0, 0], [0, -n2, n1, 0], [0, 0, -n2, n1], [n1, n2, n1, n2]])
    unit = {n2: sp.sqrt(1 - n1 ** 2)}
    assert sp.simplify(A2.det().subs(unit)) == 1
    assert sp.simplify(A3.det().subs(unit)) == -1


@given(theta=st.floats(0, 2 * np.pi))
def test_local_determinants_on_circle(theta):
    A2, A3 = local_matrices(np.cos(theta), np.sin(theta))
    assert abs(np.linalg.det(A2) - 1) < 1e-12
    assert abs(np.linalg.det(A3) + 1) < 1e-12


def test_jets_of_manufactured_plate_solution(d16):
    mu = ViscosityField.from_function(d16, lambda x, y: 1 + x ** 2,
                                      grad=lambda x, y: (2 * x, 0 * y))
    phi = _lam(PHI_STAR)(d16.x, d16.y)
    jets = recover_boundary_jets(d16, plate_datum(d16, mu, phi), mu.boundary_jet())
    c, s = boundary_frame(d16).normal
    exact = BoundaryJet({(a, b): _lam(sp.diff(PHI_STAR, X, a, Y, b))(c, s) for a, b in JET_INDICES})
    assert jets.relative_error(exact) < 1e-4
    assert jets.relative_error(BoundaryJet.from_field(d16, phi)) < 1e-4
    assert jets.tangential_mismatch(d16) < 1e-6


def test_jets_reject_nonpositive_viscosity(d16):
    datum = plate_datum(d16, 1.0, d16.x ** 3)
    with pytest.raises(ConfigurationError):
        recover_boundary_jets(d16, datum, (np.zeros(d16.n_theta), np.zeros((2, d16.n_theta))))


# -- properties ---------------------------------------------------------------

amp = st.floats(-1.0, 1.0, allow_nan=False)


def _trig(th, a, b, k):
    return a * np.cos(k * th) + b * np.sin((k + 1) * th)


@given(a=amp, b=amp, c=amp, k=st.integers(1, 5))
def test_dirichlet_bridge_round_trip(d16, a, b, c, k):
    th = d16.theta
    # any clamped pair gives an equilibrated traction
    T = dirichlet_bridge(d16, "backward", (_trig(th, a, b, k), _trig(th, c, a, k + 1)))
    back = dirichlet_bridge(d16, "backward", dirichlet_bridge(d16, "forward", T))
    assert np.max(np.abs(back - T)) < 1e-9 * max(float(np.max(np.abs(T))), 1.0)


@given(a=amp, b=amp, c=amp, k=st.integers(1, 5))
def test_neumann_bridge_round_trip(d16, a, b, c, k):
    th = d16.theta
    g = np.stack([_trig(th, a, b, k), _trig(th, c, b, k + 1)]) + 0.3
    moments = neumann_bridge(d16, "forward", g)
    back = neumann_bridge(d16, "backward", moments, moment_twist(d16, g)[0], g[:, 0])
    assert np.max(np.abs(back - g)) < 1e-9 * max(float(np.max(np.abs(g))), 1.0)


@given(a=amp, b=amp, k=st.floats(0.5, 2.0))
def test_strain_integration_inverts_strain(d16, a, b, k):
    x, y = d16.x, d16.y
    # divergence-free velocity from a streamfunction
    psi = a * np.exp(k * x) * np.cos(y) + b * x * y ** 3
    u = np.stack([d16.dy(psi), -d16.dx(psi)])
    out = velocity_from_strain(d16, strain(d16, u))
    scale = max(float(np.max(np.abs(u))), 1.0)
    diff = out - u
    # the difference is a rigid motion c + w (-y, x)
    A = np.stack([np.concatenate([np.ones_like(x), 0 * x]),
                  np.concatenate([0 * x, np.ones_like(x)]),
                  np.concatenate([-y, x])], axis=1)
    coef, *_ = np.linalg.lstsq(A, diff.ravel(), rcond=None)
    assert np.max(np.abs(diff.ravel() - A @ coef)) < 1e-8 * scale


@given(a=amp, b=amp, k=st.integers(1, 3), bump=st.floats(0.0, 0.6))
def test_airy_reproduces_pressure(d12, a, b, k, bump):
    mu = ViscosityField.family(d12, "bump", c=bump)
    th = d12.theta
    n, t = boundary_frame(d12)
    g = a * np.cos(k * th) * t + b * np.sin(k * th) * n
    state = solve_stokes(d12, mu, g)
    phi = airy_from_stokes(d12, state, mu)
    p = -0.5 * d12.laplacian(phi)
    p -= d12.integrate(p) / np.pi
    assert np.max(np.abs(p - state.p)) < 1e-5 * max(float(np.max(np.abs(state.p))), 1.0)
