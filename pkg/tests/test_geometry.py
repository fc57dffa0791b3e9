import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from viscosity_lab import ConfigurationError, MultivaluednessError, build_disk_domain
from viscosity_lab.geometry import (
    boundary_frame,
    differentiate,
    integrate_trace,
    tangential_derivative,
)


def test_domain_has_requested_boundary_nodes(d16):
    assert d16.n_theta == 64
    assert d16.boundary(d16.x).shape == (64,)
    assert d16.size == 16 * 64


def test_area_weights_sum_to_pi(d16):
    assert abs(np.sum(d16.weights) - np.pi) < 1e-10 * np.pi


def test_boundary_nodes_on_unit_circle(d16):
    assert np.max(np.abs(np.abs(d16.boundary(d16.z)) - 1.0)) < 1e-12


def test_grid_avoids_origin(d16):
    assert np.min(np.abs(d16.z)) > 0.0


@pytest.mark.parametrize("n_r, n_theta", [(4, 7), (3, 16), (8, 6), (8, 0)])
def test_invalid_counts_rejected(n_r, n_theta):
    with pytest.raises(ConfigurationError):
        build_disk_domain(n_r, n_theta)


def test_frame_at_cardinal_nodes(d16):
    n, t = boundary_frame(d16)
    np.testing.assert_allclose(n[:, 0], [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(t[:, 0], [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(n[:, 16], [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(t[:, 16], [-1.0, 0.0], atol=1e-15)


def test_frame_orthonormal(d16):
    n, t = boundary_frame(d16)
    assert np.max(np.abs(np.sum(n * t, axis=0))) < 1e-12
    assert np.max(np.abs(np.sum(n * n, axis=0) - 1)) < 1e-12
    assert np.max(np.abs(np.sum(t * t, axis=0) - 1)) < 1e-12
    np.testing.assert_array_equal(t, np.stack([-n[1], n[0]]))


def test_derivative_of_square(d16):
    assert np.max(np.abs(differentiate(d16, d16.x ** 2, (1, 0)) - 2 * d16.x)) < 1e-10


@pytest.mark.parametrize("index", [(1, 0), (0, 1), (2, 0), (1, 1), (0, 4), (2, 2)])
def test_derivative_of_constant(d16, index):
    assert np.max(np.abs(differentiate(d16, np.full(d16.size, 3.0), index))) < 1e-8


def test_bilaplacian_of_cubic(d8):
    # fourth-order collocation amplifies input rounding like n^8; the 1e-8
    # bound is met on grids up to (8, 32)
    f = d8.x ** 3
    bilap = differentiate(d8, f, (4, 0)) + 2 * differentiate(d8, f, (2, 2)) + differentiate(d8, f, (0, 4))
    assert np.max(np.abs(bilap)) < 1e-8


def test_order_above_four_rejected(d16):
    with pytest.raises(ConfigurationError):
        differentiate(d16, d16.x, (3, 2))


def test_trace_of_sine_integrates_back(d16):
    th = d16.theta
    out = integrate_trace(d16, np.cos(th), anchor=0, anchor_value=0.0)
    assert np.max(np.abs(out - np.sin(th))) < 1e-8


def test_zero_trace_gives_anchor_value(d16):
    out = integrate_trace(d16, np.zeros(d16.n_theta), anchor_value=2.5)
    np.testing.assert_allclose(out, 2.5)


def test_constant_trace_is_multivalued(d16):
    with pytest.raises(MultivaluednessError) as info:
        integrate_trace(d16, np.ones(d16.n_theta))
    assert abs(abs(info.value.circulation) - 2 * np.pi) < 1e-12


def test_potential_from_gradient_recovers_smooth_function(d16):
    x, y = d16.x, d16.y
    f = np.exp(x) * np.sin(2 * y) + x * y ** 2
    grad = np.stack([d16.dx(f), d16.dy(f)])
    out = d16.potential_from_gradient(grad, anchor_value=float(d16.boundary(f)[0]))
    assert np.max(np.abs(out - f)) < 1e-10


def test_interpolation_reproduces_smooth_field(d16):
    f = np.exp(d16.x) * np.cos(d16.y)
    xq, yq = np.array([0.1, -0.4, 0.0]), np.array([0.2, 0.5, 0.0])
    exact = np.exp(xq) * np.cos(yq)
    assert np.max(np.abs(d16.interpolate(f, xq, yq) - exact)) < 1e-10


# -- properties ---------------------------------------------------------------

coef = st.floats(-2.0, 2.0, allow_nan=False)


@given(a=coef, b=coef, c=coef, k=st.integers(1, 3))
def test_mixed_derivatives_commute(d16, a, b, c, k):
    x, y = d16.x, d16.y
    f = a * np.sin(k * x + y) + b * np.exp(c * y) * x ** 2
    assert np.max(np.abs(differentiate(d16, f, (1, 1)) - d16.dy(d16.dx(f)))) < 1e-8


@given(a=coef, b=coef, k=st.integers(1, 6), anchor=st.integers(0, 63))
def test_integration_inverts_tangential_derivative(d16, a, b, k, anchor):
    th = d16.theta
    f = a * np.cos(k * th) + b * np.sin((k + 1) * th) + np.exp(np.cos(th))
    out = integrate_trace(d16, tangential_derivative(d16, f), anchor, f[anchor])
    assert np.max(np.abs(out - f)) < 1e-10


@given(a=coef, b=coef, c=st.floats(-1.0, 1.0))
def test_divergence_theorem(d16, a, b, c):
    x, y = d16.x, d16.y
    f = a * np.exp(c * x) * np.cos(y) + b * x ** 2 * y ** 2
    area = d16.integrate(d16.laplacian(f))
    flux = d16.boundary_integral(d16.boundary(d16.normal_derivative(f)))
    assert abs(area - flux) < 1e-6


def test_poisson_dirichlet_reproduces_smooth_function(d16):
    f = np.exp(d16.x) * np.sin(2 * d16.y) + d16.x * d16.y ** 2
    g = d16.poisson_dirichlet(d16.laplacian(f), d16.boundary(f))
    assert np.max(np.abs(g - f)) < 1e-11


def test_poisson_and_path_potentials_agree(d12):
    f = np.cos(d12.x) * d12.y + d12.x ** 3
    grad = np.stack([d12.dx(f), d12.dy(f)])
    a = d12.potential_from_gradient(grad, anchor_value=f[0], method="poisson")
    b = d12.potential_from_gradient(grad, anchor_value=f[0])
    assert np.max(np.abs(a - f)) < 1e-10
    assert np.max(np.abs(b - f)) < 1e-10


def test_unknown_integration_method_rejected(d8):
    with pytest.raises(ConfigurationError):
        d8.potential_from_gradient(np.zeros((2, d8.size)), method="spline")
