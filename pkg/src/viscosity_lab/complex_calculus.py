"""Wirtinger calculus and solid Cauchy-type integral operators on the disk.

Two independent routes evaluate the solid operators

    T f(z)  = 1/pi int f(zeta) / (z - zeta) dA            (d/dzbar T f = f)
    K f(z)  = 1/pi int f(zeta) conj(z - zeta)/(z - zeta) dA   (d^2/dzbar^2 K f = f)

and their conjugate-kind counterparts.

``route="polar"``
    Quadrature in polar coordinates centred on each target, zeta = z +
    s exp(i psi).  The area element s ds dpsi cancels the 1/|z - zeta|
    singularity of the first kernel and the second kernel reduces to the
    phase exp(-2 i psi), so the integrand is smooth in (s, psi).  Radial
    lines use Gauss-Legendre on [0, S(psi)], where S is the distance to the
    unit circle; the angle is mapped so that nodes cluster at the two
    tangential directions where S varies fastest for targets near the rim.
    Targets on the circle integrate over the inward half-range of angles.
    Grid data are evaluated off-grid through the spectral interpolant.

``route="modal"``
    Fourier decomposition in the angle: mode m of f maps to mode m - 1 of
    T f through one-dimensional radial integrals.  The second kernel is
    assembled as K f = zbar T f - T(zbar f).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CompatibilityError, ConfigurationError
from .geometry import Domain


# -- Wirtinger derivatives -----------------------------------------------------


def _check_kind(kind: str) -> str:
    if kind not in ("z", "zbar"):
        raise ConfigurationError(f"kind must be 'z' or 'zbar', got {kind!r}")
    return kind


def wirtinger(d: Domain, f, kind: str = "z", order: int = 1):
    """Apply d/dz = (d_x - i d_y)/2 or d/dzbar = (d_x + i d_y)/2 ``order`` times."""
    _check_kind(kind)
    if order not in (0, 1, 2, 3, 4):
        raise ConfigurationError(f"unsupported Wirtinger order {order}")
    sign = -1.0 if kind == "z" else 1.0
    ops = d.extended if np.asarray(f).dtype in (np.longdouble, np.clongdouble) else d
    out = np.asarray(f)
    for _ in range(order):
        out = 0.5 * (ops.dx(out) + sign * 1j * ops.dy(out))
    return out


def dz(d: Domain, f, order: int = 1):
    return wirtinger(d, f, "z", order)


def dzbar(d: Domain, f, order: int = 1):
    return wirtinger(d, f, "zbar", order)


# -- reports and settings ------------------------------------------------------


@dataclass
class PompeiuReport:
    """Area term, boundary term and the size of their mismatch.

    For :func:`gauss_residual` the terms are complex scalars; for
    :func:`pompeiu_reconstruct` they are arrays over the target nodes.
    """

    area_term: complex | np.ndarray
    boundary_term: complex | np.ndarray
    residual: float
    targets: np.ndarray | None = None


@dataclass(frozen=True)
class QuadratureDensity:
    """Node counts of the target-centred quadrature.

    Attributes
    ----------
    n_s : int
        Gauss-Legendre nodes along each radial line.
    n_psi : int
        Angular nodes around each target.
    n_boundary : int
        Trapezoid nodes for contour integrals over the unit circle.
    """

    n_s: int = 16
    n_psi: int = 48
    n_boundary: int = 256

    def doubled(self) -> "QuadratureDensity":
        return QuadratureDensity(2 * self.n_s, 2 * self.n_psi, 2 * self.n_boundary)


DEFAULT_DENSITY = QuadratureDensity()


# -- Gauss formulas ------------------------------------------------------------


def gauss_residual(d: Domain, w, kind: str = "zbar") -> PompeiuReport:
    """Compare int dzbar w dA with (1/2i) oint w dz (or the conjugate-kind pair)."""
    _check_kind(kind)
    w = np.asarray(w, dtype=complex)
    e = np.exp(1j * d.theta)
    wb = d.boundary(w)
    if kind == "zbar":
        area = d.integrate(dzbar(d, w))
        bnd = d.boundary_integral(wb * 1j * e) / 2j
    else:
        area = d.integrate(dz(d, w))
        bnd = -d.boundary_integral(wb * (-1j) * np.conj(e)) / 2j
    return PompeiuReport(complex(area), complex(bnd), float(abs(area - bnd)))


# -- sampling helpers ----------------------------------------------------------


def _evaluator(d: Domain, f):
    """Callable (x, y) -> f for grid data or closed forms."""
    if callable(f):
        return lambda x, y: np.asarray(f(x, y), dtype=complex) + 0.0 * x
    values = np.asarray(f, dtype=complex)
    if values.shape != (d.size,):
        raise ConfigurationError("field does not match the grid")
    return lambda x, y: d.interpolate(values, x, y)


def _nodal(d: Domain, f) -> np.ndarray:
    if callable(f):
        return np.asarray(f(d.x, d.y), dtype=complex) + 0.0 * d.x
    return np.asarray(f, dtype=complex)


def resample_trace(trace, n: int) -> np.ndarray:
    """Band-limited interpolation of a periodic trace to ``n`` equispaced nodes."""
    trace = np.asarray(trace, dtype=complex)
    m = trace.shape[-1]
    if m == n:
        return trace
    c = np.fft.fft(trace, axis=-1) / m
    out = np.zeros(trace.shape[:-1] + (n,), dtype=complex)
    half = min(m, n) // 2
    out[..., :half] = c[..., :half]
    out[..., n - half + 1:] = c[..., m - half + 1:]
    if m <= n:
        # split the source Nyquist term symmetrically
        out[..., half] += 0.5 * c[..., half] if m % 2 == 0 else c[..., half]
        out[..., n - half] += 0.5 * c[..., half] if m % 2 == 0 else 0.0
    else:
        out[..., half] = c[..., half] + c[..., m - half]
    return np.fft.ifft(out, axis=-1) * n


# -- polar (target-centred) quadrature -----------------------------------------


def _polar_rule(z: np.ndarray, density: QuadratureDensity):
    """Nodes (s, psi) and weights for every target.

    Returns arrays of shape (n_targets, n_psi, n_s): offsets ``s``, angles
    ``psi`` and weights ``w`` for the measure ds dpsi.
    """
    n_s, n_psi = density.n_s, density.n_psi
    gx, gw = np.polynomial.legendre.leggauss(n_s)
    gx, gw = 0.5 * (gx + 1.0), 0.5 * gw
    rho = np.abs(z)
    psi0 = np.angle(z)
    on_rim = rho > 1.0 - 1e-13
    psi = np.empty((z.size, n_psi))
    jac = np.empty((z.size, n_psi))
    # interior targets: entire periodic angle map whose slope kappa at
    # psi0 +- pi/2 resolves the near-kink of S for targets close to the rim
    tau = 2.0 * np.pi * np.arange(n_psi) / n_psi
    kappa = np.clip(np.sqrt(np.maximum(1.0 - rho ** 2, 0.0)), 1e-3, 1.0)[:, None]
    psi[:] = psi0[:, None] + 0.5 * np.pi + tau - 0.5 * (1.0 - kappa) * np.sin(2.0 * tau)
    jac[:] = (1.0 - (1.0 - kappa) * np.cos(2.0 * tau)) * (2.0 * np.pi / n_psi)
    # targets on the circle: only the inward half-range sees the disk
    if np.any(on_rim):
        hx, hw = np.polynomial.legendre.leggauss(n_psi)
        psi[on_rim] = psi0[on_rim, None] + np.pi + 0.5 * np.pi * hx
        jac[on_rim] = 0.5 * np.pi * hw
    a = np.real(np.conj(z)[:, None] * np.exp(1j * psi))
    S = -a + np.sqrt(np.maximum(a * a + 1.0 - rho[:, None] ** 2, 0.0))
    s = S[:, :, None] * gx
    w = jac[:, :, None] * S[:, :, None] * gw
    return s, psi, w


def _polar_transform(d: Domain, f, order: int, targets: np.ndarray,
                     density: QuadratureDensity, chunk: int = 64) -> np.ndarray:
    """z-bar kind operator of the given order at ``targets`` by polar quadrature."""
    ev = _evaluator(d, f)
    out = np.empty(targets.size, dtype=complex)
    for start in range(0, targets.size, chunk):
        z = targets[start:start + chunk]
        s, psi, w = _polar_rule(z, density)
        e = np.exp(1j * psi)[:, :, None]
        zeta = z[:, None, None] + s * e
        vals = ev(zeta.real, zeta.imag)
        if order == 1:
            kern = -np.conj(e)
        else:
            kern = np.conj(e) ** 2 * s
        out[start:start + chunk] = np.sum(vals * kern * w, axis=(1, 2)) / np.pi
    return out


# -- modal route ---------------------------------------------------------------


def _modal_cauchy(d: Domain, f, n_quad: int = 64) -> np.ndarray:
    """Solid Cauchy transform T f at the grid nodes, mode by mode."""
    values = _nodal(d, f)
    m, coeffs = d.angular_modes(values)
    full = d.full_line(coeffs, m)
    gx, gw = np.polynomial.legendre.leggauss(n_quad)
    gx, gw = 0.5 * (gx + 1.0), 0.5 * gw
    r = d.r
    out_modes = np.zeros((d.n_r, m.size), dtype=complex)
    for i, ri in enumerate(r):
        # inner integral over [0, r]: modes m <= 0
        rho_in = ri * gx
        P_in = d.radial_interpolator(rho_in) @ full
        pw_in = (gx[:, None]) ** (1 - np.minimum(m, 0)[None, :])
        inner = 2.0 * ri * np.sum(gw[:, None] * P_in * pw_in, axis=0)
        # outer integral over [r, 1] in log variable: modes m >= 1
        if ri < 1.0:
            lo = np.log(ri)
            t = lo * (1.0 - gx)
            rho_out = np.exp(t)
            P_out = d.radial_interpolator(rho_out) @ full
            ratio = np.exp((lo - t))[:, None] ** (np.maximum(m, 1)[None, :] - 1)
            outer = -2.0 * (-lo) * np.sum((gw * rho_out)[:, None] * P_out * ratio, axis=0)
        else:
            outer = np.zeros(m.size, dtype=complex)
        out_modes[i] = np.where(m <= 0, inner, outer)
    # output mode is m - 1
    phase = np.exp(1j * np.outer(m - 1, d.theta))
    grid = out_modes @ phase
    return grid.ravel()


def _modal_transform(d: Domain, f, order: int) -> np.ndarray:
    values = _nodal(d, f)
    if order == 1:
        return _modal_cauchy(d, values)
    zb = np.conj(d.z)
    return zb * _modal_cauchy(d, values) - _modal_cauchy(d, zb * values)


# -- public solid operators ----------------------------------------------------


def solve_dbar(d: Domain, f, kind: str = "zbar", order: int = 1, route: str = "polar",
               density: QuadratureDensity | None = None) -> np.ndarray:
    """Particular solution u of d^order u = f in the chosen Wirtinger variable.

    Parameters
    ----------
    f : array_like or callable
        Grid values or a closed form f(x, y).
    kind : {"zbar", "z"}
    order : {1, 2}
        Order 1 uses the solid Cauchy transform, order 2 the bounded phase
        kernel conj(z - zeta)/(z - zeta) (or its conjugate for kind "z").
    route : {"polar", "modal"}
        Target-centred quadrature or Fourier-mode evaluation.

    Returns
    -------
    ndarray
        Complex values at the grid nodes.
    """
    _check_kind(kind)
    if order not in (1, 2):
        raise ConfigurationError(f"solid operators exist for order 1 or 2, got {order}")
    if kind == "z":
        if callable(f):
            g = lambda x, y: np.conj(f(x, y))
        else:
            g = np.conj(np.asarray(f, dtype=complex))
        return np.conj(solve_dbar(d, g, "zbar", order, route, density))
    if route == "polar":
        return _polar_transform(d, f, order, d.z, density or DEFAULT_DENSITY)
    if route == "modal":
        return _modal_transform(d, f, order)
    raise ConfigurationError(f"unknown route {route!r}")


def cauchy_integral(trace, z, n_boundary: int | None = None) -> np.ndarray:
    """(1/2 pi i) oint w(zeta) / (zeta - z) dzeta by the trapezoid rule."""
    trace = np.asarray(trace, dtype=complex)
    if n_boundary:
        trace = resample_trace(trace, n_boundary)
    n = trace.size
    zeta = np.exp(2j * np.pi * np.arange(n) / n)
    z = np.asarray(z, dtype=complex)
    kern = zeta[None, :] / (zeta[None, :] - z.ravel()[:, None])
    return (kern @ trace / n).reshape(z.shape)


def _phase_contour(trace, z, n_boundary: int | None = None) -> np.ndarray:
    """(1/2 pi i) oint v(zeta) conj(zeta - z)/(zeta - z) dzeta."""
    trace = np.asarray(trace, dtype=complex)
    if n_boundary:
        trace = resample_trace(trace, n_boundary)
    n = trace.size
    zeta = np.exp(2j * np.pi * np.arange(n) / n)
    z = np.asarray(z, dtype=complex).ravel()[:, None]
    kern = zeta[None, :] * np.conj(zeta[None, :] - z) / (zeta[None, :] - z)
    return kern @ trace / n


def residual_targets(d: Domain, margin: float = 1.0) -> np.ndarray:
    """Indices of nodes at least ``margin`` angular cells inside the circle."""
    return np.flatnonzero(d.rr <= 1.0 - margin * 2.0 * np.pi / d.n_theta)


def pompeiu_reconstruct(d: Domain, w, order: int = 1, kind: str = "zbar",
                        density: QuadratureDensity | None = None, route: str = "polar",
                        margin: float = 1.0) -> PompeiuReport:
    """Evaluate the Cauchy-Pompeiu representation of w at interior nodes.

    Targets within ``margin`` angular cells of the circle are skipped
    because the trapezoid rule for the contour term loses accuracy there.
    The report carries the area and boundary terms at the targets and the
    maximum deviation of their sum from w.
    """
    _check_kind(kind)
    if order not in (1, 2):
        raise ConfigurationError(f"representation order must be 1 or 2, got {order}")
    w = np.asarray(w, dtype=complex)
    if kind == "z":
        rep = pompeiu_reconstruct(d, np.conj(w), order, "zbar", density, route, margin)
        return PompeiuReport(np.conj(rep.area_term), np.conj(rep.boundary_term),
                             rep.residual, rep.targets)
    density = density or DEFAULT_DENSITY
    idx = residual_targets(d, margin)
    z = d.z[idx]
    wb = d.boundary(w)
    boundary = cauchy_integral(wb, z, density.n_boundary)
    if order == 1:
        source = dzbar(d, w)
        area = _area_operator(d, source, 1, idx, density, route)
    else:
        boundary = boundary - _phase_contour(d.boundary(dzbar(d, w)), z, density.n_boundary)
        source = dzbar(d, w, 2)
        area = _area_operator(d, source, 2, idx, density, route)
    total = boundary + area
    return PompeiuReport(area, boundary, float(np.max(np.abs(total - w[idx]))), idx)


def _area_operator(d, source, order, idx, density, route):
    if route == "polar":
        return _polar_transform(d, source, order, d.z[idx], density)
    return _modal_transform(d, source, order)[idx]


# -- bi-d-bar system -----------------------------------------------------------


def relative_residual(d: Domain, value, target, idx=None) -> float:
    """Relative L2 mismatch over the residual region (absolute if target is 0)."""
    idx = residual_targets(d) if idx is None else idx
    wts = d.weights[idx]
    diff = np.sqrt(np.sum(wts * np.abs(np.asarray(value)[idx] - np.asarray(target)[idx]) ** 2))
    scale = np.sqrt(np.sum(wts * np.abs(np.asarray(target)[idx]) ** 2))
    return float(diff / scale) if scale > 1e-14 else float(diff)


def bi_dbar2_residuals(d: Domain, w, f, g) -> tuple[float, float]:
    """Relative residuals of d_z^2 w = f and d_zbar^2 w = g over the residual region."""
    return (relative_residual(d, dz(d, w, 2), _nodal(d, f)),
            relative_residual(d, dzbar(d, w, 2), _nodal(d, g)))


def check_bi_dbar2_compatibility(d: Domain, f, g) -> float:
    """Relative L2 size of d_zbar^2 f - d_z^2 g, scaled by the data."""
    f, g = _nodal(d, f), _nodal(d, g)
    idx = residual_targets(d)
    wts = d.weights[idx]
    mismatch = dzbar(d, f, 2) - dz(d, g, 2)
    num = np.sqrt(np.sum(wts * np.abs(mismatch[idx]) ** 2))
    scale = max(np.sqrt(np.sum(wts * np.abs(f[idx]) ** 2)),
                np.sqrt(np.sum(wts * np.abs(g[idx]) ** 2)), 1.0)
    return float(num / scale)


def _trace_modes(trace, n: int) -> dict:
    """Fourier coefficients G_k of a boundary function, G = sum_k G_k zeta^k."""
    t = resample_trace(trace, n)
    c = np.fft.fft(t) / n
    k = np.fft.fftfreq(n, 1.0 / n).astype(int)
    return dict(zip(k.tolist(), c))


def _log_series(modes: dict, first: int, step: int, var: np.ndarray, n_terms: int,
                scale: complex) -> np.ndarray:
    """scale * sum_{n>=1} modes[first + step*n] var**n / n."""
    out = np.zeros_like(var, dtype=complex)
    power = np.ones_like(var, dtype=complex)
    for n in range(1, n_terms + 1):
        power = power * var
        c = modes.get(first + step * n, 0.0)
        if c != 0.0:
            out += scale * c * power / n
    return out


def _boundary_moment(values, weight, n: int) -> complex:
    """oint values * weight dtheta by the trapezoid rule on ``n`` nodes."""
    return complex(np.sum(values * weight) * 2.0 * np.pi / n)


def _phi_corrections(d: Domain, f, g, n: int) -> np.ndarray:
    """Boundary-integral correction terms phi_1 + phi_2 at the grid nodes.

    The logarithms split as log(z - zeta) = log(-zeta) + Log(1 - z conj(zeta))
    on the unit circle, with log(-zeta) taken on the principal branch per
    boundary node.  The second factor expands in a power series in z (or
    zbar), which turns every contour integral into a sum over Fourier
    coefficients of the boundary data.  Inner contour integrals over lambda
    are interior limits of Cauchy integrals.
    """
    z = d.z
    zb = np.conj(z)
    theta = 2.0 * np.pi * np.arange(n) / n
    zeta = np.exp(1j * theta)
    ell = 1j * np.angle(-zeta)  # principal log(-zeta) on |zeta| = 1
    twopii = 2j * np.pi
    n_terms = n // 2 - 2

    fb = resample_trace(d.boundary(_nodal(d, f)), n)
    gb = resample_trace(d.boundary(_nodal(d, g)), n)
    dfb = resample_trace(d.boundary(dzbar(d, _nodal(d, f))), n)
    dgb = resample_trace(d.boundary(dz(d, _nodal(d, g))), n)

    def plus(trace):
        c = np.fft.fft(trace) / n
        k = np.fft.fftfreq(n, 1.0 / n)
        c[k < 0] = 0.0
        c[n // 2] = 0.0
        return np.fft.ifft(c) * n

    F0 = dfb.mean()
    H = -twopii * (F0 * np.conj(zeta) + plus(fb))   # I1 + I2 on the circle
    Kt = -twopii * plus(dfb)                          # I3 on the circle

    # phi_1: contour integrals against log(conj(z - zeta)) dzeta, dzeta = i zeta dtheta
    def B(G, p):
        # oint G zeta^p log(conj(z - zeta)) dzeta
        const = _boundary_moment(G * zeta ** p * np.conj(ell), 1j * zeta, n)
        modes = _trace_modes(G, n)
        series = _log_series(modes, -p - 1, -1, zb, n_terms, -twopii)
        return const + series

    part_h = z * B(H, 0) - B(H, 1)
    part_k = z * zb * B(Kt, 0) - z * B(Kt, -1) - zb * B(Kt, 1) + B(Kt, 0)
    phi1 = -(part_h + part_k) / twopii ** 2

    # phi_2: contour integrals against log(z - zeta) dzetabar, dzetabar = -i conj(zeta) dtheta
    def X(G, p):
        # oint G zeta^p log(z - zeta) dzetabar
        const = _boundary_moment(G * zeta ** p * ell, -1j * np.conj(zeta), n)
        modes = _trace_modes(G, n)
        series = _log_series(modes, 1 - p, 1, z, n_terms, twopii)
        return const + series

    part_dg = z * zb * X(dgb, 0) - z * X(dgb, -1) - zb * X(dgb, 1) + X(dgb, 0)
    part_g = zb * X(gb, 0) - X(gb, -1)
    phi2 = -(part_dg + part_g) / twopii
    return phi1 + phi2


def solve_bi_dbar2(d: Domain, f, g, route: str = "ansatz", operator_route: str = "polar",
                   density: QuadratureDensity | None = None,
                   compat_tol: float = 1e-6, normalize: bool = True) -> np.ndarray:
    """Solve d_z^2 w = f and d_zbar^2 w = g on the disk.

    Solutions are unique up to the common kernel span{1, z, zbar, |z|^2}.

    Parameters
    ----------
    f, g : array_like or callable
        Right-hand sides, linked by d_zbar^2 f = d_z^2 g.
    route : {"ansatz", "projection"}
        "ansatz" superposes the three solid second-order integrals with the
        two logarithmic boundary corrections.  "projection" solves the
        second equation with the solid operator and removes the remaining
        bi-analytic defect of the first equation by explicit Taylor
        integration.
    operator_route : {"polar", "modal"}
        Evaluation route of the solid operators.
    compat_tol : float
        Relative L2 threshold on the compatibility mismatch.
    normalize : bool
        Remove the L2 projection onto the common kernel.  The projection
        commutes with conjugation, so the normalized solution of (conj g,
        conj f) is the conjugate of the normalized solution of (f, g).

    Raises
    ------
    CompatibilityError
        If the compatibility condition fails beyond ``compat_tol``.
    """
    mismatch = check_bi_dbar2_compatibility(d, f, g)
    if mismatch > compat_tol:
        raise CompatibilityError(
            f"compatibility d_zbar^2 f = d_z^2 g violated (relative {mismatch:.2e})",
            residual=mismatch,
        )
    density = density or DEFAULT_DENSITY
    fv, gv = _nodal(d, f), _nodal(d, g)
    if not np.any(fv) and not np.any(gv):
        return np.zeros(d.size, dtype=complex)

    def K(h, kind):
        return solve_dbar(d, h, kind, 2, operator_route, density)

    if route == "ansatz":
        inner = K(dzbar(d, fv, 2), "zbar")
        w = K(gv, "zbar") + K(fv, "z") - K(inner, "z")
        w = w + _phi_corrections(d, fv, gv, density.n_boundary)
    elif route == "projection":
        w1 = K(gv, "zbar")
        h = fv - dz(d, w1, 2)
        b = dzbar(d, h)
        a = h - np.conj(d.z) * b
        w = w1 + _double_primitive(d, a) + np.conj(d.z) * _double_primitive(d, b)
    else:
        raise ConfigurationError(f"unknown route {route!r}")
    return remove_biaffine(d, w) if normalize else w


def remove_biaffine(d: Domain, w) -> np.ndarray:
    """Subtract the weighted L2 projection of ``w`` onto span{1, z, zbar, |z|^2}."""
    z = d.z
    basis = np.stack([np.ones_like(z), z, np.conj(z), np.abs(z) ** 2], axis=1)
    sw = np.sqrt(d.weights)[:, None]
    coef, *_ = np.linalg.lstsq(sw * basis, sw[:, 0] * np.asarray(w, dtype=complex), rcond=None)
    return w - basis @ coef


def _double_primitive(d: Domain, a) -> np.ndarray:
    """A with A'' = a for a holomorphic a, from its Taylor coefficients.

    The coefficients are read off the angular modes of the outermost ring
    with a nonnegative radius weighting, which is exact for polynomials.
    """
    m, coeffs = d.angular_modes(a)
    keep = m >= 0
    ring = d.n_r // 2
    taylor = coeffs[ring, keep] / d.r[ring] ** m[keep]
    n = m[keep]
    z = d.z
    out = np.zeros(d.size, dtype=complex)
    for k, c in zip(n, taylor):
        if k > d.n_theta // 2 - 3:
            continue
        out += c * z ** (k + 2) / ((k + 1) * (k + 2))
    return out
