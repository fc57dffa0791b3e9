"""Polar spectral grid on the unit disk and boundary-trace calculus.

The disk is discretized by a Fourier (angular) x Chebyshev (radial) tensor
grid.  Radial nodes are the positive half of a Chebyshev-Lobatto grid with an
odd number of intervals on [-1, 1], so r = 0 is never a node and the boundary
circle is the ring r = 1.  A function on the disk extends to the full
diameter through f(-r, theta) = f(r, theta + pi), which is what makes the
radial differentiation matrix spectrally accurate at the pole.

Fields are plain numpy arrays whose last axis runs over the grid nodes in
radial-major order (node = i * n_theta + k, ring i = 0 is the boundary).
Boundary traces are arrays whose last axis runs over the n_theta boundary
nodes; on the unit circle the arclength coordinate coincides with theta.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
from numpy.polynomial import chebyshev as cheb_poly

from .errors import ConfigurationError, MultivaluednessError


def cheb(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Chebyshev-Lobatto differentiation matrix and nodes (n + 1 points)."""
    j = np.arange(n + 1)
    x = np.sin(np.pi * (n - 2 * j) / (2 * n))
    c = np.where((j == 0) | (j == n), 2.0, 1.0) * (-1.0) ** j
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return D, x


def fourier_diff(n: int) -> np.ndarray:
    """Periodic spectral differentiation matrix on n equispaced points (n even)."""
    h = 2.0 * np.pi / n
    k = np.arange(n)
    col = np.zeros(n)
    col[1:] = 0.5 * (-1.0) ** k[1:] / np.tan(k[1:] * h / 2.0)
    return col[(k[:, None] - k[None, :]) % n]


def barycentric_matrix(x_nodes: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Interpolation matrix from Chebyshev-Lobatto nodes to arbitrary targets."""
    n = x_nodes.size - 1
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    diff = targets[:, None] - x_nodes[None, :]
    exact = np.isclose(diff, 0.0, rtol=0.0, atol=1e-15)
    diff[exact] = 1.0
    B = w / diff
    B /= B.sum(axis=1, keepdims=True)
    hit_rows = exact.any(axis=1)
    if hit_rows.any():
        B[hit_rows] = exact[hit_rows].astype(float)
    return B


class FrameTrace(NamedTuple):
    normal: np.ndarray
    tangent: np.ndarray


@dataclass(frozen=True, eq=False)
class Domain:
    """Tensor polar grid on the unit disk with cached spectral operators."""

    n_r: int
    n_theta: int

    def __post_init__(self):
        if int(self.n_r) != self.n_r or self.n_r < 4:
            raise ConfigurationError(f"radial node count must be >= 4, got {self.n_r}")
        if int(self.n_theta) != self.n_theta or self.n_theta < 8 or self.n_theta % 2:
            raise ConfigurationError(
                f"angular node count must be even and >= 8, got {self.n_theta}"
            )

    # -- nodes ---------------------------------------------------------------

    @property
    def n_cheb(self) -> int:
        return 2 * self.n_r - 1

    @property
    def size(self) -> int:
        return self.n_r * self.n_theta

    @cached_property
    def _cheb(self):
        return cheb(self.n_cheb)

    @cached_property
    def r(self) -> np.ndarray:
        return self._cheb[1][: self.n_r].copy()

    @cached_property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    @cached_property
    def rr(self) -> np.ndarray:
        return np.repeat(self.r, self.n_theta)

    @cached_property
    def tt(self) -> np.ndarray:
        return np.tile(self.theta, self.n_r)

    @cached_property
    def x(self) -> np.ndarray:
        return self.rr * np.cos(self.tt)

    @cached_property
    def y(self) -> np.ndarray:
        return self.rr * np.sin(self.tt)

    @property
    def z(self) -> np.ndarray:
        return self.x + 1j * self.y

    @property
    def boundary_slice(self) -> slice:
        return slice(0, self.n_theta)

    @property
    def interior_mask(self) -> np.ndarray:
        return self.rr < 1.0

    def boundary(self, values):
        """Restrict a field to the boundary ring."""
        return np.asarray(values)[..., : self.n_theta]

    def sample(self, func):
        """Evaluate ``func(x, y)`` at every grid node."""
        return np.asarray(func(self.x, self.y))

    def sample_boundary(self, func):
        return np.asarray(func(np.cos(self.theta), np.sin(self.theta)))

    # -- quadrature ----------------------------------------------------------

    @cached_property
    def radial_weights(self) -> np.ndarray:
        # Weights for int_0^1 F(r) r dr with F even; exact when F(|x|) x is a
        # polynomial of degree <= n_cheb on [-1, 1].
        N = self.n_cheb
        xfull = self._cheb[1]
        V = cheb_poly.chebvander(xfull, N)
        moments = np.empty(N + 1)
        for n in range(N + 1):
            coef = np.zeros(N + 1)
            coef[n] = 1.0
            antider = cheb_poly.chebint(coef)
            moments[n] = cheb_poly.chebval(1.0, antider) - cheb_poly.chebval(0.0, antider)
        W = np.linalg.solve(V.T, moments)
        i = np.arange(self.n_r)
        return self.r * (W[i] - W[N - i])

    @cached_property
    def weights(self) -> np.ndarray:
        return np.repeat(self.radial_weights, self.n_theta) * (2.0 * np.pi / self.n_theta)

    def integrate(self, values):
        """Area integral over the disk."""
        return np.asarray(values) @ self.weights

    def l2_norm(self, values) -> float:
        v = np.asarray(values)
        return float(np.sqrt(np.sum(self.integrate(np.abs(v) ** 2))))

    def boundary_integral(self, trace):
        """Line integral over the unit circle, d s = d theta."""
        return np.asarray(trace).sum(axis=-1) * (2.0 * np.pi / self.n_theta)

    def boundary_l2(self, trace) -> float:
        t = np.asarray(trace)
        return float(np.sqrt(np.sum(self.boundary_integral(np.abs(t) ** 2))))

    # -- differentiation -----------------------------------------------------

    @cached_property
    def _shift_pi(self) -> np.ndarray:
        n = self.n_theta
        S = np.zeros((n, n))
        S[np.arange(n), (np.arange(n) + n // 2) % n] = 1.0
        return S

    @cached_property
    def D_r(self) -> np.ndarray:
        D = self._cheb[0]
        N, nr = self.n_cheb, self.n_r
        D1 = D[:nr, :nr]
        # columns of the negative-r nodes, ordered so that -r_j pairs with r_j
        E1 = D[:nr, N - np.arange(nr)]
        I = np.eye(self.n_theta)
        return np.kron(D1, I) + np.kron(E1, self._shift_pi)

    @cached_property
    def D_theta(self) -> np.ndarray:
        return np.kron(np.eye(self.n_r), fourier_diff(self.n_theta))

    @cached_property
    def Dx(self) -> np.ndarray:
        c, s = np.cos(self.tt), np.sin(self.tt)
        return c[:, None] * self.D_r - (s / self.rr)[:, None] * self.D_theta

    @cached_property
    def Dy(self) -> np.ndarray:
        c, s = np.cos(self.tt), np.sin(self.tt)
        return s[:, None] * self.D_r + (c / self.rr)[:, None] * self.D_theta

    @cached_property
    def Dxx(self) -> np.ndarray:
        return self.Dx @ self.Dx

    @cached_property
    def Dyy(self) -> np.ndarray:
        return self.Dy @ self.Dy

    @cached_property
    def Dxy(self) -> np.ndarray:
        return self.Dx @ self.Dy

    @property
    def Dz(self) -> np.ndarray:
        return 0.5 * (self.Dx - 1j * self.Dy)

    @property
    def Dzbar(self) -> np.ndarray:
        return 0.5 * (self.Dx + 1j * self.Dy)

    def dx(self, values):
        return np.asarray(values) @ self.Dx.T

    def dy(self, values):
        return np.asarray(values) @ self.Dy.T

    def laplacian(self, values):
        return np.asarray(values) @ (self.Dxx + self.Dyy).T

    def gradient(self, values):
        return np.stack([self.dx(values), self.dy(values)])

    def normal_derivative(self, values):
        """Outward normal derivative on the boundary ring (n = (cos, sin))."""
        v = np.asarray(values)
        return v @ self.D_r[: self.n_theta].T

    @cached_property
    def extended(self) -> "ExtendedOperators":
        """Matrix-free derivatives in long double for residual refinement."""
        return ExtendedOperators(self)

    # -- path integration ----------------------------------------------------

    @cached_property
    def _diameter_integrators(self) -> tuple[np.ndarray, np.ndarray]:
        # cumulative integrals from x = 1 and from x = -1 on the full
        # Chebyshev diameter grid, exact for polynomials of degree n_cheb
        N = self.n_cheb
        xfull = self._cheb[1]
        coef = np.linalg.inv(cheb_poly.chebvander(xfull, N))
        Vint = cheb_poly.chebvander(xfull, N + 1)
        right = Vint @ cheb_poly.chebint(coef, lbnd=1.0, axis=0)
        left = Vint @ cheb_poly.chebint(coef, lbnd=-1.0, axis=0)
        return right, left

    @cached_property
    def _poisson_blocks(self) -> list:
        # LU-free inverses of the radial Laplacian per angular mode |m|, with
        # the boundary row replaced by a Dirichlet condition
        D = self._cheb[0]
        D2 = D @ D
        N, nr = self.n_cheb, self.n_r
        neg = N - np.arange(nr)
        r = self.r
        blocks = []
        for m in range(self.n_theta // 2 + 1):
            par = (-1.0) ** m
            Dm = D[:nr, :nr] + par * D[:nr, neg]
            L = D2[:nr, :nr] + par * D2[:nr, neg] + Dm / r[:, None] - np.diag(m * m / r ** 2)
            L[0] = 0.0
            L[0, 0] = 1.0
            blocks.append(np.linalg.inv(L))
        return blocks

    def poisson_dirichlet(self, rhs, boundary_values) -> np.ndarray:
        """Solve lap f = rhs with f = boundary_values on the circle, mode by mode."""
        nr, nt = self.n_r, self.n_theta
        R = np.fft.fft(np.asarray(rhs).reshape(nr, nt), axis=1)
        R[0] = np.fft.fft(np.asarray(boundary_values))
        k = np.abs(np.fft.fftfreq(nt, 1.0 / nt)).astype(int)
        blocks = self._poisson_blocks
        out = np.empty_like(R)
        for j in range(nt):
            out[:, j] = blocks[k[j]] @ R[:, j]
        f = np.fft.ifft(out, axis=1).ravel()
        real = not (np.iscomplexobj(rhs) or np.iscomplexobj(boundary_values))
        return f.real if real else f

    def potential_from_gradient(self, grad, anchor_value: float = 0.0,
                                tol: float = np.inf, method: str = "path") -> np.ndarray:
        """Scalar potential of a gradient field.

        Boundary values come from the arclength integral of the tangential
        component, anchored at node 0.  With ``method="path"`` every
        interior node is reached along the straight ray from the boundary
        point with the same polar angle, so a field with curl produces a
        path-dependent result rather than an error; check the curl
        separately when that matters.  ``method="poisson"`` instead solves
        lap f = div grad with those boundary values, which returns the
        gradient part of the field and avoids the ray-to-ray roundoff
        jitter that repeated integration accumulates.
        """
        F = np.asarray(grad)
        nr, nt, N = self.n_r, self.n_theta, self.n_cheb
        c, s = np.cos(self.theta), np.sin(self.theta)
        ft = -s * self.boundary(F[0]) + c * self.boundary(F[1])
        ft = ft - ft.mean() if np.isinf(tol) else ft
        pb = integrate_trace(self, ft, 0, anchor_value, tol=tol)
        if method == "poisson":
            return self.poisson_dirichlet(self.dx(F[0]) + self.dy(F[1]), pb)
        if method != "path":
            raise ConfigurationError(f"unknown integration method {method!r}")
        # radial component along each diameter, oriented by the positive ray
        half = nt // 2
        G = (F[0] * np.cos(self.tt) + F[1] * np.sin(self.tt)).reshape(nr, nt)
        line = np.empty((N + 1, half), dtype=G.dtype)
        line[:nr] = G[:, :half]
        line[N - np.arange(nr)] = -G[:, half:]
        right, left = self._diameter_integrators
        out = np.empty((nr, nt), dtype=np.result_type(G, pb))
        out[:, :half] = pb[:half] + (right @ line)[:nr]
        out[:, half:] = pb[half:] + (left @ line)[N - np.arange(nr)]
        return out.ravel()

    # -- interpolation -------------------------------------------------------

    def angular_modes(self, values) -> tuple[np.ndarray, np.ndarray]:
        """Fourier coefficients per ring, modes -M..M with the Nyquist term split.

        Returns ``(m, coeffs)`` with ``coeffs`` of shape (n_r, 2M + 1) such that
        ``f(r_i, theta) = sum_m coeffs[i, m] * exp(1j * m * theta)``.
        """
        n, M = self.n_theta, self.n_theta // 2
        grid = np.asarray(values).reshape(self.n_r, n)
        c = np.fft.fft(grid, axis=1) / n
        m = np.arange(-M, M + 1)
        out = np.empty((self.n_r, 2 * M + 1), dtype=complex)
        out[:, M:2 * M] = c[:, :M]
        out[:, :M] = c[:, M:]
        out[:, 0] *= 0.5
        out[:, 2 * M] = out[:, 0]
        return m, out

    def full_line(self, profiles: np.ndarray, m: np.ndarray) -> np.ndarray:
        """Extend per-mode radial profiles to the whole Chebyshev diameter grid."""
        N, nr = self.n_cheb, self.n_r
        full = np.empty((N + 1,) + profiles.shape[1:], dtype=profiles.dtype)
        full[:nr] = profiles
        parity = (-1.0) ** np.abs(m)
        full[N - np.arange(nr)] = profiles * parity
        return full

    def radial_interpolator(self, targets: np.ndarray) -> np.ndarray:
        return barycentric_matrix(self._cheb[1], np.asarray(targets, dtype=float))

    def interpolate(self, values, xq, yq, chunk: int = 4096):
        """Evaluate the spectral interpolant of a grid field at arbitrary points."""
        xq = np.asarray(xq, dtype=float)
        yq = np.asarray(yq, dtype=float)
        shape = xq.shape
        xq, yq = xq.ravel(), yq.ravel()
        m, coeffs = self.angular_modes(values)
        full = self.full_line(coeffs, m)
        out = np.empty(xq.size, dtype=complex)
        for start in range(0, xq.size, chunk):
            sl = slice(start, start + chunk)
            rq = np.hypot(xq[sl], yq[sl])
            tq = np.arctan2(yq[sl], xq[sl])
            P = self.radial_interpolator(rq) @ full
            out[sl] = np.sum(P * np.exp(1j * np.outer(tq, m)), axis=1)
        if not np.iscomplexobj(values):
            out = out.real
        return out.reshape(shape)


class ExtendedOperators:
    """Long-double versions of the radial, angular and Cartesian derivatives.

    They are applied matrix-free in their Kronecker structure, which is
    cheap enough to evaluate fourth-order residuals of candidate solutions
    in extended precision.  On platforms where long double is the same as
    double the results simply carry double precision.
    """

    def __init__(self, d: Domain):
        LD = np.longdouble
        pi = LD("3.14159265358979323846264338327950288")
        n = d.n_cheb
        j = np.arange(n + 1).astype(LD)
        x = np.sin(pi * (n - 2 * j) / (2 * n))
        c = np.where((j == 0) | (j == n), LD(2), LD(1)) * LD(-1) ** j
        D = np.outer(c, 1 / c) / (x[:, None] - x[None, :] + np.eye(n + 1, dtype=LD))
        D -= np.diag(D.sum(axis=1))
        nr, nt = d.n_r, d.n_theta
        self.n_r, self.n_theta = nr, nt
        self.D1 = D[:nr, :nr]
        self.E1 = D[:nr, n - np.arange(nr)]
        self.r = x[:nr]
        k = np.arange(nt)
        col = np.zeros(nt, dtype=LD)
        col[1:] = LD(0.5) * LD(-1) ** k[1:] / np.tan(k[1:].astype(LD) * pi / nt)
        self.F = col[(k[:, None] - k[None, :]) % nt]
        th = 2 * pi * k.astype(LD) / nt
        self.cos, self.sin = np.cos(th), np.sin(th)
        self.x = (self.r[:, None] * self.cos).ravel()
        self.y = (self.r[:, None] * self.sin).ravel()

    def _grid(self, v):
        v = np.asarray(v)
        return v.reshape(v.shape[:-1] + (self.n_r, self.n_theta))

    def d_r(self, v):
        X = self._grid(v)
        out = self.D1 @ X + self.E1 @ np.roll(X, -(self.n_theta // 2), axis=-1)
        return out.reshape(np.shape(v))

    def d_theta(self, v):
        return (self._grid(v) @ self.F.T).reshape(np.shape(v))

    def dx(self, v):
        R, T = self._grid(self.d_r(v)), self._grid(self.d_theta(v))
        out = self.cos * R - (self.sin * T) / self.r[:, None]
        return out.reshape(np.shape(v))

    def dy(self, v):
        R, T = self._grid(self.d_r(v)), self._grid(self.d_theta(v))
        out = self.sin * R + (self.cos * T) / self.r[:, None]
        return out.reshape(np.shape(v))


def build_disk_domain(n_r: int, n_theta: int) -> Domain:
    """Unit-disk domain with ``n_r`` radial rings and ``n_theta`` angular nodes."""
    return Domain(n_r, n_theta)


def boundary_frame(d: Domain) -> FrameTrace:
    """Outward normal and positively oriented tangent, t = R_perp^T n."""
    c, s = np.cos(d.theta), np.sin(d.theta)
    n = np.stack([c, s])
    t = np.stack([-n[1], n[0]])
    return FrameTrace(n, t)


_MAX_ORDER = 4


def differentiate(d: Domain, values, multi_index: tuple[int, int]):
    """Apply d^a/dx^a d^b/dy^b to a field (total order at most four).

    Orders of two and more are evaluated in long double, which keeps the
    roundoff amplification of repeated collocation differentiation about
    one decade lower than in double precision.
    """
    a, b = multi_index
    if a < 0 or b < 0:
        raise ConfigurationError(f"negative derivative order {multi_index}")
    if a + b > _MAX_ORDER:
        raise ConfigurationError(f"derivative order {a + b} > {_MAX_ORDER} is unsupported")
    out = np.asarray(values)
    if a + b < 2:
        return d.dx(out) if a else d.dy(out) if b else out
    dtype = out.dtype if np.iscomplexobj(out) else np.float64
    ops = d.extended
    work = out.astype(np.clongdouble if np.iscomplexobj(out) else np.longdouble)
    for _ in range(a):
        work = ops.dx(work)
    for _ in range(b):
        work = ops.dy(work)
    return work.astype(dtype)


def tangential_derivative(d: Domain, trace):
    """Derivative along the boundary with respect to arclength."""
    t = np.asarray(trace)
    n = t.shape[-1]
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0.0
    out = np.fft.ifft(1j * k * np.fft.fft(t, axis=-1), axis=-1)
    return out if np.iscomplexobj(t) else out.real


def integrate_trace(d: Domain, trace, anchor: int = 0, anchor_value=0.0, tol: float = 1e-8):
    """Arclength antiderivative of a boundary trace pinned at ``anchor``.

    The total boundary integral must vanish (relative to the trace size)
    for the antiderivative to be single valued; otherwise a
    MultivaluednessError carrying the circulation is raised.
    """
    t = np.asarray(trace)
    n = t.shape[-1]
    coef = np.fft.fft(t, axis=-1)
    circulation = coef[..., 0] * (2.0 * np.pi / n)
    scale = 2.0 * np.pi * np.max(np.abs(t)) if t.size else 0.0
    if np.any(np.abs(circulation) > tol * max(scale, 1e-300)):
        raise MultivaluednessError(
            f"trace has nonzero circulation {np.max(np.abs(circulation)):.3e}",
            circulation=circulation,
        )
    k = np.fft.fftfreq(n, 1.0 / n)
    k[n // 2] = 0.0
    safe = np.where(k == 0, 1.0, k)
    icoef = np.where(k == 0, 0.0, coef / (1j * safe))
    out = np.fft.ifft(icoef, axis=-1)
    if not np.iscomplexobj(t) and not np.iscomplexobj(anchor_value):
        out = out.real
    return out - out[..., anchor : anchor + 1] + np.asarray(anchor_value)[..., None]
