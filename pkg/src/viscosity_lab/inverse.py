"""Synthetic Cauchy data, data gaps between viscosities, and a small
parametric reconstruction of the viscosity from boundary measurements.

Cauchy data are compared at matched Dirichlet inputs: both viscosities are
driven by the same finite family of boundary velocities and the resulting
tractions are compared.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .complex_calculus import resample_trace
from .errors import CompatibilityError, ConfigurationError, SolverError
from .first_order import alpha_beta, discrepancy_field
from .flow import (
    StokesCauchyDatum,
    StokesOperator,
    ViscosityField,
    solve_nse,
    solve_stokes,
    traction,
)
from .geometry import Domain, boundary_frame

SCHEMA_VERSION = 1
CSV_COLUMNS = ("datum", "node", "theta", "g1", "g2", "T1", "T2")


# -- inputs and datasets -------------------------------------------------------


def trig_inputs(d: Domain, count: int = 8) -> list[np.ndarray]:
    """First ``count`` trigonometric vector traces with the flux removed.

    Ordered by frequency k = 1, 2, ...: (cos k, 0), (sin k, 0), (0, cos k),
    (0, sin k), each minus its mean normal component times n.
    """
    n, _ = boundary_frame(d)
    out = []
    k = 1
    while len(out) < count:
        for comp in range(2):
            for fn in (np.cos, np.sin):
                g = np.zeros((2, d.n_theta))
                g[comp] = fn(k * d.theta)
                g -= np.mean(np.sum(g * n, axis=0)) * n
                out.append(g)
        k += 1
    return out[:count]


@dataclass
class CauchyDataset:
    """Boundary inputs with their measured tractions.

    ``data`` has one entry per input; failed solves are stored as None with
    the message in ``failures``.
    """

    n_r: int
    n_theta: int
    mu_tag: str
    equation: str
    noise: float
    data: list
    failures: dict = field(default_factory=dict)
    seed: int | None = None
    scale: float = 1.0

    @property
    def inputs(self) -> list:
        return [None if x is None else x.g for x in self.data]

    def manifest(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "resolution": [self.n_r, self.n_theta],
            "mu_tag": self.mu_tag,
            "equation": self.equation,
            "noise": self.noise,
            "seed": self.seed,
            "scale": self.scale,
            "n_data": len(self.data),
            "failures": {str(k): v for k, v in self.failures.items()},
        }


def synth_dataset(d: Domain, mu: ViscosityField, inputs: Sequence, equation: str = "stokes",
                  noise: float = 0.0, seed: int = 0, scale: float = 1.0,
                  operator: StokesOperator | None = None) -> CauchyDataset:
    """Solve for each boundary input and record (g, sigma n).

    Parameters
    ----------
    equation : {"stokes", "nse"}
    noise : float
        Relative level of additive Gaussian noise on each traction, scaled
        by the RMS of that traction.
    scale : float
        Multiplier on every input (the small parameter for Navier-Stokes
        data); the stored g includes it.
    """
    if equation not in ("stokes", "nse"):
        raise ConfigurationError(f"equation must be 'stokes' or 'nse', got {equation!r}")
    if noise < 0:
        raise ConfigurationError("noise level must be nonnegative")
    rng = np.random.default_rng(seed)
    op = operator or StokesOperator(d, mu)
    data, failures = [], {}
    for i, g in enumerate(inputs):
        g = scale * np.asarray(g, dtype=float)
        try:
            if equation == "stokes":
                state = solve_stokes(d, mu, g, operator=op)
            else:
                state = solve_nse(d, mu, g, operator=op)
        except (SolverError, CompatibilityError) as exc:
            data.append(None)
            failures[i] = str(exc)
            continue
        T = traction(d, state, mu)
        if noise > 0:
            rms = np.sqrt(np.mean(T ** 2))
            T = T + noise * rms * rng.standard_normal(T.shape)
        data.append(StokesCauchyDatum(g, T))
    return CauchyDataset(d.n_r, d.n_theta, mu.tag, equation, noise, data, failures, seed, scale)


def cauchy_gap(a: CauchyDataset, b: CauchyDataset, input_tol: float = 1e-10) -> float:
    """Max over inputs of |T_a - T_b| / max(|T_a|, |T_b|) in boundary L2.

    Datasets on different angular grids are compared after band-limited
    resampling of ``b`` to the nodes of ``a``.

    Raises
    ------
    ConfigurationError
        If the inputs differ or a datum is missing.
    """
    if len(a.data) != len(b.data):
        raise ConfigurationError("datasets have different numbers of inputs")
    worst = 0.0
    for da, db in zip(a.data, b.data):
        if da is None or db is None:
            raise ConfigurationError("cannot compare datasets with failed solves")
        gb = resample_trace(db.g, a.n_theta).real
        Tb = resample_trace(db.traction, a.n_theta).real
        if np.max(np.abs(da.g - gb)) > input_tol * max(np.max(np.abs(da.g)), 1.0):
            raise ConfigurationError("datasets were generated from different inputs")
        na, nb = np.linalg.norm(da.traction), np.linalg.norm(Tb)
        denom = max(na, nb)
        if denom > 0:
            worst = max(worst, float(np.linalg.norm(da.traction - Tb) / denom))
    return worst


def save_dataset(ds: CauchyDataset, directory, stem: str = "dataset") -> tuple[Path, Path]:
    """Write ``stem.csv`` (one row per datum and node) and ``stem.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    theta = 2.0 * np.pi * np.arange(ds.n_theta) / ds.n_theta
    csv_path, json_path = directory / f"{stem}.csv", directory / f"{stem}.json"
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for i, datum in enumerate(ds.data):
            if datum is None:
                continue
            for k in range(ds.n_theta):
                vals = (theta[k], datum.g[0, k], datum.g[1, k], datum.traction[0, k],
                        datum.traction[1, k])
                w.writerow([i, k, *(repr(float(v)) for v in vals)])
    json_path.write_text(json.dumps(ds.manifest(), indent=2, sort_keys=True) + "\n")
    return csv_path, json_path


def load_dataset(directory, stem: str = "dataset") -> CauchyDataset:
    directory = Path(directory)
    meta = json.loads((directory / f"{stem}.json").read_text())
    if meta.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported dataset schema {meta.get('schema_version')}")
    n_r, n_theta = meta["resolution"]
    data = [None] * meta["n_data"]
    rows = np.loadtxt(directory / f"{stem}.csv", delimiter=",", skiprows=1, ndmin=2)
    for i in np.unique(rows[:, 0]).astype(int):
        block = rows[rows[:, 0] == i]
        block = block[np.argsort(block[:, 1])]
        data[i] = StokesCauchyDatum(block[:, 3:5].T.copy(), block[:, 5:7].T.copy())
    failures = {int(k): v for k, v in meta.get("failures", {}).items()}
    return CauchyDataset(n_r, n_theta, meta["mu_tag"], meta["equation"], meta["noise"], data,
                         failures, meta.get("seed"), meta.get("scale", 1.0))


# -- parametrized viscosities and reconstruction -------------------------------


def _bubble(x, y):
    return (1.0 - x * x - y * y) ** 2


DEFAULT_BASIS = (
    _bubble,
    lambda x, y: _bubble(x, y) * (x * x + y * y),
    lambda x, y: _bubble(x, y) * x,
    lambda x, y: _bubble(x, y) * y,
)


@dataclass
class Parametrization:
    """mu = base + sum_j theta_j b_j with every b_j vanishing to first order on the circle."""

    basis: tuple = DEFAULT_BASIS[:1]
    base: float = 1.0

    @property
    def size(self) -> int:
        return len(self.basis)

    def field(self, d: Domain, theta) -> ViscosityField:
        theta = np.asarray(theta, dtype=float)
        basis = self.basis

        def func(x, y):
            return self.base + sum(t * b(x, y) for t, b in zip(theta, basis))

        return ViscosityField.from_function(d, func, "param:" + ",".join(f"{t:.6g}" for t in theta))


@dataclass
class ReconstructionResult:
    """Estimate, accepted objective values, final misfit and viscosity."""

    theta: np.ndarray
    history: list
    misfit: float
    mu: ViscosityField
    converged: bool
    iterations: int
    reg_weight: float = 0.0


def _misfit(d: Domain, data: CauchyDataset, mu: ViscosityField) -> float:
    op = StokesOperator(d, mu)
    total = 0.0
    for datum in data.data:
        if datum is None:
            continue
        if data.equation == "stokes":
            state = solve_stokes(d, mu, datum.g, operator=op)
        else:
            state = solve_nse(d, mu, datum.g, operator=op)
        total += d.boundary_l2(traction(d, state, mu) - datum.traction) ** 2
    return total


def reconstruct_mu(d: Domain, data: CauchyDataset, param: Parametrization | None = None,
                   reg_weight: float = 0.0, theta0=None, max_iter: int = 30, gtol: float = 1e-9,
                   fd_step: float = 1e-4) -> ReconstructionResult:
    """Minimize sum |T(theta) - T_obs|^2 + reg_weight |theta|^2 by BFGS.

    Gradients are central finite differences.  Trial points with a
    nonpositive viscosity are treated as infinite objective, so the
    backtracking line search shrinks the step back into the admissible set.
    The accepted objective values in ``history`` are nonincreasing.
    """
    param = param or Parametrization()
    theta = np.zeros(param.size) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    cache: dict = {}

    def objective(th) -> float:
        key = tuple(np.round(th, 15))
        if key not in cache:
            try:
                mu = param.field(d, th)
            except ConfigurationError:
                cache[key] = np.inf
            else:
                cache[key] = _misfit(d, data, mu) + reg_weight * float(th @ th)
        return cache[key]

    def gradient(th) -> np.ndarray:
        g = np.empty_like(th)
        for j in range(th.size):
            e = np.zeros_like(th)
            e[j] = fd_step * max(1.0, abs(th[j]))
            g[j] = (objective(th + e) - objective(th - e)) / (2.0 * e[j])
        return g

    f = objective(theta)
    if not np.isfinite(f):
        raise ConfigurationError("initial parameters give a nonpositive viscosity")
    history = [f]
    H = np.eye(theta.size)
    g = gradient(theta)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if np.linalg.norm(g) <= gtol * max(1.0, history[0]):
            converged = True
            break
        p = -H @ g
        if p @ g >= 0:  # lost descent; restart from steepest descent
            H = np.eye(theta.size)
            p = -g
        step = 1.0
        while step > 1e-10:
            trial = theta + step * p
            ft = objective(trial)
            if ft <= f + 1e-4 * step * (p @ g):
                break
            step *= 0.5
        else:
            converged = True  # no further decrease is representable
            break
        s = trial - theta
        g_new = gradient(trial)
        yv = g_new - g
        if yv @ s > 1e-300:
            rho = 1.0 / (yv @ s)
            V = np.eye(theta.size) - rho * np.outer(s, yv)
            H = V @ H @ V.T + rho * np.outer(s, s)
        theta, f, g = trial, ft, g_new
        history.append(f)
        if np.linalg.norm(s) <= 1e-10 * max(1.0, np.linalg.norm(theta)):
            converged = True
            break
    mu = param.field(d, theta)
    misfit = f - reg_weight * float(theta @ theta)
    return ReconstructionResult(theta, history, misfit, mu, converged, it, reg_weight)


def l_curve(d: Domain, data: CauchyDataset, param: Parametrization | None = None,
            weights: Sequence[float] = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3),
            **kwargs) -> tuple[list[ReconstructionResult], int]:
    """Reconstructions over a sweep of weights and the index of the L-curve corner.

    The corner maximizes the Menger curvature of (log misfit, log |theta|)
    through consecutive triples; with fewer than three usable points the
    smallest weight is chosen.
    """
    weights = sorted(float(w) for w in weights)
    results = [reconstruct_mu(d, data, param, w, **kwargs) for w in weights]
    pts = np.array([[np.log(max(r.misfit, 1e-300)), np.log(max(np.linalg.norm(r.theta), 1e-300))]
                    for r in results])
    best, best_k = 0, -np.inf
    for i in range(1, len(results) - 1):
        a, b, c = pts[i - 1], pts[i], pts[i + 1]
        area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
        sides = np.linalg.norm(b - a) * np.linalg.norm(c - b) * np.linalg.norm(c - a)
        k = 2.0 * abs(area) / sides if sides > 0 else 0.0
        if k > best_k:
            best, best_k = i, k
    return results, best


# -- identifiability probe -----------------------------------------------------


@dataclass
class ProbeReport:
    gap_stokes: float
    gap_nse: float | None
    discrepancy: float
    mu_difference: float
    jet_mismatch: float


def boundary_jet_mismatch(mu1: ViscosityField, mu2: ViscosityField) -> float:
    m1, g1 = mu1.boundary_jet()
    m2, g2 = mu2.boundary_jet()
    return float(max(np.max(np.abs(m1 - m2)), np.max(np.abs(g1 - g2))))


def uniqueness_probe(d: Domain, mu1: ViscosityField, mu2: ViscosityField, inputs=None,
                     nse_scale: float | None = None, jet_tol: float = 1e-8) -> ProbeReport:
    """Cauchy gap, potential discrepancy and interior difference of two viscosities.

    The discrepancy is max |alpha_1^2 - alpha_2^2| / 2, the quantity that
    must vanish when the data agree.

    Raises
    ------
    CompatibilityError
        If the boundary values or gradients of the two viscosities differ
        by more than ``jet_tol``.
    """
    mismatch = boundary_jet_mismatch(mu1, mu2)
    if mismatch > jet_tol:
        raise CompatibilityError(f"boundary jets differ by {mismatch:.2e}", residual=mismatch)
    inputs = trig_inputs(d) if inputs is None else inputs
    gap = cauchy_gap(synth_dataset(d, mu1, inputs), synth_dataset(d, mu2, inputs))
    gap_nse = None
    if nse_scale is not None:
        gap_nse = cauchy_gap(synth_dataset(d, mu1, inputs, "nse", scale=nse_scale),
                             synth_dataset(d, mu2, inputs, "nse", scale=nse_scale))
    disc = discrepancy_field(d, alpha_beta(mu1), alpha_beta(mu2))
    return ProbeReport(gap, gap_nse, float(np.max(np.abs(disc))),
                       float(np.max(np.abs(mu1.values - mu2.values))), mismatch)

