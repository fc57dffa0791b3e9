"""Experiment configurations, runners and report bundles.

Every runner takes an :class:`ExperimentConfig` and returns a
:class:`ReportBundle` whose indicators carry a value, a threshold and a
pass flag.  Runners are deterministic given the configuration and seed.
"""

from __future__ import annotations

import configparser
import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .complex_calculus import (
    DEFAULT_DENSITY,
    QuadratureDensity,
    bi_dbar2_residuals,
    dzbar,
    relative_residual,
    solve_bi_dbar2,
    solve_dbar,
)
from .equivalence import (
    BoundaryJet,
    local_matrices,
    moment_twist,
    plate_to_stokes,
    recover_boundary_jets,
    remove_rigid_motion,
    stokes_to_plate,
)
from .errors import CompatibilityError, ConfigurationError
from .first_order import (
    alpha_beta,
    assemble_V,
    check_ab_identity,
    discrepancy_field,
    dv_residual,
    lift_to_U,
)
from .flow import (
    VISCOSITY_FAMILIES,
    ViscosityField,
    linearization_experiment,
    solve_stokes,
    traction,
)
from .geometry import Domain, boundary_frame
from .inverse import (
    Parametrization,
    cauchy_gap,
    l_curve,
    reconstruct_mu,
    synth_dataset,
    trig_inputs,
    uniqueness_probe,
)
from .plate import nondiv_residual, plate_datum, plate_neumann, solve_plate

SUMMARY_SCHEMA = 1
KINDS = (
    "forward-stokes",
    "forward-plate",
    "equivalence-roundtrip",
    "first-order-residual",
    "nse-scaling",
    "uniqueness-probe",
    "reconstruct",
)
MAX_RESOLUTION = (48, 192)


# -- configuration -------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """Parsed experiment configuration.

    ``viscosity`` holds ``family`` and its numeric parameters;
    ``inputs``, ``tolerances`` and ``options`` are free-form key/value
    sections interpreted by the runner for ``kind``.
    """

    kind: str
    resolution: tuple = (16, 64)
    viscosity: dict = field(default_factory=lambda: {"family": "constant"})
    inputs: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    seed: int = 0
    out: str = "results"
    name: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"experiment.kind: unknown kind {self.kind!r}")
        nr, nt = (int(v) for v in self.resolution)
        if not (4 <= nr <= MAX_RESOLUTION[0] and 8 <= nt <= MAX_RESOLUTION[1]):
            raise ConfigurationError(f"domain.resolution: ({nr}, {nt}) outside supported bounds")
        if nt % 2:
            raise ConfigurationError("domain.resolution: n_theta must be even")
        self.resolution = (nr, nt)
        family = self.viscosity.get("family", "constant")
        if family not in VISCOSITY_FAMILIES:
            raise ConfigurationError(f"viscosity.family: unknown family {family!r}")
        self.viscosity_field(Domain(8, 16))  # positivity on a sample grid

    def domain(self, resolution=None) -> Domain:
        return Domain(*(resolution or self.resolution))

    def viscosity_field(self, d: Domain, spec: dict | None = None) -> ViscosityField:
        spec = dict(spec or self.viscosity)
        family = spec.pop("family", "constant")
        try:
            return ViscosityField.family(d, family, **{k: float(v) for k, v in spec.items()})
        except ValueError as exc:
            raise ConfigurationError(f"viscosity: {exc}") from exc

    def tol(self, key: str, default: float) -> float:
        return float(self.tolerances.get(key, default))

    def opt(self, key: str, default, cast: Callable = str):
        value = self.options.get(key, self.inputs.get(key))
        return default if value is None else cast(value)

    def to_dict(self) -> dict:
        return asdict(self)


def _float_list(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).replace(";", ",").split(",") if v.strip()]


def _int_list(text) -> list[int]:
    return [int(v) for v in _float_list(text)]


def _str_list(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return list(text)
    return [v.strip() for v in str(text).split(",") if v.strip()]


def load_config(path) -> ExperimentConfig:
    """Read an INI experiment file.

    Sections: ``[experiment]`` (kind, seed, name), ``[domain]``
    (resolution = NR, NT), ``[viscosity]`` (family plus parameters),
    ``[inputs]``, ``[tolerances]``, ``[options]`` and ``[output]`` (dir).
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if not parser.read(path):
        raise ConfigurationError(f"cannot read configuration {path}")
    if not parser.has_section("experiment") or "kind" not in parser["experiment"]:
        raise ConfigurationError("experiment.kind: missing")
    known = {"experiment", "domain", "viscosity", "inputs", "tolerances", "options", "output"}
    for section in parser.sections():
        if section not in known:
            raise ConfigurationError(f"{section}: unknown section")
    exp = parser["experiment"]
    section = (lambda s: dict(parser[s]) if parser.has_section(s) else {})
    try:
        resolution = tuple(_int_list(section("domain").get("resolution", "16, 64")))
        seed = int(exp.get("seed", "0"))
    except ValueError as exc:
        raise ConfigurationError(f"domain.resolution or experiment.seed: {exc}") from exc
    if len(resolution) != 2:
        raise ConfigurationError("domain.resolution: expected NR, NT")
    return ExperimentConfig(
        kind=exp["kind"].strip(),
        resolution=resolution,
        viscosity=section("viscosity") or {"family": "constant"},
        inputs=section("inputs"),
        tolerances=section("tolerances"),
        options=section("options"),
        seed=seed,
        out=section("output").get("dir", "results"),
        name=exp.get("name", Path(path).stem),
    )


# -- reports -------------------------------------------------------------------


@dataclass
class Indicator:
    """Scalar outcome compared against a threshold.

    ``relation`` is one of "<", "<=", ">", ">=", "within" (threshold is a
    (low, high) pair) or "is" (value must equal the threshold).
    """

    name: str
    value: object
    threshold: object
    relation: str
    criterion: int | None = None
    timing: bool = False

    @property
    def passed(self) -> bool:
        v, t = self.value, self.threshold
        if self.relation == "is":
            return v == t
        if v is None or (isinstance(v, float) and not np.isfinite(v)):
            return False
        if self.relation == "<":
            return v < t
        if self.relation == "<=":
            return v <= t
        if self.relation == ">":
            return v > t
        if self.relation == ">=":
            return v >= t
        if self.relation == "within":
            return t[0] <= v <= t[1]
        raise ConfigurationError(f"unknown relation {self.relation!r}")

    def summary(self) -> dict:
        value = self.value
        if isinstance(value, (np.floating, np.integer)):
            value = value.item()
        return {
            "name": self.name,
            "criterion": self.criterion,
            "value": None if self.timing else _jsonable(value),
            "threshold": _jsonable(self.threshold),
            "relation": self.relation,
            "passed": bool(self.passed),
        }


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if np.isfinite(v) else str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    return v


@dataclass
class Table:
    columns: tuple
    rows: list


@dataclass
class PlotSpec:
    """Log-log plot: ``x`` against each named series, optional fitted lines."""

    title: str
    xlabel: str
    ylabel: str
    x: list
    series: dict
    fits: dict = field(default_factory=dict)


@dataclass
class ReportBundle:
    kind: str
    config: dict
    indicators: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    plots: dict = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(ind.passed for ind in self.indicators)

    def add(self, *args, **kwargs) -> Indicator:
        ind = Indicator(*args, **kwargs)
        self.indicators.append(ind)
        return ind

    def indicator(self, name: str) -> Indicator:
        for ind in self.indicators:
            if ind.name == name:
                return ind
        raise KeyError(name)

    def summary(self) -> dict:
        return {
            "schema_version": SUMMARY_SCHEMA,
            "kind": self.kind,
            "config": _jsonable_dict(self.config),
            "passed": self.passed,
            "indicators": [ind.summary() for ind in self.indicators],
            "extras": _jsonable_dict(self.extras),
        }

    def timing(self) -> dict:
        return {ind.name: _jsonable(ind.value) for ind in self.indicators if ind.timing}


def _jsonable_dict(d: dict) -> dict:
    out = {}
    for k, v in d.items():
        out[str(k)] = _jsonable_dict(v) if isinstance(v, dict) else _jsonable(v)
    return out


def write_report(bundle: ReportBundle, out_dir) -> list[Path]:
    """Write summary.json, timing.json, one CSV per table and one SVG per plot."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    p = out / "summary.json"
    p.write_text(json.dumps(bundle.summary(), indent=2, sort_keys=True) + "\n")
    paths.append(p)
    p = out / "timing.json"
    p.write_text(json.dumps(bundle.timing(), indent=2, sort_keys=True) + "\n")
    paths.append(p)
    for name, table in bundle.tables.items():
        p = out / f"{name}.csv"
        with open(p, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(table.columns)
            for row in table.rows:
                w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        paths.append(p)
    for name, plot in bundle.plots.items():
        paths.append(_write_svg(plot, out / f"{name}.svg"))
    return paths


def _write_svg(plot: PlotSpec, path: Path) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "viscosity-lab"
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    x = np.asarray(plot.x, dtype=float)
    for label, y in plot.series.items():
        y = np.asarray(y, dtype=float)
        ok = y > 0
        if np.any(ok):
            ax.loglog(x[ok], y[ok], "o-", label=label)
    for label, (slope, intercept) in plot.fits.items():
        if np.isfinite(slope):
            ax.loglog(x, np.exp(intercept) * x ** slope, "--", label=f"{label} fit, slope {slope:.2f}")
    ax.set_xlabel(plot.xlabel)
    ax.set_ylabel(plot.ylabel)
    ax.set_title(plot.title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _fit(x, y) -> tuple[float, float]:
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2 or np.any(y <= 0):
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


# -- manufactured cases --------------------------------------------------------


def manufactured_stokes(d: Domain, case: str, mu_default: ViscosityField | None = None):
    """(mu, u, p) of a closed-form Stokes solution; p has zero mean."""
    x, y = d.x, d.y
    if case == "linear":
        return ViscosityField.family(d, "quadratic", a=1.0), np.stack([x, -y]), 2.0 * x ** 2 - 0.5
    if case == "shear":
        mu0 = 1.5
        return ViscosityField.family(d, "constant", mu0=mu0), np.stack([y ** 2, 0 * x]), 2.0 * mu0 * x
    if case == "rotation":
        mu = mu_default or ViscosityField.family(d, "constant")
        return mu, np.stack([-y, x]), 0.0 * x
    raise ConfigurationError(f"inputs.cases: unknown manufactured case {case!r}")


def generic_trace(d: Domain) -> np.ndarray:
    """Boundary velocity of the streamfunction chi = exp(y) sin(x + 2y) + x^3."""
    c, s = np.cos(d.theta), np.sin(d.theta)
    e = np.exp(s)
    chi_x = e * np.cos(c + 2 * s) + 3 * c ** 2
    chi_y = e * (2 * np.cos(c + 2 * s) + np.sin(c + 2 * s))
    return np.stack([chi_y, -chi_x])


AIRY_STAR = (lambda x, y: y ** 2 - x ** 2 - x ** 4 / 3,
             lambda x, y: (-2 * x - 4 * x ** 3 / 3, 2 * y))


# -- runners -------------------------------------------------------------------


def run_forward_stokes(cfg: ExperimentConfig) -> ReportBundle:
    rep = ReportBundle(cfg.kind, cfg.to_dict())
    d = cfg.domain()
    tol = cfg.tol("velocity", 1e-6)
    rows = []
    for case in _str_list(cfg.opt("cases", "linear, shear, rotation")):
        if case == "rotation-independence":
            _rigid_independence(cfg, d, rep)
            continue
        mu, u, p = manufactured_stokes(d, case, cfg.viscosity_field(d))
        t0 = time.perf_counter()
        state = solve_stokes(d, mu, d.boundary(u))
        dt = time.perf_counter() - t0
        scale = max(float(np.max(np.abs(u))), 1e-300)
        ev = float(np.max(np.abs(state.u - u))) / scale
        ep = float(np.max(np.abs(state.p - p))) / max(float(np.max(np.abs(p))), 1.0)
        rows.append((case, ev, ep, dt))
        rep.add(f"{case}: max relative velocity error", ev, tol, "<", 1)
        rep.add(f"{case}: runtime [s]", dt, cfg.tol("runtime", 30.0), "<", 1, timing=True)
        rep.extras[f"{case}: pressure error"] = ep
    rep.tables["stokes_errors"] = Table(("case", "velocity_error", "pressure_error", "seconds"),
                                        [r[:3] + (round(r[3], 3),) for r in rows])
    return rep


def _second_viscosity(cfg: ExperimentConfig, d: Domain) -> ViscosityField:
    spec = {"family": cfg.opt("second_family", "bump")}
    if spec["family"] == "bump":
        spec["c"] = cfg.opt("second_c", 0.3, float)
    return cfg.viscosity_field(d, spec)


def _rigid_independence(cfg: ExperimentConfig, d: Domain, rep: ReportBundle):
    mu1 = cfg.viscosity_field(d)
    mu2 = _second_viscosity(cfg, d)
    g = d.boundary(np.stack([-d.y, d.x]))
    T1 = traction(d, solve_stokes(d, mu1, g), mu1)
    T2 = traction(d, solve_stokes(d, mu2, g), mu2)
    tol = cfg.tol("traction", 1e-8)
    rep.add("rigid rotation: max traction, first viscosity", float(np.max(np.abs(T1))), tol, "<", 11)
    rep.add("rigid rotation: max traction, second viscosity", float(np.max(np.abs(T2))), tol, "<", 11)
    rep.add("rigid rotation: max traction difference", float(np.max(np.abs(T1 - T2))), tol, "<", 11)
    rep.extras["rigid rotation: interior viscosity difference"] = float(np.max(np.abs(mu1.values - mu2.values)))


def run_forward_plate(cfg: ExperimentConfig) -> ReportBundle:
    rep = ReportBundle(cfg.kind, cfg.to_dict())
    d = cfg.domain()
    tol = cfg.tol("solution", 1e-6)
    x, y = d.x, d.y
    n, _ = boundary_frame(d)
    cases = {
        "cubic": (ViscosityField.family(d, "constant"), x ** 3, np.stack([3 * x ** 2, 0 * x])),
        "airy": (ViscosityField.family(d, "quadratic"), AIRY_STAR[0](x, y), np.stack(AIRY_STAR[1](x, y))),
    }
    for name, (mu, phi, grad) in cases.items():
        phin = np.sum(d.boundary(grad) * n, axis=0)
        sol = solve_plate(d, mu, d.boundary(phi), phin)
        err = float(np.max(np.abs(sol - phi))) / max(float(np.max(np.abs(phi))), 1e-300)
        rep.add(f"{name}: max relative error", err, tol, "<")
        rep.add(f"{name}: Dirichlet trace mismatch", float(np.max(np.abs(d.boundary(sol) - d.boundary(phi)))),
                cfg.tol("dirichlet", 1e-8), "<")
    mu = ViscosityField.family(d, "quadratic")
    ab = alpha_beta(mu)
    rep.add("airy: nondivergence residual", nondiv_residual(d, AIRY_STAR[0](x, y), ab.alpha, ab.beta),
            cfg.tol("nondiv", 1e-6), "<")
    res = _int_list(cfg.opt("refinements", "6, 8, 10, 12"))
    errs = []
    for nr in res:
        dc = Domain(nr, 4 * nr)
        ref = Domain(2 * nr, 8 * nr)
        muc = cfg.viscosity_field(dc)
        c, s = np.cos(dc.theta), np.sin(dc.theta)
        sol = solve_plate(dc, muc, np.exp(c) * np.sin(2 * s), np.cos(c - s))
        muf = cfg.viscosity_field(ref)
        cf, sf = np.cos(ref.theta), np.sin(ref.theta)
        fine = solve_plate(ref, muf, np.exp(cf) * np.sin(2 * sf), np.cos(cf - sf))
        errs.append(float(np.max(np.abs(ref.interpolate(fine, dc.x, dc.y).real - sol))))
    order = -_fit(res, errs)[0]
    rep.tables["plate_refinement"] = Table(("n_r", "max_error"), list(zip(res, errs)))
    rep.add("generic data: observed convergence order", order, 2.0, ">=")
    rep.plots["plate_refinement"] = PlotSpec("clamped plate refinement", "n_r", "max error", res,
                                             {"error": errs})
    return rep


def _bridged_roundtrip(d: Domain, mu: ViscosityField, g, bridge_tol: float):
    state = solve_stokes(d, mu, g)
    T = traction(d, state, mu)
    datum = stokes_to_plate(d, g, T, tol=bridge_tol)
    phi = solve_plate(d, mu, datum.phi, datum.phi_n)
    m_n, mt_t = plate_neumann(d, mu, phi)
    num = d.boundary_l2(m_n - datum.m_n) ** 2 + d.boundary_l2(mt_t - datum.mt_t) ** 2
    den = d.boundary_l2(datum.m_n) ** 2 + d.boundary_l2(datum.mt_t) ** 2
    forward = float(np.sqrt(num / den))
    back = plate_datum(d, mu, phi)
    g2, T2 = plate_to_stokes(d, back, tol=bridge_tol)
    eg = d.boundary_l2(remove_rigid_motion(d, g2, g) - g) / d.boundary_l2(g)
    eT = d.boundary_l2(T2 - T) / d.boundary_l2(T)
    g3, _ = plate_to_stokes(d, back, mt_anchor=moment_twist(d, g)[0], u_anchor=g[:, 0], tol=bridge_tol)
    anchored = d.boundary_l2(g3 - g) / d.boundary_l2(g)
    return forward, float(eg), float(eT), float(anchored)


def run_equivalence_roundtrip(cfg: ExperimentConfig) -> ReportBundle:
    rep = ReportBundle(cfg.kind, cfg.to_dict())
    d = cfg.domain()
    tol = cfg.tol("roundtrip", 1e-4)
    mu = cfg.viscosity_field(d)
    forward, eg, eT, anchored = _bridged_roundtrip(d, mu, generic_trace(d), cfg.tol("bridge", 1e-8))
    rep.add("forward chain: Neumann pair relative L2 error", forward, tol, "<", 2)
    rep.add("reverse chain: velocity error modulo rigid motion", eg, tol, "<", 2)
    rep.add("reverse chain: traction error", eT, tol, "<", 2)
    rep.add("reverse chain: velocity error with exact anchors", anchored, tol, "<", 2)
    res = _int_list(cfg.opt("refinements", "6, 8, 10, 12"))
    rows = []
    for nr in res:
        dc = Domain(nr, 4 * nr)
        rows.append((nr,) + _bridged_roundtrip(dc, cfg.viscosity_field(dc), generic_trace(dc),
                                               cfg.tol("coarse_bridge", 1e-1)))
    rep.tables["roundtrip_refinement"] = Table(
        ("n_r", "forward_error", "velocity_error", "traction_error", "anchored_velocity_error"), rows)
    cols = np.array([r[1:4] for r in rows])
    ratio = float(np.max(cols[1:] / cols[:-1]))
    rep.add("round trip errors decrease under refinement (max ratio)", ratio, 1.0, "<", 2)
    rep.plots["roundtrip_refinement"] = PlotSpec(
        "equivalence round trip", "n_r", "relative error", res,
        {"forward": cols[:, 0].tolist(), "velocity": cols[:, 1].tolist(), "traction": cols[:, 2].tolist()})
    # boundary jets from the manufactured plate solution
    mu_q = ViscosityField.family(d, "quadratic")
    n, _ = boundary_frame(d)
    phi_star = AIRY_STAR[0](d.x, d.y)
    phin = np.sum(d.boundary(np.stack(AIRY_STAR[1](d.x, d.y))) * n, axis=0)
    phi = solve_plate(d, mu_q, d.boundary(phi_star), phin)
    jets = recover_boundary_jets(d, plate_datum(d, mu_q, phi), mu_q.boundary_jet())
    rep.add("boundary jets: relative error vs solution traces",
            jets.relative_error(BoundaryJet.from_field(d, phi)), cfg.tol("jets", 1e-4), "<", 8)
    A2, A3 = local_matrices(1.0, 0.0)
    rep.add("second-order local matrix determinant at n=(1,0)", float(np.linalg.det(A2)), 1.0, "is", 8)
    rep.add("third-order local matrix determinant at n=(1,0)", float(np.linalg.det(A3)), -1.0, "is", 8)
    return rep


def _density(cfg: ExperimentConfig) -> QuadratureDensity:
    return QuadratureDensity(cfg.opt("n_s", DEFAULT_DENSITY.n_s, int),
                             cfg.opt("n_psi", DEFAULT_DENSITY.n_psi, int),
                             cfg.opt("n_boundary", DEFAULT_DENSITY.n_boundary, int))


def _dbar_sources(d: Domain) -> dict:
    z = d.z
    return {
        "1": np.ones(d.size, dtype=complex),
        "z": z,
        "zbar": np.conj(z),
        "bump": np.exp(-4.0 * np.abs(z) ** 2) + 0j,
    }


def run_first_order_residual(cfg: ExperimentConfig) -> ReportBundle:
    rep = ReportBundle(cfg.kind, cfg.to_dict())
    d = cfg.domain()
    checks = _str_list(cfg.opt("checks", "ab-identity, dbar, bi-dbar2, dv, r4"))
    unknown = set(checks) - {"ab-identity", "dbar", "bi-dbar2", "dv", "r4"}
    if unknown:
        raise ConfigurationError(f"options.checks: unknown checks {sorted(unknown)}")
    if "ab-identity" in checks:
        for fam in ("exp", "quadratic", "bump"):
            mu = ViscosityField.family(d, fam)
            rep.add(f"potential identity residual, {fam}", check_ab_identity(d, alpha_beta(mu)),
                    cfg.tol("ab_identity", 1e-8), "<", 3)
    if "dbar" in checks:
        _dbar_checks(cfg, d, rep)
    if "bi-dbar2" in checks:
        _bi_dbar2_checks(cfg, d, rep)
    if "dv" in checks:
        _dv_checks(cfg, d, rep)
    if "r4" in checks:
        mu1, mu2 = ViscosityField.family(d, "exp"), ViscosityField.family(d, "constant")
        p1, p2 = alpha_beta(mu1), alpha_beta(mu2)
        disc = discrepancy_field(d, p1, p2)
        tol = cfg.tol("r4", 1e-6)
        rep.add("discrepancy minus 1/2", float(np.max(np.abs(disc - 0.5))), tol, "<", 7)
        rep.add("discrepancy minus (a1^2 - a2^2)/2",
                float(np.max(np.abs(disc - 0.5 * (p1.alpha ** 2 - p2.alpha ** 2)))), tol, "<", 7)
    return rep


def _dbar_checks(cfg, d, rep):
    base = _density(cfg)
    levels = [QuadratureDensity(base.n_s // 2, base.n_psi // 2, base.n_boundary), base, base.doubled()]
    route = cfg.opt("route", "polar")
    tol = cfg.tol("dbar", 1e-3)
    rows = []
    for name, f in _dbar_sources(d).items():
        res = []
        for dens in levels:
            u = solve_dbar(d, f, "zbar", 2, route, dens)
            res.append(relative_residual(d, dzbar(d, u, 2), f))
        slope = -_fit([lv.n_psi for lv in levels], res)[0]
        rows.append((name, *res, slope))
        rep.add(f"order-2 residual, f={name}, default density", res[1], tol, "<", 4)
        rep.add(f"order-2 residual slope under doubling, f={name}", slope, 0.0, ">", 4)
    rep.tables["dbar_density"] = Table(("f", "half_density", "default_density", "double_density",
                                        "slope"), rows)
    t1 = solve_dbar(d, np.ones(d.size), "zbar", 1, route, base)
    rep.add("order-1 transform of 1 vs zbar", relative_residual(d, t1, np.conj(d.z)), tol, "<", 4)


def _bi_dbar2_checks(cfg, d, rep):
    z = d.z
    zb = np.conj(z)
    tol = cfg.tol("bi_dbar2", 1e-3)
    dens = _density(cfg)
    for route in _str_list(cfg.opt("bi_routes", "ansatz, projection")):
        for label, f, g in (("(zbar^2, z^2)", zb ** 2, z ** 2), ("(1, zbar)", np.ones_like(z), zb)):
            w = solve_bi_dbar2(d, f, g, route, cfg.opt("route", "polar"), dens)
            rf, rg = bi_dbar2_residuals(d, w, f, g)
            rep.add(f"{route} {label}: residual of dz^2 w = f", rf, tol, "<", 5)
            rep.add(f"{route} {label}: residual of dzb^2 w = g", rg, tol, "<", 5)
    try:
        solve_bi_dbar2(d, zb ** 2, np.zeros_like(z), operator_route="modal")
        rejected = False
    except CompatibilityError:
        rejected = True
    rep.add("incompatible input (zbar^2, 0) rejected", rejected, True, "is", 5)


def _dv_checks(cfg, d, rep):
    mu0 = ViscosityField.family(d, "constant")
    U = lift_to_U(d, d.z ** 3)
    rep.add("constant viscosity, Phi = z^3: D+V residual", dv_residual(d, U, assemble_V(alpha_beta(mu0))),
            cfg.tol("dv_exact", 1e-8), "<", 6)
    res = _int_list(cfg.opt("refinements", "6, 8, 10, 12"))
    vals = []
    for nr in res:
        dc = Domain(nr, 4 * nr)
        mu = ViscosityField.family(dc, "quadratic")
        c, s = np.cos(dc.theta), np.sin(dc.theta)
        phi = solve_plate(dc, mu, np.exp(c) * np.sin(2 * s), np.cos(c - s))
        vals.append(dv_residual(dc, lift_to_U(dc, phi), assemble_V(alpha_beta(mu))))
    slope = -_fit(res, vals)[0]
    rep.tables["dv_refinement"] = Table(("n_r", "dv_residual"), list(zip(res, vals)))
    rep.add("quadratic viscosity, solved plate: D+V residual decay order", slope, 1.0, ">=", 6)


def run_nse_scaling(cfg: ExperimentConfig) -> ReportBundle:
    rep = ReportBundle(cfg.kind, cfg.to_dict())
    d = cfg.domain()
    mu = cfg.viscosity_field(d)
    eps = _float_list(cfg.opt("eps", "1e-1, 3.1622776601683794e-2, 1e-2, 3.1622776601683794e-3, 1e-3"))
    t0 = time.perf_counter()
    report = linearization_experiment(d, mu, generic_trace(d), eps)
    dt = time.perf_counter() - t0
    rows = report.rows
    rep.tables["nse_scaling"] = Table(("eps", "err_velocity", "err_traction", "err_interior_velocity"), rows)
    band = (1.0 - cfg.tol("slope_band", 0.2), 1.0 + cfg.tol("slope_band", 0.2))
    rep.add("scaled velocity-trace error slope", report.slope_velocity, band, "within", 9)
    rep.add("scaled traction error slope", report.slope_traction, band, "within", 9)
    rep.add("total runtime [s]", dt, cfg.tol("runtime", 600.0), "<", 9, timing=True)
    rep.extras["scaled interior velocity error slope"] = report.slope_interior
    rep.extras["max scaled velocity-trace error"] = max(r[1] for r in rows)
    cols = np.array(rows).T
    rep.plots["nse_scaling"] = PlotSpec(
        "scaled Cauchy-data errors", "eps", "error", cols[0].tolist(),
        {"velocity trace": cols[1].tolist(), "traction": cols[2].tolist(), "interior velocity": cols[3].tolist()},
        {"traction": _fit(cols[0], cols[2]), "velocity trace": _fit(cols[0], cols[1])})
    return rep


def run_uniqueness_probe(cfg: ExperimentConfig) -> ReportBundle:
    rep = ReportBundle(cfg.kind, cfg.to_dict())
    d = cfg.domain()
    mu1, mu2 = cfg.viscosity_field(d), _second_viscosity(cfg, d)
    inputs = trig_inputs(d, cfg.opt("n_inputs", 8, int))
    nse_scale = cfg.opt("nse_scale", None, float)
    probe = uniqueness_probe(d, mu1, mu2, inputs, nse_scale=nse_scale)
    fine = Domain(*_int_list(cfg.opt("floor_resolution", "20, 80")))
    floor = cauchy_gap(synth_dataset(d, mu1, inputs),
                       synth_dataset(fine, cfg.viscosity_field(fine), trig_inputs(fine, len(inputs))))
    factor = cfg.tol("gap_factor", 10.0)
    rep.add("Cauchy gap over refinement noise floor", probe.gap_stokes / max(floor, 1e-300), factor, ">", 10)
    rep.extras.update({
        "cauchy_gap": probe.gap_stokes,
        "noise_floor": floor,
        "cauchy_gap_nse": probe.gap_nse,
        "discrepancy": probe.discrepancy,
        "mu_difference": probe.mu_difference,
        "boundary_jet_mismatch": probe.jet_mismatch,
    })
    return rep


def run_reconstruct(cfg: ExperimentConfig) -> ReportBundle:
    rep = ReportBundle(cfg.kind, cfg.to_dict())
    d = cfg.domain()
    truth = cfg.opt("truth_c", 0.3, float)
    mu_true = ViscosityField.family(d, "bump", c=truth)
    inputs = trig_inputs(d, cfg.opt("n_inputs", 8, int))
    param = Parametrization()
    clean = synth_dataset(d, mu_true, inputs)
    res = reconstruct_mu(d, clean, param)
    err = float(abs(res.theta[0] - truth)) / max(abs(truth), 1e-300)
    rep.add("noiseless relative parameter error", err, cfg.tol("noiseless", 0.01), "<", 10)
    noise = cfg.opt("noise", 0.01, float)
    noisy = synth_dataset(d, mu_true, inputs, noise=noise, seed=cfg.seed)
    weights = _float_list(cfg.opt("reg_weights", "1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1"))
    results, k = l_curve(d, noisy, param, weights)
    chosen = results[k]
    err_n = float(abs(chosen.theta[0] - truth)) / max(abs(truth), 1e-300)
    rep.add("noisy L-curve relative parameter error", err_n, cfg.tol("noisy", 0.05), "<", 10)
    rep.tables["l_curve"] = Table(("reg_weight", "c_hat", "misfit", "iterations"),
                                  [(r.reg_weight, float(r.theta[0]), r.misfit, r.iterations) for r in results])
    rep.extras.update({"c_noiseless": float(res.theta[0]), "c_noisy": float(chosen.theta[0]),
                       "chosen_weight": chosen.reg_weight,
                       "history_nonincreasing": bool(np.all(np.diff(res.history) <= 0))})
    return rep


RUNNERS = {
    "forward-stokes": run_forward_stokes,
    "forward-plate": run_forward_plate,
    "equivalence-roundtrip": run_equivalence_roundtrip,
    "first-order-residual": run_first_order_residual,
    "nse-scaling": run_nse_scaling,
    "uniqueness-probe": run_uniqueness_probe,
    "reconstruct": run_reconstruct,
}


def run(cfg: ExperimentConfig) -> ReportBundle:
    """Execute the experiment named by ``cfg.kind``."""
    return RUNNERS[cfg.kind](cfg)
