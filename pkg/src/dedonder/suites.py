"""Run configuration, verification batteries and JSON-lines reports.

A battery is a generator of :class:`CheckReport` records; ``run_suite``
collects them in a deterministic order (check id, then trial index).
"""

from __future__ import annotations

import configparser
import hashlib
import json
import time
import zlib
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import covariance as cov
from . import dedonder_form as df
from . import euler_lagrange as el
from . import exprlang
from . import geometry as geo
from . import jet_space as js
from . import lagrangians as lg
from . import ostrogradski as og

SUITES = ("geometry", "momenta", "theta", "covariance", "el", "matter")

# (tolerance, mode): mode "max" passes when residual <= tol, "min" when residual >= tol
CHECKS: dict[str, tuple[float, str]] = {
    "geometry.contact": (1e-9, "max"),
    "geometry.grad_det": (1e-10, "max"),
    "geometry.grad_det_section": (1e-10, "max"),
    "geometry.r_split": (1e-10, "max"),
    "geometry.simpl1": (1e-11, "max"),
    "geometry.vacuum_ricci": (1e-9, "max"),
    "momenta.closed_vs_ad": (1e-9, "max"),
    "momenta.divergence_closed": (1e-8, "max"),
    "momenta.first_order_gradient": (1e-9, "max"),
    "momenta.jet_vs_section": (1e-8, "max"),
    "theta.closed_form": (1e-9, "max"),
    "theta.dtheta_routes": (1e-9, "max"),
    "theta.pullback": (1e-9, "max"),
    "theta.vertical_dtheta": (1e-8, "max"),
    "covariance.density": (1e-8, "max"),
    "covariance.negative_control": (1e-3, "min"),
    "covariance.p3_law": (1e-7, "max"),
    "covariance.p4_law": (1e-7, "max"),
    "covariance.theta_invariance": (1e-7, "max"),
    "covariance.transform_jet": (1e-8, "max"),
    "el.de_donder_e": (1e-12, "max"),
    "el.de_donder_f": (1e-10, "max"),
    "el.einstein_proportionality": (1e-7, "max"),
    "el.route_agreement": (1e-9, "max"),
    "el.vacuum": (1e-7, "max"),
    "matter.additivity": (1e-10, "max"),
    "matter.density_law": (1e-8, "max"),
    "matter.pullback_total": (1e-9, "max"),
    "matter.q_law": (1e-8, "max"),
    "matter.wave_operator": (1e-9, "max"),
}

VACUUM = ("minkowski", "schwarzschild", "kasner")
BUILTIN_FAMILIES = ("minkowski", "schwarzschild", "kasner", "random-polynomial")
BUILTIN_DIFFEOS = ("identity", "linear", "polynomial-2", "polynomial-3")


class ConfigError(ValueError):
    """Invalid run configuration; the message names the offending location."""


# -- configuration -------------------------------------------------------------

@dataclass
class RunConfig:
    seed: int = 0
    points: int = 3
    vectors: int = 3
    families: list = field(default_factory=lambda: ["schwarzschild", "kasner",
                                                     "random-polynomial"])
    diffeos: list = field(default_factory=lambda: ["linear", "polynomial-2", "polynomial-3"])
    custom_families: dict = field(default_factory=dict)  # name -> MetricFamily
    custom_diffeos: dict = field(default_factory=dict)   # name -> Diffeo
    explicit_points: dict = field(default_factory=dict)  # family name -> list of points
    field_expr: str = "x1*x2 + 0.5*x3^2 - 0.2*x4"
    potential: str | None = "0.1*t^2"
    tolerances: dict = field(default_factory=lambda: {k: v[0] for k, v in CHECKS.items()})

    def family(self, name: str, index: int = 0) -> js.MetricFamily:
        if name in self.custom_families:
            return self.custom_families[name]
        if name == "minkowski":
            return js.minkowski()
        if name == "schwarzschild":
            return js.schwarzschild(1.0)
        if name == "kasner":
            return js.kasner()
        if name == "random-polynomial":
            return js.random_polynomial(self.rng("family", name, index))
        raise ConfigError(f"unknown metric family {name!r}")

    def diffeo(self, name: str, family: js.MetricFamily) -> cov.Diffeo:
        if name in self.custom_diffeos:
            return self.custom_diffeos[name]
        rng = self.rng("diffeo", name, family.name)
        if name == "identity":
            return cov.identity()
        if name == "linear":
            return cov.random_linear(rng)
        if name.startswith("polynomial-") and name[-1] in "23":
            center, half = cov.family_box(family, rng)
            A = cov.matrix_of(cov.random_linear(rng, spread=0.1))
            return cov.triangular_polynomial(rng, int(name[-1]), 0.01, center, half, A=A)
        raise ConfigError(f"unknown diffeomorphism {name!r}")

    def rng(self, *labels) -> np.random.Generator:
        """Generator keyed by the seed and a stable hash of the labels."""
        key = zlib.crc32("/".join(str(v) for v in labels).encode())
        return np.random.default_rng([self.seed, key])

    def sample_points(self, family: js.MetricFamily, label: str, n: int | None = None):
        if family.name in self.explicit_points:
            return [np.asarray(p, dtype=float) for p in self.explicit_points[family.name]]
        rng = self.rng("points", label, family.name)
        return [family.sample(rng) for _ in range(n or self.points)]


def _unquote(v: str) -> str:
    v = v.strip()
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def _names(v: str) -> list[str]:
    return [s.strip() for s in v.split(",") if s.strip()]


def _point_list(v: str, where: str) -> list[np.ndarray]:
    out = []
    for chunk in v.split(";"):
        if not chunk.strip():
            continue
        try:
            p = np.array([float(s) for s in chunk.split(",")])
        except ValueError as exc:
            raise ConfigError(f"{where}: bad number in point {chunk.strip()!r}") from exc
        if p.shape != (4,):
            raise ConfigError(f"{where}: a point needs 4 coordinates, got {chunk.strip()!r}")
        out.append(p)
    return out


def _parse_expr(text: str, where: str, variables=exprlang.VARIABLES):
    try:
        return exprlang.parse(_unquote(text), variables)
    except exprlang.ExprSyntaxError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def load_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse the sectioned key-value format into a :class:`RunConfig`."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    cfg = RunConfig()
    if cp.has_section("run"):
        sec = cp["run"]
        try:
            cfg.seed = sec.getint("seed", cfg.seed)
            cfg.points = sec.getint("points", cfg.points)
            cfg.vectors = sec.getint("vectors", cfg.vectors)
        except ValueError as exc:
            raise ConfigError(f"{source} [run]: {exc}") from exc
        if cfg.points < 1 or cfg.vectors < 1:
            raise ConfigError(f"{source} [run]: points and vectors must be positive")
    for sec_name in cp.sections():
        sec = cp[sec_name]
        where = f"{source} [{sec_name}]"
        if sec_name.startswith("family."):
            name = sec_name.split(".", 1)[1]
            exprs = {}
            for key, val in sec.items():
                if key.startswith("g") and key[1:].isdigit():
                    exprs[key] = _parse_expr(val, f"{where} {key}")
            sampler = None
            if "box" in sec:
                lo_hi = _point_list(sec["box"], f"{where} box")
                if len(lo_hi) != 2:
                    raise ConfigError(f"{where} box: expected 'lo ; hi'")
                lo, hi = lo_hi
                sampler = (lambda lo, hi: lambda rng: rng.uniform(lo, hi))(lo, hi)
            try:
                fam = js.MetricFamily.from_expressions(name, exprs, sampler)
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from exc
            cfg.custom_families[name] = fam
            if "points" in sec:
                cfg.explicit_points[name] = _point_list(sec["points"], f"{where} points")
        elif sec_name.startswith("diffeo."):
            name = sec_name.split(".", 1)[1]
            try:
                fw = [_parse_expr(sec[f"forward{i}"], f"{where} forward{i}") for i in range(1, 5)]
                inv = [_parse_expr(sec[f"inverse{i}"], f"{where} inverse{i}")
                       for i in range(1, 5)]
            except KeyError as exc:
                raise ConfigError(f"{where}: missing key {exc}") from exc
            cfg.custom_diffeos[name] = cov.Diffeo.from_expressions(
                name, fw, inv, domain=sec.get("domain", ""))
    if cp.has_section("families") and "use" in cp["families"]:
        cfg.families = _names(cp["families"]["use"])
    if cp.has_section("diffeos") and "use" in cp["diffeos"]:
        cfg.diffeos = _names(cp["diffeos"]["use"])
    if cp.has_section("matter"):
        sec = cp["matter"]
        if "field" in sec:
            _parse_expr(sec["field"], f"{source} [matter] field")
            cfg.field_expr = _unquote(sec["field"])
        if "potential" in sec:
            pot = _unquote(sec["potential"])
            if pot:
                _parse_expr(pot, f"{source} [matter] potential", ("t",))
            cfg.potential = pot or None
    if cp.has_section("tolerances"):
        for key, val in cp["tolerances"].items():
            set_tolerance(cfg, key, val, f"{source} [tolerances]")
    validate(cfg)
    return cfg


def set_tolerance(cfg: RunConfig, check: str, value, where: str = "--tol-override") -> None:
    if check not in CHECKS:
        raise ConfigError(f"{where}: unknown check {check!r}")
    try:
        tol = float(value)
    except ValueError as exc:
        raise ConfigError(f"{where}: tolerance for {check} is not a number") from exc
    if not tol > 0:
        raise ConfigError(f"{where}: tolerance for {check} must be positive")
    cfg.tolerances[check] = tol


def validate(cfg: RunConfig) -> None:
    for name in cfg.families:
        if name not in cfg.custom_families and name not in BUILTIN_FAMILIES:
            raise ConfigError(f"unknown metric family {name!r}")
    for name in cfg.diffeos:
        if name not in cfg.custom_diffeos and name not in BUILTIN_DIFFEOS:
            raise ConfigError(f"unknown diffeomorphism {name!r}")


# -- reports -----------------------------------------------------------------

@dataclass(frozen=True)
class CheckReport:
    check: str
    trial: int
    label: str
    inputs: str
    residual: float
    tolerance: float
    passed: bool
    details: dict
    wall_time: float | None = None

    def to_json(self) -> str:
        rec = {"check": self.check, "trial": self.trial, "label": self.label,
               "inputs": self.inputs, "residual": self.residual,
               "tolerance": self.tolerance, "pass": self.passed, "details": self.details}
        if self.wall_time is not None:
            rec["wall_time"] = round(self.wall_time, 3)
        return json.dumps(rec, sort_keys=True)


def digest(obj) -> str:
    def conv(o):
        if isinstance(o, np.ndarray):
            return [repr(float(v)) for v in o.ravel()]
        if isinstance(o, (float, np.floating)):
            return repr(float(o))
        raise TypeError(type(o))
    text = json.dumps(obj, sort_keys=True, default=conv)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


class _Recorder:
    def __init__(self, cfg: RunConfig, timing: bool):
        self.cfg = cfg
        self.timing = timing
        self.reports: list[CheckReport] = []
        self._trials: dict[str, int] = {}

    def check(self, check: str, label: str, inputs, compute: Callable[[], tuple[float, dict]]):
        t0 = time.perf_counter()
        residual, details = compute()
        tol = self.cfg.tolerances[check]
        mode = CHECKS[check][1]
        residual = float(residual)
        passed = bool(residual >= tol) if mode == "min" else bool(residual <= tol)
        trial = self._trials.get(check, 0)
        self._trials[check] = trial + 1
        wall = time.perf_counter() - t0 if self.timing else None
        self.reports.append(CheckReport(check, trial, label, digest(inputs), residual, tol,
                                        passed, details, wall))


def _worst(values) -> float:
    return float(max(values)) if len(values) else 0.0


# -- batteries -------------------------------------------------------------------

def _families(cfg: RunConfig):
    return [cfg.family(name, i) for i, name in enumerate(cfg.families)]


def _random_jets(cfg: RunConfig, label: str, n: int):
    rng = cfg.rng("jets", label)
    return [js.random_jet(rng) for _ in range(n)]


def geometry_suite(cfg: RunConfig, rec: _Recorder) -> None:
    jets = _random_jets(cfg, "geometry", cfg.points)
    pts = [j.x for j in jets]
    rec.check("geometry.r_split", "random jets", pts, lambda: (_worst(
        [og.scaled_error(geo.scalar_curvature(j), geo.r1(j) + geo.r2(j)) for j in jets]), {}))
    rec.check("geometry.simpl1", "random jets", pts,
              lambda: (_worst([geo.simpl1_residual(j) for j in jets]), {}))
    rec.check("geometry.grad_det", "random jets", pts,
              lambda: (_worst([geo.ddet_identity_residual(j) for j in jets]), {}))
    for fam in _families(cfg):
        xs = cfg.sample_points(fam, "geometry")
        rec.check("geometry.grad_det_section", fam.name, [fam.name, xs], lambda: (_worst(
            [geo.ddet_identity_residual_section(fam, x) for x in xs]), {}))
        rec.check("geometry.contact", fam.name, [fam.name, xs],
                  lambda: (_worst([js.contact_residual(fam, x) for x in xs]), {}))
        if fam.name in VACUUM:
            def ricci(fam=fam, xs=xs):
                return _worst([float(np.max(np.abs(geo.ricci(js.prolong(fam, x, 2)))))
                               for x in xs]), {}
            rec.check("geometry.vacuum_ricci", fam.name, [fam.name, xs], ricci)


R1_DENSITY = lg.Lagrangian("r1-density", lambda jet: (lambda p: p.r1 * p.sqrt_g)(
    geo.CurvaturePack(jet)))


def momenta_suite(cfg: RunConfig, rec: _Recorder) -> None:
    jets = _random_jets(cfg, "momenta", cfg.points)
    pts = [j.x for j in jets]

    def closed_vs_ad():
        errs = [max(og.momenta_error(og.hilbert_momenta_closed(j),
                                     og.momenta_on_jet(lg.HILBERT, j))) for j in jets]
        return _worst(errs), {}

    def first_order():
        errs = []
        for j in jets:
            sym = og.symmetrized_partials(R1_DENSITY, j)
            ad = js.sym_pack(sym.dz1)
            errs.append(og.scaled_error(ad, og.hilbert_first_order_gradient_closed(j)))
        return _worst(errs), {}

    rec.check("momenta.closed_vs_ad", "random jets", pts, closed_vs_ad)
    rec.check("momenta.first_order_gradient", "random jets", pts, first_order)
    for fam in _families(cfg):
        xs = cfg.sample_points(fam, "momenta")

        def jet_vs_section(fam=fam, xs=xs):
            return _worst([max(og.momenta_error(og.momenta_on_jet(lg.HILBERT, js.prolong(fam, x)),
                                                og.momenta_on_section(lg.HILBERT, fam, x)))
                           for x in xs]), {}

        def divergence(fam=fam, xs=xs):
            errs = []
            for x in xs:
                _, div = og.momenta_on_section_with_divergence(lg.HILBERT, fam, x)
                errs.append(og.scaled_error(div, og.hilbert_divergence_closed(
                    js.prolong(fam, x, 2))))
            return _worst(errs), {}

        rec.check("momenta.jet_vs_section", fam.name, [fam.name, xs], jet_vs_section)
        rec.check("momenta.divergence_closed", fam.name, [fam.name, xs], divergence)


def _relative(a, b) -> float:
    (va, sa), (vb, sb) = a, b
    return abs(va - vb) / max(sa, sb, 1.0)


def theta_suite(cfg: RunConfig, rec: _Recorder) -> None:
    jets = _random_jets(cfg, "theta", cfg.points)
    rng = cfg.rng("theta-vectors")
    draws = [[[js.JetTangentVector.random(rng) for _ in range(4)] for _ in range(cfg.vectors)]
             for _ in jets]
    pts = [j.x for j in jets]

    def closed_form():
        errs = []
        for j, vs_list in zip(jets, draws):
            co = df.coefficients(lg.HILBERT, j)
            form = df.theta_form(co, j)
            closed = df.theta_hilbert_closed_form(j)
            errs += [_relative(form.evaluate(vs), closed.evaluate(vs)) for vs in vs_list]
        return _worst(errs), {}

    def dtheta_routes():
        j = jets[0]
        vs = [js.JetTangentVector.random(rng) for _ in range(5)]
        value, scale = df.dtheta_eval(lg.HILBERT, j, vs)
        lie = df.dtheta_by_lie_formula(lg.HILBERT, j, vs)
        return abs(value - lie) / max(scale, 1.0), {}

    rec.check("theta.closed_form", "random jets", pts, closed_form)
    rec.check("theta.dtheta_routes", "random jet", pts[:1], dtheta_routes)
    for fam in _families(cfg):
        xs = cfg.sample_points(fam, "theta")

        def pullback(fam=fam, xs=xs):
            errs = []
            for x in xs:
                jet = js.prolong(fam, x)
                co = df.coefficients(lg.HILBERT, jet)
                val, scale = df.theta_eval(co, jet, js.section_tangents(fam, x))
                errs.append(abs(val - co.L) / max(scale, abs(co.L), 1.0))
            return _worst(errs), {}

        def vertical(fam=fam, xs=xs):
            vrng = cfg.rng("vertical", fam.name)
            errs = []
            for x in xs:
                jet = js.prolong(fam, x)
                X = js.JetTangentVector.random(vrng).replace(dx=np.zeros(4), dy=np.zeros(10))
                val, scale = df.dtheta_eval(lg.HILBERT, jet, [X] + js.section_tangents(fam, x))
                errs.append(abs(val) / max(scale, 1.0))
            return _worst(errs), {}

        rec.check("theta.pullback", fam.name, [fam.name, xs], pullback)
        rec.check("theta.vertical_dtheta", fam.name, [fam.name, xs[:1]], vertical)


def covariance_suite(cfg: RunConfig, rec: _Recorder) -> None:
    negative = lg.component_lagrangian(0, 0)
    for fam in _families(cfg):
        for dname in cfg.diffeos:
            d = cfg.diffeo(dname, fam)
            pulled = cov.pullback_family(fam, d)
            xs = cfg.sample_points(fam, f"covariance/{dname}")
            label = f"{fam.name}/{dname}"
            inputs = [fam.name, dname, cfg.seed, xs]
            charts = [cov.two_chart_jets(fam, d, x, pulled) for x in xs]

            def transform(charts=charts, d=d):
                errs = []
                for tc in charts:
                    tj = cov.transform_jet(tc.jet_p, d)
                    errs += [og.scaled_error(getattr(tj, k), getattr(tc.jet, k))
                             for k in ("y", "z1", "z2")]
                return _worst(errs), {}

            laws = [cov.check_momenta_laws(lg.HILBERT, fam, d, None, charts=tc) for tc in charts]
            rec.check("covariance.transform_jet", label, inputs, transform)
            rec.check("covariance.density", label, inputs, lambda charts=charts, d=d, fam=fam: (
                _worst([cov.check_density(lg.HILBERT, fam, d, None, charts=tc)
                        for tc in charts]), {}))
            rec.check("covariance.negative_control", label, inputs,
                      lambda charts=charts, d=d, fam=fam: (
                          min(cov.check_density(negative, fam, d, None, charts=tc)
                              for tc in charts), {}))
            rec.check("covariance.p4_law", label, inputs,
                      lambda laws=laws: (_worst([a for a, _ in laws]), {}))
            rec.check("covariance.p3_law", label, inputs,
                      lambda laws=laws: (_worst([b for _, b in laws]), {}))
            rec.check("covariance.theta_invariance", label, inputs,
                      lambda charts=charts, d=d, fam=fam, label=label: (_worst([
                          cov.check_theta_invariance(lg.HILBERT, fam, d, None, trials=cfg.vectors,
                                                     rng=cfg.rng("vectors", label, i), charts=tc)
                          for i, tc in enumerate(charts)]), {}))


def el_suite(cfg: RunConfig, rec: _Recorder) -> None:
    sign = None
    for fam in _families(cfg):
        xs = cfg.sample_points(fam, "el")
        inputs = [fam.name, xs]
        if fam.name in VACUUM:
            rec.check("el.vacuum", fam.name, inputs, lambda fam=fam, xs=xs: (_worst(
                [el.el_residual(lg.HILBERT, fam, x).relative for x in xs]), {}))
        rec.check("el.route_agreement", fam.name, inputs, lambda fam=fam, xs=xs: (_worst(
            [el.route_agreement(lg.HILBERT, fam, x) for x in xs]), {}))
        checks = [el.de_donder_equations_check(lg.HILBERT, fam, x) for x in xs]
        rec.check("el.de_donder_e", fam.name, inputs,
                  lambda checks=checks: (_worst([c.res_e for c in checks]), {}))
        rec.check("el.de_donder_f", fam.name, inputs,
                  lambda checks=checks: (_worst([c.res_f for c in checks]), {}))
        if fam.name not in VACUUM:
            if sign is None:
                sign = el.measure_einstein_sign(lg.HILBERT, fam, xs[0])
            rec.check("el.einstein_proportionality", fam.name, inputs + [sign],
                      lambda fam=fam, xs=xs, s=sign: (_worst(
                          [el.einstein_proportionality_error(lg.HILBERT, fam, x, s)
                           for x in xs]), {"sign": s}))


def matter_suite(cfg: RunConfig, rec: _Recorder) -> None:
    field_ast = exprlang.parse(cfg.field_expr)
    V = cfg.potential
    mink = js.minkowski()
    xs = cfg.sample_points(mink, "wave")
    rec.check("matter.wave_operator", "minkowski x2^2", [xs], lambda: (_worst(
        [abs(el.el_residual_scalar_field(mink, "x2^2", None, x) + 2.0) for x in xs]), {}))
    for fam in _families(cfg):
        xs = cfg.sample_points(fam, "matter")
        inputs = [fam.name, cfg.field_expr, V, xs]

        def pullback(fam=fam, xs=xs):
            errs = []
            for x in xs:
                jet = js.prolong(fam, x)
                state, hess = lg.scalar_field_jet(field_ast, x)
                co = df.coefficients(lg.HILBERT, jet)
                mc = df.matter_coefficients(jet.y, state, V)
                tv = js.section_tangents(fam, x, (state.zt, hess))
                val, scale = df.theta_total_eval(co, jet, mc, tv)
                errs.append(abs(val - co.L - mc.L) / max(scale, 1.0))
            return _worst(errs), {}

        def additivity(fam=fam, xs=xs):
            return _worst([el.total_additivity_error(fam, lg.scalar_field_jet(field_ast, x)[0],
                                                     V, x) for x in xs[:1]]), {}

        rec.check("matter.pullback_total", fam.name, inputs, pullback)
        rec.check("matter.additivity", fam.name, inputs, additivity)
        for dname in cfg.diffeos:
            d = cfg.diffeo(dname, fam)
            pulled = cov.pullback_family(fam, d)
            pts = cfg.sample_points(fam, f"matter/{dname}")
            res = [cov.check_matter_invariance(fam, field_ast, V, d, x, pulled) for x in pts]
            label = f"{fam.name}/{dname}"
            rec.check("matter.q_law", label, inputs + [dname],
                      lambda res=res: (_worst([a for a, _ in res]), {}))
            rec.check("matter.density_law", label, inputs + [dname],
                      lambda res=res: (_worst([b for _, b in res]), {}))


BATTERIES: dict[str, Callable] = {
    "geometry": geometry_suite, "momenta": momenta_suite, "theta": theta_suite,
    "covariance": covariance_suite, "el": el_suite, "matter": matter_suite,
}


def run_suite(suite: str, cfg: RunConfig, timing: bool = False) -> list[CheckReport]:
    """Run one suite (or ``all``) and return reports sorted by check id, then trial."""
    names = SUITES if suite == "all" else (suite,)
    rec = _Recorder(cfg, timing)
    for name in names:
        if name not in BATTERIES:
            raise ConfigError(f"unknown suite {name!r}")
        BATTERIES[name](cfg, rec)
    return sorted(rec.reports, key=lambda r: (r.check, r.trial))


def iter_lines(reports) -> Iterator[str]:
    for r in reports:
        yield r.to_json()
