"""Third-order jets of Lorentzian metrics: storage, prolongation, tangent vectors.

Symmetric index groups are stored once per orbit:

* a metric pair ``(mu, nu)`` has 10 ranks (:data:`PAIRS`);
* a derivative pair ``(alpha, beta)`` reuses the same table;
* a derivative triple has 20 ranks (:data:`TRIPLES`).

A :class:`JetPoint` holds ``x`` (4), ``y`` (10), ``z1`` (10 x 4),
``z2`` (10 x 10) and ``z3`` (10 x 20).  Every function that reads jet data
uses only the attributes ``x, y, z1, z2, z3``, so the same code runs on
numeric jets and on jets whose entries are :class:`AlgArray` series.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import exprlang
from . import scalar_taylor as st
from .scalar_taylor import AlgArray

DIM = 4
PAIRS: tuple[tuple[int, int], ...] = tuple(itertools.combinations_with_replacement(range(DIM), 2))
TRIPLES: tuple[tuple[int, int, int], ...] = tuple(
    itertools.combinations_with_replacement(range(DIM), 3))

PAIR_RANK = np.zeros((DIM, DIM), dtype=np.intp)
for _r, (_a, _b) in enumerate(PAIRS):
    PAIR_RANK[_a, _b] = PAIR_RANK[_b, _a] = _r

TRIPLE_RANK = np.zeros((DIM, DIM, DIM), dtype=np.intp)
for _r, _t in enumerate(TRIPLES):
    for _p in itertools.permutations(_t):
        TRIPLE_RANK[_p] = _r


def _orbit_size(idx: Sequence[int]) -> int:
    counts = np.bincount(np.asarray(idx), minlength=DIM)
    return math.factorial(len(idx)) // math.prod(math.factorial(int(c)) for c in counts)


PAIR_MULT = np.array([_orbit_size(p) for p in PAIRS], dtype=float)
TRIPLE_MULT = np.array([_orbit_size(t) for t in TRIPLES], dtype=float)

ETA = np.diag([-1.0, 1.0, 1.0, 1.0])

N_Y, N_Z1, N_Z2, N_Z3 = 10, 40, 100, 200
N_GRAVITY = DIM + N_Y + N_Z1 + N_Z2 + N_Z3  # 354
N_MATTER = 1 + DIM
N_TOTAL = N_GRAVITY + N_MATTER  # 359


class SignatureError(ValueError):
    """Metric is not Lorentzian with signature (-,+,+,+)."""


def pair_rank(mu: int, nu: int) -> int:
    _check_indices((mu, nu))
    return int(PAIR_RANK[mu, nu])


def triple_rank(a: int, b: int, c: int) -> int:
    _check_indices((a, b, c))
    return int(TRIPLE_RANK[a, b, c])


def _check_indices(idx) -> None:
    for i in idx:
        if not 0 <= int(i) < DIM:
            raise IndexError(f"index {i} outside 0..{DIM - 1}")


def sym_matrix(v):
    """10 stored pair values -> full symmetric 4x4 (numeric or AlgArray)."""
    return v[PAIR_RANK]


def sym_pack(m) -> np.ndarray:
    """Full symmetric 4x4 -> 10 stored values (reads the upper triangle)."""
    rows = np.array([p[0] for p in PAIRS])
    cols = np.array([p[1] for p in PAIRS])
    return m[rows, cols]


def check_lorentzian(y_matrix, where: str = "") -> None:
    m = np.asarray(y_matrix, dtype=float)
    if not np.all(np.isfinite(m)):
        raise SignatureError(f"non-finite metric{where}")
    eig = np.linalg.eigvalsh(0.5 * (m + m.T))
    if np.sum(eig < 0) != 1 or np.sum(eig > 0) != 3:
        raise SignatureError(f"metric{where} is not Lorentzian (eigenvalues {eig})")


# -- jet points ------------------------------------------------------------

_LEVEL_SHAPES = {"y": (N_Y,), "z1": (10, DIM), "z2": (10, 10), "z3": (10, 20)}


@dataclass(frozen=True)
class JetPoint:
    """A point of J^3 in symmetry-reduced storage.

    ``order`` records the highest level filled from actual data; higher
    levels are zero.
    """

    x: np.ndarray
    y: np.ndarray
    z1: np.ndarray = field(default_factory=lambda: np.zeros((10, DIM)))
    z2: np.ndarray = field(default_factory=lambda: np.zeros((10, 10)))
    z3: np.ndarray = field(default_factory=lambda: np.zeros((10, 20)))
    order: int = 3

    def __post_init__(self):
        for name in ("x", "y", "z1", "z2", "z3"):
            arr = np.array(getattr(self, name), dtype=float)
            expected = (DIM,) if name == "x" else _LEVEL_SHAPES[name]
            if arr.shape != expected:
                raise ValueError(f"{name} has shape {arr.shape}, expected {expected}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def minkowski(cls, x=(0.0, 0.0, 0.0, 0.0)) -> "JetPoint":
        return cls(np.asarray(x, dtype=float), sym_pack(ETA))

    @property
    def metric(self) -> np.ndarray:
        return sym_matrix(self.y)

    def validate(self) -> "JetPoint":
        check_lorentzian(self.metric)
        return self

    # -- symmetric component access --
    def _locate(self, level: str, idx: Sequence[int]):
        _check_indices(idx)
        need = {"y": 2, "z1": 3, "z2": 4, "z3": 5}[level]
        if len(idx) != need:
            raise ValueError(f"{level} takes {need} indices, got {len(idx)}")
        r = PAIR_RANK[idx[0], idx[1]]
        if level == "y":
            return (r,)
        if level == "z1":
            return (r, idx[2])
        if level == "z2":
            return (r, PAIR_RANK[idx[2], idx[3]])
        return (r, TRIPLE_RANK[idx[2], idx[3], idx[4]])

    def get(self, level: str, *idx: int) -> float:
        return float(getattr(self, level)[self._locate(level, idx)])

    def set(self, level: str, *idx_and_value) -> "JetPoint":
        """Return a copy with one symmetric component replaced."""
        *idx, value = idx_and_value
        arr = np.array(getattr(self, level))
        arr[self._locate(level, idx)] = value
        return self.replace(**{level: arr})

    def replace(self, **kwargs) -> "JetPoint":
        fields = dict(x=self.x, y=self.y, z1=self.z1, z2=self.z2, z3=self.z3, order=self.order)
        fields.update(kwargs)
        return JetPoint(**fields)

    def truncated(self, order: int) -> "JetPoint":
        """Forget levels above ``order`` (zero-filled)."""
        kw = {}
        if order < 1:
            kw["z1"] = np.zeros((10, DIM))
        if order < 2:
            kw["z2"] = np.zeros((10, 10))
        if order < 3:
            kw["z3"] = np.zeros((10, 20))
        return self.replace(order=min(order, self.order), **kw)


@dataclass(frozen=True)
class GenericJet:
    """Jet data whose entries may be algebra-valued (used for differentiation)."""

    x: object
    y: object
    z1: object
    z2: object
    z3: object = None


def full_tensors(jet):
    """Full-index views ``(g, dg, ddg, dddg)``; ``dddg`` is None without z3."""
    g = jet.y[PAIR_RANK]
    dg = jet.z1[PAIR_RANK]
    ddg = jet.z2[PAIR_RANK][:, :, PAIR_RANK]
    dddg = None if jet.z3 is None else jet.z3[PAIR_RANK][:, :, TRIPLE_RANK]
    return g, dg, ddg, dddg


# -- metric families -------------------------------------------------------

class MetricFamily:
    """A section ``x -> g(x)`` given by a generic callable returning a 4x4 matrix.

    ``func`` receives a length-4 coordinate array (floats or AlgArray) and
    returns either a 4x4 AlgArray/ndarray or a sequence of 10 pair values.
    ``sampler(rng)`` draws a point inside the validity domain.
    """

    def __init__(self, name: str, func: Callable, sampler: Callable | None = None,
                 params: dict | None = None):
        self.name = name
        self._func = func
        self._sampler = sampler
        self.params = dict(params or {})

    def __repr__(self) -> str:
        return f"MetricFamily({self.name!r})"

    def metric(self, x) -> AlgArray:
        out = self._func(x)
        if isinstance(out, (list, tuple)):
            if len(out) != N_Y:
                raise ValueError("a family must return 10 pair components")
            return st.stack(list(out))[PAIR_RANK]
        return st.asalg(out)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        if self._sampler is None:
            return rng.uniform(-0.5, 0.5, size=DIM)
        return np.asarray(self._sampler(rng), dtype=float)

    def at(self, x) -> np.ndarray:
        return np.asarray(self.metric(np.asarray(x, dtype=float)).const)

    @classmethod
    def from_expressions(cls, name: str, exprs: dict, sampler=None) -> "MetricFamily":
        """Build from expression strings/ASTs keyed by 1-based pairs like ``"g11"`` or ``(0, 0)``.

        Missing components default to Minkowski values.
        """
        asts = {}
        for key, val in exprs.items():
            if isinstance(key, str):
                k = key.strip().lower().removeprefix("g")
                if len(k) != 2 or not k.isdigit():
                    raise ValueError(f"bad metric component key {key!r}")
                mu, nu = int(k[0]) - 1, int(k[1]) - 1
            else:
                mu, nu = key
            _check_indices((mu, nu))
            asts[int(PAIR_RANK[mu, nu])] = exprlang.parse(val) if isinstance(val, str) else val
        for r, (mu, nu) in enumerate(PAIRS):
            asts.setdefault(r, exprlang.Const(ETA[mu, nu]))

        def func(x):
            env = exprlang.coordinate_env(x)
            return [exprlang.eval_generic(asts[r], env) for r in range(N_Y)]

        fam = cls(name, func, sampler)
        fam.expressions = asts
        return fam


def minkowski() -> MetricFamily:
    return MetricFamily("minkowski", lambda x: st.asalg(ETA), params={})


def schwarzschild(mass: float = 1.0, r_range=(2.5, 10.0)) -> MetricFamily:
    """Schwarzschild chart (t, r, theta, phi); valid for r > 2M."""
    m = float(mass)

    def func(x):
        r, th = x[1], x[2]
        f = 1.0 - st.div(2.0 * m, r)
        s = st.sin(th)
        diag = [-f, st.div(1.0, f), r * r, r * r * s * s]
        zero = x[0] * 0.0
        comps = []
        for mu, nu in PAIRS:
            comps.append(diag[mu] if mu == nu else zero)
        return comps

    def sampler(rng):
        return np.array([rng.uniform(-1, 1), m * rng.uniform(*r_range),
                         rng.uniform(0.4, math.pi - 0.4), rng.uniform(-math.pi, math.pi)])

    return MetricFamily("schwarzschild", func, sampler, params={"M": m})


def kasner(p=(2.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0), t_range=(0.5, 3.0)) -> MetricFamily:
    """diag(-1, t^(2 p1), t^(2 p2), t^(2 p3)) with t = x^0 > 0."""
    p = tuple(float(v) for v in p)

    def func(x):
        lt = st.log(x[0])
        zero = x[0] * 0.0
        diag = [zero - 1.0] + [st.exp(2.0 * pi * lt) for pi in p]
        return [diag[mu] if mu == nu else zero for mu, nu in PAIRS]

    def sampler(rng):
        return np.array([rng.uniform(*t_range), *rng.uniform(-1, 1, size=3)])

    return MetricFamily("kasner", func, sampler, params={"p": p})


_MONOMIALS3 = [m for m in itertools.chain.from_iterable(
    itertools.combinations_with_replacement(range(DIM), d) for d in range(4))]


def _monomial_vector(x) -> AlgArray:
    """All monomials of degree <= 3 in the four coordinates, graded-lex order."""
    x = st.asalg(x)
    one = x[0] * 0.0 + 1.0
    out = [one]
    quad = {}
    for m in _MONOMIALS3[1:]:
        if len(m) == 1:
            out.append(x[m[0]])
        elif len(m) == 2:
            quad[m] = x[m[0]] * x[m[1]]
            out.append(quad[m])
        else:
            out.append(quad[m[:2]] * x[m[2]])
    return st.stack(out)


def polynomial_family(coeffs: np.ndarray, eps: float, name: str = "polynomial",
                      box: float = 0.5) -> MetricFamily:
    """g = eta + eps * P(x) with P a symmetric matrix of cubic polynomials.

    ``coeffs`` has shape (10, 35): one row per stored pair over the monomials
    of degree <= 3.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    base = sym_pack(ETA)

    def func(x):
        mono = _monomial_vector(x)
        comps = st.einsum("pm,m->p", eps * coeffs, mono) + base
        return comps[PAIR_RANK]

    def sampler(rng):
        return rng.uniform(-box, box, size=DIM)

    fam = MetricFamily(name, func, sampler, params={"eps": eps})
    fam.coeffs = coeffs
    return fam


def random_polynomial(rng: np.random.Generator, eps: float = 0.05, box: float = 0.5,
                      name: str = "random-polynomial") -> MetricFamily:
    """Random cubic perturbation of Minkowski, rejection-sampled for signature.

    The candidate is accepted when the metric is Lorentzian at the corners
    and at random points of the sampling box.
    """
    for _ in range(100):
        coeffs = rng.uniform(-1.0, 1.0, size=(N_Y, len(_MONOMIALS3)))
        fam = polynomial_family(coeffs, eps, name=name, box=box)
        probes = [np.array(c) * box for c in itertools.product((-1, 1), repeat=DIM)]
        probes += [rng.uniform(-box, box, DIM) for _ in range(16)]
        try:
            for p in probes:
                check_lorentzian(fam.at(p))
        except SignatureError:
            continue
        return fam
    raise SignatureError("could not sample a Lorentzian polynomial family")


def builtin_families(rng: np.random.Generator | None = None) -> list[MetricFamily]:
    rng = rng if rng is not None else np.random.default_rng(0)
    return [minkowski(), schwarzschild(1.0), kasner(), random_polynomial(rng)]


# -- prolongation ----------------------------------------------------------

def _storage_from_series(G: AlgArray, alg: st.TaylorAlgebra, k: int):
    """Stored jet levels (numeric) from an order-k Taylor series of the metric."""
    rows = np.array([p[0] for p in PAIRS])
    cols = np.array([p[1] for p in PAIRS])
    c = G.c[rows, cols]  # (10, dim)
    y = c[:, 0].copy()
    z1 = np.zeros((10, DIM))
    z2 = np.zeros((10, 10))
    z3 = np.zeros((10, 20))
    if k >= 1:
        for a in range(DIM):
            z1[:, a] = c[:, alg.rank(alg.unit(a))]
    if k >= 2:
        for s, (a, b) in enumerate(PAIRS):
            m = [0] * DIM
            m[a] += 1
            m[b] += 1
            z2[:, s] = c[:, alg.rank(m)] * math.prod(math.factorial(v) for v in m)
    if k >= 3:
        for s, tri in enumerate(TRIPLES):
            m = [0] * DIM
            for v in tri:
                m[v] += 1
            z3[:, s] = c[:, alg.rank(m)] * math.prod(math.factorial(v) for v in m)
    return y, z1, z2, z3


def prolong(family: MetricFamily, x, k: int = 3, check: bool = True) -> JetPoint:
    """k-jet of the section at ``x`` (levels above k zero-filled)."""
    if not 0 <= k <= 3:
        raise ValueError("jet order must be in 0..3")
    x = np.asarray(x, dtype=float)
    alg = st.taylor_algebra(DIM, k)
    G = st.asalg(family.metric(alg.variables(x)), alg)
    y, z1, z2, z3 = _storage_from_series(G, alg, k)
    jet = JetPoint(x, y, z1, z2, z3, order=k)
    if check:
        check_lorentzian(jet.metric, f" of {family.name} at x={x}")
    return jet


def section_series(family: MetricFamily, x, order: int, levels: int = 3,
                   base: st.Algebra | None = None) -> GenericJet:
    """Jet fields along the section as Taylor series in ``x`` of the given order.

    Returns a :class:`GenericJet` whose ``y, z1, ...`` are AlgArrays over
    ``taylor_algebra(4, order)``: level j is the j-th derivative of the
    metric, expanded to ``order`` (requires a metric lift of order
    ``order + levels``).
    """
    x = np.asarray(x, dtype=float)
    big = st.taylor_algebra(DIM, order + levels)
    G = st.asalg(family.metric(big.variables(x)), big)
    Gp = sym_pack(G)  # (10,) series

    def derivs(arr, multi):
        alg = big
        for a in multi:
            arr = alg.diff(arr, a)
            alg = arr.alg
        return alg.truncate(arr, order) if alg.order > order else arr

    xs = st.taylor_algebra(DIM, order).variables(x)
    y = derivs(Gp, ())
    z1 = st.stack([derivs(Gp, (a,)) for a in range(DIM)], axis=1) if levels >= 1 else None
    z2 = st.stack([derivs(Gp, p) for p in PAIRS], axis=1) if levels >= 2 else None
    z3 = st.stack([derivs(Gp, t) for t in TRIPLES], axis=1) if levels >= 3 else None
    return GenericJet(xs, y, z1, z2, z3)


def contact_residual(family: MetricFamily, x, jet: JetPoint | None = None) -> float:
    """Largest pairing of the contact forms with the section's tangent vectors.

    The section tangent along ``e_lambda`` has fibre components
    ``d_lambda g``, ``d_lambda dg``, ``d_lambda ddg``; the contact forms
    ``dy - z1 dx``, ``dz1 - z2 dx``, ``dz2 - z3 dx`` evaluated on it at
    ``jet`` (default: the prolongation itself) give the residual.
    """
    x = np.asarray(x, dtype=float)
    if jet is None:
        jet = prolong(family, x, 3)
    tangents = section_tangents(family, x)
    _, dg, ddg, dddg = full_tensors(jet)
    worst = 0.0
    for lam, v in enumerate(tangents):
        g_t, dg_t, ddg_t, _ = full_tensors(GenericJet(None, v.dy, v.dz1, v.dz2, v.dz3))
        worst = max(worst,
                    float(np.max(np.abs(g_t - dg[..., lam]))),
                    float(np.max(np.abs(dg_t - ddg[..., lam]))),
                    float(np.max(np.abs(ddg_t - dddg[..., lam]))))
    return worst


# -- tangent vectors -------------------------------------------------------

@dataclass(frozen=True)
class JetTangentVector:
    """Tangent vector at a jet point, in the stored coordinate basis.

    ``dt`` and ``dzt`` are the scalar-field fibre and gradient components,
    used only by the matter forms.
    """

    dx: np.ndarray
    dy: np.ndarray
    dz1: np.ndarray
    dz2: np.ndarray
    dz3: np.ndarray
    dt: float = 0.0
    dzt: np.ndarray = field(default_factory=lambda: np.zeros(DIM))

    def __post_init__(self):
        shapes = {"dx": (DIM,), "dy": (N_Y,), "dz1": (10, DIM), "dz2": (10, 10),
                  "dz3": (10, 20), "dzt": (DIM,)}
        for name, shape in shapes.items():
            arr = np.array(getattr(self, name), dtype=float).reshape(shape)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def zero(cls) -> "JetTangentVector":
        return cls.from_flat(np.zeros(N_TOTAL))

    @classmethod
    def random(cls, rng: np.random.Generator, scale: float = 1.0,
               matter: bool = False) -> "JetTangentVector":
        flat = rng.normal(scale=scale, size=N_TOTAL)
        if not matter:
            flat[N_GRAVITY:] = 0.0
        return cls.from_flat(flat)

    @classmethod
    def coordinate(cls, beta: int) -> "JetTangentVector":
        flat = np.zeros(N_TOTAL)
        flat[beta] = 1.0
        return cls.from_flat(flat)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.dx, self.dy, self.dz1.ravel(), self.dz2.ravel(),
                               self.dz3.ravel(), [self.dt], self.dzt])

    @classmethod
    def from_flat(cls, v) -> "JetTangentVector":
        v = np.asarray(v, dtype=float)
        if v.shape == (N_GRAVITY,):
            v = np.concatenate([v, np.zeros(N_MATTER)])
        if v.shape != (N_TOTAL,):
            raise ValueError(f"flat vector must have length {N_GRAVITY} or {N_TOTAL}")
        o = np.cumsum([0, DIM, N_Y, N_Z1, N_Z2, N_Z3, 1, DIM])
        return cls(v[o[0]:o[1]], v[o[1]:o[2]], v[o[2]:o[3]], v[o[3]:o[4]], v[o[4]:o[5]],
                   v[o[5]], v[o[6]:o[7]])

    def __add__(self, other: "JetTangentVector") -> "JetTangentVector":
        return JetTangentVector.from_flat(self.flat() + other.flat())

    def __sub__(self, other: "JetTangentVector") -> "JetTangentVector":
        return JetTangentVector.from_flat(self.flat() - other.flat())

    def __mul__(self, s: float) -> "JetTangentVector":
        return JetTangentVector.from_flat(self.flat() * float(s))

    __rmul__ = __mul__

    def replace(self, **kwargs) -> "JetTangentVector":
        fields = dict(dx=self.dx, dy=self.dy, dz1=self.dz1, dz2=self.dz2, dz3=self.dz3,
                      dt=self.dt, dzt=self.dzt)
        fields.update(kwargs)
        return JetTangentVector(**fields)


def section_tangents(family: MetricFamily, x, field_series=None) -> list[JetTangentVector]:
    """Pushforwards ``(j^3 sigma)_* e_lambda`` of the coordinate directions.

    ``field_series`` optionally supplies ``(phi_coeff_gradient, phi_hessian)``
    for the matter block: ``dt = d_lambda phi`` and ``dzt = d_lambda d phi``.
    """
    ser = section_series(family, x, order=1, levels=3)
    alg = st.taylor_algebra(DIM, 1)
    out = []
    for lam in range(DIM):
        col = alg.rank(alg.unit(lam))
        dx = np.zeros(DIM)
        dx[lam] = 1.0
        kw = {}
        if field_series is not None:
            grad, hess = field_series
            kw = {"dt": grad[lam], "dzt": hess[lam]}
        out.append(JetTangentVector(dx, ser.y.c[..., col], ser.z1.c[..., col],
                                    ser.z2.c[..., col], ser.z3.c[..., col], **kw))
    return out


def random_jet(rng: np.random.Generator, order: int = 3, spread: float = 0.3,
               deriv_scale: float = 1.0) -> JetPoint:
    """Random Lorentzian jet: ``y`` near a random boost of eta, random z-levels."""
    for _ in range(100):
        a = np.eye(DIM) + spread * rng.normal(size=(DIM, DIM))
        if np.linalg.det(a) <= 0:
            a[:, 0] *= -1
        m = a.T @ ETA @ a
        try:
            check_lorentzian(m)
        except SignatureError:
            continue
        if np.linalg.cond(m) > 20.0:
            continue
        jet = JetPoint(rng.uniform(-1, 1, DIM), sym_pack(m),
                       deriv_scale * rng.normal(size=(10, DIM)),
                       deriv_scale * rng.normal(size=(10, 10)),
                       deriv_scale * rng.normal(size=(10, 20)), order=3)
        return jet.truncated(order)
    raise SignatureError("could not sample a Lorentzian jet")
