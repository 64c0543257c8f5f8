"""Coordinate changes and two-chart checks of the transformation laws.

A :class:`Diffeo` maps primed coordinates to unprimed ones,
``x = forward(x')``, and carries its exact inverse ``x' = inverse(x)``.
Metric families are given in the primed chart; the unprimed family is the
pullback ``g_{mn}(x) = g'_{m'n'}(x'(x)) x'^{m'}_{,m} x'^{n'}_{,n}``, and
its jets come from re-prolongation.

Naming: ``J[m, m'] = x^m_{,m'}``, ``H[m, m', n'] = x^m_{,m'n'}``,
``T[m, m', n', l']`` the third derivatives, ``K[m', m] = x'^{m'}_{,m}``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import exprlang
from . import scalar_taylor as st
from .dedonder_form import DeDonderCoefficients, theta_eval
from .jet_space import (DIM, PAIR_RANK, PAIRS, JetPoint, JetTangentVector, MetricFamily,
                        prolong, sym_pack)
from .lagrangians import MatterState, matter, scalar_field_jet
from .ostrogradski import Momenta, matter_momentum, momenta_on_jet, scaled_error
from .scalar_taylor import AlgArray

einsum = st.einsum
_ROWS = np.array([p[0] for p in PAIRS])
_COLS = np.array([p[1] for p in PAIRS])


class OrientationError(ValueError):
    """The coordinate change reverses orientation."""


class SingularJacobianError(ValueError):
    """The Jacobian determinant is too close to zero."""


def jacobian_blocks(func: Callable, x, order: int) -> list[AlgArray]:
    """``[f, df, d2f, ...]`` of a map R^4 -> R^4 at ``x`` (numeric or AlgArray).

    Derivative tensors are indexed ``[out, in_1, ..., in_k]`` and live in
    the algebra of ``x``.
    """
    x = st.asalg(x)
    B = x.alg
    T = st.taylor_algebra(DIM, order)
    alg = st.tensor(T, B)
    X = alg.embed_right(x) + alg.embed_left(T.variables(np.zeros(DIM)))
    c = alg.split(st.asalg(_as_vector(func(X)), alg))  # (4, T.dim, B.dim)
    blocks = [AlgArray(B, np.ascontiguousarray(c[:, 0, :]))]
    for k in range(1, order + 1):
        arr = np.zeros((DIM,) + (DIM,) * k + (B.dim,))
        for idx in itertools.product(range(DIM), repeat=k):
            m = [0] * DIM
            for v in idx:
                m[v] += 1
            fact = math.prod(math.factorial(v) for v in m)
            arr[(slice(None),) + idx] = fact * c[:, T.rank(m), :]
        blocks.append(AlgArray(B, arr))
    return blocks


def _as_vector(out) -> AlgArray:
    if isinstance(out, AlgArray):
        return out
    return st.stack(list(out))


class Diffeo:
    """Orientation-preserving coordinate change with both directions supplied."""

    def __init__(self, name: str, forward: Callable, inverse: Callable, domain: str = ""):
        self.name = name
        self._forward = forward
        self._inverse = inverse
        self.domain = domain

    def __repr__(self) -> str:
        return f"Diffeo({self.name!r})"

    def forward(self, xp) -> AlgArray:
        return _as_vector(self._forward(xp))

    def inverse(self, x) -> AlgArray:
        return _as_vector(self._inverse(x))

    def to_unprimed(self, xp) -> np.ndarray:
        return np.asarray(self.forward(st.asalg(np.asarray(xp, dtype=float))).const)

    def to_primed(self, x) -> np.ndarray:
        return np.asarray(self.inverse(st.asalg(np.asarray(x, dtype=float))).const)

    def composition_error(self, xp) -> float:
        """max |inverse(forward(x')) - x'|."""
        xp = np.asarray(xp, dtype=float)
        return float(np.max(np.abs(self.to_primed(self.to_unprimed(xp)) - xp)))

    @classmethod
    def from_expressions(cls, name: str, forward: Sequence, inverse: Sequence,
                         domain: str = "") -> "Diffeo":
        """Four forward expressions in the primed coordinates and four inverse ones,
        both written in the variables x1..x4."""
        fw = [exprlang.parse(e) if isinstance(e, str) else e for e in forward]
        inv = [exprlang.parse(e) if isinstance(e, str) else e for e in inverse]
        if len(fw) != DIM or len(inv) != DIM:
            raise ValueError("a diffeomorphism needs 4 forward and 4 inverse components")

        def make(asts):
            def f(x):
                env = exprlang.coordinate_env(x)
                return [x[0] * 0.0 + exprlang.eval_generic(a, env) for a in asts]
            return f

        d = cls(name, make(fw), make(inv), domain)
        d.expressions = (fw, inv)
        return d


def identity() -> Diffeo:
    return Diffeo("identity", lambda x: x, lambda x: x)


def linear(A) -> Diffeo:
    """x = A x' with det A > 0."""
    A = np.asarray(A, dtype=float)
    if np.linalg.det(A) <= 0:
        raise OrientationError("linear map must have positive determinant")
    Ainv = np.linalg.inv(A)
    return Diffeo("linear", lambda xp: einsum("ij,j->i", A, st.asalg(xp)),
                  lambda x: einsum("ij,j->i", Ainv, st.asalg(x)))


def random_linear(rng: np.random.Generator, spread: float = 0.2) -> Diffeo:
    A = np.eye(DIM) + spread * rng.uniform(-1, 1, size=(DIM, DIM))
    if np.linalg.det(A) <= 0:
        A[:, 0] *= -1
    return linear(A)


def _monomials_later(mu: int, degree: int) -> list[tuple[int, ...]]:
    later = range(mu + 1, DIM)
    return [m for d in range(1, degree + 1)
            for m in itertools.combinations_with_replacement(later, d)]


def triangular_polynomial(rng: np.random.Generator, degree: int = 2, eps: float = 0.01,
                          center=None, halfwidth=None, A=None) -> Diffeo:
    """``x = A T(x')`` with the triangular polynomial map

    ``T^m(x') = x'^m exp(eps a_m(u)) + eps h_m b_m(u)``, ``u = (x' - center) / halfwidth``,

    where ``a_m``, ``b_m`` are random polynomials of the given degree in the
    coordinates after ``m`` only.  The inverse is exact by back-substitution.
    """
    center = np.zeros(DIM) if center is None else np.asarray(center, dtype=float)
    halfwidth = np.ones(DIM) if halfwidth is None else np.asarray(halfwidth, dtype=float)
    A = np.eye(DIM) if A is None else np.asarray(A, dtype=float)
    if np.linalg.det(A) <= 0:
        raise OrientationError("linear factor must have positive determinant")
    Ainv = np.linalg.inv(A)
    monos = [_monomials_later(mu, degree) for mu in range(DIM)]
    ca = [rng.uniform(-1, 1, size=len(m)) for m in monos]
    cb = [rng.uniform(-1, 1, size=len(m)) for m in monos]

    def poly(coef, mono, u):
        total = 0.0
        for c, m in zip(coef, mono):
            term = c
            for v in m:
                term = term * u[v]
            total = total + term
        return total

    def T(xp):
        u = [(xp[i] - center[i]) / halfwidth[i] for i in range(DIM)]
        return [xp[mu] * st.exp(eps * poly(ca[mu], monos[mu], u))
                + eps * halfwidth[mu] * poly(cb[mu], monos[mu], u) for mu in range(DIM)]

    def forward(xp):
        xp = st.asalg(xp)
        return einsum("ij,j->i", A, st.stack(T(xp)))

    def inverse(x):
        w = einsum("ij,j->i", Ainv, st.asalg(x))
        xp: list = [None] * DIM
        u: list = [None] * DIM
        for mu in reversed(range(DIM)):
            a = eps * poly(ca[mu], monos[mu], u)
            b = eps * halfwidth[mu] * poly(cb[mu], monos[mu], u)
            xp[mu] = (w[mu] - b) * st.exp(-a)
            u[mu] = (xp[mu] - center[mu]) / halfwidth[mu]
        return st.stack(xp)

    return Diffeo(f"polynomial-{degree}", forward, inverse,
                  domain=f"|x' - center| <= halfwidth, center={np.round(center, 3).tolist()}")


def builtin_diffeos(rng: np.random.Generator, family: MetricFamily | None = None,
                    eps: float = 0.01) -> list[Diffeo]:
    """Linear, quadratic and cubic maps sized to the family's sampling box."""
    center, half = family_box(family, rng) if family is not None else (np.zeros(DIM),
                                                                         np.ones(DIM))
    out = [random_linear(rng)]
    for degree in (2, 3):
        A = random_linear(rng, spread=0.1)
        out.append(triangular_polynomial(rng, degree, eps, center, half,
                                         A=matrix_of(A)))
    return out


def matrix_of(d: Diffeo) -> np.ndarray:
    return np.array([d.to_unprimed(e) for e in np.eye(DIM)]).T


def family_box(family: MetricFamily, rng: np.random.Generator, n: int = 64):
    """Center and half-width of the family's sampling domain (estimated from samples)."""
    pts = np.array([family.sample(np.random.default_rng(12345 + i)) for i in range(n)])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    half = np.maximum(0.5 * (hi - lo), 1e-3)
    return 0.5 * (hi + lo), half


# -- Jacobians -----------------------------------------------------------------

@dataclass(frozen=True)
class JacobianPack:
    J: np.ndarray      # x^m_{,m'}          [m, m']
    H: np.ndarray      # x^m_{,m'n'}        [m, m', n']
    T: np.ndarray      # x^m_{,m'n'l'}      [m, m', n', l']
    K: np.ndarray      # x'^{m'}_{,m}       [m', m]
    KH: np.ndarray     # x'^{m'}_{,mn}
    KT: np.ndarray
    det_K: float       # det(x'^{l'}_{,l})
    det_J: float


def jacobians(d: Diffeo, xprime, check: bool = True) -> JacobianPack:
    xp = np.asarray(xprime, dtype=float)
    fw = jacobian_blocks(d.forward, xp, 3)
    x = np.asarray(fw[0].const)
    inv = jacobian_blocks(d.inverse, x, 3)
    J, H, T = (np.asarray(b.const) for b in fw[1:])
    K, KH, KT = (np.asarray(b.const) for b in inv[1:])
    det_K = float(np.linalg.det(K))
    pack = JacobianPack(J, H, T, K, KH, KT, det_K, float(np.linalg.det(J)))
    if check:
        if abs(det_K) < 1e-10:
            raise SingularJacobianError(f"det(dx'/dx) = {det_K:.3e} at x' = {xp}")
        if det_K < 0:
            raise OrientationError(f"det(dx'/dx) = {det_K:.3e} < 0 at x' = {xp}")
        back = np.asarray(inv[0].const)
        if np.max(np.abs(back - xp)) > 1e-9 * max(1.0, np.max(np.abs(xp))):
            raise ValueError(f"inverse map is inconsistent at x' = {xp}")
    return pack


def inverse_consistency(pack: JacobianPack) -> float:
    return float(np.max(np.abs(pack.J @ pack.K - np.eye(DIM))))


# -- pullback family -----------------------------------------------------------

def pullback_family(family: MetricFamily, d: Diffeo) -> MetricFamily:
    """The primed family expressed in unprimed coordinates."""

    def func(x):
        x = st.asalg(x)
        xp_and_K = jacobian_blocks(d.inverse, x, 1)
        xp, K = xp_and_K
        gp = family.metric(xp)
        t = einsum("ab,bn->an", gp, K)
        return einsum("am,an->mn", K, t)

    def sampler(rng):
        return d.to_unprimed(family.sample(rng))

    return MetricFamily(f"{family.name}@{d.name}", func, sampler, params=family.params)


# -- transformation of jets ------------------------------------------------------

def transform_jet(jetp: JetPoint, d: Diffeo) -> JetPoint:
    """Unprimed jet (orders 0-2) from a primed jet by solving the prolonged laws.

    ``y = y' K K``; the first- and second-order laws give primed ``z`` in
    terms of unprimed quantities and are solved for the unprimed ``z``.
    """
    pk = jacobians(d, jetp.x)
    J, H, T, K = pk.J, pk.H, pk.T, pk.K
    gp = jetp.metric
    dgp = np.asarray(jetp.z1)[PAIR_RANK]
    ddgp = np.asarray(jetp.z2)[PAIR_RANK][:, :, PAIR_RANK]

    g = np.einsum("ab,am,bn->mn", gp, K, K)
    # z'_{m'n'a'} = z_{mna} J J J + y_{mn} (H^m_{m'a'} J^n_{n'} + J^m_{m'} H^n_{n'a'})
    inhom1 = (np.einsum("mn,mpa,nq->pqa", g, H, J) + np.einsum("mn,mp,nqa->pqa", g, J, H))
    dg = np.einsum("pqa,pm,qn,ak->mnk", dgp - inhom1, K, K, K)
    # second order: subtract all terms not containing z_{abgl}
    z1 = dg
    inhom2 = (np.einsum("abg,apl,bq,gr->pqrl", z1, H, J, J)
              + np.einsum("abg,ap,bql,gr->pqrl", z1, J, H, J)
              + np.einsum("abg,ap,bq,grl->pqrl", z1, J, J, H)
              + np.einsum("abl,ls,apr,bq->pqrs", z1, J, H, J)
              + np.einsum("abl,ls,ap,bqr->pqrs", z1, J, J, H)
              + np.einsum("ab,aprs,bq->pqrs", g, T, J)
              + np.einsum("ab,apr,bqs->pqrs", g, H, H)
              + np.einsum("ab,aps,bqr->pqrs", g, H, H)
              + np.einsum("ab,ap,bqrs->pqrs", g, J, T))
    ddg = np.einsum("pqrs,pa,qb,rg,sl->abgl", ddgp - inhom2, K, K, K, K)
    x = d.to_unprimed(jetp.x)
    return JetPoint(x, sym_pack(g), dg[_ROWS, _COLS], ddg[_ROWS, _COLS][:, _ROWS, _COLS],
                    order=min(2, jetp.order))


# -- two-chart checks ----------------------------------------------------------

@dataclass(frozen=True)
class TwoChartJets:
    xp: np.ndarray
    x: np.ndarray
    jet_p: JetPoint
    jet: JetPoint
    pack: JacobianPack


def two_chart_jets(family: MetricFamily, d: Diffeo, xprime,
                   pulled: MetricFamily | None = None) -> TwoChartJets:
    xp = np.asarray(xprime, dtype=float)
    pulled = pulled or pullback_family(family, d)
    x = d.to_unprimed(xp)
    return TwoChartJets(xp, x, prolong(family, xp, 3), prolong(pulled, x, 3), jacobians(d, xp))


def check_density(L, family: MetricFamily, d: Diffeo, xprime, charts=None) -> float:
    """|L(primed jet) det(x'_{,x}) - L(unprimed jet)| / max(1, |both|)."""
    tc = charts or two_chart_jets(family, d, xprime)
    lp = float(st.asalg(L(tc.jet_p)).const) * tc.pack.det_K
    lu = float(st.asalg(L(tc.jet)).const)
    return scaled_error(lp, lu)


def transform_momenta(mp: Momenta, pack: JacobianPack) -> Momenta:
    """Primed momenta -> unprimed by the tensor-density laws.

    ``p4 = p4' J J J J det K``;
    ``p3 = (p3' J J J + p4'^{m'n'a'b'} J^a_{a'} (H^m_{m'b'} J^n_{n'} + J^m_{m'} H^n_{n'b'})) det K``.
    The mixed-index second derivatives contract ``x^m_{,m'b} x^b_{,b'}`` to
    ``H^m_{m'b'}``.
    """
    J, H, dk = pack.J, pack.H, pack.det_K
    p3p = np.asarray(mp.p3)[PAIR_RANK]
    p4p = np.asarray(mp.p4)[PAIR_RANK][:, :, PAIR_RANK]
    p4 = np.einsum("pqrs,mp,nq,ar,bs->mnab", p4p, J, J, J, J) * dk
    p3 = (np.einsum("pqr,mp,nq,ar->mna", p3p, J, J, J)
          + np.einsum("pqrs,ar,mps,nq->mna", p4p, J, H, J)
          + np.einsum("pqrs,ar,mp,nqs->mna", p4p, J, J, H)) * dk
    return Momenta(p3[_ROWS, _COLS], p4[_ROWS, _COLS][:, _ROWS, _COLS])


def check_momenta_laws(L, family: MetricFamily, d: Diffeo, xprime,
                       charts=None) -> tuple[float, float]:
    """Scaled residuals (p4 law, p3 law) between transformed primed and direct unprimed momenta."""
    tc = charts or two_chart_jets(family, d, xprime)
    mp = momenta_on_jet(L, tc.jet_p)
    mu = momenta_on_jet(L, tc.jet)
    mt = transform_momenta(mp, tc.pack)
    return scaled_error(mt.p4, mu.p4), scaled_error(mt.p3, mu.p3)


def coordinate_map(d: Diffeo):
    """The map (x', y', z1') -> (x, y, z1) induced on jet coordinates, generic."""

    def phi(xp: AlgArray, yp: AlgArray, z1p: AlgArray):
        _, J, H = jacobian_blocks(d.forward, xp, 2)
        x = d.forward(xp)
        K = st.inverse_matrix(J)
        gp = yp[PAIR_RANK]
        g = einsum("am,an->mn", K, einsum("ab,bn->an", gp, K))
        dgp = z1p[PAIR_RANK]
        inhom = (einsum("mpa,nq->mnpqa", H, J))
        inhom = einsum("mn,mnpqa->pqa", g, inhom)
        inhom = inhom + einsum("pqa->qpa", inhom)
        t = dgp - inhom
        t = einsum("pqa,ak->pqk", t, K)
        t = einsum("pqk,qn->pnk", t, K)
        dg = einsum("pnk,pm->mnk", t, K)
        return x, sym_pack(g), dg[_ROWS, _COLS]

    return phi


def push_vector(d: Diffeo, jetp: JetPoint, v: JetTangentVector) -> JetTangentVector:
    """Pushforward of the (dx, dy, dz1) part of ``v``; dz2, dz3 are left zero."""
    dual = st.dual_algebra()

    def lift(base, dv):
        base = np.asarray(base, dtype=float)
        return AlgArray(dual, np.stack([base, np.asarray(dv, dtype=float)], axis=-1))

    x, y, z1 = coordinate_map(d)(lift(jetp.x, v.dx), lift(jetp.y, v.dy), lift(jetp.z1, v.dz1))
    return JetTangentVector(x.c[..., 1], y.c[..., 1], z1.c[..., 1], np.zeros((10, 10)),
                            np.zeros((10, 20)))


def check_theta_invariance(L, family: MetricFamily, d: Diffeo, xprime,
                           vectors: Sequence[Sequence[JetTangentVector]] | None = None,
                           trials: int = 5, rng: np.random.Generator | None = None,
                           charts=None) -> float:
    """Worst ``|Theta(jet, pushed) - Theta'(jet', v')| / scale`` over vector draws.

    ``scale`` is the largest single wedge-term magnitude in either chart.
    When every term vanishes (vacuum section tangents) the ratio is rounding noise.
    """
    tc = charts or two_chart_jets(family, d, xprime)
    if vectors is None:
        rng = rng or np.random.default_rng(0)
        vectors = [[JetTangentVector.random(rng) for _ in range(4)] for _ in range(trials)]
    cp = _coeffs(L, tc.jet_p)
    cu = _coeffs(L, tc.jet)
    worst = 0.0
    for vs in vectors:
        pushed = [push_vector(d, tc.jet_p, v) for v in vs]
        a, sa = theta_eval(cp, tc.jet_p, vs)
        b, sb = theta_eval(cu, tc.jet, pushed)
        worst = max(worst, abs(a - b) / max(sa, sb, 1e-300))
    return worst


def _coeffs(L, jet) -> DeDonderCoefficients:
    m = momenta_on_jet(L, jet)
    return DeDonderCoefficients(float(st.asalg(L(jet)).const), np.asarray(m.p3),
                                np.asarray(m.p4))


def scalar_field_state(field, x, chart_map: Callable | None = None) -> MatterState:
    return scalar_field_jet(field, x, chart_map)[0]


def check_matter_invariance(family: MetricFamily, field, V, d: Diffeo, xprime,
                            pulled: MetricFamily | None = None) -> tuple[float, float]:
    """Scaled residuals of the q law ``q = q' det(x'_{,x}) J`` and of the matter density law."""
    xp = np.asarray(xprime, dtype=float)
    pulled = pulled or pullback_family(family, d)
    pack = jacobians(d, xp)
    x = d.to_unprimed(xp)
    yp = sym_pack(family.at(xp))
    y = sym_pack(pulled.at(x))
    sp = scalar_field_state(field, xp)
    su = scalar_field_state(field, x, chart_map=d.inverse)
    qp = np.asarray(matter_momentum(yp, sp))
    qu = np.asarray(matter_momentum(y, su))
    q_law = scaled_error(pack.det_K * pack.J @ qp, qu)
    lp = float(st.asalg(matter(yp, sp, V)).const) * pack.det_K
    lu = float(st.asalg(matter(y, su, V)).const)
    return q_law, scaled_error(lp, lu)
