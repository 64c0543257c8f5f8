"""De Donder forms on J^3 as multilinear evaluators on tangent vectors.

A k-form is a :class:`FormSum` of :class:`WedgeTerm` s, each a coefficient
times a wedge of k one-forms; on k vectors a term evaluates to
``coefficient * det[alpha_i(v_j)]``.  One-forms are either constant
covectors in the flat coordinate basis of :class:`JetTangentVector` or
differentials of functions on J^3 evaluated per vector by directional
derivatives.

Evaluations return ``(value, scale)`` where ``scale`` is the largest
absolute contribution of a single term, the natural yardstick for testing
that a value vanishes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import scalar_taylor as st
from .geometry import CurvaturePack
from .jet_space import (DIM, N_GRAVITY, N_TOTAL, N_Y, PAIR_MULT, PAIR_RANK, GenericJet,
                        JetTangentVector)
from .lagrangians import matter
from .ostrogradski import matter_momentum, momenta_along, momenta_on_jet

_OFF_Y = DIM
_OFF_Z1 = _OFF_Y + N_Y
_OFF_Z2 = _OFF_Z1 + 40
_OFF_Z3 = _OFF_Z2 + 100
_OFF_T = N_GRAVITY
_OFF_ZT = N_GRAVITY + 1


class OneForm:
    """A one-form: constant ``covector`` (length 359) or a per-vector function."""

    __slots__ = ("covector", "func")

    def __init__(self, covector: np.ndarray | None = None, func: Callable | None = None):
        if (covector is None) == (func is None):
            raise ValueError("give exactly one of covector or func")
        self.covector = covector
        self.func = func

    def values(self, vectors: Sequence[JetTangentVector]) -> np.ndarray:
        if self.covector is not None:
            return np.array([v.flat() @ self.covector for v in vectors])
        return np.array([float(self.func(v)) for v in vectors])

    def __call__(self, v: JetTangentVector) -> float:
        return float(self.values([v])[0])

    def __add__(self, other: "OneForm") -> "OneForm":
        if self.covector is not None and other.covector is not None:
            return OneForm(self.covector + other.covector)
        return OneForm(func=lambda v: self(v) + other(v))

    def __sub__(self, other: "OneForm") -> "OneForm":
        return self + (-1.0) * other

    def __rmul__(self, s: float) -> "OneForm":
        if self.covector is not None:
            return OneForm(float(s) * self.covector)
        return OneForm(func=lambda v: float(s) * self(v))


def _basis(index: int) -> OneForm:
    c = np.zeros(N_TOTAL)
    c[index] = 1.0
    return OneForm(c)


def dx(gamma: int) -> OneForm:
    return _basis(gamma)


def dy(r: int) -> OneForm:
    return _basis(_OFF_Y + r)


def dz1(r: int, a: int) -> OneForm:
    return _basis(_OFF_Z1 + r * DIM + a)


def dz2(r: int, s: int) -> OneForm:
    return _basis(_OFF_Z2 + r * 10 + s)


def dz3(r: int, t: int) -> OneForm:
    return _basis(_OFF_Z3 + r * 20 + t)


def dt() -> OneForm:
    return _basis(_OFF_T)


def dzt(mu: int) -> OneForm:
    return _basis(_OFF_ZT + mu)


class CachedDifferential:
    """Differentials of an array-valued function on J^3, evaluated per vector.

    ``compute(v)`` returns the directional derivative of the whole array
    along ``v``; results are cached by vector content.
    """

    def __init__(self, compute: Callable):
        self._compute = compute
        self._cache: dict[bytes, object] = {}

    def along(self, v: JetTangentVector):
        key = v.flat().tobytes()
        if key not in self._cache:
            self._cache[key] = self._compute(v)
        return self._cache[key]

    def component(self, pick: Callable) -> OneForm:
        return OneForm(func=lambda v: pick(self.along(v)))


@dataclass(frozen=True)
class WedgeTerm:
    coefficient: float
    forms: tuple


@dataclass
class FormSum:
    degree: int
    terms: list = field(default_factory=list)

    def add(self, coefficient: float, forms: Sequence[OneForm]) -> None:
        if len(forms) != self.degree:
            raise ValueError(f"term of degree {len(forms)} in a {self.degree}-form")
        self.terms.append(WedgeTerm(float(coefficient), tuple(forms)))

    def __add__(self, other: "FormSum") -> "FormSum":
        if other.degree != self.degree:
            raise ValueError("cannot add forms of different degree")
        return FormSum(self.degree, self.terms + other.terms)

    def evaluate(self, vectors: Sequence[JetTangentVector]) -> tuple[float, float]:
        if len(vectors) != self.degree:
            raise ValueError(f"a {self.degree}-form takes {self.degree} vectors")
        if not self.terms:
            return 0.0, 0.0
        flat = np.array([v.flat() for v in vectors])  # (k, 359)
        cache: dict[int, np.ndarray] = {}
        const_forms = {}
        for term in self.terms:
            for f in term.forms:
                if id(f) in cache or id(f) in const_forms:
                    continue
                if f.covector is not None:
                    const_forms[id(f)] = f.covector
                else:
                    cache[id(f)] = f.values(vectors)
        if const_forms:
            ids = list(const_forms)
            vals = np.array([const_forms[i] for i in ids]) @ flat.T
            cache.update(zip(ids, vals))
        mats = np.array([[cache[id(f)] for f in term.forms] for term in self.terms])
        coefs = np.array([term.coefficient for term in self.terms])
        contributions = coefs * np.linalg.det(mats)
        return float(np.sum(contributions)), float(np.max(np.abs(contributions)))

    def __call__(self, *vectors: JetTangentVector) -> float:
        return self.evaluate(vectors)[0]


def _others(beta: int) -> list[int]:
    return [g for g in range(DIM) if g != beta]


_DX = [dx(g) for g in range(DIM)]


def interior_d4x(beta: int) -> FormSum:
    """``d_beta _| d4x = (-1)^beta dx^0 ^ ... (omit beta) ... ^ dx^3``."""
    if not 0 <= beta < DIM:
        raise IndexError(f"direction {beta} outside 0..3")
    form = FormSum(3)
    form.add((-1.0) ** beta, [_DX[g] for g in _others(beta)])
    return form


def d4x() -> FormSum:
    form = FormSum(4)
    form.add(1.0, _DX)
    return form


# -- coefficients and Theta ----------------------------------------------------

@dataclass(frozen=True)
class DeDonderCoefficients:
    """``L``, ``p3`` (10 x 4) and ``p4`` (10 x 10) at one jet point."""

    L: float
    p3: np.ndarray
    p4: np.ndarray


def coefficients(L, jet) -> DeDonderCoefficients:
    value = float(st.asalg(L(jet)).const)
    m = momenta_on_jet(L, jet)
    return DeDonderCoefficients(value, np.asarray(m.p3), np.asarray(m.p4))


def _contact0(jet, r: int) -> OneForm:
    """dy_r - z1[r, b] dx^b."""
    c = np.zeros(N_TOTAL)
    c[_OFF_Y + r] = 1.0
    c[:DIM] = -np.asarray(jet.z1)[r]
    return OneForm(c)


def _contact1(jet, r: int, a: int) -> OneForm:
    """dz1[r, a] - z2[r, (a g)] dx^g."""
    c = np.zeros(N_TOTAL)
    c[_OFF_Z1 + r * DIM + a] = 1.0
    c[:DIM] = -np.asarray(jet.z2)[r, PAIR_RANK[a]]
    return OneForm(c)


def theta_form(coeffs: DeDonderCoefficients, jet) -> FormSum:
    """L d4x + p4^{mnab} (dz_{mna} - z_{mnag} dx^g) ^ i_b + p3^{mna} (dy_{mn} - z_{mnb} dx^b) ^ i_a.

    Sums over all index values; stored components carry their orbit
    multiplicity in the coefficients.
    """
    form = FormSum(4)
    form.add(coeffs.L, _DX)
    for r in range(N_Y):
        for a in range(DIM):
            contact = _contact1(jet, r, a)
            for b in range(DIM):
                coef = PAIR_MULT[r] * coeffs.p4[r, PAIR_RANK[a, b]] * (-1.0) ** b
                form.add(coef, [contact] + [_DX[g] for g in _others(b)])
    for r in range(N_Y):
        contact = _contact0(jet, r)
        for a in range(DIM):
            coef = PAIR_MULT[r] * coeffs.p3[r, a] * (-1.0) ** a
            form.add(coef, [contact] + [_DX[g] for g in _others(a)])
    return form


def theta_eval(coeffs: DeDonderCoefficients, jet, vectors) -> tuple[float, float]:
    return theta_form(coeffs, jet).evaluate(vectors)


def theta_hilbert_closed_form(jet) -> FormSum:
    """Closed form of Theta for the Hilbert Lagrangian, built from Christoffel symbols.

    Gamma_{lmn} Gamma_{abc} (g^{ac} g^{mn} g^{bl} - g^{bl} g^{am} g^{cn}) sqrt(-g) d4x
    + 1/2 (-g^{am} G^b - g^{bm} G^a + G^{bam} + G^{abm}) sqrt(-g) dg_{ab} ^ i_m
    + 1/2 (g^{am} g^{bn} + g^{an} g^{bm} - 2 g^{ab} g^{mn}) sqrt(-g) dg_{ab,n} ^ i_m
    """
    pack = CurvaturePack(jet)
    gi = pack.ginv.const
    G1 = pack.gamma1.const
    Gup = pack.gamma_up.const
    gv = pack.gamma_vec.const
    sg = float(pack.sqrt_g.const)
    delta = np.einsum("ac,abc->b", gi, G1)
    glow = np.einsum("mn,lmn->l", gi, G1)
    first = np.einsum("b,bl,l->", delta, gi, glow)
    second = np.einsum("lmn,mln->", G1, Gup)
    d4 = (first - second) * sg
    c_dy = 0.5 * (-np.einsum("am,b->abm", gi, gv) - np.einsum("bm,a->abm", gi, gv)
                  + np.einsum("bam->abm", Gup) + Gup) * sg
    c_dz = 0.5 * (np.einsum("am,bn->abnm", gi, gi) + np.einsum("an,bm->abnm", gi, gi)
                  - 2.0 * np.einsum("ab,mn->abnm", gi, gi)) * sg
    form = FormSum(4)
    form.add(d4, _DX)
    for a in range(DIM):
        for b in range(DIM):
            r = PAIR_RANK[a, b]
            for m in range(DIM):
                form.add(c_dy[a, b, m] * (-1.0) ** m, [dy(r)] + [_DX[g] for g in _others(m)])
                for n in range(DIM):
                    form.add(c_dz[a, b, n, m] * (-1.0) ** m,
                             [dz1(r, n)] + [_DX[g] for g in _others(m)])
    return form


def theta_hilbert_closed_eval(jet, vectors) -> tuple[float, float]:
    return theta_hilbert_closed_form(jet).evaluate(vectors)


# -- d Theta -------------------------------------------------------------------

def dtheta_form(L, jet) -> FormSum:
    """dL ^ d4x - p4^{mnab} dz_{mnag} ^ dx^g ^ i_b - p3^{mna} dz_{mnb} ^ dx^b ^ i_a
    + dp4^{mnab} ^ (dz_{mna} - z_{mnag} dx^g) ^ i_b + dp3^{mna} ^ (dy_{mn} - z_{mnb} dx^b) ^ i_a.

    ``dL``, ``dp3``, ``dp4`` are evaluated per vector by directional
    derivatives through the momenta pipeline.
    """
    m = momenta_on_jet(L, jet)
    p3, p4 = np.asarray(m.p3), np.asarray(m.p4)
    diff = CachedDifferential(lambda v: _differentials_along(L, jet, v))
    form = FormSum(5)
    form.add(1.0, [diff.component(lambda d: d[0])] + _DX)
    for r in range(N_Y):
        for a in range(DIM):
            for b in range(DIM):
                coef = -PAIR_MULT[r] * p4[r, PAIR_RANK[a, b]] * (-1.0) ** b
                for g in range(DIM):
                    form.add(coef, [dz2(r, PAIR_RANK[a, g]), _DX[g]]
                             + [_DX[h] for h in _others(b)])
    for r in range(N_Y):
        for a in range(DIM):
            coef = -PAIR_MULT[r] * p3[r, a] * (-1.0) ** a
            for b in range(DIM):
                form.add(coef, [dz1(r, b), _DX[b]] + [_DX[h] for h in _others(a)])
    for r in range(N_Y):
        for a in range(DIM):
            contact = _contact1(jet, r, a)
            for b in range(DIM):
                s = PAIR_RANK[a, b]
                dp4 = diff.component(lambda d, r=r, s=s: d[2][r, s])
                form.add(PAIR_MULT[r] * (-1.0) ** b,
                         [dp4, contact] + [_DX[g] for g in _others(b)])
    for r in range(N_Y):
        contact = _contact0(jet, r)
        for a in range(DIM):
            dp3 = diff.component(lambda d, r=r, a=a: d[1][r, a])
            form.add(PAIR_MULT[r] * (-1.0) ** a, [dp3, contact] + [_DX[g] for g in _others(a)])
    return form


def _differentials_along(L, jet, v: JetTangentVector):
    """(dL(v), dp3(v), dp4(v))."""
    _, dmom = momenta_along(L, jet, v)
    dual = st.dual_algebra()
    fields = []
    for base, d in ((jet.x, v.dx), (jet.y, v.dy), (jet.z1, v.dz1), (jet.z2, v.dz2)):
        base = np.asarray(base, dtype=float)
        c = np.stack([base, np.asarray(d, dtype=float)], axis=-1)
        fields.append(st.AlgArray(dual, c))
    val = st.asalg(L(GenericJet(*fields, None)), dual)
    return float(val.c[1]), np.asarray(dmom.p3), np.asarray(dmom.p4)


def dtheta_eval(L, jet, vectors) -> tuple[float, float]:
    return dtheta_form(L, jet).evaluate(vectors)


def dtheta_by_lie_formula(L, jet, vectors) -> float:
    """Independent route: dTheta(v_0..v_4) = sum_i (-1)^i v_i[Theta(v_0..^i..v_4)].

    Constant coordinate vector fields commute, so the bracket terms drop
    out; each directional derivative of Theta's coefficients is taken with
    a dual number through the whole coefficient pipeline.
    """
    total = 0.0
    for i, v in enumerate(vectors):
        rest = [w for j, w in enumerate(vectors) if j != i]
        total += (-1.0) ** i * _theta_derivative(L, jet, v, rest)
    return total


def _theta_derivative(L, jet, v, rest) -> float:
    """d/ds Theta(jet + s v)(rest) at s = 0."""
    mom, dmom = momenta_along(L, jet, v)
    dL, _, _ = _differentials_along(L, jet, v)
    # Theta is affine in (L, p3, p4, z1, z2) for fixed vectors; differentiate term by term
    value_form = theta_form(DeDonderCoefficients(dL, np.asarray(dmom.p3), np.asarray(dmom.p4)),
                            jet)
    dcontact = _theta_contact_variation(
        DeDonderCoefficients(0.0, np.asarray(mom.p3), np.asarray(mom.p4)), v)
    return value_form(*rest) + dcontact(*rest)


def _theta_contact_variation(coeffs: DeDonderCoefficients, v: JetTangentVector) -> FormSum:
    """Derivative of Theta's contact forms along ``v`` at fixed momenta."""
    form = FormSum(4)
    for r in range(N_Y):
        for a in range(DIM):
            c = np.zeros(N_TOTAL)
            c[:DIM] = -np.asarray(v.dz2)[r, PAIR_RANK[a]]
            delta = OneForm(c)
            for b in range(DIM):
                coef = PAIR_MULT[r] * coeffs.p4[r, PAIR_RANK[a, b]] * (-1.0) ** b
                form.add(coef, [delta] + [_DX[g] for g in _others(b)])
    for r in range(N_Y):
        c = np.zeros(N_TOTAL)
        c[:DIM] = -np.asarray(v.dz1)[r]
        delta = OneForm(c)
        for a in range(DIM):
            coef = PAIR_MULT[r] * coeffs.p3[r, a] * (-1.0) ** a
            form.add(coef, [delta] + [_DX[g] for g in _others(a)])
    return form


# -- matter --------------------------------------------------------------------

@dataclass(frozen=True)
class MatterCoefficients:
    """Matter density ``L_m``, momentum ``q`` (4) and field gradient ``zt`` (4)."""

    L: float
    q: np.ndarray
    zt: np.ndarray


def theta_matter_form(mc: MatterCoefficients) -> FormSum:
    """L_m d4x + q^m (dt - z_n dx^n) ^ i_m."""
    form = FormSum(4)
    form.add(mc.L, _DX)
    c = np.zeros(N_TOTAL)
    c[_OFF_T] = 1.0
    c[:DIM] = -np.asarray(mc.zt, dtype=float)
    contact = OneForm(c)
    for m in range(DIM):
        form.add(mc.q[m] * (-1.0) ** m, [contact] + [_DX[g] for g in _others(m)])
    return form


def theta_matter_eval(mc: MatterCoefficients, vectors) -> tuple[float, float]:
    return theta_matter_form(mc).evaluate(vectors)


def theta_total_form(coeffs: DeDonderCoefficients, jet, mc: MatterCoefficients) -> FormSum:
    return theta_form(coeffs, jet) + theta_matter_form(mc)


def theta_total_eval(coeffs, jet, mc, vectors) -> tuple[float, float]:
    return theta_total_form(coeffs, jet, mc).evaluate(vectors)


def matter_coefficients(y, state, V=None) -> MatterCoefficients:
    Lm = float(st.asalg(matter(y, state, V)).const)
    return MatterCoefficients(Lm, np.asarray(matter_momentum(y, state), dtype=float),
                              np.asarray(state.zt, dtype=float))
