"""Ostrogradski momenta of second-order Lagrangians.

``p4^{mnab} = dL/dz_{mnab}`` and ``p3^{mna} = dL/dz_{mna} - D_b p4^{mnab}``,
with derivatives with respect to symmetric coordinates distributed over the
orbit (``1/multiplicity`` per stored component).

The automatic-differentiation core evaluates ``L`` once in
``taylor(n_seeds, 1) (x) outer``: the left factor seeds every stored
``y``/``z1``/``z2`` component, the outer factor carries whatever the jet
fields themselves depend on:

* total-derivative directions ``D_beta`` on jet space (:func:`momenta_on_jet`),
* the base coordinates along a section (:func:`momenta_on_section`),
* an extra tangent direction (used to differentiate the momenta themselves).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import scalar_taylor as st
from .geometry import CurvaturePack
from .jet_space import (DIM, PAIR_MULT, PAIR_RANK, PAIRS, TRIPLE_RANK, GenericJet, JetPoint,
                        section_series, sym_pack)
from .scalar_taylor import AlgArray

N_SEED_Y, N_SEED_Z1, N_SEED_Z2 = 10, 40, 100
_Z2_MULT = np.outer(PAIR_MULT, PAIR_MULT)
_Z1_MULT = np.repeat(PAIR_MULT[:, None], DIM, axis=1)
_ROWS = np.array([p[0] for p in PAIRS])
_COLS = np.array([p[1] for p in PAIRS])


@dataclass(frozen=True)
class Momenta:
    """Stored momenta: ``p3`` is (10 pairs x 4), ``p4`` is (10 pairs x 10 pairs).

    Entries are numbers, or AlgArrays when the momenta were computed with an
    outer algebra.
    """

    p3: object
    p4: object

    @property
    def p3_full(self):
        """p3[m, n, a]."""
        return self.p3[PAIR_RANK]

    @property
    def p4_full(self):
        """p4[m, n, a, b]."""
        return self.p4[PAIR_RANK][:, :, PAIR_RANK]


def scaled_error(a, b) -> float:
    """max |a - b| / max(1, |a|, |b|) over all entries."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    den = np.maximum(1.0, np.maximum(np.abs(a), np.abs(b)))
    return float(np.max(np.abs(a - b) / den))


def momenta_error(m1: Momenta, m2: Momenta) -> tuple[float, float]:
    return scaled_error(m1.p3, m2.p3), scaled_error(m1.p4, m2.p4)


# -- automatic-differentiation core --------------------------------------

def _seed(arr: AlgArray, seeds: st.TaylorAlgebra, alg: st.TensorAlgebra,
          offset: int | None) -> AlgArray:
    """Embed an outer-algebra array and give each entry its own seed variable."""
    shape = arr.shape
    n = int(np.prod(shape)) if shape else 1
    c = np.zeros((n, seeds.dim, alg.right.dim))
    c[:, 0, :] = arr.c.reshape(n, alg.right.dim)
    if offset is not None:
        c[np.arange(n), 1 + offset + np.arange(n), 0] = 1.0
    return AlgArray(alg, c.reshape(shape + (alg.dim,)))


def seeded_gradients(L, fields: GenericJet, outer: st.Algebra = st.REALS,
                     seed_y: bool = True):
    """Value and plain partial derivatives of ``L`` w.r.t. stored jet components.

    ``fields`` entries must be arrays over ``outer`` (or numeric).  Returns
    ``(value, dy, dz1, dz2)`` as AlgArrays over ``outer``; ``dy`` is None when
    ``seed_y`` is false.  Derivatives are per stored component (not yet
    divided by multiplicities).
    """
    nseed = (N_SEED_Y if seed_y else 0) + N_SEED_Z1 + N_SEED_Z2
    seeds = st.taylor_algebra(nseed, 1)
    alg = st.tensor(seeds, outer)
    off_y = 0 if seed_y else None
    off_z1 = N_SEED_Y if seed_y else 0
    off_z2 = off_z1 + N_SEED_Z1
    jet = GenericJet(
        _seed(st.asalg(fields.x, outer), seeds, alg, None),
        _seed(st.asalg(fields.y, outer), seeds, alg, off_y),
        _seed(st.asalg(fields.z1, outer), seeds, alg, off_z1),
        _seed(st.asalg(fields.z2, outer), seeds, alg, off_z2),
        None if fields.z3 is None else _seed(st.asalg(fields.z3, outer), seeds, alg, None),
    )
    out = st.asalg(L(jet), alg)
    c = alg.split(out)  # (seeds.dim, outer.dim)
    value = AlgArray(outer, c[0])
    grads = c[1:]
    dy = AlgArray(outer, grads[:N_SEED_Y]) if seed_y else None
    dz1 = AlgArray(outer, grads[off_z1:off_z2].reshape(10, DIM, outer.dim))
    dz2 = AlgArray(outer, grads[off_z2:off_z2 + N_SEED_Z2].reshape(10, 10, outer.dim))
    return value, dy, dz1, dz2


def _numeric(a):
    if isinstance(a, AlgArray) and a.alg is st.REALS:
        return np.asarray(a.const)
    return a


@dataclass(frozen=True)
class SymmetrizedPartials:
    """Full-index derivative arrays carrying the symmetries of the coordinates."""

    dy: np.ndarray   # [m, n]
    dz1: np.ndarray  # [m, n, a]
    dz2: np.ndarray  # [m, n, a, b]
    value: float


def symmetrized_partials(L, jet) -> SymmetrizedPartials:
    value, dy, dz1, dz2 = seeded_gradients(L, jet)
    dy = np.asarray(dy.const) / PAIR_MULT
    dz1 = np.asarray(dz1.const) / _Z1_MULT
    dz2 = np.asarray(dz2.const) / _Z2_MULT
    return SymmetrizedPartials(dy[PAIR_RANK], dz1[PAIR_RANK], dz2[PAIR_RANK][:, :, PAIR_RANK],
                               float(value.const))


# -- momenta on jet space ------------------------------------------------------

def total_derivative_fields(jet, outer_dir: st.TaylorAlgebra | None = None) -> GenericJet:
    """Jet fields ``c + sum_b eps_b V_b(c)`` for the four total-derivative directions.

    ``V_b`` moves ``x`` along ``e_b`` and each stored level to the next one:
    ``y[r] -> z1[r, b]``, ``z1[r, a] -> z2[r, (a b)]``, ``z2[r, (a c)] -> z3[r, (a c b)]``.
    Jet entries may already be AlgArrays over an algebra ``B``; the result
    lives in ``taylor(4, 1) (x) B``.
    """
    D = outer_dir or st.taylor_algebra(DIM, 1)
    inner = _common_alg(jet)
    alg = st.tensor(D, inner)
    eps = [D.rank(D.unit(b)) for b in range(DIM)]

    def field(base, directions):
        base = st.asalg(base, inner)
        c = np.zeros(base.shape + (D.dim, inner.dim))
        c[..., 0, :] = base.c
        for b in range(DIM):
            c[..., eps[b], :] = st.asalg(directions[b], inner).c
        return AlgArray(alg, c.reshape(base.shape + (alg.dim,)))

    z1, z2, z3 = jet.z1, jet.z2, jet.z3
    x_dirs = [np.eye(DIM)[b] for b in range(DIM)]
    y_dirs = [z1[:, b] for b in range(DIM)]
    z1_dirs = [z2[:, PAIR_RANK[:, b]] for b in range(DIM)]
    pair_triple = np.array([[TRIPLE_RANK[a, c, :] for (a, c) in PAIRS]])[0]  # (10, 4)
    z2_dirs = [z3[:, pair_triple[:, b]] for b in range(DIM)]
    return GenericJet(field(jet.x, x_dirs), field(jet.y, y_dirs), field(z1, z1_dirs),
                      field(z2, z2_dirs), None)


def _common_alg(jet) -> st.Algebra:
    for name in ("x", "y", "z1", "z2", "z3"):
        v = getattr(jet, name)
        if isinstance(v, AlgArray) and v.alg is not st.REALS:
            return v.alg
    return st.REALS


def _momenta_from_directional(L, fields: GenericJet, D: st.TaylorAlgebra,
                              inner: st.Algebra) -> tuple[Momenta, AlgArray]:
    outer = st.tensor(D, inner)
    _, _, dz1, dz2 = seeded_gradients(L, fields, outer, seed_y=False)
    dz1 = dz1 / _Z1_MULT
    dz2 = dz2 / _Z2_MULT
    c1 = dz1.c.reshape(10, DIM, D.dim, inner.dim)
    c2 = dz2.c.reshape(10, 10, D.dim, inner.dim)
    p4 = AlgArray(inner, np.ascontiguousarray(c2[:, :, 0, :]))
    dsum = np.zeros((10, DIM, inner.dim))
    for b in range(DIM):
        eb = D.rank(D.unit(b))
        # sum_b D_b p4[r, (a b)]
        dsum += c2[:, PAIR_RANK[:, b], eb, :]
    p3 = AlgArray(inner, c1[:, :, 0, :] - dsum)
    div = AlgArray(inner, dsum)
    return Momenta(p3, p4), div


def momenta_on_jet(L, jet) -> Momenta:
    """Momenta at a third-order jet, with ``D_beta`` expanded by the chain rule on J^3."""
    if jet.z3 is None:
        raise ValueError("momenta on jet space need third-order jet data")
    D = st.taylor_algebra(DIM, 1)
    inner = _common_alg(jet)
    fields = total_derivative_fields(jet, D)
    m, _ = _momenta_from_directional(L, fields, D, inner)
    return Momenta(_numeric(m.p3), _numeric(m.p4))


def momenta_on_jet_with_divergence(L, jet) -> tuple[Momenta, object]:
    """Momenta plus ``D_b p4^{mnab}`` stored as (10 pairs x 4)."""
    D = st.taylor_algebra(DIM, 1)
    inner = _common_alg(jet)
    m, div = _momenta_from_directional(L, total_derivative_fields(jet, D), D, inner)
    return Momenta(_numeric(m.p3), _numeric(m.p4)), _numeric(div)


def momenta_along(L, jet: JetPoint, direction) -> tuple[Momenta, Momenta]:
    """Momenta and their derivative along a tangent vector at ``jet``.

    ``direction`` is a :class:`JetTangentVector`; returns ``(p, dp(direction))``.
    """
    dual = st.dual_algebra()

    def lift(base, d):
        base = np.asarray(base, dtype=float)
        c = np.zeros(base.shape + (2,))
        c[..., 0] = base
        c[..., 1] = np.asarray(d, dtype=float)
        return AlgArray(dual, c)

    gj = GenericJet(lift(jet.x, direction.dx), lift(jet.y, direction.dy),
                    lift(jet.z1, direction.dz1), lift(jet.z2, direction.dz2),
                    lift(jet.z3, direction.dz3))
    D = st.taylor_algebra(DIM, 1)
    m, _ = _momenta_from_directional(L, total_derivative_fields(gj, D), D, dual)
    value = Momenta(m.p3.c[..., 0], m.p4.c[..., 0])
    deriv = Momenta(m.p3.c[..., 1], m.p4.c[..., 1])
    return value, deriv


# -- momenta along a section -------------------------------------------------

def momenta_on_section(L, family, x) -> Momenta:
    """Momenta by differentiating the section pullback of ``p4`` with respect to ``x``."""
    m, _ = momenta_on_section_with_divergence(L, family, x)
    return m


def momenta_on_section_with_divergence(L, family, x) -> tuple[Momenta, np.ndarray]:
    """Section momenta plus ``d_b P^{mnab}`` stored as (10 pairs x 4)."""
    ser = section_series(family, x, order=1, levels=2)
    T = ser.y.alg
    _, _, dz1, dz2 = seeded_gradients(L, GenericJet(ser.x, ser.y, ser.z1, ser.z2, None), T,
                                      seed_y=False)
    dz1 = dz1.c / _Z1_MULT[..., None]
    dz2 = dz2.c / _Z2_MULT[..., None]
    p4 = dz2[..., 0]
    div = np.zeros((10, DIM))
    for b in range(DIM):
        div += dz2[:, PAIR_RANK[:, b], T.rank(T.unit(b))]
    return Momenta(dz1[..., 0] - div, p4), div


# -- closed forms for the Hilbert Lagrangian ------------------------------

def _stored3(full: AlgArray):
    """[m, n, a] -> stored (10, 4)."""
    return full[_ROWS, _COLS]


def hilbert_momenta_closed(jet) -> Momenta:
    """p3 = 1/2 (-g^{ma} G^n - g^{na} G^m + G^{nma} + G^{mna}) sqrt(-g);
    p4 = 1/2 (g^{ma} g^{nb} + g^{mb} g^{na} - 2 g^{mn} g^{ab}) sqrt(-g)."""
    pack = CurvaturePack(jet)
    gi, gv, gu = pack.ginv, pack.gamma_vec, pack.gamma_up
    p3 = 0.5 * (-st.einsum("ma,n->mna", gi, gv) - st.einsum("na,m->mna", gi, gv)
                + st.einsum("nma->mna", gu) + gu) * pack.sqrt_g
    p4 = 0.5 * pack.k4 * pack.sqrt_g
    p4s = p4[_ROWS, _COLS][:, _ROWS, _COLS]
    return Momenta(_numeric(_stored3(p3)), _numeric(p4s))


def hilbert_divergence_closed(jet):
    """d_b P^{mnab} = 1/2 (2 g^{mn} G^a - g^{ma} G^n - g^{na} G^m + G^{mna} + G^{nma}
    - 2 G^{amn}) sqrt(-g), stored as (10 pairs x 4)."""
    pack = CurvaturePack(jet)
    gi, gv, gu = pack.ginv, pack.gamma_vec, pack.gamma_up
    full = 0.5 * (2.0 * st.einsum("mn,a->mna", gi, gv) - st.einsum("ma,n->mna", gi, gv)
                  - st.einsum("na,m->mna", gi, gv) + gu + st.einsum("nma->mna", gu)
                  - 2.0 * st.einsum("amn->mna", gu)) * pack.sqrt_g
    return _numeric(_stored3(full))


def hilbert_first_order_gradient_closed(jet):
    """Symmetrized d(R1 sqrt(-g))/dg_{mn,a} = (g^{mn} G^a - g^{ma} G^n - g^{na} G^m
    - G^{amn} + G^{nma} + G^{mna}) sqrt(-g), stored as (10 pairs x 4)."""
    pack = CurvaturePack(jet)
    gi, gv, gu = pack.ginv, pack.gamma_vec, pack.gamma_up
    full = (st.einsum("mn,a->mna", gi, gv) - st.einsum("ma,n->mna", gi, gv)
            - st.einsum("na,m->mna", gi, gv) - st.einsum("amn->mna", gu)
            + st.einsum("nma->mna", gu) + gu) * pack.sqrt_g
    return _numeric(_stored3(full))


def matter_momentum(y, state):
    """q^m = g^{mn} z_n sqrt(-det g)."""
    g = st.asalg(y)[PAIR_RANK]
    gi = st.inverse_matrix(g)
    det = st.det4(g)
    if np.any(det.const >= 0):
        raise st.ScalarDomainError("det g is not negative")
    q = st.einsum("mn,n->m", gi, st.asalg(state.zt)) * (-det).sqrt()
    return _numeric(q)


def stored_pairs(full) -> np.ndarray:
    """[m, n] -> 10 stored values."""
    return sym_pack(full)
