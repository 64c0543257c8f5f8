"""Euler-Lagrange residuals along metric sections, and the scalar-field equation.

Two routes compute the field-equation residual ``E^{mn}``:

* the momenta route: ``E = dL/dy - d_a P^{mna}`` with ``P^{mna}(x)`` the
  momenta of the third jet of the section, Taylor-lifted to order 1 in ``x``;
* the expanded route: ``E = dL/dy - d_a dL/dz_a + d_a d_b dL/dz_{ab}``,
  with every partial pulled back as an order-2 series in ``x``.

Both need fourth metric derivatives, which exist only transiently inside
the Taylor series and are never stored in a :class:`JetPoint`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exprlang
from . import scalar_taylor as st
from .geometry import CurvaturePack
from .jet_space import (DIM, PAIR_MULT, PAIR_RANK, PAIRS, GenericJet, MetricFamily, prolong,
                        section_series, sym_pack)
from .lagrangians import HILBERT, MatterState, matter, total_lagrangian
from .ostrogradski import (_Z1_MULT, _Z2_MULT, momenta_on_jet, momenta_on_section_with_divergence,
                           scaled_error, seeded_gradients, symmetrized_partials)
from .scalar_taylor import AlgArray

_ROWS = np.array([p[0] for p in PAIRS])
_COLS = np.array([p[1] for p in PAIRS])


@dataclass(frozen=True)
class ELResidual:
    """Stored pair components of ``E^{mn}`` and the largest contributing term."""

    values: np.ndarray  # (10,)
    scale: float

    @property
    def full(self) -> np.ndarray:
        return self.values[PAIR_RANK]

    @property
    def relative(self) -> float:
        return float(np.max(np.abs(self.values))) / max(self.scale, 1e-300)


def _partial(T: st.TaylorAlgebra, c: np.ndarray, var: int) -> np.ndarray:
    """Derivative coefficients of series stored as ``(..., T.dim)`` (order drops by one)."""
    return T.diff(AlgArray(T, c), var).c


def el_residual_momenta(L, family: MetricFamily, x) -> ELResidual:
    """Momenta route: ``dL/dy - d_a P^{mna}``, pulled back along the section."""
    x = np.asarray(x, dtype=float)
    sym = symmetrized_partials(L, prolong(family, x, 2))
    dy = sym_pack(sym.dy)
    ser = section_series(family, x, order=1, levels=3)
    T = ser.y.alg
    p3 = momenta_on_jet(L, ser).p3  # (10, 4) over taylor(4, 1)
    terms = np.array([p3.c[:, a, T.rank(T.unit(a))] for a in range(DIM)])
    E = dy - terms.sum(axis=0)
    scale = max(float(np.max(np.abs(dy))), float(np.max(np.abs(terms))))
    return ELResidual(E, scale)


def el_residual(L, family: MetricFamily, x) -> ELResidual:
    """Expanded route: ``dL/dy - d_a dL/dz_a + d_a d_b dL/dz_{ab}``."""
    x = np.asarray(x, dtype=float)
    ser = section_series(family, x, order=2, levels=2)
    T = ser.y.alg
    _, dy, dz1, dz2 = seeded_gradients(L, GenericJet(ser.x, ser.y, ser.z1, ser.z2, None), T)
    dy = dy.c[..., 0] / PAIR_MULT
    dz1 = dz1.c / _Z1_MULT[..., None]
    dz2 = dz2.c / _Z2_MULT[..., None]
    first = np.array([_partial(T, dz1[:, a], a)[:, 0] for a in range(DIM)])
    second = []
    for a in range(DIM):
        for b in range(DIM):
            d = _partial(T, dz2[:, PAIR_RANK[a, b]], a)
            d = _partial(st.taylor_algebra(DIM, 1), d, b)
            second.append(d[:, 0])
    second = np.array(second)
    E = dy - first.sum(axis=0) + second.sum(axis=0)
    scale = max(float(np.max(np.abs(dy))), float(np.max(np.abs(first))),
                float(np.max(np.abs(second))))
    return ELResidual(E, scale)


def route_agreement(L, family: MetricFamily, x) -> float:
    """Largest component difference of the two routes relative to their term scale."""
    a = el_residual_momenta(L, family, x)
    b = el_residual(L, family, x)
    return float(np.max(np.abs(a.values - b.values))) / max(a.scale, b.scale, 1e-300)


def einstein_tensor_density(family: MetricFamily, x) -> np.ndarray:
    """Stored components of ``sqrt(-g) (R^{mn} - 1/2 g^{mn} R)``."""
    pack = CurvaturePack(prolong(family, np.asarray(x, dtype=float), 2))
    return np.asarray(sym_pack(pack.einstein_density).const)


def measure_einstein_sign(L, family: MetricFamily, x) -> int:
    """The sign ``s`` with ``E = s * Einstein density`` at one point."""
    E = el_residual(L, family, x).values
    G = einstein_tensor_density(family, x)
    return 1 if float(np.dot(E * PAIR_MULT, G)) >= 0 else -1


def einstein_proportionality_error(L, family: MetricFamily, x, sign: int) -> float:
    return scaled_error(el_residual(L, family, x).values,
                        sign * einstein_tensor_density(family, x))


@dataclass(frozen=True)
class DeDonderCheck:
    res_e: float      # dL/dz_{mnab} - P^{mnab}
    res_f: float      # dL/dz_{mna} - P^{mna} - P^{mnab}_{,b}
    res_g: ELResidual


def de_donder_equations_check(L, family: MetricFamily, x) -> DeDonderCheck:
    """Residuals of the three De Donder equations along the section at ``x``.

    ``res_g`` is the momenta-route field equation ``dL/dy - d_a P^{mna}``.

    The momenta come from :func:`momenta_on_section_with_divergence`; the
    partials from :func:`symmetrized_partials` at the prolonged jet.
    """
    x = np.asarray(x, dtype=float)
    sym = symmetrized_partials(L, prolong(family, x, 2))
    m, div = momenta_on_section_with_divergence(L, family, x)
    dz1 = sym.dz1[_ROWS, _COLS]
    dz2 = sym.dz2[_ROWS, _COLS][:, _ROWS, _COLS]
    res_e = float(np.max(np.abs(dz2 - np.asarray(m.p4))))
    res_f = float(np.max(np.abs(dz1 - np.asarray(m.p3) - div)))
    return DeDonderCheck(res_e, res_f, el_residual_momenta(L, family, x))


# -- matter --------------------------------------------------------------------

def _field_series(field, x, order: int):
    """Taylor series of ``phi`` and of its gradient at ``x`` (gradient one order lower)."""
    if isinstance(field, str):
        field = exprlang.parse(field)

    def f(xs):
        if isinstance(field, exprlang.Node):
            return xs[0] * 0.0 + exprlang.eval_generic(field, exprlang.coordinate_env(xs))
        return xs[0] * 0.0 + field(xs)

    T = st.taylor_algebra(DIM, order + 1)
    phi = st.asalg(f(T.variables(np.asarray(x, dtype=float))), T)
    grad = st.stack([T.diff(phi, m) for m in range(DIM)])
    return T.truncate(phi, order), grad


def el_residual_scalar_field(family: MetricFamily, field, V, x) -> float:
    """``dL_matter/dt - d_m q^m`` pulled back along ``(g, j^1 phi)`` at ``x``."""
    x = np.asarray(x, dtype=float)
    T1 = st.taylor_algebra(DIM, 1)
    phi, grad = _field_series(field, x, 1)
    g = st.asalg(family.metric(T1.variables(x)), T1)
    ginv = st.inverse_matrix(g)
    sg = (-st.det4(g)).sqrt()
    q = st.einsum("mn,n->m", ginv, grad) * sg
    div = sum(float(st.extract_partial(q[m], T1.unit(m))) for m in range(DIM))
    dual = st.dual_algebra()
    t = AlgArray(dual, np.array([float(phi.const), 1.0]))
    y0 = np.asarray(sym_pack(g).const)
    lt = st.asalg(matter(y0, MatterState(t, np.asarray(grad.const)), V), dual)
    return float(lt.c[1]) - div


def matter_y_gradient(y, state: MatterState, V=None) -> np.ndarray:
    """Symmetrized ``dL_matter/dy`` (stored pairs)."""
    dual_grads = []
    for r in range(len(y)):
        dy = np.zeros(len(y))
        dy[r] = 1.0
        _, d = st.dual_eval(lambda yy: matter(yy, state, V), y, dy)
        dual_grads.append(d)
    return np.asarray(dual_grads, dtype=float) / PAIR_MULT


def total_additivity_error(family: MetricFamily, state: MatterState, V, x) -> float:
    """``E(hilbert + matter) - E(hilbert) - dL_matter/dy`` at ``x`` (scaled)."""
    x = np.asarray(x, dtype=float)
    e_tot = el_residual(total_lagrangian(state, V), family, x).values
    e_h = el_residual(HILBERT, family, x).values
    dm = matter_y_gradient(sym_pack(family.at(x)), state, V)
    return scaled_error(e_tot - e_h, dm)


__all__ = ["ELResidual", "el_residual", "el_residual_momenta", "route_agreement",
           "einstein_tensor_density", "measure_einstein_sign",
           "einstein_proportionality_error", "DeDonderCheck", "de_donder_equations_check",
           "el_residual_scalar_field", "matter_y_gradient", "total_additivity_error"]
