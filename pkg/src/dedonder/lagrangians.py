"""Second-order Lagrangian densities on jets of the metric, plus scalar-field matter.

A Lagrangian is any callable ``L(jet) -> scalar`` that reads only
``jet.x, jet.y, jet.z1, jet.z2`` and is written against the generic scalar
operations, so it can be Taylor-lifted and dualized.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import exprlang
from . import scalar_taylor as st
from .geometry import CurvaturePack
from .jet_space import DIM, PAIR_RANK, GenericJet


@dataclass(frozen=True)
class Lagrangian:
    """A named density ``L(jet)``."""

    name: str
    func: Callable

    def __call__(self, jet):
        return self.func(jet)


def hilbert(jet):
    """(R1 + R2) sqrt(-det g)."""
    pack = CurvaturePack(jet)
    return (pack.r1 + pack.r2) * pack.sqrt_g


def hilbert_from_scalar(jet):
    """R sqrt(-det g) with R from the Riemann tensor (independent route)."""
    pack = CurvaturePack(jet)
    return pack.scalar * pack.sqrt_g


HILBERT = Lagrangian("hilbert", hilbert)


def component_lagrangian(mu: int, nu: int) -> Lagrangian:
    """``L = y_{mu nu}``: a test functional that is not a scalar density."""
    r = int(PAIR_RANK[mu, nu])
    return Lagrangian(f"y{mu}{nu}", lambda jet: st.asalg(jet.y)[r])


# -- matter ----------------------------------------------------------------

@dataclass(frozen=True)
class MatterState:
    """Scalar-field value ``t`` and gradient ``zt[mu] = d_mu phi``."""

    t: object
    zt: object

    @classmethod
    def zero(cls) -> "MatterState":
        return cls(0.0, np.zeros(DIM))


def potential(V, t):
    """Evaluate a potential given as None (zero), an AST in ``t``, or a callable."""
    if V is None:
        return t * 0.0
    if isinstance(V, str):
        V = exprlang.parse(V)
    if isinstance(V, exprlang.Node):
        return exprlang.eval_generic(V, {"t": t})
    return V(t)


def scalar_field_jet(field, x, chart_map: Callable | None = None):
    """``(MatterState, hessian)`` of a scalar field at ``x``.

    ``field`` is an expression string/AST in x1..x4 or a generic callable;
    with ``chart_map`` the field is ``field(chart_map(x))``.
    """
    if isinstance(field, str):
        field = exprlang.parse(field)

    def f(xs):
        if chart_map is not None:
            xs = chart_map(xs)
        if isinstance(field, exprlang.Node):
            value = exprlang.eval_generic(field, exprlang.coordinate_env(xs))
        else:
            value = field(xs)
        return xs[0] * 0.0 + value

    t = st.taylor_lift(f, np.asarray(x, dtype=float), 2)
    alg = t.alg
    grad = np.array([st.extract_partial(t, alg.unit(m)) for m in range(DIM)])
    hess = np.zeros((DIM, DIM))
    for m in range(DIM):
        for n in range(DIM):
            e = [0] * DIM
            e[m] += 1
            e[n] += 1
            hess[m, n] = st.extract_partial(t, e)
    return MatterState(float(t.const), grad), hess


def matter(y, state: MatterState, V=None):
    """[1/2 g^{mn} z_m z_n + V(t)] sqrt(-det g), with the potential entering as +V."""
    g = st.asalg(y)[PAIR_RANK]
    ginv = st.inverse_matrix(g)
    det = st.det4(g)
    if np.any(det.const >= 0):
        raise st.ScalarDomainError("det g is not negative")
    sg = (-det).sqrt()
    z = st.asalg(state.zt)
    kinetic = 0.5 * st.einsum("m,m->", z, st.einsum("mn,n->m", ginv, z))
    return (kinetic + potential(V, state.t)) * sg


def total(jet, state: MatterState, V=None):
    return hilbert(jet) + matter(jet.y, state, V)


def total_lagrangian(state: MatterState, V=None) -> Lagrangian:
    """Hilbert plus matter with a fixed matter state, as a metric Lagrangian."""
    return Lagrangian("hilbert+scalar", lambda jet: total(jet, state, V))


LAGRANGIAN_NAMES = ("hilbert", "hilbert+scalar")


def by_name(name: str, state: MatterState | None = None, V=None) -> Lagrangian:
    """``"hilbert"`` or ``"hilbert+scalar"``; the latter needs the matter state."""
    if name == "hilbert":
        return HILBERT
    if name == "hilbert+scalar":
        if state is None:
            raise ValueError("hilbert+scalar needs a scalar-field state")
        return total_lagrangian(state, V)
    raise KeyError(f"unknown Lagrangian {name!r}")


def as_generic(jet) -> GenericJet:
    return GenericJet(jet.x, jet.y, jet.z1, jet.z2, getattr(jet, "z3", None))
