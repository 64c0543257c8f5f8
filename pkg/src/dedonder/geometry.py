"""Christoffel symbols, curvature and determinant identities from jet data.

All quantities are computed from the jet coordinates ``(y, z1, z2)`` by the
chain rule, never by numerical differentiation.  Index conventions (all
zero-based):

* ``dg[m, n, a] = g_{mn,a}``, ``ddg[m, n, a, b] = g_{mn,ab}``;
* ``gamma1[l, m, n] = Gamma_{lmn} = 1/2 (g_{ml,n} + g_{nl,m} - g_{mn,l})``;
* ``gamma2[r, m, n] = Gamma^r_{mn}``;
* ``riemann[a, b, c, d] = R^a_{bcd}
  = Gamma^a_{bd,c} - Gamma^a_{bc,d} + Gamma^a_{mc} Gamma^m_{bd} - Gamma^a_{md} Gamma^m_{bc}``.

:class:`CurvaturePack` evaluates lazily, so a Lagrangian that needs only
``R1`` and ``R2`` never builds the Riemann tensor.  Every quantity is an
:class:`AlgArray`; the module-level functions return plain numpy arrays for
numeric jets.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np

from . import scalar_taylor as st
from .jet_space import PAIR_RANK, full_tensors, sym_pack
from .scalar_taylor import AlgArray, ScalarDomainError

einsum = st.einsum


class CurvaturePack:
    """Lazily evaluated curvature data at one (possibly algebra-valued) jet."""

    def __init__(self, jet):
        self.jet = jet
        g, dg, ddg, _ = full_tensors(jet)
        self.g = st.asalg(g)
        self.dg = st.asalg(dg)
        self._ddg = ddg

    @property
    def ddg(self) -> AlgArray:
        return st.asalg(self._ddg)

    # -- metric ---------------------------------------------------------
    @cached_property
    def ginv(self) -> AlgArray:
        return st.inverse_matrix(self.g)

    @cached_property
    def det(self) -> AlgArray:
        return st.det4(self.g)

    @cached_property
    def sqrt_g(self) -> AlgArray:
        """sqrt(-det g)."""
        if np.any(self.det.const >= 0):
            raise ScalarDomainError(f"det g = {float(self.det.const):.3e} is not negative")
        return (-self.det).sqrt()

    # -- Christoffel symbols ----------------------------------------------
    @cached_property
    def gamma1(self) -> AlgArray:
        dg = self.dg
        return 0.5 * (einsum("mln->lmn", dg) + einsum("nlm->lmn", dg) - einsum("mnl->lmn", dg))

    @cached_property
    def gamma2(self) -> AlgArray:
        return einsum("rl,lmn->rmn", self.ginv, self.gamma1)

    @cached_property
    def gamma_up(self) -> AlgArray:
        """Gamma^{lmn} = g^{la} g^{mb} g^{nc} Gamma_{abc}."""
        t = einsum("la,abc->lbc", self.ginv, self.gamma1)
        t = einsum("mb,lbc->lmc", self.ginv, t)
        return einsum("nc,lmc->lmn", self.ginv, t)

    @cached_property
    def gamma_vec(self) -> AlgArray:
        """Gamma^l = g^{mn} Gamma^l_{mn}."""
        return einsum("mn,lmn->l", self.ginv, self.gamma2)

    @cached_property
    def gamma_vec_alt(self) -> AlgArray:
        """Gamma^l = g_{mn} Gamma^{lmn} (second route)."""
        return einsum("mn,lmn->l", self.g, self.gamma_up)

    @cached_property
    def delta_low(self) -> AlgArray:
        """Delta_m = g^{ln} Gamma_{lmn}."""
        return einsum("ln,lmn->m", self.ginv, self.gamma1)

    @cached_property
    def delta_up(self) -> AlgArray:
        return einsum("nm,m->n", self.ginv, self.delta_low)

    @cached_property
    def gamma_low(self) -> AlgArray:
        """Gamma_r = g^{mn} Gamma_{rmn}."""
        return einsum("mn,rmn->r", self.ginv, self.gamma1)

    # -- derivatives along the jet ------------------------------------------
    @cached_property
    def dginv(self) -> AlgArray:
        """g^{ad}_{,c} = -g^{am} g^{dn} (Gamma_{mnc} + Gamma_{nmc}); index order [a, d, c]."""
        s = self.gamma1 + einsum("nmc->mnc", self.gamma1)
        t = einsum("am,mnc->anc", self.ginv, s)
        return -einsum("dn,anc->adc", self.ginv, t)

    @cached_property
    def dgamma1(self) -> AlgArray:
        """Gamma_{lmn,c}, index order [l, m, n, c]."""
        ddg = self.ddg
        return 0.5 * (einsum("mlnc->lmnc", ddg) + einsum("nlmc->lmnc", ddg)
                      - einsum("mnlc->lmnc", ddg))

    @cached_property
    def dgamma2(self) -> AlgArray:
        """Gamma^a_{bd,c}, index order [a, b, d, c]."""
        return (einsum("alc,lbd->abdc", self.dginv, self.gamma1)
                + einsum("al,lbdc->abdc", self.ginv, self.dgamma1))

    # -- curvature ------------------------------------------------------
    @cached_property
    def riemann(self) -> AlgArray:
        dG = self.dgamma2
        G = self.gamma2
        quad = einsum("amc,mbd->abcd", G, G)
        return (einsum("abdc->abcd", dG) - einsum("abcd->abcd", dG)
                + quad - einsum("abdc->abcd", quad))

    @cached_property
    def ricci(self) -> AlgArray:
        return einsum("abad->bd", self.riemann)

    @cached_property
    def scalar(self) -> AlgArray:
        return einsum("bc,bc->", self.ginv, self.ricci)

    @cached_property
    def r1(self) -> AlgArray:
        """Gamma_{mnl} Gamma_{abc} (-g^{ma} g^{nl} g^{bc} + g^{ma} g^{nc} g^{lb})."""
        gl = self.gamma_low
        first = einsum("ma,a->m", self.ginv, gl)
        first = einsum("m,m->", gl, first)
        # g^{ma} g^{nc} g^{lb} Gamma_{abc} is Gamma^{mln}
        second = einsum("mnl,mln->", self.gamma1, self.gamma_up)
        return second - first

    @cached_property
    def k4(self) -> AlgArray:
        """g^{ma} g^{nb} + g^{mb} g^{na} - 2 g^{mn} g^{ab}, index order [m, n, a, b]."""
        gi = self.ginv
        ma_nb = einsum("ma,nb->mnab", gi, gi)
        return ma_nb + einsum("mnba->mnab", ma_nb) - 2.0 * einsum("mn,ab->mnab", gi, gi)

    @cached_property
    def r2(self) -> AlgArray:
        """1/2 g_{mn,ab} (g^{ma} g^{nb} + g^{mb} g^{na} - 2 g^{mn} g^{ab})."""
        return 0.5 * einsum("mnab,mnab->", self.ddg, self.k4)

    @cached_property
    def einstein_density(self) -> AlgArray:
        """sqrt(-g) (R^{mn} - 1/2 g^{mn} R)."""
        ric_up = einsum("ma,ab->mb", self.ginv, self.ricci)
        ric_up = einsum("mb,nb->mn", ric_up, self.ginv)
        return (ric_up - 0.5 * self.ginv * self.scalar) * self.sqrt_g


def _numeric(a: AlgArray):
    if a.alg is st.REALS:
        out = np.asarray(a.const)
        return float(out) if out.ndim == 0 else out
    return a


def curvature(jet) -> CurvaturePack:
    return CurvaturePack(jet)


def inverse_metric(y) -> np.ndarray:
    """Stored inverse-metric components g^{mn} from stored y_{mn}."""
    y = st.asalg(y)
    return _numeric(sym_pack(st.inverse_matrix(y[PAIR_RANK])))


def sqrt_minus_det(y):
    y = st.asalg(y)
    det = st.det4(y[PAIR_RANK])
    if np.any(det.const >= 0):
        raise ScalarDomainError(f"det g = {float(det.const):.3e} is not negative")
    return _numeric((-det).sqrt())


def christoffel_first(jet):
    return _numeric(CurvaturePack(jet).gamma1)


def christoffel_second(jet):
    return _numeric(CurvaturePack(jet).gamma2)


def gamma_contravariant(jet):
    return _numeric(CurvaturePack(jet).gamma_up)


def contracted_symbols(jet) -> dict:
    """Gamma^l, Delta^n, Gamma_r, Delta_m keyed by name."""
    p = CurvaturePack(jet)
    return {"gamma_up": _numeric(p.gamma_vec), "delta_up": _numeric(p.delta_up),
            "gamma_low": _numeric(p.gamma_low), "delta_low": _numeric(p.delta_low)}


def riemann(jet):
    return _numeric(CurvaturePack(jet).riemann)


def ricci(jet):
    return _numeric(CurvaturePack(jet).ricci)


def scalar_curvature(jet):
    return _numeric(CurvaturePack(jet).scalar)


def r1(jet):
    return _numeric(CurvaturePack(jet).r1)


def r2(jet):
    return _numeric(CurvaturePack(jet).r2)


def total_derivative_of_y(jet, func, beta: int):
    """``D_beta`` of a function of ``y`` alone: dual along ``y + eps z1[:, beta]``."""
    dual = st.dual_algebra()
    c = np.zeros((10, 2))
    c[:, 0] = jet.y
    c[:, 1] = jet.z1[:, beta]
    out = st.asalg(func(AlgArray(dual, c)), dual)
    return out.c[..., 0], out.c[..., 1]


def simpl1_residual(jet) -> float:
    """max |g^{ad}_{,c} + g^{am} g^{dn} (Gamma_{mnc} + Gamma_{nmc})|.

    The left term is obtained independently by differentiating the matrix
    inverse along the jet.
    """
    pack = CurvaturePack(jet)
    closed = pack.dginv.const
    worst = 0.0
    for c in range(4):
        _, direct = total_derivative_of_y(
            jet, lambda y: st.inverse_matrix(y[PAIR_RANK]), c)
        worst = max(worst, float(np.max(np.abs(direct - closed[..., c]))))
    return worst


def ddet_identity_residual(jet) -> float:
    """max_b |D_b sqrt(-det g) - sqrt(-det g) Delta_b| along the jet."""
    pack = CurvaturePack(jet)
    sg = float(pack.sqrt_g.const)
    delta = pack.delta_low.const
    worst = 0.0
    for b in range(4):
        _, direct = total_derivative_of_y(jet, lambda y: (-st.det4(y[PAIR_RANK])).sqrt(), b)
        worst = max(worst, abs(float(direct) - sg * delta[b]))
    return worst


def ddet_identity_residual_section(family, x) -> float:
    """Same identity, differentiating sqrt(-det g(x)) along the section by Taylor lift."""
    from .jet_space import prolong

    x = np.asarray(x, dtype=float)
    t = st.taylor_lift(lambda xs: (-st.det4(family.metric(xs))).sqrt(), x, 1)
    jet = prolong(family, x, 1)
    pack = CurvaturePack(jet)
    sg = float(pack.sqrt_g.const)
    delta = pack.delta_low.const
    grad = np.array([st.extract_partial(t, t.alg.unit(b)) for b in range(4)])
    return float(np.max(np.abs(grad - sg * delta)))
