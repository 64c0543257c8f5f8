import numpy as np
import pytest

from dedonder import geometry as geo
from dedonder import jet_space as js
from dedonder import lagrangians as lg
from dedonder import ostrogradski as og

R1_DENSITY = lg.Lagrangian("r1", lambda jet: (lambda p: p.r1 * p.sqrt_g)(geo.CurvaturePack(jet)))


class TestFlatMomenta:
    def test_minkowski(self):
        m = og.momenta_on_jet(lg.HILBERT, js.JetPoint.minkowski())
        assert not np.any(m.p3)
        p4 = m.p4_full
        assert set(np.unique(p4)) <= {-1.0, -0.5, 0.0, 0.5, 1.0}
        assert p4[0, 0, 1, 1] == 1.0
        assert p4[1, 1, 2, 2] == -1.0
        assert p4[0, 1, 0, 1] == -0.5
        assert p4[1, 2, 1, 2] == 0.5

    def test_momenta_need_third_order(self):
        jet = js.GenericJet(np.zeros(4), js.sym_pack(js.ETA), np.zeros((10, 4)),
                            np.zeros((10, 10)), None)
        with pytest.raises(ValueError):
            og.momenta_on_jet(lg.HILBERT, jet)


class TestSymmetrizedPartials:
    def test_off_diagonal_halves(self):
        sym = og.symmetrized_partials(lg.component_lagrangian(0, 1), js.JetPoint.minkowski())
        assert sym.dy[0, 1] == 0.5 and sym.dy[1, 0] == 0.5
        assert sym.dy[0, 0] == 0.0

    def test_diagonal(self):
        sym = og.symmetrized_partials(lg.component_lagrangian(2, 2), js.JetPoint.minkowski())
        assert sym.dy[2, 2] == 1.0 and np.count_nonzero(sym.dy) == 1


class TestSchwarzschild:
    # Reference values computed symbolically with sympy at r = 4, theta = 1.2, M = 1.
    X = [0.0, 4.0, 1.2, 0.3]
    P4 = {(0, 0, 1, 1): 14.91262537547562, (0, 1, 0, 1): -7.45631268773781,
          (1, 2, 1, 2): 0.23300977149180657, (2, 2, 3, 3): -0.06705727360686858}
    P3 = {(0, 0, 1): -1.8640781719344526, (1, 1, 1): 2.330097714918066,
          (2, 2, 1): 0.11650488574590329, (1, 2, 2): 0.17475732861885493,
          (3, 3, 2): 0.02607049795588427}

    def test_reference_momenta(self):
        m = og.momenta_on_jet(lg.HILBERT, js.prolong(js.schwarzschild(1.0), self.X))
        for idx, v in self.P4.items():
            assert m.p4_full[idx] == pytest.approx(v, rel=1e-12)
        for idx, v in self.P3.items():
            assert m.p3_full[idx] == pytest.approx(v, rel=1e-12)

    def test_section_route(self):
        fam = js.schwarzschild(1.0)
        a = og.momenta_on_jet(lg.HILBERT, js.prolong(fam, self.X))
        b = og.momenta_on_section(lg.HILBERT, fam, self.X)
        assert max(og.momenta_error(a, b)) < 1e-12


class TestIdentities:
    def test_closed_forms(self, rng):
        for _ in range(5):
            jet = js.random_jet(rng)
            assert max(og.momenta_error(og.hilbert_momenta_closed(jet),
                                        og.momenta_on_jet(lg.HILBERT, jet))) < 1e-10

    def test_first_order_gradient(self, rng):
        for _ in range(3):
            jet = js.random_jet(rng)
            ad = js.sym_pack(og.symmetrized_partials(R1_DENSITY, jet).dz1)
            assert og.scaled_error(ad, og.hilbert_first_order_gradient_closed(jet)) < 1e-10

    def test_momenta_symmetries(self, rng):
        m = og.momenta_on_jet(lg.HILBERT, js.random_jet(rng))
        p4 = m.p4_full
        assert np.allclose(p4, np.transpose(p4, (1, 0, 2, 3)))
        assert np.allclose(p4, np.transpose(p4, (0, 1, 3, 2)))
        assert np.allclose(p4, np.transpose(p4, (2, 3, 0, 1)))
        assert np.allclose(m.p3_full, np.transpose(m.p3_full, (1, 0, 2)))

    def test_p4_depends_on_metric_only(self, rng):
        jet = js.random_jet(rng)
        other = jet.replace(z1=rng.normal(size=(10, 4)), z2=rng.normal(size=(10, 10)))
        a = og.momenta_on_jet(lg.HILBERT, jet).p4
        b = og.momenta_on_jet(lg.HILBERT, other).p4
        assert np.max(np.abs(a - b)) <= 1e-12 * max(1.0, np.max(np.abs(a)))

    def test_momenta_along_matches_finite_difference(self, rng):
        jet = js.random_jet(rng)
        v = js.JetTangentVector.random(rng)
        value, deriv = og.momenta_along(lg.HILBERT, jet, v)
        h = 1e-5

        def at(s):
            moved = js.JetPoint(jet.x + s * v.dx, jet.y + s * v.dy, jet.z1 + s * v.dz1,
                                jet.z2 + s * v.dz2, jet.z3 + s * v.dz3)
            return og.momenta_on_jet(lg.HILBERT, moved)

        plus, minus = at(h), at(-h)
        assert og.scaled_error(value.p3, og.momenta_on_jet(lg.HILBERT, jet).p3) < 1e-14
        assert og.scaled_error(deriv.p3, (plus.p3 - minus.p3) / (2 * h)) < 1e-6
        assert og.scaled_error(deriv.p4, (plus.p4 - minus.p4) / (2 * h)) < 1e-6

    def test_divergence_closed_form(self, rng):
        fam = js.random_polynomial(rng)
        x = fam.sample(rng)
        _, div = og.momenta_on_section_with_divergence(lg.HILBERT, fam, x)
        assert og.scaled_error(div, og.hilbert_divergence_closed(js.prolong(fam, x, 2))) < 1e-10

    def test_matter_momentum(self):
        state = lg.MatterState(0.0, np.array([1.0, 2.0, 0.0, 0.0]))
        q = og.matter_momentum(js.sym_pack(js.ETA), state)
        assert np.allclose(q, [-1.0, 2.0, 0.0, 0.0])

    def test_scaled_error(self):
        assert og.scaled_error(0.5, 0.25) == 0.25
        assert og.scaled_error(100.0, 101.0) == pytest.approx(1 / 101)
