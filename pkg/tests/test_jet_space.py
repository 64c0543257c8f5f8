import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as hs

from dedonder import jet_space as js

seeds = hs.integers(min_value=0, max_value=2**31)


class TestLayout:
    def test_sizes(self):
        assert (js.N_Y, js.N_Z1, js.N_Z2, js.N_Z3) == (10, 40, 100, 200)
        assert js.N_GRAVITY == 354
        assert js.N_MATTER == 5
        assert js.N_TOTAL == 359
        assert len(js.PAIRS) == 10 and len(js.TRIPLES) == 20

    def test_ranks_are_symmetric(self):
        assert js.pair_rank(1, 3) == js.pair_rank(3, 1)
        assert js.triple_rank(0, 2, 1) == js.triple_rank(2, 1, 0)
        assert js.PAIR_MULT.sum() == 16 and js.TRIPLE_MULT.sum() == 64

    def test_index_range(self):
        with pytest.raises(IndexError):
            js.pair_rank(0, 4)

    def test_sym_pack_roundtrip(self, rng):
        m = rng.normal(size=(4, 4))
        m = m + m.T
        assert np.array_equal(js.sym_matrix(js.sym_pack(m)), m)


class TestJetPoint:
    def test_arrays_are_read_only(self):
        jet = js.JetPoint.minkowski()
        with pytest.raises(ValueError):
            jet.y[0] = 2.0

    def test_write_any_permutation(self, rng):
        import itertools
        jet = js.JetPoint.minkowski()
        for perm in itertools.permutations((0, 2, 3)):
            new = jet.set("z3", 1, 2, *perm, 0.75)
            for other in itertools.permutations((3, 0, 2)):
                assert new.get("z3", 2, 1, *other) == 0.75

    def test_set_returns_copy(self):
        jet = js.JetPoint.minkowski()
        new = jet.set("z2", 0, 1, 2, 3, 0.5)
        assert jet.get("z2", 0, 1, 2, 3) == 0.0
        assert new.get("z2", 1, 0, 3, 2) == 0.5

    def test_symmetric_get(self, rng):
        jet = js.random_jet(rng)
        assert jet.get("y", 1, 2) == jet.get("y", 2, 1)
        assert jet.get("z1", 0, 3, 2) == jet.get("z1", 3, 0, 2)
        assert jet.get("z3", 1, 0, 3, 2, 1) == jet.get("z3", 0, 1, 1, 3, 2)

    def test_wrong_index_count(self):
        with pytest.raises(ValueError):
            js.JetPoint.minkowski().get("z1", 0, 1)

    def test_shape_and_finiteness(self):
        with pytest.raises(ValueError):
            js.JetPoint(np.zeros(4), np.zeros(9))
        with pytest.raises(ValueError):
            js.JetPoint(np.zeros(4), np.full(10, np.nan))

    def test_truncated(self, rng):
        jet = js.random_jet(rng).truncated(1)
        assert jet.order == 1
        assert not jet.z2.any() and not jet.z3.any() and jet.z1.any()

    def test_signature_check(self):
        euclid = js.JetPoint(np.zeros(4), js.sym_pack(np.eye(4)))
        with pytest.raises(js.SignatureError):
            euclid.validate()
        js.JetPoint.minkowski().validate()

    def test_random_jet_is_lorentzian(self, rng):
        for _ in range(20):
            ev = np.linalg.eigvalsh(js.random_jet(rng).metric)
            assert (ev < 0).sum() == 1


class TestProlongation:
    # g_{22} = 1 + x1^2 x2 + x3^3 (1-based labels; x1 is the coordinate x^0)
    FAMILY = js.MetricFamily.from_expressions("poly", {"g22": "1 + x1^2*x2 + x3^3"})

    def test_defaults_to_minkowski(self):
        g = self.FAMILY.at([0.0, 0.0, 0.0, 0.0])
        assert np.array_equal(g, js.ETA)

    def test_derivatives(self):
        x = np.array([0.5, -0.4, 0.3, 0.2])
        jet = js.prolong(self.FAMILY, x)
        assert jet.get("y", 1, 1) == pytest.approx(1 + 0.25 * -0.4 + 0.027)
        assert jet.get("z1", 1, 1, 0) == pytest.approx(2 * 0.5 * -0.4)
        assert jet.get("z1", 1, 1, 1) == pytest.approx(0.25)
        assert jet.get("z1", 1, 1, 2) == pytest.approx(3 * 0.09)
        assert jet.get("z2", 1, 1, 0, 1) == pytest.approx(1.0)
        assert jet.get("z2", 1, 1, 0, 0) == pytest.approx(-0.8)
        assert jet.get("z3", 1, 1, 0, 0, 1) == pytest.approx(2.0)
        assert jet.get("z3", 1, 1, 2, 2, 2) == pytest.approx(6.0)
        assert jet.get("z3", 0, 0, 0, 0, 1) == 0.0

    def test_forgetful_map(self, rng):
        fam = js.random_polynomial(rng)
        x = fam.sample(rng)
        third, second = js.prolong(fam, x, 3).truncated(2), js.prolong(fam, x, 2)
        for level in ("y", "z1", "z2", "z3"):
            assert np.array_equal(getattr(third, level), getattr(second, level))

    def test_builtin_families_are_lorentzian(self, rng):
        for fam in js.builtin_families(rng):
            for _ in range(100):
                ev = np.linalg.eigvalsh(fam.at(fam.sample(rng)))
                assert (ev < 0).sum() == 1 and np.all(np.abs(ev) > 1e-8)

    def test_truncated_prolongation(self):
        jet = js.prolong(self.FAMILY, [0.5, -0.4, 0.3, 0.2], k=1)
        assert jet.order == 1 and not jet.z2.any()

    def test_bad_key(self):
        with pytest.raises(ValueError):
            js.MetricFamily.from_expressions("bad", {"g5": "1"})

    def test_contact_residual(self, rng):
        fam = js.random_polynomial(rng)
        assert js.contact_residual(fam, fam.sample(rng)) < 1e-12
        jet = js.prolong(fam, fam.sample(rng))
        x = jet.x
        assert js.contact_residual(fam, x, jet.set("z2", 0, 0, 1, 1, 5.0)) > 1.0

    def test_schwarzschild_sampler_range(self, rng):
        fam = js.schwarzschild(2.0)
        for _ in range(10):
            assert 5.0 <= fam.sample(rng)[1] <= 20.0

    def test_non_lorentzian_prolongation(self):
        fam = js.MetricFamily.from_expressions("euclid", {"g11": "1"})
        with pytest.raises(js.SignatureError):
            js.prolong(fam, np.zeros(4))


class TestTangentVectors:
    @given(seeds)
    def test_flat_roundtrip(self, seed):
        rng = np.random.default_rng(seed)
        v = js.JetTangentVector.random(rng, matter=True)
        assert np.array_equal(js.JetTangentVector.from_flat(v.flat()).flat(), v.flat())

    @given(seeds)
    def test_linear_structure(self, seed):
        rng = np.random.default_rng(seed)
        a, b = js.JetTangentVector.random(rng), js.JetTangentVector.random(rng)
        assert np.allclose((2.0 * a - b + b).flat(), (a * 2.0).flat())

    def test_gravity_only_flat(self):
        v = js.JetTangentVector.from_flat(np.ones(js.N_GRAVITY))
        assert v.dt == 0.0 and not v.dzt.any()
        with pytest.raises(ValueError):
            js.JetTangentVector.from_flat(np.ones(12))

    def test_coordinate_vector(self):
        v = js.JetTangentVector.coordinate(2)
        assert v.dx.tolist() == [0, 0, 1, 0] and not v.dy.any()

    def test_section_tangents_are_total_derivatives(self, rng):
        fam = js.random_polynomial(rng)
        x = fam.sample(rng)
        jet = js.prolong(fam, x)
        for lam, v in enumerate(js.section_tangents(fam, x)):
            assert np.allclose(v.dy, jet.z1[:, lam], atol=1e-14)
