import numpy as np
import pytest

from dedonder import covariance as cov
from dedonder import exprlang as ex
from dedonder import jet_space as js
from dedonder import lagrangians as lg
from dedonder import ostrogradski as og

QUADRATIC = cov.Diffeo.from_expressions(
    "quadratic", ["x1 + 0.1*x2^2", "x2", "x3", "x4"], ["x1 - 0.1*x2^2", "x2", "x3", "x4"])
ROTATION = np.array([[1.2, 0.1, 0.0, 0.0], [0.1, 1.0, 0.2, 0.0],
                     [0.0, -0.2, 0.9, 0.1], [0.05, 0.0, 0.0, 1.1]])


class TestJacobians:
    def test_identity(self):
        pk = cov.jacobians(cov.identity(), [0.1, 0.2, 0.3, 0.4])
        assert np.array_equal(pk.J, np.eye(4)) and np.array_equal(pk.K, np.eye(4))
        assert not pk.H.any() and not pk.T.any()
        assert pk.det_K == 1.0

    def test_linear(self):
        pk = cov.jacobians(cov.linear(ROTATION), [0.3, -0.1, 0.2, 0.5])
        assert np.allclose(pk.J, ROTATION)
        assert np.allclose(pk.K, np.linalg.inv(ROTATION))
        assert pk.det_K == pytest.approx(1 / np.linalg.det(ROTATION))
        assert not pk.H.any()

    def test_quadratic(self):
        pk = cov.jacobians(QUADRATIC, [0.3, 0.5, 0.0, 0.0])
        assert pk.J[0, 1] == pytest.approx(0.1)
        assert pk.H[0, 1, 1] == pytest.approx(0.2)
        assert pk.K[0, 1] == pytest.approx(-0.1)
        assert pk.KH[0, 1, 1] == pytest.approx(-0.2)
        assert not pk.T.any()
        assert cov.inverse_consistency(pk) < 1e-15

    def test_jacobian_blocks_shapes(self):
        blocks = cov.jacobian_blocks(QUADRATIC.forward, np.zeros(4), 2)
        assert [b.shape for b in blocks] == [(4,), (4, 4), (4, 4, 4)]

    def test_orientation_reversal(self):
        with pytest.raises(cov.OrientationError):
            cov.linear(np.diag([-1.0, 1.0, 1.0, 1.0]))
        flip = cov.Diffeo.from_expressions("flip", ["-x1", "x2", "x3", "x4"],
                                           ["-x1", "x2", "x3", "x4"])
        with pytest.raises(cov.OrientationError):
            cov.jacobians(flip, np.zeros(4))

    def test_singular(self):
        stretch = cov.Diffeo.from_expressions("stretch", ["1e11*x1", "x2", "x3", "x4"],
                                              ["1e-11*x1", "x2", "x3", "x4"])
        with pytest.raises(cov.SingularJacobianError):
            cov.jacobians(stretch, np.zeros(4))

    def test_inconsistent_inverse(self):
        bad = cov.Diffeo.from_expressions("bad", ["x1 + 0.1", "x2", "x3", "x4"],
                                          ["x1", "x2", "x3", "x4"])
        with pytest.raises(ValueError):
            cov.jacobians(bad, np.zeros(4))

    def test_wrong_component_count(self):
        with pytest.raises(ValueError):
            cov.Diffeo.from_expressions("short", ["x1"], ["x1"])


class TestBuiltinDiffeos:
    def test_polynomial_maps(self, rng):
        fam = js.schwarzschild()
        for d in cov.builtin_diffeos(rng, fam):
            for _ in range(5):
                xp = fam.sample(rng)
                assert d.composition_error(xp) < 1e-12
                det = cov.jacobians(d, xp).det_K
                assert 0.5 <= det <= 2.0

    def test_matrix_of_linear(self):
        assert np.allclose(cov.matrix_of(cov.linear(ROTATION)), ROTATION)

    def test_family_box_is_deterministic(self, rng):
        fam = js.kasner()
        c1, h1 = cov.family_box(fam, rng)
        c2, h2 = cov.family_box(fam, np.random.default_rng(999))
        assert np.array_equal(c1, c2) and np.array_equal(h1, h2)
        assert np.all(h1 > 0)


class TestJetTransformation:
    def test_identity_map(self, rng):
        fam = js.random_polynomial(rng)
        jet = js.prolong(fam, fam.sample(rng))
        out = cov.transform_jet(jet, cov.identity())
        assert np.allclose(out.y, jet.y) and np.allclose(out.z2, jet.z2)

    def test_matches_reprolongation(self, rng):
        fam = js.random_polynomial(rng)
        d = cov.builtin_diffeos(rng, fam)[2]
        xp = fam.sample(rng)
        moved = cov.transform_jet(js.prolong(fam, xp), d)
        direct = js.prolong(cov.pullback_family(fam, d), d.to_unprimed(xp), 2)
        for level in ("y", "z1", "z2"):
            assert og.scaled_error(getattr(moved, level), getattr(direct, level)) < 1e-11

    def test_all_builtin_diffeos(self, rng):
        fam = js.schwarzschild()
        for d in [cov.identity()] + cov.builtin_diffeos(rng, fam):
            xp = fam.sample(rng)
            direct = js.prolong(cov.pullback_family(fam, d), d.to_unprimed(xp), 2)
            for order in (0, 1, 2):
                moved = cov.transform_jet(js.prolong(fam, xp, order), d)
                for level in ("y", "z1", "z2")[:order + 1]:
                    assert og.scaled_error(getattr(moved, level),
                                           getattr(direct, level)) < 1e-10

    def test_linear_pullback_metric(self, rng):
        fam = js.kasner()
        d = cov.linear(ROTATION)
        xp = fam.sample(rng)
        pulled = cov.pullback_family(fam, d).at(d.to_unprimed(xp))
        K = np.linalg.inv(ROTATION)
        assert np.allclose(pulled, K.T @ fam.at(xp) @ K, atol=1e-14)


@pytest.fixture(scope="module")
def charts():
    rng = np.random.default_rng(21)
    fam = js.kasner()
    d = cov.builtin_diffeos(rng, fam)[1]
    xp = fam.sample(rng)
    return fam, d, xp, cov.two_chart_jets(fam, d, xp)


class TestInvariance:
    def test_density(self, charts):
        fam, d, xp, tc = charts
        assert cov.check_density(lg.HILBERT, fam, d, xp, charts=tc) < 1e-10

    def test_negative_control(self, charts):
        fam, d, xp, tc = charts
        assert cov.check_density(lg.component_lagrangian(0, 0), fam, d, xp, charts=tc) > 1e-3

    def test_momenta_laws(self, charts):
        fam, d, xp, tc = charts
        r4, r3 = cov.check_momenta_laws(lg.HILBERT, fam, d, xp, charts=tc)
        assert r4 < 1e-10 and r3 < 1e-10

    def test_momenta_laws_linear(self, rng):
        fam = js.schwarzschild()
        xp = fam.sample(rng)
        r4, r3 = cov.check_momenta_laws(lg.HILBERT, fam, cov.linear(ROTATION), xp)
        assert r4 < 1e-10 and r3 < 1e-10

    def test_theta_on_section_tangents(self, rng):
        # a vacuum family would make every term vanish on section tangents
        fam = js.random_polynomial(rng)
        d = cov.builtin_diffeos(rng, fam)[2]
        xp = fam.sample(rng)
        tangents = [js.section_tangents(fam, xp)]
        assert cov.check_theta_invariance(lg.HILBERT, fam, d, xp, vectors=tangents) < 1e-9

    def test_theta_on_random_vectors(self, charts):
        fam, d, xp, tc = charts
        assert cov.check_theta_invariance(lg.HILBERT, fam, d, xp, trials=2,
                                          rng=np.random.default_rng(5), charts=tc) < 1e-9

    def test_push_vector_of_coordinate_direction(self, charts):
        fam, d, xp, tc = charts
        pushed = cov.push_vector(d, tc.jet_p, js.JetTangentVector.coordinate(0))
        assert np.allclose(pushed.dx, tc.pack.J[:, 0])


class TestMatterInvariance:
    def test_laws(self, rng):
        fam = js.schwarzschild()
        d = cov.builtin_diffeos(rng, fam)[2]
        q_law, dens = cov.check_matter_invariance(fam, "x1*x2 + 0.5*x3^2", "0.1*t^2", d,
                                                  fam.sample(rng))
        assert q_law < 1e-10 and dens < 1e-10

    def test_constant_field_has_no_momentum(self):
        state = cov.scalar_field_state(ex.parse("2.5"), [0.1, 0.2, 0.3, 0.4])
        assert state.t == 2.5
        assert not np.any(og.matter_momentum(js.sym_pack(js.ETA), state))
