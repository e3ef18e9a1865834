import math

import numpy as np
import pytest

from gnet.geometry import DomainError, ball, sphere, sphere_cap_fraction
from gnet.kernels import make_kernel
from gnet.measures import (
    DensitySpec,
    ProbabilityAtomMeasure,
    SignedAtomMeasure,
    ball_mass,
    hahn_split,
    load_measure,
    make_surrogate,
    save_measure,
    total_variation,
    tube_mass,
)


def two_atom_measure(w1, w2):
    sp = sphere(2)
    pts = np.array([[1.0, 0, 0], [0, 1.0, 0]])
    return SignedAtomMeasure(sp, pts, np.array([w1, w2]))


class TestTotalVariation:
    def test_signed_pair(self):
        assert total_variation(two_atom_measure(0.5, -0.5)) == 1.0

    def test_uniform_weights(self):
        sp = sphere(2)
        m = SignedAtomMeasure(sp, sp.sample(np.random.default_rng(0), 64), np.full(64, 1 / 64))
        assert total_variation(m) == pytest.approx(1.0, abs=1e-15)

    def test_direct_sum(self):
        sp = ball(2)
        m = SignedAtomMeasure(
            sp, sp.sample(np.random.default_rng(1), 3), np.array([2.0, -3.0, 0.5])
        )
        assert total_variation(m) == 5.5

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            SignedAtomMeasure(sphere(2), np.zeros((0, 3)), np.zeros(0))


class TestHahnSplit:
    def test_two_atoms(self):
        plus, minus, mp, mm = hahn_split(two_atom_measure(2.0, -3.0))
        assert (mp, mm) == (2.0, 3.0)
        assert plus.n_atoms == 1 and plus.weights[0] == 1.0
        assert minus.n_atoms == 1 and minus.weights[0] == 1.0

    def test_all_positive(self):
        plus, minus, mp, mm = hahn_split(two_atom_measure(1.0, 2.0))
        assert minus is None and mm == 0.0
        assert mp == 3.0

    def test_hand_split(self):
        sp = sphere(2)
        pts = np.eye(3)
        m = SignedAtomMeasure(sp, pts, np.array([1.0, -1.0, 2.0]))
        plus, minus, mp, mm = hahn_split(m)
        assert mp == 3.0 and mm == 1.0
        np.testing.assert_allclose(plus.weights, [1 / 3, 2 / 3])
        np.testing.assert_allclose(plus.points, pts[[0, 2]])

    def test_reconstruction_exact(self):
        rng = np.random.default_rng(2)
        sp = ball(3)
        pts = sp.sample(rng, 200)
        w = rng.normal(size=200)
        m = SignedAtomMeasure(sp, pts, w)
        plus, minus, mp, mm = hahn_split(m)
        rebuilt = np.zeros(200)
        rebuilt[w > 0] = mp * plus.weights
        rebuilt[w < 0] -= mm * minus.weights
        assert np.max(np.abs(rebuilt - w)) <= 1e-15


class TestBallMass:
    def test_whole_space(self):
        m = two_atom_measure(0.25, -0.75)
        assert ball_mass(m, np.array([0.0, 0, 1.0]), 2.0) == 1.0

    def test_closed_ball_radius_zero(self):
        m = two_atom_measure(0.25, -0.75)
        assert ball_mass(m, np.array([1.0, 0, 0]), 0.0) == 0.25

    def test_brute_force_count(self):
        sp = sphere(2)
        rng = np.random.default_rng(3)
        pts = sp.sample(rng, 1000)
        m = SignedAtomMeasure(sp, pts, np.full(1000, 1 / 1000))
        center = sp.sample(rng, 1)[0]
        inside = sum(1 for p in pts if sp.distance(center, p) <= 0.5)
        assert ball_mass(m, center, 0.5) == pytest.approx(inside / 1000, abs=1e-15)

    def test_monotone_in_radius(self):
        sp = ball(2)
        rng = np.random.default_rng(4)
        m = SignedAtomMeasure(sp, sp.sample(rng, 500), rng.normal(size=500))
        center = sp.sample(rng, 1)[0]
        masses = [ball_mass(m, center, r) for r in np.linspace(0, 2, 40)]
        assert all(b >= a for a, b in zip(masses, masses[1:]))


class TestTubeMass:
    def test_empty_singular_set_is_zero(self):
        kernel = make_kernel("relu-pow", 1.0, 2, 4)  # proper subsphere: empty set
        sp = kernel.y_space
        m = SignedAtomMeasure(sp, sp.sample(np.random.default_rng(5), 100), np.full(100, 0.01))
        x = kernel.x_space.sample(np.random.default_rng(6), 1)[0]
        assert tube_mass(m, kernel, x, 0.5) == 0.0

    def test_whole_space(self):
        kernel = make_kernel("laplace", 0.0, 2, 2)
        sp = kernel.y_space
        m = SignedAtomMeasure(sp, sp.sample(np.random.default_rng(7), 50), np.full(50, 1.0))
        x = np.zeros(2)
        assert tube_mass(m, kernel, x, 2.0) == 50.0

    def test_equator_tube_under_analytic_bound(self):
        # Uniform cloud on S^2, rectifier kernel: the eps-tube around the
        # equator carries at most 3*sqrt(pi*(q+2))*eps of the mass, with
        # ample margin for atom discreteness.
        kernel = make_kernel("relu-pow", 1.0, 2, 2)
        sp = kernel.y_space
        rng = np.random.default_rng(8)
        m = SignedAtomMeasure(sp, sp.sample(rng, 50_000), np.full(50_000, 2e-5))
        x = np.array([0.0, 0.0, 1.0])
        for eps in (0.05, 0.1, 0.2):
            frac = tube_mass(m, kernel, x, eps) / total_variation(m)
            assert frac <= 3 * math.sqrt(math.pi * 4) * eps * 1.1
            # brute-force oracle: distance to the equator is |arcsin(x . y)| * 2/pi
            dots = m.points @ x
            direct = np.abs(m.weights[np.abs(np.arcsin(dots)) * 2 / math.pi <= eps]).sum()
            assert frac == pytest.approx(direct / total_variation(m), abs=1e-15)


class TestSurrogates:
    def test_uniform_tiny(self):
        sp = sphere(2)
        m = make_surrogate(DensitySpec("uniform"), 4, sp, np.random.default_rng(9))
        np.testing.assert_allclose(m.weights, 0.25)
        assert np.all(sp.contains(m.points))

    def test_negative_custom_density(self):
        sp = ball(2)
        spec = DensitySpec("custom", fn=lambda pts: -np.ones(pts.shape[0]))
        m = make_surrogate(spec, 50, sp, np.random.default_rng(10))
        assert total_variation(m) == pytest.approx(1.0, abs=1e-12)
        assert np.all(m.weights < 0)

    @pytest.mark.parametrize("space", [sphere(2), ball(2)])
    def test_cap_concentration(self, space):
        spec = DensitySpec("cap", cap_radius=0.5, cap_fraction=0.95)
        m = make_surrogate(spec, 100_000, space, np.random.default_rng(11))
        center = m.space.embed(
            [0, 0, 1] if space.kind == "sphere" else [0, 0]
        )[0]
        assert ball_mass(m, center, 0.5) / total_variation(m) >= 0.9

    def test_unknown_spec(self):
        with pytest.raises(DomainError):
            make_surrogate(DensitySpec("bogus"), 10, sphere(2), np.random.default_rng(0))

    def test_deterministic_under_seed(self):
        sp = sphere(3)
        a = make_surrogate(DensitySpec("uniform"), 100, sp, np.random.default_rng(42))
        b = make_surrogate(DensitySpec("uniform"), 100, sp, np.random.default_rng(42))
        np.testing.assert_array_equal(a.points, b.points)


class TestSerialization:
    def test_round_trip_bit_exact(self, tmp_path):
        sp = sphere(2, 4)
        rng = np.random.default_rng(12)
        m = SignedAtomMeasure(sp, sp.sample(rng, 97), rng.normal(size=97))
        path = tmp_path / "tau.txt"
        save_measure(m, path)
        m2 = load_measure(path, sp)
        np.testing.assert_array_equal(m.points, m2.points)
        np.testing.assert_array_equal(m.weights, m2.weights)

    def test_loader_validates_membership(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1.0 2.0 0.0 0.0\n")  # norm 2: not on the sphere
        with pytest.raises(DomainError):
            load_measure(path, sphere(2))

    def test_loader_validates_shape(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("1.0 0.5\n")
        with pytest.raises(DomainError):
            load_measure(path, sphere(2))


def test_uniform_density_ratio_stays_small():
    # |tau|(B(y, d)) / (TV * cap fraction) over random (y, d): below 2 for
    # a 1e5-atom uniform cloud.
    sp = sphere(2)
    rng = np.random.default_rng(13)
    m = make_surrogate(DensitySpec("uniform"), 100_000, sp, rng)
    worst = 0.0
    for _ in range(100):
        y = sp.sample(rng, 1)[0]
        d = rng.uniform(0.05, 1.0)
        worst = max(worst, ball_mass(m, y, d) / sphere_cap_fraction(2, d))
    assert worst < 2.0


def test_probability_measure_validation():
    sp = sphere(2)
    pts = sp.sample(np.random.default_rng(14), 3)
    with pytest.raises(DomainError):
        ProbabilityAtomMeasure(sp, pts, np.array([0.5, 0.6, -0.1]))
    with pytest.raises(DomainError):
        ProbabilityAtomMeasure(sp, pts, np.array([0.5, 0.1, 0.1]))
