import math

import numpy as np
import pytest

from gnet.geometry import (
    CALIBRATED_KAPPA_BALL,
    CALIBRATED_KAPPA_SPHERE,
    DomainError,
    ball,
    covering_bound,
    covering_c_t,
    epsilon_net,
    greedy_net_indices,
    raise_to_sphere,
    sphere,
    sphere_cap_fraction,
)


def e(i, dim):
    v = np.zeros(dim)
    v[i] = 1.0
    return v


class TestDistance:
    def test_identity(self):
        sp = sphere(2)
        x = sp.sample(np.random.default_rng(0), 1)[0]
        assert sp.distance(x, x) == 0.0

    def test_antipodal_is_diameter(self):
        sp = sphere(2)
        assert sp.distance(e(0, 3), -e(0, 3)) == pytest.approx(2.0, abs=1e-15)

    def test_orthogonal_is_one(self):
        sp = sphere(2)
        assert sp.distance(e(0, 3), e(1, 3)) == pytest.approx(1.0, abs=1e-15)

    def test_ball_euclidean(self):
        bl = ball(2)
        assert bl.distance(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == 2.0

    def test_off_space_rejected(self):
        sp = sphere(2)
        with pytest.raises(DomainError):
            sp.distance(np.array([2.0, 0.0, 0.0]), e(0, 3))

    @pytest.mark.parametrize("space", [sphere(2), sphere(3, 5), ball(2), ball(3, 4)])
    def test_metric_axioms_random_triples(self, space):
        rng = np.random.default_rng(7)
        a, b, c = (space.sample(rng, 10_000) for _ in range(3))
        dab = np.array([space._dist_free(x, y[None])[0] for x, y in zip(a, b)])
        dba = np.array([space._dist_free(y, x[None])[0] for x, y in zip(a, b)])
        dac = np.array([space._dist_free(x, y[None])[0] for x, y in zip(a, c)])
        dcb = np.array([space._dist_free(x, y[None])[0] for x, y in zip(c, b)])
        assert np.max(np.abs(dab - dba)) <= 1e-12
        assert np.all(dab <= dac + dcb + 1e-12)
        assert np.all(dab >= 0)
        assert np.max(dab) <= 2.0 + 1e-12


class TestRaiseToSphere:
    def test_zero_vector(self):
        p, s = raise_to_sphere(np.zeros(4), 1.0)
        assert s == 1.0
        np.testing.assert_allclose(p, [0, 0, 0, 0, 1])

    def test_hand_normalization(self):
        p, s = raise_to_sphere(np.array([3.0, 4.0]), 0.0)
        assert s == 5.0
        np.testing.assert_allclose(p, [0.6, 0.8, 0.0])

    def test_hand_identity_case(self):
        # (x.y + b)_+ = 2 for x=(1,0), y=(1,0), b=1.
        px, sx = raise_to_sphere(np.array([1.0, 0.0]), 1.0)
        pw, sw = raise_to_sphere(np.array([1.0, 0.0]), 1.0)
        assert sx * sw * max(px @ pw, 0.0) == pytest.approx(2.0, rel=1e-15)

    def test_zero_weight_bias_rejected(self):
        with pytest.raises(DomainError):
            raise_to_sphere(np.zeros(3), 0.0)

    def test_rectified_power_identity_random(self):
        rng = np.random.default_rng(11)
        for _ in range(1000):
            q = int(rng.integers(1, 6))
            x = rng.normal(size=q) * rng.uniform(0.1, 3)
            y = rng.normal(size=q) * rng.uniform(0.1, 3)
            b = rng.normal() * 2
            if np.linalg.norm(y) == 0 and b == 0:
                continue
            gamma = int(rng.integers(1, 4))
            px, sx = raise_to_sphere(x, 1.0)
            pw, sw = raise_to_sphere(y, b)
            lhs = max(x @ y + b, 0.0) ** gamma
            rhs = sx**gamma * sw**gamma * max(px @ pw, 0.0) ** gamma
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs), abs(rhs))


class TestEpsilonNet:
    def test_huge_radius_gives_single_point(self):
        sp = sphere(2)
        pts = sp.sample(np.random.default_rng(1), 500)
        net = epsilon_net(sp, pts, 2.0)
        assert net.shape[0] == 1

    def test_single_point_region(self):
        sp = sphere(2)
        p = sp.sample(np.random.default_rng(2), 1)
        net = epsilon_net(sp, p, 0.1)
        np.testing.assert_array_equal(net, p)

    def test_empty_region_rejected(self):
        with pytest.raises(DomainError):
            epsilon_net(sphere(2), np.zeros((0, 3)), 0.5)

    def test_circle_net_size_and_coverage(self):
        # Great circle in S^2: 1-dimensional region, eps = 0.5.
        sp = sphere(2)
        rng = np.random.default_rng(3)
        theta = rng.uniform(0, 2 * math.pi, 100_000)
        pts = np.column_stack([np.cos(theta), np.sin(theta), np.zeros_like(theta)])
        net = epsilon_net(sp, pts, 0.5)
        assert 4 <= net.shape[0] <= 8
        cover = np.min(
            np.stack([sp.distance_to_many(c, pts) for c in net]), axis=0
        )
        assert cover.max() <= 0.5

    def test_net_and_packing_properties(self):
        for space in (sphere(2), ball(2)):
            pts = space.sample(np.random.default_rng(4), 3000)
            eps = 0.4
            net = epsilon_net(space, pts, eps)
            cover = np.min(
                np.stack([space.distance_to_many(c, pts) for c in net]), axis=0
            )
            assert cover.max() <= eps
            for i, c in enumerate(net[:-1]):
                d = space.distance_to_many(c, net[i + 1 :])
                assert d.min() > eps

    def test_sampler_region(self):
        sp = ball(2)
        net = epsilon_net(sp, lambda rng, n: sp.sample(rng, n), 0.5,
                          rng=np.random.default_rng(5), sample_size=2000)
        assert net.shape[0] >= 3


class TestCoveringBound:
    def test_direct_substitution(self):
        # kappa * q^{3/2} * log q at q=2, eps=1.
        val = covering_bound(sphere(2), 1.0, 1.0)
        assert val == pytest.approx(2 * math.sqrt(2) * math.log(2), rel=1e-14)
        assert val == pytest.approx(1.9605, abs=1e-4)

    def test_halving_eps_power_law(self):
        for q in (2, 3, 4):
            sp = sphere(q)
            assert covering_bound(sp, 0.25, 1.3) == pytest.approx(
                2**q * covering_bound(sp, 0.5, 1.3), rel=1e-12
            )

    def test_greedy_net_within_calibrated_bound(self):
        sp = sphere(2)
        pts = sp.sample(np.random.default_rng(6), 60_000)
        net = epsilon_net(sp, pts, 0.25)
        assert net.shape[0] <= covering_bound(sp, 0.25, CALIBRATED_KAPPA_SPHERE)

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            covering_bound(sphere(2), 0.0, 1.0)
        with pytest.raises(DomainError):
            covering_bound(sphere(2), 1.5, 1.0)
        with pytest.raises(DomainError):
            covering_c_t(1)


def test_calibrated_kappa_probe():
    # Greedy net sizes stay below kappa * q^{3/2} * log(q) * eps^{-q} over a
    # spread of dimensions, radii, and seeds (the partition count bound
    # rests on this).
    for kind, mk, kappa in (
        ("sphere", sphere, CALIBRATED_KAPPA_SPHERE),
        ("ball", ball, CALIBRATED_KAPPA_BALL),
    ):
        for q in (2, 3):
            space = mk(q)
            for eps in (0.35, 0.6, 0.9):
                for seed in range(2):
                    pts = space.sample(np.random.default_rng(seed * 31 + q), 20_000)
                    k = len(greedy_net_indices(space, pts, eps))
                    assert k <= kappa * covering_c_t(q) * eps ** (-q), (kind, q, eps)


class TestCapFraction:
    def test_closed_form_on_two_sphere(self):
        for r in (0.1, 0.5, 1.0, 1.5):
            theta = math.pi * r / 2
            assert sphere_cap_fraction(2, r) == pytest.approx(
                (1 - math.cos(theta)) / 2, rel=1e-12
            )

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(8)
        sp = sphere(3)
        pts = sp.sample(rng, 200_000)
        pole = e(0, 4)
        for r in (0.3, 0.7, 1.2):
            frac = float(np.mean(sp.distance_to_many(pole, pts) <= r))
            assert sphere_cap_fraction(3, r) == pytest.approx(frac, abs=4e-3)

    def test_extremes(self):
        assert sphere_cap_fraction(2, 0.0) == 0.0
        assert sphere_cap_fraction(2, 2.0) == 1.0


class TestSpaceValidation:
    def test_trailing_coordinates_enforced(self):
        sp = sphere(2, 5)
        good = np.array([1.0, 0, 0, 0, 0])
        bad = np.array([1.0, 0, 0, 1e-6, 0])
        assert sp.contains(good)[0]
        assert not sp.contains(bad)[0]

    def test_ball_norm(self):
        bl = ball(2, 3)
        assert bl.contains(np.array([0.5, 0.5, 0.0]))[0]
        assert not bl.contains(np.array([0.9, 0.9, 0.0]))[0]

    def test_bad_construction(self):
        with pytest.raises(DomainError):
            sphere(0)
        with pytest.raises(DomainError):
            ball(3, 2)
