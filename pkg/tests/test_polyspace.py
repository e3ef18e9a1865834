import math

import numpy as np
import pytest

from gnet.geometry import DomainError, ball, sphere
from gnet.polyspace import (
    PolyBasis,
    basis_dim,
    eval_basis,
    eval_monomials,
    local_ls_error,
    monomial_exponents,
    orthogonalize_on,
    poly_basis,
)


class TestBasisDim:
    def test_paper_values(self):
        assert basis_dim(2, 3) == math.comb(5, 3) == 10
        assert basis_dim(2, 1, "ball") == 3  # q + 1: the affine space
        assert basis_dim(1, 1) == 2

    def test_floor_of_fractional_degree(self):
        assert basis_dim(2, 3.0) == basis_dim(2, 3)
        assert basis_dim(2, 3.9) == basis_dim(2, 3)

    def test_monotone(self):
        for q in range(1, 6):
            dims = [basis_dim(q, k) for k in range(1, 8)]
            assert all(b > a for a, b in zip(dims, dims[1:]))
        for k in range(1, 6):
            dims = [basis_dim(q, k) for q in range(1, 8)]
            assert all(b > a for a, b in zip(dims, dims[1:]))

    def test_domain_errors(self):
        with pytest.raises(DomainError):
            basis_dim(0, 2)
        with pytest.raises(DomainError):
            basis_dim(2, 0)


class TestEvalBasis:
    def test_constant_monomial(self):
        sp = sphere(2)
        basis = poly_basis(sp, 1)  # constants only on the sphere
        pts = sp.sample(np.random.default_rng(0), 20)
        vals = eval_basis(basis, pts)
        assert vals.shape == (20, 1)
        np.testing.assert_allclose(vals, 1.0)

    def test_linear_monomials_are_coordinates(self):
        sp = sphere(2)
        basis = poly_basis(sp, 2)  # degree <= 1 over the active coordinates
        pts = sp.sample(np.random.default_rng(1), 10)
        vals = eval_basis(basis, pts)
        np.testing.assert_allclose(vals[:, 0], 1.0)
        np.testing.assert_allclose(vals[:, 1:4], pts[:, :3])

    def test_independent_evaluator(self):
        # Naive per-point product oracle reproduces the vectorized values.
        sp = ball(3)
        basis = poly_basis(sp, 3)
        pts = sp.sample(np.random.default_rng(2), 50)
        vals = eval_monomials(basis, pts)
        for i, p in enumerate(pts):
            for j, expo in enumerate(basis.exponents):
                ref = 1.0
                for v, ee in enumerate(expo):
                    ref *= p[v] ** ee
                assert abs(vals[i, j] - ref) <= 1e-12 * max(1.0, abs(ref))

    def test_off_space_rejected(self):
        basis = poly_basis(sphere(2), 2)
        with pytest.raises(DomainError):
            eval_basis(basis, np.array([2.0, 0.0, 0.0]))

    def test_gram_rank_after_orthogonalization(self):
        sp = sphere(2)
        basis = poly_basis(sp, 3)
        pts = sp.sample(np.random.default_rng(3), 200)
        cell = orthogonalize_on(basis, pts)
        vals = eval_basis(cell, pts)
        gram = vals.T @ vals
        rank = np.linalg.matrix_rank(gram, tol=1e-8)
        assert rank == cell.active_size
        # degree <= 2 restricted to a generic patch of S^2 has dimension 9
        assert cell.active_size == 9


class TestOrthogonalize:
    def test_drops_trailing_coordinate_directions(self):
        sp = sphere(2, 5)  # two trailing zero coordinates
        basis = poly_basis(sp, 2)
        pts = sp.sample(np.random.default_rng(4), 100)
        cell = orthogonalize_on(basis, pts)
        assert cell.active_size == 4  # constants + the three live coordinates

    def test_rms_scale(self):
        sp = ball(2)
        basis = poly_basis(sp, 2)
        pts = sp.sample(np.random.default_rng(5), 400)
        vals = eval_basis(orthogonalize_on(basis, pts), pts)
        rms = np.sqrt(np.mean(vals**2, axis=0))
        np.testing.assert_allclose(rms, 1.0, rtol=1e-10)


class TestLocalLsError:
    def test_polynomial_values_fit_exactly(self):
        sp = sphere(2)
        basis = poly_basis(sp, 3)
        rng = np.random.default_rng(6)
        pts = sp.sample(rng, 80)
        coef = rng.uniform(-1, 1, basis.nominal_size)
        values = eval_monomials(basis, pts) @ coef
        assert local_ls_error(basis, pts, values) <= 1e-9

    def test_single_atom(self):
        sp = ball(2)
        basis = poly_basis(sp, 1)
        assert local_ls_error(basis, sp.sample(np.random.default_rng(7), 1), [3.7]) <= 1e-12

    def test_duplicate_atoms_collapse(self):
        sp = ball(2)
        basis = poly_basis(sp, 2)
        p = sp.sample(np.random.default_rng(8), 1)
        pts = np.repeat(p, 5, axis=0)
        assert local_ls_error(basis, pts, np.full(5, 2.0)) <= 1e-12

    def test_reorder_invariance(self):
        sp = sphere(2)
        basis = poly_basis(sp, 2)
        rng = np.random.default_rng(9)
        pts = sp.sample(rng, 60)
        values = rng.normal(size=60)
        a = local_ls_error(basis, pts, values)
        perm = rng.permutation(60)
        b = local_ls_error(basis, pts[perm], values[perm])
        assert a == pytest.approx(b, rel=1e-9)

    def test_rectifier_kink_contrast(self):
        # Fit quality collapses where the kernel loses smoothness: caps at
        # the kink circle fit 10x worse than equal caps away from it.
        sp = sphere(2)
        basis = poly_basis(sp, 4)
        x = np.array([1.0, 0.0, 0.0])
        rng = np.random.default_rng(10)

        def cap_values(center, radius):
            pts = sp.sample(rng, 20_000)
            pts = pts[sp.distance_to_many(center, pts) <= radius][:300]
            return pts, np.clip(pts @ x, 0.0, None)

        on_kink, v_on = cap_values(np.array([0.0, 1.0, 0.0]), 0.25)
        off_kink, v_off = cap_values(np.array([math.sqrt(0.5), math.sqrt(0.5), 0.0]), 0.25)
        res_on = local_ls_error(basis, on_kink, v_on)
        res_off = local_ls_error(basis, off_kink, v_off)
        assert res_on >= 10 * res_off


def test_monomial_exponent_order_deterministic():
    a = monomial_exponents(3, 2)
    b = monomial_exponents(3, 2)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (10, 3)
    degrees = a.sum(axis=1)
    assert all(b >= a for a, b in zip(degrees, degrees[1:]))


def test_nominal_sizes():
    assert poly_basis(sphere(2), 3).nominal_size == 10  # deg <= 2 over 3 coords
    assert poly_basis(ball(2), 1).nominal_size == 3  # affine over 2 coords
    assert poly_basis(ball(3), 2).nominal_size == 10  # deg <= 2 over 3 coords
