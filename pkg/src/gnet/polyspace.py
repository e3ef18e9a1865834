"""Nested polynomial spaces on spheres and balls.

The space of degree bound k holds restrictions of ambient monomials to
the domain: degree <= k-1 over the sphere's active coordinates, degree
<= k over the ball's (so k = 1 is the affine space, matching the q+1
dimension count used by the constants).  Restrictions are rank-deficient
in general, so cells orthogonalize the monomials against their own atoms
with singular-value filtering before any quadrature solve.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from gnet.geometry import DomainError, Space

SV_REL_TOL = 1e-10  # relative singular-value cutoff for cell-local rank filtering


def basis_dim(q: int, k: float, space_kind: str = "sphere") -> int:
    """Dimension bound binom(q + floor(k), floor(k)) used in all constants."""
    if q < 1 or k < 1:
        raise DomainError("basis_dim needs q >= 1 and k >= 1")
    kk = math.floor(k)
    return math.comb(q + kk, kk)


def monomial_exponents(n_vars: int, max_degree: int) -> np.ndarray:
    """All exponent tuples with total degree <= max_degree, ordered by degree."""
    rows = []
    for deg in range(max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(n_vars), deg):
            e = [0] * n_vars
            for v in combo:
                e[v] += 1
            rows.append(e)
    return np.asarray(rows, dtype=np.intp)


@dataclass(frozen=True)
class PolyBasis:
    """Monomial basis for the polynomial space of degree bound k on a space.

    ``transform`` (set by orthogonalize_on) maps monomial values to a
    cell-local well-conditioned basis; None means raw monomials.
    """

    space: Space
    degree_bound: float
    exponents: np.ndarray
    transform: np.ndarray | None = None

    @property
    def nominal_size(self) -> int:
        return self.exponents.shape[0]

    @property
    def active_size(self) -> int:
        return self.nominal_size if self.transform is None else self.transform.shape[1]


def poly_basis(space: Space, k: float) -> PolyBasis:
    """Raw monomial basis for the degree-bound-k space on a sphere or ball."""
    if k < 1:
        raise DomainError("degree bound must be >= 1")
    kk = math.floor(k)
    max_deg = kk - 1 if space.kind == "sphere" else kk
    return PolyBasis(space, k, monomial_exponents(space.n_active, max_deg))


def eval_monomials(basis: PolyBasis, pts: np.ndarray) -> np.ndarray:
    """Raw monomial values at a stack of points, shape (n_pts, nominal_size)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    active = pts[:, : basis.space.n_active]
    out = np.empty((pts.shape[0], basis.nominal_size))
    for j, expo in enumerate(basis.exponents):
        col = np.ones(pts.shape[0])
        for v in np.nonzero(expo)[0]:
            col = col * active[:, v] ** expo[v]
        out[:, j] = col
    return out


def eval_basis(basis: PolyBasis, pts: np.ndarray) -> np.ndarray:
    """Basis values at member points (after the cell transform, if any)."""
    pts2 = np.atleast_2d(np.asarray(pts, dtype=float))
    if not np.all(basis.space.contains(pts2)):
        raise DomainError("evaluation point off the space")
    vals = eval_monomials(basis, pts2)
    if basis.transform is not None:
        vals = vals @ basis.transform
    return vals


def orthogonalize_on(basis: PolyBasis, pts: np.ndarray, rel_tol: float = SV_REL_TOL) -> PolyBasis:
    """Replace the basis by functions orthonormal (in RMS) over ``pts``.

    Directions whose singular value falls below rel_tol times the largest
    are dropped; on a cell these are exactly the numerically-null
    restrictions (trailing coordinates, sphere-constraint multiples).
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    vals = eval_monomials(basis, pts)
    u, s, vt = np.linalg.svd(vals, full_matrices=False)
    if s[0] == 0.0:
        raise DomainError("degenerate basis: all values zero")
    keep = s > rel_tol * s[0]
    # Scale so basis values have RMS about 1 over the cell's atoms.
    transform = (vt[keep].T / s[keep]) * math.sqrt(pts.shape[0])
    return PolyBasis(basis.space, basis.degree_bound, basis.exponents, transform)


def local_ls_error(basis: PolyBasis, pts: np.ndarray, values: np.ndarray) -> float:
    """Max absolute residual of the least-squares fit over the cell's atoms.

    A diagnostic proxy for the best sup-norm approximation error; never
    used in the construction itself.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    values = np.asarray(values, dtype=float).ravel()
    if pts.shape[0] != values.shape[0]:
        raise DomainError("values must match the atom count")
    if pts.shape[0] == 0:
        raise DomainError("need at least one atom")
    pts, idx = np.unique(pts, axis=0, return_index=True)
    values = values[idx]
    design = eval_monomials(basis, pts)
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    return float(np.max(np.abs(values - design @ coef)))
