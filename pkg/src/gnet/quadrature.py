"""Compress a cell's atoms to a few-point rule matching polynomial moments.

Any probability cloud over n atoms admits a basic feasible reweighting
supported on at most (active basis size + 1) atoms with identical
moments; the reduction walks random null-space directions of the moment
matrix, driving one weight to zero per step while staying nonnegative.
Random direction mixing and sign flips make distinct seeds produce
distinct valid rules, which is the randomness source for the builder's
trial search.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gnet.geometry import DomainError
from gnet.measures import ProbabilityAtomMeasure
from gnet.partition import Cell
from gnet.polyspace import PolyBasis, basis_dim, eval_basis, orthogonalize_on

MOMENT_TOL = 1e-9
_RANK_TOL = 1e-10


class QuadratureError(RuntimeError):
    """Recombination failed to reach the moment tolerance."""


@dataclass
class QuadratureRule:
    """Nonnegative weights on a few points, summing to one."""

    points: np.ndarray
    weights: np.ndarray
    moment_residual: float = 0.0

    @property
    def size(self) -> int:
        return self.points.shape[0]


def cell_moments(basis: PolyBasis, cell: Cell, measure: ProbabilityAtomMeasure) -> np.ndarray:
    """Moments of the normalized cell measure against the basis."""
    if cell.mass <= 0:
        raise DomainError("cell has zero mass")
    vals = eval_basis(basis, measure.points[cell.atom_indices])
    return (measure.weights[cell.atom_indices] / cell.mass) @ vals


def recombine(
    points: np.ndarray,
    weights: np.ndarray,
    basis: PolyBasis,
    rng: np.random.Generator,
    tol: float = MOMENT_TOL,
    max_retries: int = 3,
) -> QuadratureRule:
    """Reduce (points, weights) to a moment-matched rule on few points.

    ``weights`` must be nonnegative and sum to one.  Candidate points are
    the cell's own atoms only, so an exact reweighting always exists.
    The support never exceeds basis_dim(q, k) + 2 for the basis' degree
    bound k; cells at or below that size pass through unchanged.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float).ravel()
    n = points.shape[0]
    if n == 0:
        raise DomainError("empty cell")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise DomainError("recombine needs a normalized nonnegative cell measure")

    cap = basis_dim(basis.space.q, basis.degree_bound, basis.space.kind) + 2
    if n <= cap:
        return QuadratureRule(points.copy(), weights.copy(), 0.0)

    cell_basis = basis if basis.transform is not None else orthogonalize_on(basis, points)
    if cell_basis.active_size + 1 > cap:
        raise QuadratureError(
            f"active basis size {cell_basis.active_size} cannot honor the "
            f"support bound {cap}"
        )
    vals = eval_basis(cell_basis, points)  # (n, D)
    target = np.concatenate([weights @ vals, [1.0]])

    for attempt in range(max_retries):
        try:
            keep, w = _reduce(vals, weights, rng)
        except QuadratureError:
            if attempt == max_retries - 1:
                raise
            continue
        rule_pts = points[keep]
        # Cancel elimination drift with a minimum-norm correction to the
        # (feasible) walked weights; the correction is at rounding scale,
        # so nonnegativity survives the clip.
        a = np.vstack([vals[keep].T, np.ones(keep.size)])
        delta, *_ = np.linalg.lstsq(a, target - a @ w, rcond=None)
        w_fit = w + delta
        if w_fit.min(initial=0.0) < -1e-10:
            continue
        w_fit = np.clip(w_fit, 0.0, None)
        s = w_fit.sum()
        if s <= 0:
            continue
        w_fit /= s
        live = w_fit > 0
        rule = QuadratureRule(rule_pts[live], w_fit[live])
        resid = verify_rule(rule, cell_basis, points, weights)
        if resid <= tol and rule.size <= cap:
            rule.moment_residual = resid
            return rule
    raise QuadratureError(f"no rule within tolerance {tol} after {max_retries} attempts")


def verify_rule(
    rule: QuadratureRule,
    basis: PolyBasis,
    points: np.ndarray,
    weights: np.ndarray,
) -> float:
    """Max absolute gap between the rule's moments and the cell's."""
    want = np.asarray(weights, float) @ eval_basis(basis, points)
    got = rule.weights @ eval_basis(basis, rule.points)
    gaps = np.abs(got - want)
    norm_gap = abs(float(rule.weights.sum()) - 1.0)
    return max(float(gaps.max(initial=0.0)), norm_gap)


def pool_reduce(
    points: np.ndarray,
    weights: np.ndarray,
    basis: PolyBasis,
    rng: np.random.Generator,
    target_size: int,
    tol: float = MOMENT_TOL,
):
    """Shrink a cell to at most target_size atoms with identical moments.

    A moment-preserving pre-reduction: the output is itself a valid
    (larger) rule over the cell's atoms, and recombining it yields rules
    for the original cell.  Used to amortize the bulk of the elimination
    work across trials.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    weights = np.asarray(weights, dtype=float).ravel()
    cell_basis = basis if basis.transform is not None else orthogonalize_on(basis, points)
    if points.shape[0] <= target_size:
        return points, weights, cell_basis
    perm = rng.permutation(points.shape[0])
    vals = eval_basis(cell_basis, points)
    keep, w = _reduce(vals[perm], weights[perm], rng, stop_at=target_size)
    w = w / w.sum()
    pooled = points[perm[keep]]
    resid = verify_rule(QuadratureRule(pooled, w), cell_basis, points, weights)
    if resid > tol:
        raise QuadratureError(f"pool reduction drifted to residual {resid:.3g}")
    return pooled, w, cell_basis


def _reduce(vals: np.ndarray, weights: np.ndarray, rng: np.random.Generator, stop_at=None):
    """Null-space elimination down to at most ``stop_at`` support points.

    Streams atoms through a working set of bounded size so the linear
    algebra stays on small matrices regardless of the cell's atom count.
    """
    n, d = vals.shape
    if stop_at is None:
        stop_at = d + 1
    stop_at = max(stop_at, d + 1)
    chunk = 2 * (d + 2)
    keep = np.empty(0, dtype=np.intp)
    wk = np.empty(0)
    pos = 0
    while pos < n:
        if keep.size + (n - pos) <= stop_at:
            keep = np.concatenate([keep, np.arange(pos, n, dtype=np.intp)])
            wk = np.concatenate([wk, weights[pos:]])
            return keep, wk
        take = min(n - pos, max(chunk - keep.size, d + 2))
        idx = np.concatenate([keep, np.arange(pos, pos + take, dtype=np.intp)])
        w = np.concatenate([wk, weights[pos : pos + take]])
        pos += take
        keep, wk = _eliminate(vals, idx, w, rng, d + 1)
    if keep.size > stop_at:
        keep, wk = _eliminate(vals, keep, wk, rng, d + 1)
        if keep.size > stop_at:
            raise QuadratureError("null-space elimination stalled")
    return keep, wk


def _eliminate(vals, idx, w, rng, goal):
    """Drive weights to zero along null directions until <= goal survive.

    Directions are the null basis of the moment matrix over the working
    set, taken in a seed-dependent order with seed-dependent signs; each
    step zeroes the weight hitting the simplex ratio bound first, then
    projects the remaining directions off the dead atom.
    """
    for _ in range(4):
        if idx.size <= goal:
            break
        a = np.vstack([vals[idx].T, np.ones(idx.size)])
        s, vt = np.linalg.svd(a, full_matrices=True)[1:]
        rank = int(np.sum(s > _RANK_TOL * s[0]))
        k = vt.shape[0] - rank
        if k <= 0:
            break
        null = np.ascontiguousarray(vt[rank:][rng.permutation(k)].T)  # (m, k)
        signs = rng.integers(0, 2, size=k) * 2.0 - 1.0
        alive = np.ones(idx.size, dtype=bool)
        w = w.copy()
        for step in range(k):
            col = null[:, step]
            v = signs[step] * col
            scale = np.abs(v[alive]).max(initial=0.0)
            if scale <= 0:
                continue
            pos_mask = alive & (v > 1e-13 * scale)
            if not pos_mask.any():
                v = -v
                pos_mask = alive & (v > 1e-13 * scale)
                if not pos_mask.any():
                    continue
            ratios = w[pos_mask] / v[pos_mask]
            j_local = int(np.argmin(ratios))
            i_star = np.nonzero(pos_mask)[0][j_local]
            w -= ratios[j_local] * v
            w[i_star] = 0.0
            alive[i_star] = False
            piv = null[i_star, step]
            if step + 1 < k and piv != 0.0:
                null[:, step + 1 :] -= np.outer(col, null[i_star, step + 1 :] / piv)
        np.clip(w, 0.0, None, out=w)
        live = alive & (w > 0)
        idx, w = idx[live], w[live]
    return idx, w
