"""Split a probability atom cloud into small cells of bounded mass.

Cells come from a two-stage greedy scheme: a farthest-point cover of the
support at radius eps with first-cover tie-breaking (so atom assignments
are exactly disjoint), then accumulation of each cover block into
sub-blocks whose mass stays below xi.  With xi = eps^q / c_T the cell
count is bounded by 3 * c_T * eps^{-q}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gnet.geometry import DomainError, Space
from gnet.measures import FidelityError, ProbabilityAtomMeasure


@dataclass(frozen=True)
class Cell:
    """One cell: member atoms, covering center, radius bound, and mass."""

    atom_indices: np.ndarray
    center: np.ndarray
    radius: float
    mass: float


@dataclass(frozen=True)
class Partition:
    cells: list
    eps: float
    xi: float

    @property
    def n_cells(self) -> int:
        return len(self.cells)


def greedy_cover(measure: ProbabilityAtomMeasure, eps: float):
    """Cover the support by eps-balls centered at atoms; assign first-cover.

    Returns a list of (center_point, atom_index_array) blocks.  Every
    support atom lands in exactly one block (the earliest center whose
    ball contains it), realizing zero-overlap exactly on atoms.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    support = measure.support()
    if support.size == 0:
        raise DomainError("measure has empty support")
    pts = measure.points[support]
    space: Space = measure.space

    center_local = [0]
    mindist = space.distance_to_many(pts[0], pts)
    while True:
        far = int(np.argmax(mindist))
        if mindist[far] <= eps:
            break
        center_local.append(far)
        np.minimum(mindist, space.distance_to_many(pts[far], pts), out=mindist)
        if len(center_local) >= pts.shape[0]:
            break

    assigned = np.full(pts.shape[0], -1, dtype=np.intp)
    for k, loc in enumerate(center_local):
        pending = np.nonzero(assigned < 0)[0]
        if pending.size == 0:
            break
        d = space.distance_to_many(pts[loc], pts[pending])
        assigned[pending[d <= eps]] = k
    blocks = []
    for k, loc in enumerate(center_local):
        members = support[assigned == k]
        if members.size:
            blocks.append((measure.points[support[loc]], members))
    return blocks


def split_block(weights: np.ndarray, xi: float):
    """Partition a block's atoms (given in order) into runs of mass <= xi.

    Runs close once their mass reaches xi/2, or early when adding the next
    atom would push the run past xi; the run count stays below
    1 + 2 * (block mass) / xi.
    """
    if xi <= 0:
        raise DomainError("xi must be positive")
    weights = np.asarray(weights, dtype=float)
    heavy = float(weights.max(initial=0.0))
    if heavy > xi:
        raise FidelityError(
            f"single atom of mass {heavy:.3e} exceeds the cell mass cap {xi:.3e}; "
            "surrogate too coarse"
        )
    if float(weights.sum()) <= xi:
        return [np.arange(weights.shape[0], dtype=np.intp)]
    groups = []
    start = 0
    run = 0.0
    for j, w in enumerate(weights):
        if run > 0.0 and run + w > xi:
            groups.append(np.arange(start, j, dtype=np.intp))
            start, run = j, 0.0
        run += w
        if run >= 0.5 * xi:
            groups.append(np.arange(start, j + 1, dtype=np.intp))
            start, run = j + 1, 0.0
    if start < weights.shape[0]:
        groups.append(np.arange(start, weights.shape[0], dtype=np.intp))
    return groups


def build_partition(
    measure: ProbabilityAtomMeasure,
    eps: float,
    c_t: float,
    xi: float | None = None,
) -> Partition:
    """Cover at radius eps, then split blocks to masses <= xi (default eps^q / c_T).

    The covering-number regime is eps in (0, 1]; larger radii are allowed
    (the cover degenerates toward a single block) so that budgets below
    the bound regime still produce graded partitions via the mass cap.
    """
    if eps <= 0:
        raise DomainError("eps must be positive")
    if c_t < 1:
        raise DomainError("covering constant must be >= 1")
    q = measure.space.q
    if xi is None:
        xi = eps**q / c_t
    cells = []
    for center, members in greedy_cover(measure, eps):
        block_w = measure.weights[members]
        for rel in split_block(block_w, xi):
            idx = members[rel]
            cells.append(
                Cell(
                    atom_indices=idx,
                    center=center,
                    radius=eps,
                    mass=float(measure.weights[idx].sum()),
                )
            )
    part = Partition(cells=cells, eps=eps, xi=xi)
    _check_partition(part, measure, c_t)
    return part


def _check_partition(part: Partition, measure: ProbabilityAtomMeasure, c_t: float) -> None:
    q = measure.space.q
    bound = 3.0 * c_t * part.eps ** (-q)
    if part.n_cells > bound:
        raise FidelityError(f"cell count {part.n_cells} exceeds the bound {bound:.1f}")
    seen = np.concatenate([c.atom_indices for c in part.cells])
    if seen.size != np.unique(seen).size:
        raise FidelityError("cells overlap on atoms")
    if seen.size != measure.support().size:
        raise FidelityError("cells do not exhaust the support")
    for c in part.cells:
        if c.mass > part.xi * (1 + 1e-12):
            raise FidelityError(f"cell mass {c.mass:.3e} exceeds cap {part.xi:.3e}")
        d = measure.space.distance_to_many(c.center, measure.points[c.atom_indices])
        if d.max(initial=0.0) > c.radius * (1 + 1e-12):
            raise FidelityError("atom outside its cell's ball")


def dump_partition(part: Partition, path) -> None:
    """One audit line per cell: index, center coordinates, radius, mass, atom count."""
    with open(path, "w") as fh:
        for k, c in enumerate(part.cells):
            coords = " ".join(repr(float(v)) for v in c.center)
            fh.write(f"{k} {coords} {c.radius!r} {c.mass!r} {c.atom_indices.size}\n")
