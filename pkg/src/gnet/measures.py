"""Finite signed atom clouds standing in for measures on a metric domain.

An atom cloud is a list of (point, weight) pairs; weights may be signed.
Large clouds (default 1e5 atoms) act as surrogates for non-atomic
measures: every downstream identity (splits, cell masses, quadrature
moments) is exact on the atoms, so nothing is lost to discretization
inside the pipeline itself.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from gnet.geometry import DomainError, Space


class FidelityError(RuntimeError):
    """The atom surrogate is too coarse for the requested operation."""


@dataclass
class SignedAtomMeasure:
    """Weighted point cloud on a space; weights may carry either sign."""

    space: Space
    points: np.ndarray  # (n, ambient)
    weights: np.ndarray  # (n,)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.points.shape[0] != self.weights.shape[0]:
            raise DomainError("points and weights must have matching length")
        if self.points.shape[0] == 0:
            raise DomainError("measure needs at least one atom")
        if not np.all(self.space.contains(self.points)):
            raise DomainError("atom off the space")
        if not np.all(np.isfinite(self.weights)):
            raise DomainError("weights must be finite")

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    def support(self) -> np.ndarray:
        """Indices of atoms with nonzero weight."""
        return np.nonzero(self.weights != 0.0)[0]


@dataclass
class ProbabilityAtomMeasure(SignedAtomMeasure):
    """Atom cloud with nonnegative weights summing to one."""

    def __post_init__(self):
        super().__post_init__()
        if np.any(self.weights < 0):
            raise DomainError("probability measure needs nonnegative weights")
        if abs(float(self.weights.sum()) - 1.0) > 1e-12:
            raise DomainError("probability weights must sum to 1")


def total_variation(m: SignedAtomMeasure) -> float:
    """Sum of absolute atom weights."""
    tv = float(np.abs(m.weights).sum())
    if tv <= 0:
        raise DomainError("measure has zero total variation")
    return tv


def hahn_split(m: SignedAtomMeasure):
    """Split into normalized positive and negative parts.

    Returns (plus, minus, mass_plus, mass_minus) with
    m = mass_plus * plus - mass_minus * minus atomwise; a part with no
    atoms is returned as None with zero mass.
    """
    total_variation(m)  # nonempty check
    pos = m.weights > 0
    neg = m.weights < 0
    mass_plus = float(m.weights[pos].sum())
    mass_minus = float(-m.weights[neg].sum())
    plus = minus = None
    if mass_plus > 0:
        plus = ProbabilityAtomMeasure(m.space, m.points[pos], m.weights[pos] / mass_plus)
    if mass_minus > 0:
        minus = ProbabilityAtomMeasure(m.space, m.points[neg], -m.weights[neg] / mass_minus)
    return plus, minus, mass_plus, mass_minus


def ball_mass(m: SignedAtomMeasure, center: np.ndarray, radius: float) -> float:
    """Total-variation mass of the closed metric ball around ``center``."""
    if radius < 0:
        raise DomainError("radius must be nonnegative")
    dists = m.space.distance_to_many(np.asarray(center, dtype=float), m.points)
    return float(np.abs(m.weights[dists <= radius]).sum())


def tube_mass(m: SignedAtomMeasure, kernel_spec, x: np.ndarray, eps: float) -> float:
    """Total-variation mass of the eps-tube around the kernel's singular set at x.

    Returns 0 when the singular set is empty.
    """
    dists = kernel_spec.singular_distances(np.asarray(x, dtype=float), m.points)
    if dists is None:
        return 0.0
    return float(np.abs(m.weights[dists <= eps]).sum())


@dataclass(frozen=True)
class DensitySpec:
    """Recipe for a surrogate cloud: uniform, cap-concentrated, or custom.

    * ``uniform``: atoms i.i.d. from the volume measure, weights 1/n.
    * ``cap``: a (cap_fraction, 1 - cap_fraction) mixture of the uniform
      measure on the metric ball of ``cap_radius`` around ``cap_center``
      and the uniform measure on the whole space; weights 1/n.
    * ``custom``: atoms i.i.d. uniform, weights = fn(points) / n (signed).
    """

    kind: str = "uniform"
    cap_center: np.ndarray | None = None
    cap_radius: float = 0.5
    cap_fraction: float = 0.95
    fn: Callable[[np.ndarray], np.ndarray] | None = field(default=None)


def make_surrogate(
    spec: DensitySpec, n_atoms: int, space: Space, rng: np.random.Generator
) -> SignedAtomMeasure:
    """Draw an n-atom surrogate cloud for the given density recipe."""
    if n_atoms < 1:
        raise DomainError("need at least one atom")
    if spec.kind == "uniform":
        pts = space.sample(rng, n_atoms)
        return SignedAtomMeasure(space, pts, np.full(n_atoms, 1.0 / n_atoms))
    if spec.kind == "cap":
        center = _cap_center(spec, space)
        in_cap = rng.random(n_atoms) < spec.cap_fraction
        pts = space.sample(rng, n_atoms)
        n_cap = int(in_cap.sum())
        if n_cap:
            pts[in_cap] = _sample_cap(space, center, spec.cap_radius, n_cap, rng)
        return SignedAtomMeasure(space, pts, np.full(n_atoms, 1.0 / n_atoms))
    if spec.kind == "custom":
        if spec.fn is None:
            raise DomainError("custom density spec needs a weight function")
        pts = space.sample(rng, n_atoms)
        w = np.asarray(spec.fn(pts), dtype=float).ravel() / n_atoms
        if w.shape[0] != n_atoms:
            raise DomainError("custom weight function returned wrong length")
        return SignedAtomMeasure(space, pts, w)
    raise DomainError(f"unknown density spec kind {spec.kind!r}")


def _cap_center(spec: DensitySpec, space: Space) -> np.ndarray:
    if spec.cap_center is not None:
        return space.require_member(np.asarray(spec.cap_center, dtype=float), "cap center")
    center = np.zeros(space.ambient)
    if space.kind == "sphere":
        center[space.q] = 1.0  # pole of the active subspace
    return center


def _sample_cap(
    space: Space, center: np.ndarray, radius: float, n: int, rng: np.random.Generator
) -> np.ndarray:
    """Uniform samples from the metric ball of ``radius`` around ``center``."""
    if space.kind == "ball":
        out = np.empty((n, space.ambient))
        got = 0
        while got < n:
            batch = space.sample(rng, max(4 * (n - got), 64))
            dists = space.distance_to_many(center, batch)
            keep = batch[dists <= radius]
            take = min(n - got, keep.shape[0])
            out[got : got + take] = keep[:take]
            got += take
        return out
    # Sphere: draw the geodesic angle from the cap's radial density, then a
    # uniform direction orthogonal to the center inside the active subspace.
    d = space.n_active
    c = center[:d]
    theta_max = min(np.pi, 0.5 * np.pi * radius)
    grid = np.linspace(0.0, theta_max, 2048)
    cdf = np.concatenate([[0.0], np.cumsum(np.sin(grid[1:]) ** (space.q - 1))])
    if cdf[-1] == 0:
        thetas = np.zeros(n)
    else:
        thetas = np.interp(rng.random(n) * cdf[-1], cdf, grid)
    g = rng.standard_normal((n, d))
    g -= np.outer(g @ c, c)
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    u = g / norms
    pts_active = np.cos(thetas)[:, None] * c + np.sin(thetas)[:, None] * u
    pts_active /= np.linalg.norm(pts_active, axis=1, keepdims=True)
    return space.embed(pts_active)


def save_measure(m: SignedAtomMeasure, path) -> None:
    """Write one atom per line: weight followed by ambient coordinates."""
    with open(path, "w") as fh:
        for w, p in zip(m.weights, m.points):
            fh.write(" ".join([repr(float(w))] + [repr(float(c)) for c in p]) + "\n")


def load_measure(path, space: Space) -> SignedAtomMeasure:
    """Read a measure written by save_measure, validating space membership."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(t) for t in line.split()])
    if not rows:
        raise DomainError(f"no atoms in {path}")
    arr = np.asarray(rows, dtype=float)
    if arr.shape[1] != space.ambient + 1:
        raise DomainError(
            f"expected {space.ambient + 1} columns (weight + coords), got {arr.shape[1]}"
        )
    return SignedAtomMeasure(space, arr[:, 1:], arr[:, 0])
