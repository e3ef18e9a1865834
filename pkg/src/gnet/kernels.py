"""The three concrete kernels with their smoothness metadata.

* ``relu-pow``: (x . y)_+^gamma on sphere x sphere.  Smooth away from the
  equator {y : x . y = 0} when the two spheres coincide; when the source
  sphere is a proper subsphere the equator can degenerate to the whole
  domain, so the singular set is taken empty and only global smoothness
  is used.
* ``zonal-pow``: (1 - x . y)^gamma on sphere x sphere, singular only at
  y = x.
* ``laplace``: exp(-|x - y|) on ball x ball, singular only at y = x.

The smoothness records (Holder exponent in x, global order r, large-set
order R, blow-up exponent u, tube codimension parameter s) are carried as
data; the bound formulas consume exactly these numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gnet.geometry import DomainError, Space, ball, sphere
from gnet.measures import SignedAtomMeasure

KERNEL_KINDS = ("relu-pow", "zonal-pow", "laplace")

_PAIR_CHUNK = 8_000_000  # max entries of a kernel block held at once


@dataclass(frozen=True)
class KernelSpec:
    kind: str
    gamma: float
    x_space: Space
    y_space: Space
    alpha: float
    r: float
    big_r_default: float  # default large-set smoothness order
    u_is_r_minus_gamma: bool  # u = R - gamma (equator case) vs u = 0
    s: int | None  # tube codimension parameter; None when the singular set is empty

    @property
    def q(self) -> int:
        return self.y_space.q

    @property
    def big_q(self) -> int:
        return self.x_space.q

    @property
    def has_singular_set(self) -> bool:
        return self.s is not None or self.kind in ("zonal-pow", "laplace")

    def default_degree(self) -> float:
        """Quadrature degree bound used by the builder unless overridden."""
        if self.kind == "relu-pow":
            return math.floor(self.gamma) + 1
        if self.kind == "zonal-pow":
            return 2.0 * self.gamma
        return 1.0

    def holder_bound(self, kappa: float = 1.0) -> float:
        """Upper bound on the Holder-alpha constant in the x variable."""
        if self.kind == "relu-pow":
            return math.pi * kappa * self.gamma
        if self.kind == "zonal-pow":
            return 2.0 * math.pi * kappa * self.gamma
        return 1.0

    def eval_pairs(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Kernel block G(x_i, y_j), shape (len(xs), len(ys))."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if self.kind == "relu-pow":
            dots = np.clip(xs @ ys.T, 0.0, None)
            return dots if self.gamma == 1.0 else dots**self.gamma
        if self.kind == "zonal-pow":
            base = np.clip(1.0 - xs @ ys.T, 0.0, None)
            return base**self.gamma
        sq = (
            np.sum(xs * xs, axis=1)[:, None]
            + np.sum(ys * ys, axis=1)[None, :]
            - 2.0 * (xs @ ys.T)
        )
        return np.exp(-np.sqrt(np.clip(sq, 0.0, None)))

    def eval_rows(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Kernel values G(x_i, y_i) for paired rows."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        ys = np.atleast_2d(np.asarray(ys, dtype=float))
        if self.kind == "relu-pow":
            dots = np.clip(np.sum(xs * ys, axis=1), 0.0, None)
            return dots if self.gamma == 1.0 else dots**self.gamma
        if self.kind == "zonal-pow":
            return np.clip(1.0 - np.sum(xs * ys, axis=1), 0.0, None) ** self.gamma
        return np.exp(-np.linalg.norm(xs - ys, axis=1))

    def singular_distances(self, x: np.ndarray, pts: np.ndarray) -> np.ndarray | None:
        """Distance (in the source metric) from each point to the singular set at x.

        Returns None when the singular set is empty.
        """
        x = np.asarray(x, dtype=float)
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.kind == "relu-pow":
            if self.s is None:
                return None  # proper subsphere: empty singular set
            dots = np.clip(pts @ x, -1.0, 1.0)
            return (2.0 / math.pi) * np.abs(np.arcsin(dots))
        # Point singularity at x, present only when x lies on the source domain.
        if not bool(self.y_space.contains(x)[0]):
            return None
        return self.y_space.distance_to_many(x, pts)


def make_kernel(kind: str, gamma: float = 1.0, q: int = 2, big_q: int | None = None) -> KernelSpec:
    """Build a kernel spec by name with its smoothness record filled in."""
    big_q = q if big_q is None else big_q
    if big_q < q:
        raise DomainError("target dimension must be at least the source dimension")
    if kind == "relu-pow":
        if gamma <= 0:
            raise DomainError("rectifier power must be positive")
        xs, ys = sphere(big_q), sphere(q, big_q + 1)
        if q == big_q:
            return KernelSpec(kind, float(gamma), xs, ys, 1.0, float(gamma),
                              float(gamma) + 2.0, True, q - 1)
        return KernelSpec(kind, float(gamma), xs, ys, 1.0, float(gamma),
                          float(gamma), False, None)
    if kind == "zonal-pow":
        if gamma <= 0:
            raise DomainError("zonal power must be positive")
        xs, ys = sphere(big_q), sphere(q, big_q + 1)
        return KernelSpec(kind, float(gamma), xs, ys, 1.0, 2.0 * gamma,
                          2.0 * gamma, False, None)
    if kind == "laplace":
        xs, ys = ball(big_q), ball(q, big_q)
        return KernelSpec(kind, 0.0, xs, ys, 1.0, 1.0, 1.0, False, None)
    raise DomainError(f"unknown kernel {kind!r}; expected one of {KERNEL_KINDS}")


def kernel_eval(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """Kernel value at a single pair of member points."""
    spec.x_space.require_member(x, "x")
    spec.y_space.require_member(y, "y")
    return float(spec.eval_pairs(x, y)[0, 0])


def target_eval(spec: KernelSpec, tau: SignedAtomMeasure, xs: np.ndarray) -> np.ndarray:
    """f(x) = sum_i w_i G(x, y_i): the exact target for the atom surrogate."""
    single = np.asarray(xs).ndim == 1
    xs2 = np.atleast_2d(np.asarray(xs, dtype=float))
    out = np.zeros(xs2.shape[0])
    step = max(1, _PAIR_CHUNK // max(1, xs2.shape[0]))
    for lo in range(0, tau.n_atoms, step):
        hi = min(tau.n_atoms, lo + step)
        out += spec.eval_pairs(xs2, tau.points[lo:hi]) @ tau.weights[lo:hi]
    return float(out[0]) if single else out


def holder_probe(spec: KernelSpec, n_pairs: int, rng: np.random.Generator) -> float:
    """Max sampled ratio |G(x,y) - G(z,y)| / rho_X(x,z)^alpha over random triples."""
    if n_pairs < 1:
        raise DomainError("need at least one probe pair")
    xs = spec.x_space.sample(rng, n_pairs)
    zs = spec.x_space.sample(rng, n_pairs)
    ys = spec.y_space.sample(rng, n_pairs)
    gx = spec.eval_rows(xs, ys)
    gz = spec.eval_rows(zs, ys)
    if spec.x_space.kind == "sphere":
        dots = np.clip(np.sum(xs * zs, axis=1), -1.0, 1.0)
        dist = (2.0 / math.pi) * np.arccos(dots)
    else:
        dist = np.linalg.norm(xs - zs, axis=1)
    ok = dist > 0
    if not ok.any():
        return 0.0
    return float(np.max(np.abs(gx[ok] - gz[ok]) / dist[ok] ** spec.alpha))
