"""Explicit constants, exponents, and thresholds for the error bounds.

Every bound has the shape  c * |G| * TV * sqrt(1 + log N) / N^p  with a
closed-form constant c, a rate exponent p, and a minimum budget below
which the guarantee does not apply.  The generic pair (c1 with its
singular-tube exponent, c1' for empty-or-point singular sets) is
instantiated per kernel with covering constants kappa * q^{3/2} * log q
for the source and kappa * Q^2 for the target domain.

kappa is an absolute covering constant with no published value; it
defaults to 1 here and every report records the value used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from gnet.geometry import DomainError, covering_c_t, covering_c_x, sphere_cap_fraction
from gnet.kernels import KernelSpec
from gnet.measures import SignedAtomMeasure, ball_mass, total_variation, tube_mass
from gnet.polyspace import basis_dim


@dataclass
class BoundReport:
    """One evaluated bound: parameters, constant, exponent, threshold."""

    label: str
    q: int
    big_q: int
    gamma: float
    big_r: float
    r: float
    u: float
    s: int | None
    alpha: float
    kappa: float
    c_t: float
    c_x: float
    d_r: int
    constant: float
    exponent: float
    threshold: float
    tv: float = 1.0
    seminorm: float = 1.0
    extras: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def value_at(self, n: int) -> float:
        """The bound c * |G| * TV * sqrt(1 + log N) / N^exponent."""
        if n < 1:
            raise DomainError("budget must be >= 1")
        return (
            self.constant
            * self.seminorm
            * self.tv
            * math.sqrt(1.0 + math.log(n))
            / n**self.exponent
        )

    def text(self, n_list=()) -> str:
        rows = [
            f"bound      {self.label}",
            f"dims       q={self.q} Q={self.big_q} gamma={self.gamma:g}",
            f"smooth     alpha={self.alpha:g} r={self.r:g} R={self.big_r:g} "
            f"u={self.u:g} s={self.s if self.s is not None else '-'}",
            f"constants  kappa={self.kappa:g} c_T={self.c_t:.6g} c_X={self.c_x:.6g} "
            f"D_R={self.d_r}",
            f"factor     c={self.constant:.6g} (x seminorm {self.seminorm:g} "
            f"x TV {self.tv:g})",
            f"rate       N^-{self.exponent:.6g} (with sqrt(1+log N))",
            f"threshold  N >= {self.threshold:.6g}",
        ]
        for key, val in self.extras.items():
            rows.append(f"{key:<10} {val}")
        for n in n_list:
            rows.append(f"value      N={n}: {self.value_at(n):.6g}")
        for w in self.warnings:
            rows.append(f"warning    {w}")
        return "\n".join(rows)

    def machine_row(self, n: int) -> str:
        return (
            f"label={self.label} q={self.q} Q={self.big_q} gamma={self.gamma!r} "
            f"kappa={self.kappa!r} c={self.constant!r} exponent={self.exponent!r} "
            f"threshold={self.threshold!r} N={n} value={self.value_at(n)!r}"
        )


def exponent_a(big_r: float, r: float, q: int, s: int, u: float) -> float:
    """Balance exponent (2R - 2r) / (q - s + 2u), required to lie in [0, 1)."""
    if big_r < r:
        raise DomainError(f"need R >= r, got R={big_r}, r={r}")
    if q < s:
        raise DomainError(f"need q >= s, got q={q}, s={s}")
    denom = q - s + 2.0 * u
    if denom <= 2.0 * (big_r - r):
        raise DomainError(
            f"need q - s + 2u > 2R - 2r, got {denom} <= {2.0 * (big_r - r)}"
        )
    return 2.0 * (big_r - r) / denom


def lambda_exponent(big_r: float, gamma: float) -> float:
    """(2R - 2*gamma) / (2R - 2*gamma + 1), the equator-tube rate gain."""
    if big_r < gamma:
        raise DomainError("need R >= gamma")
    return (2.0 * big_r - 2.0 * gamma) / (2.0 * big_r - 2.0 * gamma + 1.0)


def constant_general(
    q: int,
    big_q: int,
    s: int,
    alpha: float,
    big_r: float,
    r: float,
    u: float,
    c_t: float,
    c_x: float,
    theta: float,
    d_r: int,
) -> tuple[float, float, float]:
    """General singular-tube constant: (c1, rate exponent, N threshold)."""
    a = exponent_a(big_r, r, q, s, u)
    expo = 0.5 + (big_r - u * a) / q
    c1 = (
        4.0
        * math.e
        * (c_t * (3.0 * d_r + 6.0)) ** expo
        * (
            math.sqrt(big_q * (q + 2.0 * big_r - 2.0 * u * a) / (2.0 * alpha) + math.log(c_x))
            * c_t**-0.5
            * math.sqrt(theta + 1.0)
            + 1.0
        )
    )
    threshold = 3.0 * c_t * (d_r + 2.0) * float(q - s) ** (q / (1.0 - a))
    return c1, expo, threshold


def constant_point(
    q: int,
    big_q: int,
    alpha: float,
    big_r: float,
    r: float,
    c_t: float,
    c_x: float,
    d_r: int,
) -> tuple[float, float, float]:
    """Empty-or-point singular-set constant: (c1', rate exponent, N threshold)."""
    expo = min(0.5 + big_r / q, 1.0 + r / q)
    c1p = (
        8.0
        * c_t ** (1.0 + big_r / q)
        * (3.0 * d_r + 6.0) ** (1.0 + big_r / q)
        * (
            math.sqrt(big_q * (q + 2.0 * big_r) / (2.0 * alpha) + math.log(c_x)) * c_t**-0.5
            + 1.0
        )
    )
    return c1p, expo, 3.0 * c_t * (d_r + 2.0)


def bound_general(
    n: int,
    q: int,
    big_q: int,
    s: int | None,
    alpha: float,
    big_r: float,
    r: float,
    u: float,
    c_t: float,
    c_x: float,
    theta: float,
    d_r: int,
    seminorm: float = 1.0,
    tv: float = 1.0,
) -> BoundReport:
    """Evaluate the abstract bound; picks the point variant when s is None and u = 0."""
    warnings = []
    if s is None:
        c, expo, threshold = constant_point(q, big_q, alpha, big_r, r, c_t, c_x, d_r)
        label = "general-point"
    else:
        c, expo, threshold = constant_general(
            q, big_q, s, alpha, big_r, r, u, c_t, c_x, theta, d_r
        )
        label = "general-tube"
        if threshold == 0.0:
            warnings.append("threshold factor (q - s)^(q/(1-a)) is zero (s = q)")
    rep = BoundReport(
        label=label, q=q, big_q=big_q, gamma=float("nan"), big_r=big_r, r=r, u=u,
        s=s, alpha=alpha, kappa=float("nan"), c_t=c_t, c_x=c_x, d_r=d_r,
        constant=c, exponent=expo, threshold=threshold, tv=tv, seminorm=seminorm,
        warnings=warnings,
    )
    if n < threshold:
        rep.warnings.append(f"budget N={n} below the threshold {threshold:.4g}")
    return rep


def bound_kernel(
    kernel: KernelSpec,
    n: int,
    kappa: float = 1.0,
    xi_tau: float = 1.0,
    big_r: float | None = None,
    tv: float = 1.0,
) -> BoundReport:
    """Closed-form bound for one of the three concrete kernels.

    xi_tau bounds the measure's density against the uniform one on the
    source sphere (only the rectifier kernels use it); big_r overrides
    the free smoothness order of the non-integer rectifier case.
    """
    q, big_q, gamma = kernel.q, kernel.big_q, kernel.gamma
    if kernel.y_space.kind == "sphere" and q < 2:
        raise DomainError("sphere bounds need source dimension q >= 2")
    logq = math.log(q)
    c_t = covering_c_t(q, kappa)
    warnings: list = []

    if kernel.kind == "relu-pow":
        threshold = kappa * q**1.5 * (3.0 * (q + 1.0) ** (gamma + 1.0) + 6.0) * logq
        if q == big_q and float(gamma).is_integer():
            # Integer rectifier power: the kernel is an exact polynomial away
            # from the equator, giving the limiting rate.
            expo = 0.5 + (2.0 * gamma + 1.0) / (2.0 * q)
            big_r_used = gamma
            c = (
                32.0 * math.sqrt(math.pi) * math.e * kappa * (2.0 * math.pi) ** gamma
                * (kappa * q**1.5 * (3.0 * (q + 1.0) ** gamma + 6.0) * logq)
                ** (1.0 + (gamma + 1.0) / q)
                * ((q + gamma + 1.0 + math.log(kappa * q * q)) * math.sqrt(6.0 * xi_tau) + 1.0)
            )
            label = "relu-pow integer, q=Q"
            u, s = 0.0, q - 1
        elif q == big_q:
            big_r_used = gamma + 2.0 if big_r is None else float(big_r)
            lam = lambda_exponent(big_r_used, gamma)
            expo = 0.5 + gamma / q + lam / (2.0 * q)
            c = (
                16.0 * math.sqrt(math.pi) * math.e * kappa
                * (2.0 * math.pi) ** big_r_used
                * (kappa * q**1.5 * (3.0 * (q + 1.0) ** (big_r_used + 1.0) + 6.0) * logq)
                ** (0.5 + big_r_used / q)
                * ((q + 2.0 * big_r_used + math.log(kappa * q * q)) * math.sqrt(6.0 * xi_tau) + 1.0)
            )
            label = "relu-pow, q=Q"
            u, s = big_r_used - gamma, q - 1
        else:
            big_r_used = gamma
            expo = 0.5 + gamma / q
            c = (
                16.0 * kappa * math.pi**gamma
                * (kappa * q**1.5 * (3.0 * (q + 1.0) ** gamma + 6.0) * logq) ** (1.0 + gamma / q)
                * (
                    math.sqrt(big_q * (q + 2.0 * gamma) / 2.0 + math.log(kappa * big_q**2))
                    / math.sqrt(kappa * q**1.5 * logq)
                    + 1.0
                )
            )
            label = "relu-pow, q<Q"
            u, s = 0.0, None
        d_r = basis_dim(q, big_r_used, "sphere")
    elif kernel.kind == "zonal-pow":
        if float(gamma).is_integer():
            raise DomainError("the zonal bound needs a non-integer power")
        big_r_used = 2.0 * gamma
        expo = 0.5 + 2.0 * gamma / q
        c = (
            8.0 * kappa * math.pi ** (2.0 * gamma)
            * (kappa * q**1.5 * (3.0 * (q + 1.0) ** (2.0 * gamma + 1.0) + 6.0) * logq)
            ** (1.0 + 2.0 * gamma / q)
            * (
                math.sqrt(big_q * (q + 2.0 * gamma) / 2.0 + math.log(kappa * big_q**2))
                / math.sqrt(kappa * q**1.5 * logq)
                + 1.0
            )
        )
        threshold = kappa * q**1.5 * logq * (3.0 * (q + 1.0) ** gamma + 6.0)
        label = "zonal-pow"
        u, s = 0.0, None
        d_r = basis_dim(q, big_r_used, "sphere")
    elif kernel.kind == "laplace":
        big_r_used = 1.0
        expo = 0.5 + 1.0 / q
        c = (
            8.0 * (c_t * (3.0 * q + 9.0)) ** (1.0 + 1.0 / q)
            * (
                math.sqrt((q + 2.0) / 2.0 * big_q + 2.0 * math.log(big_q) + math.log(kappa))
                / math.sqrt(c_t)
                + 1.0
            )
        )
        threshold = 3.0 * q + 9.0
        label = "laplace"
        u, s = 0.0, None
        d_r = basis_dim(q, 1.0, "ball")
    else:
        raise DomainError(f"no bound for kernel {kernel.kind!r}")

    if n < threshold:
        warnings.append(f"budget N={n} below the threshold {threshold:.4g}")
    return BoundReport(
        label=label, q=q, big_q=big_q, gamma=gamma, big_r=big_r_used, r=kernel.r,
        u=u, s=s, alpha=kernel.alpha, kappa=kappa, c_t=c_t,
        c_x=covering_c_x(big_q, kappa), d_r=d_r, constant=c, exponent=expo,
        threshold=threshold, tv=tv,
        extras={"xi_tau": xi_tau} if kernel.y_space.kind == "sphere" else {},
        warnings=warnings,
    )


def theta_tube_bound(q: int, kappa: float, xi_tau: float) -> float:
    """Upper bound 3*pi*Xi*kappa*q^{3/2}*log(q) on the equator-tube constant."""
    return 3.0 * math.pi * xi_tau * covering_c_t(q, kappa)


def theta_reference_sphere(big_q: int) -> float:
    """Analytic tube constant 2*sqrt((Q+2)/pi) of the uniform sphere measure."""
    return 2.0 * math.sqrt((big_q + 2.0) / math.pi)


@dataclass
class ThetaEstimate:
    theta: float
    s: float | None
    fitted_exponent: float | None
    note: str = ""


def estimate_theta(
    tau: SignedAtomMeasure,
    kernel: KernelSpec,
    x_samples: np.ndarray,
    eps_grid: np.ndarray,
) -> ThetaEstimate:
    """Fit tube masses to Theta * TV * eps^(q - s) over an eps grid.

    Returns the fitted constant and the implied s; when the kernel's
    singular set is empty at every sampled x the estimate is (0, None).
    """
    tv = total_variation(tau)
    eps_grid = np.asarray(eps_grid, dtype=float)
    masses = np.zeros(eps_grid.shape[0])
    any_singular = False
    for x in np.atleast_2d(np.asarray(x_samples, dtype=float)):
        dists = kernel.singular_distances(x, tau.points)
        if dists is None:
            continue
        any_singular = True
        for i, eps in enumerate(eps_grid):
            masses[i] = max(masses[i], float(np.abs(tau.weights[dists <= eps]).sum()) / tv)
    if not any_singular:
        return ThetaEstimate(0.0, None, None, "singular set empty at every sampled x")
    ok = masses > 0
    if ok.sum() < 2:
        return ThetaEstimate(0.0, None, None, "tube masses all zero on the grid")
    slope, intercept = np.polyfit(np.log(eps_grid[ok]), np.log(masses[ok]), 1)
    q = kernel.q
    return ThetaEstimate(float(np.exp(intercept)), float(q - slope), float(slope))


def estimate_xi(
    tau: SignedAtomMeasure,
    n_pairs: int,
    rng: np.random.Generator,
    delta_lo: float = 0.05,
    delta_hi: float = 1.0,
) -> float:
    """Empirical density bound against the uniform sphere measure.

    Max over random (center, radius) pairs of the ratio of the cloud's
    ball mass to TV times the uniform cap fraction.
    """
    if tau.space.kind != "sphere":
        raise DomainError("the density ratio is defined against the uniform sphere measure")
    tv = total_variation(tau)
    centers = tau.space.sample(rng, n_pairs)
    deltas = rng.uniform(delta_lo, delta_hi, n_pairs)
    worst = 0.0
    for c, d in zip(centers, deltas):
        frac = sphere_cap_fraction(tau.space.q, d)
        if frac <= 0:
            continue
        worst = max(worst, ball_mass(tau, c, d) / (tv * frac))
    return worst
