"""Experiment presets, rate regression, and CSV emission.

Each preset fixes a kernel, a budget list, and a surrogate size, runs the
best-of-trials builder at every budget, compares measured errors to the
closed-form bound (kappa = 1, empirical density ratio), and fits the
log-log error rate.  Errors are measured against the atom-surrogate
target exactly, so the fit isolates the construction's own convergence.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from gnet.bounds import bound_kernel, estimate_xi
from gnet.builder import BuildConfig, build_eval_net, search_best
from gnet.geometry import DomainError
from gnet.kernels import make_kernel, target_eval
from gnet.measures import DensitySpec, make_surrogate, total_variation

_SURROGATE_KEY = 3
_XI_KEY = 11

CSV_HEADER = "preset,N,seed,trials,error,bound,kappa,eps,M,wall_ms"


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    kernel_kind: str
    q: int
    big_q: int
    gamma: float
    n_list: tuple
    n_atoms: int
    trials: int = 8
    seed: int = 0
    eval_count: int = 10_000
    eval_eps: float = 0.0
    kappa_bound: float = 1.0
    kappa_construct: float | None = None
    degree: float | None = None
    density: DensitySpec = field(default_factory=DensitySpec)
    measure_time: bool = True  # wall_ms column zeroed when False (reproducible CSVs)

    def __post_init__(self):
        if len(self.n_list) < 1 or any(
            b <= a for a, b in zip(self.n_list, self.n_list[1:])
        ):
            raise DomainError("budget list must be strictly increasing")
        if self.n_atoms < 100 * max(self.n_list):
            # Degenerate on purpose (e.g. exact-reproduction checks); rate
            # measurements need the surrogate to dwarf the budget.
            warnings.warn(
                f"surrogate of {self.n_atoms} atoms is under 100 per budget term",
                stacklevel=2,
            )


PRESETS = {
    # Budgets chosen to keep D_R <= 35 and desk runs in minutes.
    "relu-q-eq-Q": ExperimentConfig(
        "relu-q-eq-Q", "relu-pow", 3, 3, 1.0,
        (256, 512, 1024, 2048, 4096), 409_600,
    ),
    "relu-q-lt-Q": ExperimentConfig(
        "relu-q-lt-Q", "relu-pow", 2, 4, 1.0, (64, 128, 256, 512), 51_200,
    ),
    "zonal": ExperimentConfig(
        "zonal", "zonal-pow", 2, 3, 1.5, (64, 128, 256, 512), 51_200,
    ),
    "laplace": ExperimentConfig(
        "laplace", "laplace", 2, 3, 0.0, (16, 32, 64, 128, 256, 512), 100_000,
    ),
}


def preset_config(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise DomainError(f"unknown preset {name!r}; have {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)


@dataclass
class RateRow:
    n: int
    seed: int
    trials: int
    error: float
    bound: float
    kappa: float
    eps: float
    m_cells: int
    wall_ms: int


@dataclass
class RateReport:
    preset: str
    rows: list
    slope: float | None
    intercept: float | None
    r2: float | None
    target_exponent: float
    xi_hat: float
    eval_size: int
    off_net_slack: float
    notes: list = field(default_factory=list)

    def text(self) -> str:
        lines = [
            f"preset     {self.preset}",
            f"eval net   {self.eval_size} points (off-net slack {self.off_net_slack:.3g})",
            f"xi_hat     {self.xi_hat:.4g}",
            "  N      error         bound        eps      M   wall_ms",
        ]
        for r in self.rows:
            lines.append(
                f"  {r.n:<6d} {r.error:<13.6g} {r.bound:<12.6g} {r.eps:<8.4f} "
                f"{r.m_cells:<4d} {r.wall_ms}"
            )
        if self.slope is not None:
            lines.append(
                f"fit        slope={self.slope:.4f} (target {self.target_exponent:.4f}) "
                f"R2={self.r2:.4f}"
            )
        lines.extend(f"note       {n}" for n in self.notes)
        return "\n".join(lines)


def fit_rate(rows) -> tuple[float, float, float]:
    """OLS of log(error) on log(N); returns (slope, intercept, R^2).

    Rows may be RateRow objects or (n, error) pairs; zero-error rows are
    excluded, and fewer than 4 usable rows is an error.
    """
    pairs = []
    for row in rows:
        n, err = (row.n, row.error) if isinstance(row, RateRow) else (row[0], row[1])
        if err > 0:
            pairs.append((math.log(n), math.log(err)))
    if len(pairs) < 4:
        raise DomainError(f"rate fit needs >= 4 rows with positive error, got {len(pairs)}")
    x = np.array([p[0] for p in pairs])
    y = np.array([p[1] for p in pairs])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    total = y - y.mean()
    ss_tot = float(total @ total)
    r2 = 1.0 if ss_tot == 0 else 1.0 - float(resid @ resid) / ss_tot
    return float(slope), float(intercept), r2


def run_experiment(config: ExperimentConfig, out_path=None) -> RateReport:
    """Build at every budget in the preset; emit rows, bound checks, and the fit."""
    kernel = make_kernel(config.kernel_kind, config.gamma, config.q, config.big_q)
    rng_tau = np.random.default_rng(
        np.random.SeedSequence(entropy=config.seed, spawn_key=(_SURROGATE_KEY,))
    )
    tau = make_surrogate(config.density, config.n_atoms, kernel.y_space, rng_tau)
    tv = total_variation(tau)

    xi_hat = 1.0
    if kernel.y_space.kind == "sphere":
        rng_xi = np.random.default_rng(
            np.random.SeedSequence(entropy=config.seed, spawn_key=(_XI_KEY,))
        )
        xi_hat = max(1.0, estimate_xi(tau, 100, rng_xi))

    eval_pts = build_eval_net(kernel, config.seed, config.eval_count, config.eval_eps)
    f_vals = target_eval(kernel, tau, eval_pts)

    rows, notes = [], []
    slack = 0.0
    for n in config.n_list:
        t0 = time.perf_counter()
        result = search_best(
            tau,
            kernel,
            BuildConfig(
                n_budget=n,
                degree=config.degree,
                trials=config.trials,
                seed=config.seed,
                eval_count=config.eval_count,
                eval_eps=config.eval_eps,
                kappa=config.kappa_construct,
            ),
            eval_cache=(eval_pts, f_vals),
        )
        wall_ms = int(round(1000 * (time.perf_counter() - t0))) if config.measure_time else 0
        report = bound_kernel(kernel, n, kappa=config.kappa_bound, xi_tau=xi_hat, tv=tv)
        rows.append(
            RateRow(
                n=n, seed=config.seed, trials=config.trials, error=result.error,
                bound=report.value_at(n), kappa=config.kappa_bound,
                eps=result.eps, m_cells=result.n_cells, wall_ms=wall_ms,
            )
        )
        slack = result.off_net_slack
        notes.extend(result.warnings)

    slope = intercept = r2 = None
    try:
        slope, intercept, r2 = fit_rate(rows)
    except DomainError as exc:
        notes.append(str(exc))

    report = RateReport(
        preset=config.preset,
        rows=rows,
        slope=slope,
        intercept=intercept,
        r2=r2,
        target_exponent=-bound_kernel(kernel, max(config.n_list), kappa=1.0).exponent,
        xi_hat=xi_hat,
        eval_size=eval_pts.shape[0],
        off_net_slack=slack,
        notes=notes,
    )
    if out_path is not None:
        write_csv(report, out_path)
    return report


def write_csv(report: RateReport, path) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in report.rows:
            fh.write(
                f"{report.preset},{r.n},{r.seed},{r.trials},{r.error!r},{r.bound!r},"
                f"{r.kappa!r},{r.eps!r},{r.m_cells},{r.wall_ms}\n"
            )


def read_csv(path) -> list:
    """Parse a rates CSV back into RateRow objects (preset returned alongside)."""
    out = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise DomainError(f"unexpected CSV header {header!r}")
        for line in fh:
            if not line.strip():
                continue
            preset, n, seed, trials, err, bound, kappa, eps, m, wall = line.strip().split(",")
            out.append(
                (
                    preset,
                    RateRow(
                        n=int(n), seed=int(seed), trials=int(trials), error=float(err),
                        bound=float(bound), kappa=float(kappa), eps=float(eps),
                        m_cells=int(m), wall_ms=int(wall),
                    ),
                )
            )
    return out
