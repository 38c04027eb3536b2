"""Monte Carlo experiments: estimator sweeps, size/power tables, null calibration.

Every replicate draws from its own counter-based stream keyed by
``(seed, replicate, attempt)``, and aggregation runs in replicate order, so
results do not depend on worker count or completion order.
"""

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import numpy as np

from localgc.errors import DomainError, LocalGCError
from localgc.infer import LEVELS, MULTIPLIERS, chisq_cdf, chisq_quantile, stat_tilde_dagger
from localgc.procsim import causal_profile, model_spec, simulate_tvvar
from localgc.spectra import FreqGrid, VarParams, default_grid
from localgc.whittle import KernelSpec, default_bandwidth, local_whittle_fit

logger = logging.getLogger(__name__)

MODELS = ("i", "ii", "power", "null")
MAX_REDRAWS = 3
SWEEP_U = tuple(round(0.05 * k, 2) for k in range(1, 20))
TABLE_U = (0.1, 0.3, 0.5, 0.7, 0.9)


@dataclass
class ExperimentConfig:
    model: str = "i"
    T: int = 100
    replicates: int = 100
    u_list: Tuple[float, ...] = SWEEP_U
    levels: Tuple[float, ...] = LEVELS
    kernel_kind: str = "epanechnikov"
    bandwidth: Optional[float] = None
    grid_size: Optional[int] = None
    seed: int = 1
    multiplier: str = "corrected"
    threads: int = 1

    def __post_init__(self):
        self.model = self.model.lower()
        if self.model not in MODELS:
            raise DomainError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.T < 4:
            raise DomainError("T must be >= 4")
        if self.replicates < 1:
            raise DomainError("replicates must be >= 1")
        self.u_list = tuple(float(u) for u in self.u_list)
        if not self.u_list or any(not (0.0 < u < 1.0) for u in self.u_list):
            raise DomainError("every u must lie in (0, 1)")
        self.levels = tuple(float(a) for a in self.levels)
        if any(not (0.0 < a < 1.0) for a in self.levels):
            raise DomainError("every level must lie in (0, 1)")
        if self.multiplier not in MULTIPLIERS:
            raise DomainError(f"unknown multiplier {self.multiplier!r}")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")

    @property
    def kernel(self) -> KernelSpec:
        b = default_bandwidth(self.T) if self.bandwidth is None else self.bandwidth
        return KernelSpec(self.kernel_kind, b)

    @property
    def grid(self) -> FreqGrid:
        return default_grid(self.T) if self.grid_size is None else FreqGrid(self.grid_size)


@dataclass
class SweepResult:
    u: List[float]
    truth: List[float]
    mean: List[float]
    p5: List[float]
    p95: List[float]
    mae: List[float]
    estimates: np.ndarray = field(repr=False)
    not_converged: int = 0
    redraws: int = 0

    def to_rows(self):
        return [
            {"u": u, "truth": t, "mean": m, "p5": a, "p95": b, "mae": e}
            for u, t, m, a, b, e in zip(self.u, self.truth, self.mean, self.p5, self.p95, self.mae)
        ]


@dataclass
class SizePowerTable:
    levels: List[float]
    u: List[float]
    rates: np.ndarray
    replicates: int
    statistics: np.ndarray = field(repr=False)
    not_converged: int = 0
    redraws: int = 0

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(self.rates * (1.0 - self.rates) / self.replicates)

    def rate(self, level: float, u: float) -> float:
        return float(self.rates[self._li(level), self._ui(u)])

    def se_at(self, level: float, u: float) -> float:
        return float(self.se[self._li(level), self._ui(u)])

    def _li(self, level):
        return int(np.argmin(np.abs(np.asarray(self.levels) - level)))

    def _ui(self, u):
        return int(np.argmin(np.abs(np.asarray(self.u) - u)))


@dataclass
class CalibrationResult:
    statistics: np.ndarray
    ks_distance: float
    frac_p_below_01: float
    not_converged: int = 0
    redraws: int = 0


# ---------------------------------------------------------------------------
# replicate workers (module level so they pickle)


def _with_redraws(cfg: ExperimentConfig, replicate: int, body: Callable):
    """Run ``body(panel)`` on a fresh panel, redrawing after optimizer errors."""
    spec = model_spec(cfg.model, seed=cfg.seed)
    last = None
    for attempt in range(MAX_REDRAWS + 1):
        panel = simulate_tvvar(spec, cfg.T, replicate=replicate, attempt=attempt)
        try:
            return body(panel), attempt
        except LocalGCError as exc:
            last = exc
            logger.debug("replicate %d attempt %d failed: %s", replicate, attempt, exc)
    raise RuntimeError(f"replicate {replicate} failed after {MAX_REDRAWS} redraws: {last}")


def _sweep_replicate(args):
    cfg, replicate = args
    kernel, grid = cfg.kernel, cfg.grid

    def body(panel):
        est, bad = [], 0
        for u in cfg.u_list:
            fit = local_whittle_fit(panel, u, kernel, grid)
            bad += not fit.converged
            est.append(-fit.theta_hat.a[0, 1])
        return est, bad

    (est, bad), attempts = _with_redraws(cfg, replicate, body)
    return est, bad, attempts


def _table_replicate(args):
    cfg, replicate = args
    kernel, grid = cfg.kernel, cfg.grid

    def body(panel):
        stats, bad = [], 0
        for u in cfg.u_list:
            fit = local_whittle_fit(panel, u, kernel, grid)
            bad += not fit.converged
            res = stat_tilde_dagger(fit, kernel, cfg.T, grid, multiplier=cfg.multiplier, levels=cfg.levels)
            stats.append(res.statistic)
        return stats, bad

    (stats, bad), attempts = _with_redraws(cfg, replicate, body)
    return stats, bad, attempts


def _calibration_replicate(args):
    cfg, replicate, truth = args
    kernel, grid = cfg.kernel, cfg.grid
    u = cfg.u_list[0]

    def body(panel):
        fit = local_whittle_fit(panel, u, kernel, grid)
        res = stat_tilde_dagger(fit, kernel, cfg.T, grid, multiplier_params=truth, multiplier=cfg.multiplier)
        return res.statistic, int(not fit.converged)

    (stat, bad), attempts = _with_redraws(cfg, replicate, body)
    return stat, bad, attempts


def ordered_map(fn, jobs, threads: int, progress: Optional[Callable[[int, int], None]] = None):
    """Ordered map over replicate jobs, optionally in a process pool."""
    n = len(jobs)
    out = [None] * n
    if threads <= 1 or n <= 1:
        for i, job in enumerate(jobs):
            out[i] = fn(job)
            if progress:
                progress(i + 1, n)
        return out
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for i, res in enumerate(pool.map(fn, jobs, chunksize=max(1, n // (8 * threads)))):
            out[i] = res
            if progress:
                progress(i + 1, n)
    return out


# ---------------------------------------------------------------------------
# experiments


def run_sweep(cfg: ExperimentConfig, progress=None) -> SweepResult:
    """Fit every replicate at every ``u`` and summarize the coupling estimates.

    The coupling estimate is ``-a12`` of the fitted family, i.e. the
    ``(1, 2)`` entry of the recursion matrix.
    """
    results = ordered_map(_sweep_replicate, [(cfg, r) for r in range(cfg.replicates)], cfg.threads, progress)
    est = np.array([r[0] for r in results])
    profile = causal_profile(cfg.model)
    truth = np.array([profile(u) for u in cfg.u_list])
    return SweepResult(
        u=list(cfg.u_list),
        truth=truth.tolist(),
        mean=est.mean(axis=0).tolist(),
        p5=np.percentile(est, 5, axis=0).tolist(),
        p95=np.percentile(est, 95, axis=0).tolist(),
        mae=np.abs(est - truth).mean(axis=0).tolist(),
        estimates=est,
        not_converged=int(sum(r[1] for r in results)),
        redraws=int(sum(r[2] for r in results)),
    )


def run_size_power(cfg: ExperimentConfig, progress=None) -> SizePowerTable:
    """Rejection frequency of ``S~dagger > chi2_{1, 1-alpha}`` per level and ``u``."""
    results = ordered_map(_table_replicate, [(cfg, r) for r in range(cfg.replicates)], cfg.threads, progress)
    stats = np.array([r[0] for r in results])
    crit = np.array([chisq_quantile(1, 1.0 - a) for a in cfg.levels])
    rates = (stats[None, :, :] > crit[:, None, None]).mean(axis=1)
    return SizePowerTable(
        levels=list(cfg.levels), u=list(cfg.u_list), rates=rates, replicates=cfg.replicates,
        statistics=stats, not_converged=int(sum(r[1] for r in results)),
        redraws=int(sum(r[2] for r in results)),
    )


def ks_distance_chisq1(sample) -> float:
    """Kolmogorov distance between the empirical CDF of ``sample`` and chi-squared(1)."""
    x = np.sort(np.asarray(sample, dtype=float))
    n = x.size
    cdf = np.array([chisq_cdf(v, 1) for v in x])
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


def null_truth(model: str = "null") -> VarParams:
    """True parameters (in the fitted family's sign convention) of the no-coupling model."""
    spec = model_spec(model)
    return VarParams(-spec.coeff_at(0.5), spec.innov_cov)


def run_calibration(cfg: ExperimentConfig, progress=None) -> CalibrationResult:
    """Oracle-mode null distribution of the scaled statistic at ``cfg.u_list[0]``.

    Uses the true parameters inside the multiplier and the fitted ones
    inside GC.
    """
    if cfg.model != "null":
        raise DomainError("calibration runs under the no-coupling model")
    truth = null_truth(cfg.model)
    jobs = [(cfg, r, truth) for r in range(cfg.replicates)]
    results = ordered_map(_calibration_replicate, jobs, cfg.threads, progress)
    stats = np.array([r[0] for r in results])
    pvals = np.array([1.0 - chisq_cdf(s, 1) for s in stats])
    return CalibrationResult(
        statistics=stats,
        ks_distance=ks_distance_chisq1(stats),
        frac_p_below_01=float(np.mean(pvals < 0.1)),
        not_converged=int(sum(r[1] for r in results)),
        redraws=int(sum(r[2] for r in results)),
    )


def default_threads() -> int:
    env = os.environ.get("LGC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1
