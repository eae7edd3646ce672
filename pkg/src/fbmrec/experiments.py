"""Monte Carlo experiments on records, argmax and supremum of fBm.

Replicate ``r`` of a run with master seed ``s`` is lane ``r % 2`` of the
circulant synthesis seeded with ``derive_seed(s, r // 2)``.  Replicates are
processed in fixed chunks of pairs whose layout depends only on ``n``; chunk
results are collected in index order, so reports are identical for any
worker count.

Within one experiment every threshold (eps, u or v) is evaluated on the same
replicate set.  Grid points are therefore positively correlated; each point
estimate is still unbiased.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from .core import as_hurst, circulant_batch, derive_seed, normal_tail
from .errors import InsufficientHits
from .estimator import default_fit_range, ols_slope
from .records import BoxCountCurve, max_scale, record_mask

__all__ = [
    "SCHEMA_VERSION",
    "MIN_HITS",
    "MIN_FIT_POINTS",
    "ExperimentConfig",
    "ProbabilityPoint",
    "ExponentFit",
    "ExperimentReport",
    "simulate",
    "run_dimension_sweep",
    "estimate_record_interval_prob",
    "estimate_argmax_prob",
    "estimate_survival_prob",
    "estimate_sup_tail",
]

SCHEMA_VERSION = 1
MIN_HITS = 100
MIN_FIT_POINTS = 4
# Samples per chunk of work; sets the memory footprint of one batch.
_CHUNK_SAMPLES = 1 << 21


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment.

    ``eps_exps`` are scale exponents (eps = 2**-k).  ``thresholds`` holds the
    u or v levels.  ``hurst_grid`` is only read by the dimension sweep, which
    falls back to ``(hurst,)``.  ``workers`` changes speed only and is left
    out of the report.
    """

    hurst: float
    n: int
    replicates: int
    master_seed: int = 0
    eps_exps: tuple[int, ...] = ()
    thresholds: tuple[float, ...] = ()
    anchor: float = 0.0
    hurst_grid: tuple[float, ...] = ()
    k_min: int | None = None
    k_max: int | None = None
    workers: int = field(default=1, compare=False)

    def __post_init__(self):
        as_hurst(self.hurst)
        for h in self.hurst_grid:
            as_hurst(h)
        n = int(self.n)
        if n < 2 or n & (n - 1):
            raise ValueError(f"n must be a power of two >= 2, got {self.n}")
        if int(self.replicates) < 1:
            raise ValueError("replicates must be >= 1")
        if not 0 <= int(self.master_seed) < 1 << 64:
            raise ValueError("master_seed must be an unsigned 64-bit integer")
        if any(int(k) < 1 for k in self.eps_exps):
            raise ValueError("eps exponents must be >= 1 so that eps lies in (0, 1)")
        if int(self.workers) < 1:
            raise ValueError("workers must be >= 1")

    @property
    def eps(self) -> list[float]:
        return [2.0 ** -int(k) for k in self.eps_exps]

    def to_dict(self) -> dict:
        d = asdict(self)
        del d["workers"]
        for key in ("eps_exps", "thresholds", "hurst_grid"):
            d[key] = list(d[key])
        return d


@dataclass(frozen=True)
class ProbabilityPoint:
    param: float
    hits: int
    p_hat: float
    stderr: float

    @classmethod
    def from_hits(cls, param: float, hits: int, replicates: int) -> "ProbabilityPoint":
        p = hits / replicates
        return cls(float(param), int(hits), p, math.sqrt(p * (1.0 - p) / replicates))


@dataclass(frozen=True)
class ExponentFit:
    """Slope of log p_hat against log param over the points actually used."""

    exponent: float
    stderr: float
    intercept: float
    r_squared: float
    params_used: tuple[float, ...]
    target: float


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    replicates: int
    master_seed: int
    points: list[ProbabilityPoint] = field(default_factory=list)
    exponent: ExponentFit | None = None
    extra: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    elapsed_seconds: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        """Serializable form; wall-clock time is excluded so bytes are reproducible."""
        return {
            "schema_version": self.schema_version,
            "experiment": self.experiment,
            "config": self.config,
            "replicates": self.replicates,
            "master_seed": self.master_seed,
            "points": [asdict(p) for p in self.points],
            "exponent": None if self.exponent is None else asdict(self.exponent),
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Replicate engine
# ---------------------------------------------------------------------------


def _run_chunk(h: float, n: int, master_seed: int, statistic: Callable, pairs: range) -> np.ndarray:
    seeds = [derive_seed(master_seed, j) for j in pairs]
    return statistic(circulant_batch(h, n, seeds))


def simulate(h, n: int, replicates: int, master_seed: int, statistic: Callable, workers: int = 1) -> np.ndarray:
    """Apply ``statistic`` to ``replicates`` fresh paths; rows in replicate order.

    ``statistic`` maps a ``(batch, n + 1)`` array of paths to an array whose
    first axis is the batch.  With ``workers > 1`` it must be picklable.
    """
    h = as_hurst(h).h
    n_pairs = (replicates + 1) // 2
    per_chunk = max(1, _CHUNK_SAMPLES // (2 * n))
    chunks = [range(lo, min(lo + per_chunk, n_pairs)) for lo in range(0, n_pairs, per_chunk)]
    task = partial(_run_chunk, h, n, master_seed, statistic)
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(task, chunks))
    else:
        parts = [task(c) for c in chunks]
    return np.concatenate(parts)[:replicates]


def _stat_max(paths: np.ndarray) -> np.ndarray:
    return paths.max(axis=1)


def _stat_argmax(paths: np.ndarray) -> np.ndarray:
    # np.argmax returns the first maximizing index
    return paths.argmax(axis=1)


def _stat_box_counts(paths: np.ndarray, k_max: int) -> np.ndarray:
    n = paths.shape[1] - 1
    out = np.empty((paths.shape[0], k_max + 1), dtype=np.int64)
    mask = record_mask(paths)
    for row, m in enumerate(mask):
        finest = np.unique((np.flatnonzero(m) << k_max) // n)
        finest = np.minimum(finest, (1 << k_max) - 1)
        for k in range(k_max + 1):
            out[row, k] = np.unique(finest >> (k_max - k)).size
    return out


def _stat_record_windows(paths: np.ndarray, windows: tuple[tuple[int, int], ...]) -> np.ndarray:
    running = np.maximum.accumulate(paths, axis=1)
    out = np.empty((paths.shape[0], len(windows)), dtype=bool)
    for col, (lo, hi) in enumerate(windows):
        if lo == 0:
            out[:, col] = True
        else:
            out[:, col] = paths[:, lo : hi + 1].max(axis=1) >= running[:, lo - 1]
    return out


# ---------------------------------------------------------------------------
# Fitting helpers
# ---------------------------------------------------------------------------


def _fit_exponent(points: Sequence[ProbabilityPoint], target: float) -> ExponentFit | None:
    """Log-log slope over points with at least MIN_HITS successes.

    Grids shorter than MIN_FIT_POINTS get no fit, and then every point must
    carry MIN_HITS successes.  Longer grids drop thin points and need
    MIN_FIT_POINTS survivors.
    """
    thin = [p.param for p in points if p.hits < MIN_HITS]
    if len(points) < MIN_FIT_POINTS:
        if thin:
            raise InsufficientHits(f"fewer than {MIN_HITS} successes at {thin}")
        return None
    used = [p for p in points if p.hits >= MIN_HITS]
    if len(used) < MIN_FIT_POINTS:
        raise InsufficientHits(
            f"only {len(used)} grid points reach {MIN_HITS} successes; need {MIN_FIT_POINTS} (thin: {thin})"
        )
    fit = ols_slope([(math.log(p.param), math.log(p.p_hat)) for p in used])
    return ExponentFit(fit.slope, fit.stderr, fit.intercept, fit.r_squared, tuple(p.param for p in used), target)


def _finish(name: str, cfg: ExperimentConfig, points, exponent, extra, started: float) -> ExperimentReport:
    return ExperimentReport(
        experiment=name,
        config=cfg.to_dict(),
        replicates=int(cfg.replicates),
        master_seed=int(cfg.master_seed),
        points=list(points),
        exponent=exponent,
        extra=extra,
        elapsed_seconds=time.perf_counter() - started,
    )


def _require(values, what: str) -> None:
    if len(values) == 0:
        raise ValueError(f"experiment needs a non-empty {what} list")


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------


def _hurst_stream(master_seed: int, h: float) -> int:
    # keyed by H itself so a grid point's stream does not depend on the grid
    return derive_seed(master_seed, int(round(h * 2**32)))


def _slopes(ks: np.ndarray, log_m: np.ndarray) -> np.ndarray:
    """OLS slope of each row of ``log_m`` against ``-ks``."""
    x = -ks.astype(float)
    xc = x - x.mean()
    return (log_m - log_m.mean(axis=-1, keepdims=True)) @ xc / (xc @ xc)


def run_dimension_sweep(cfg: ExperimentConfig) -> ExperimentReport:
    """Box-counting dimension of the record set for each H in the grid.

    For each H, ``replicates`` paths give box counts M_eps(k) for every
    admissible k.  The headline estimate ``dim_mean`` is minus the OLS slope
    of log2 of the replicate-averaged counts against log2 eps, with a
    delete-one jackknife standard error.  The average of per-path slopes is
    reported alongside as ``dim_path_mean``.
    """
    started = time.perf_counter()
    n = int(cfg.n)
    grid = cfg.hurst_grid or (cfg.hurst,)
    k_top = max_scale(n)
    lo_default, hi_default = default_fit_range(n)
    k_min = lo_default if cfg.k_min is None else int(cfg.k_min)
    k_max = hi_default if cfg.k_max is None else int(cfg.k_max)
    if not (0 <= k_min and k_min + 2 <= k_max <= k_top):
        raise ValueError(f"fit range [{k_min}, {k_max}] must hold >= 3 scales within [0, {k_top}]")
    ks = np.arange(k_min, k_max + 1)
    r = int(cfg.replicates)

    rows, curves = [], []
    for h in grid:
        counts = simulate(
            h, n, r, _hurst_stream(cfg.master_seed, h), partial(_stat_box_counts, k_max=k_top), cfg.workers
        ).astype(float)
        fit_counts = counts[:, k_min : k_max + 1]
        total = fit_counts.sum(axis=0)
        curve = BoxCountCurve.ensemble_mean(np.arange(k_top + 1), counts, n)
        fit = ols_slope(np.column_stack([-ks.astype(float), np.log2(total / r)]))
        dim = -fit.slope
        if r > 1:
            loo = np.log2((total - fit_counts) / (r - 1))
            jack = -_slopes(ks, loo)
            jack_se = math.sqrt((r - 1) / r * float(np.sum((jack - jack.mean()) ** 2)))
        else:
            jack_se = float("nan")
        per_path = -_slopes(ks, np.log2(fit_counts))
        path_se = float(per_path.std(ddof=1) / math.sqrt(r)) if r > 1 else float("nan")
        rows.append(
            {
                "hurst": float(h),
                "dim_mean": dim,
                "dim_stderr": jack_se,
                "dim_path_mean": float(per_path.mean()),
                "dim_path_stderr": path_se,
                "replicates": r,
                "r_squared": fit.r_squared,
                "fit_stderr": fit.stderr,
            }
        )
        curves.append(
            {
                "hurst": float(h),
                "k": [e.k for e in curve.entries],
                "eps": [e.eps for e in curve.entries],
                "m_eps": [e.m_eps for e in curve.entries],
            }
        )
    extra = {
        "estimator": "box-counting; OLS of log2 mean M_eps on log2 eps, jackknife stderr",
        "k_range": [k_min, k_max],
        "rows": rows,
        "mean_curves": curves,
    }
    return _finish("dimension_sweep", cfg, [], None, extra, started)


def _window(anchor: float, eps: float, n: int) -> tuple[int, int]:
    # grid indices i with anchor <= i/n <= anchor + eps
    lo = math.ceil(round(anchor * n, 9))
    hi = math.floor(round((anchor + eps) * n, 9))
    return lo, hi


def estimate_record_interval_prob(cfg: ExperimentConfig) -> ExperimentReport:
    """Probability that the record set meets ``[a, a + eps]`` for each eps.

    The record set restricted to [0, a + eps] is the prefix of the full path's
    record set, so one path answers every eps.  Target exponent is 1 - H.
    """
    started = time.perf_counter()
    _require(cfg.eps_exps, "eps")
    a = float(cfg.anchor)
    if a < 0:
        raise ValueError(f"anchor must be >= 0, got {a}")
    for e in cfg.eps:
        if a + e > 1.0 + 1e-12:
            raise ValueError(f"anchor + eps = {a + e} exceeds 1")
    n = int(cfg.n)
    windows = tuple(_window(a, e, n) for e in cfg.eps)
    for (lo, hi), e in zip(windows, cfg.eps):
        if lo > hi:
            raise ValueError(f"[{a}, {a + e}] contains no grid point for n={n}")
    hits = simulate(
        cfg.hurst, n, cfg.replicates, cfg.master_seed, partial(_stat_record_windows, windows=windows), cfg.workers
    ).sum(axis=0)
    points = [ProbabilityPoint.from_hits(e, c, cfg.replicates) for e, c in zip(cfg.eps, hits)]
    exponent = _fit_exponent(points, 1.0 - cfg.hurst)
    extra = {"anchor": a, "windows": [list(w) for w in windows]}
    return _finish("record_interval", cfg, points, exponent, extra, started)


def estimate_argmax_prob(cfg: ExperimentConfig) -> ExperimentReport:
    """Probability that the first maximizing grid time is <= eps.  Target 1 - H."""
    started = time.perf_counter()
    _require(cfg.eps_exps, "eps")
    n = int(cfg.n)
    idx = simulate(cfg.hurst, n, cfg.replicates, cfg.master_seed, _stat_argmax, cfg.workers)
    points = []
    for e in cfg.eps:
        limit = math.floor(round(e * n, 9))
        points.append(ProbabilityPoint.from_hits(e, int(np.count_nonzero(idx <= limit)), cfg.replicates))
    exponent = _fit_exponent(points, 1.0 - cfg.hurst)
    return _finish("argmax", cfg, points, exponent, {"tie_rule": "first maximizing index"}, started)


def _check_thresholds(cfg: ExperimentConfig) -> list[float]:
    _require(cfg.thresholds, "threshold")
    levels = [float(u) for u in cfg.thresholds]
    if any(not u > 0 for u in levels):
        raise ValueError(f"thresholds must be positive, got {levels}")
    return levels


def estimate_survival_prob(cfg: ExperimentConfig) -> ExperimentReport:
    """``P[max X <= u]`` for each u; target exponent (1 - H) / H.

    The sampled maximum never exceeds the continuous one, so these estimates
    sit slightly above the continuous-time probabilities.
    """
    started = time.perf_counter()
    levels = _check_thresholds(cfg)
    sup = simulate(cfg.hurst, cfg.n, cfg.replicates, cfg.master_seed, _stat_max, cfg.workers)
    points = [ProbabilityPoint.from_hits(u, int(np.count_nonzero(sup <= u)), cfg.replicates) for u in levels]
    h = cfg.hurst
    exponent = _fit_exponent(points, (1.0 - h) / h)
    extra = {"discretization_bias": "sampled max <= true max; p_hat biased upward"}
    return _finish("survival", cfg, points, exponent, extra, started)


def estimate_sup_tail(cfg: ExperimentConfig) -> ExperimentReport:
    """``P[max X > v]`` and its ratio to ``v**(1/H) * Psi(v)`` for each v.

    The ratio is the quantity bounded by a constant in the large-v tail bound;
    the report carries the ratios and their spread (max / min).
    """
    started = time.perf_counter()
    levels = _check_thresholds(cfg)
    sup = simulate(cfg.hurst, cfg.n, cfg.replicates, cfg.master_seed, _stat_max, cfg.workers)
    points = [ProbabilityPoint.from_hits(v, int(np.count_nonzero(sup > v)), cfg.replicates) for v in levels]
    thin = [p.param for p in points if p.hits < MIN_HITS]
    if thin:
        raise InsufficientHits(f"fewer than {MIN_HITS} exceedances at v = {thin}")
    h = cfg.hurst
    ratios = [p.p_hat / (p.param ** (1.0 / h) * normal_tail(p.param)) for p in points]
    ratio_se = [p.stderr / (p.param ** (1.0 / h) * normal_tail(p.param)) for p in points]
    extra = {
        "ratios": ratios,
        "ratio_stderr": ratio_se,
        "ratio_spread": max(ratios) / min(ratios),
        "discretization_bias": "sampled max <= true max; p_hat biased downward",
    }
    return _finish("sup_tail", cfg, points, None, extra, started)
