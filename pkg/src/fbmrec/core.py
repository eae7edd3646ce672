"""Exact synthesis of fractional Gaussian noise and fractional Brownian motion.

Paths live on the grid ``t_i = i/n`` (``i = 0..n``) with ``X_0 = 0``.  Every
generator first builds unit-spacing fractional Gaussian noise, cumulates it and
rescales by ``n**-H`` (self-similarity).

Three generators are provided:

* :func:`generate_circulant` -- circulant embedding (Davies-Harte), O(n log n).
* :func:`generate_durbin_levinson` -- sequential exact sampling, O(n^2).
* :func:`generate_cholesky_oracle` -- dense factorization of the fBm
  covariance, O(n^3); the brute-force ground truth.

Randomness contract: a generator seeded with ``seed`` draws its standard
normals from ``numpy.random.Generator(PCG64(seed))`` through
``standard_normal`` (numpy's ziggurat transform).  Replicate seeds are derived
with :func:`derive_seed`, a SplitMix64-based mixer, so a replicate's path does
not depend on execution order or worker count.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy import special

from .errors import EmbeddingNotPSD, InvalidHurst, NotPositiveDefinite, NumericalBreakdown

__all__ = [
    "HurstParameter",
    "GeneratorId",
    "FbmPath",
    "FgnAutocovariance",
    "as_hurst",
    "fgn_autocovariance",
    "fgn_autocovariances",
    "fbm_covariance",
    "derive_seed",
    "splitmix64",
    "make_rng",
    "circulant_eigenvalues",
    "generate_circulant",
    "generate_circulant_pair",
    "circulant_batch",
    "generate_durbin_levinson",
    "durbin_levinson_batch",
    "generate_cholesky_oracle",
    "cholesky_batch",
    "normal_tail",
]

_MASK64 = (1 << 64) - 1
# Eigenvalues in [-EIG_RTOL * max, 0) are treated as round-off and clamped.
EIG_RTOL = 1e-8
CHOLESKY_MAX_N = 512


@dataclass(frozen=True)
class HurstParameter:
    """Validated Hurst index, strictly inside (0, 1)."""

    h: float

    def __post_init__(self):
        h = float(self.h)
        if not (0.0 < h < 1.0) or math.isnan(h):
            raise InvalidHurst(f"Hurst index must lie in (0, 1), got {self.h!r}")
        object.__setattr__(self, "h", h)

    def __float__(self):
        return self.h


HurstLike = Union[HurstParameter, float]


def as_hurst(h: HurstLike) -> HurstParameter:
    return h if isinstance(h, HurstParameter) else HurstParameter(h)


class GeneratorId(str, enum.Enum):
    CIRCULANT = "CirculantEmbedding"
    DURBIN_LEVINSON = "DurbinLevinson"
    CHOLESKY = "CholeskyOracle"


@dataclass(frozen=True, eq=False)
class FbmPath:
    """A sampled fBm path ``values[i] = X(i/n)`` with its provenance."""

    n: int
    values: np.ndarray = field(repr=False)
    hurst: HurstParameter
    seed: int
    generator_id: GeneratorId

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.shape[0] != self.n + 1:
            raise ValueError(f"expected {self.n + 1} values, got shape {values.shape}")
        if values[0] != 0.0:
            raise ValueError("path must start at 0")
        if not np.all(np.isfinite(values)):
            raise ValueError("path contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n


@dataclass(frozen=True, eq=False)
class FgnAutocovariance:
    """Autocovariance of unit-spacing fGn at lags ``0..len(lags)-1``."""

    hurst: HurstParameter
    lags: np.ndarray = field(repr=False)

    @classmethod
    def compute(cls, h: HurstLike, max_lag: int) -> "FgnAutocovariance":
        h = as_hurst(h)
        return cls(h, fgn_autocovariances(h, max_lag + 1))


def fgn_autocovariance(h: HurstLike, k: int) -> float:
    """``gamma(k) = (|k+1|^2H - 2|k|^2H + |k-1|^2H) / 2``; symmetric in k."""
    two_h = 2.0 * as_hurst(h).h
    k = abs(int(k))
    return 0.5 * (abs(k + 1) ** two_h - 2.0 * k**two_h + abs(k - 1) ** two_h)


def fgn_autocovariances(h: HurstLike, count: int) -> np.ndarray:
    """Vector of ``gamma(0), ..., gamma(count-1)``."""
    two_h = 2.0 * as_hurst(h).h
    k = np.arange(count, dtype=float)
    gamma = 0.5 * ((k + 1.0) ** two_h - 2.0 * k**two_h + np.abs(k - 1.0) ** two_h)
    if count:
        gamma[0] = 1.0
    return gamma


def fbm_covariance(h: HurstLike, times) -> np.ndarray:
    """Matrix ``0.5 * (t^2H + s^2H - |t-s|^2H)`` over ``times``."""
    two_h = 2.0 * as_hurst(h).h
    t = np.asarray(times, dtype=float)
    tt, ss = t[:, None], t[None, :]
    return 0.5 * (np.abs(tt) ** two_h + np.abs(ss) ** two_h - np.abs(tt - ss) ** two_h)


# ---------------------------------------------------------------------------
# Seeding
# ---------------------------------------------------------------------------


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x`` (Steele, Lea & Flood 2014)."""
    z = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, *path: int) -> int:
    """Splittable 64-bit seed: ``mix(s, r) = splitmix64(s ^ splitmix64(r))``.

    Extra positional indices nest, e.g. ``derive_seed(s, i, r)`` equals
    ``derive_seed(derive_seed(s, i), r)``.
    """
    seed = int(master) & _MASK64
    for index in path:
        seed = splitmix64(seed ^ splitmix64(int(index) & _MASK64))
    return seed


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed) & _MASK64))


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def _to_path(increments: np.ndarray, h: HurstParameter) -> np.ndarray:
    """Cumulate unit fGn rows and rescale to the grid on [0, 1]."""
    increments = np.atleast_2d(increments)
    n = increments.shape[1]
    out = np.zeros((increments.shape[0], n + 1))
    np.cumsum(increments, axis=1, out=out[:, 1:])
    out[:, 1:] *= float(n) ** (-h.h)
    return out


# ---------------------------------------------------------------------------
# Circulant embedding
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def circulant_eigenvalues(h: float, n: int) -> np.ndarray:
    """Clamped eigenvalues of the size-2n circulant embedding of fGn(n).

    The first row is ``gamma(0..n), gamma(n-1..1)``; sampling uses
    ``Y = FFT(sqrt(eig / 2n) * (Z1 + i Z2))`` whose real and imaginary parts
    are independent with the embedded covariance.  Raises
    :class:`EmbeddingNotPSD` when an eigenvalue falls below
    ``-EIG_RTOL * max``.
    """
    gamma = fgn_autocovariances(h, n + 1)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    tol = EIG_RTOL * eig.max()
    if eig.min() < -tol:
        raise EmbeddingNotPSD(
            f"circulant eigenvalue {eig.min():.3e} below -{tol:.3e} (H={h}, n={n})"
        )
    eig = np.maximum(eig, 0.0)
    eig.setflags(write=False)
    return eig


def _check_power_of_two(n: int) -> int:
    n = int(n)
    if n < 2 or n & (n - 1):
        raise ValueError(f"circulant generator needs n a power of two >= 2, got {n}")
    return n


def circulant_batch(h: HurstLike, n: int, seeds: Sequence[int]) -> np.ndarray:
    """Paths for each seed in ``seeds``, two per seed.

    Row ``2j`` is the real part and row ``2j + 1`` the imaginary part of the
    complex synthesis seeded with ``seeds[j]``; the two are independent exact
    fBm samples.  Returns an array of shape ``(2 * len(seeds), n + 1)``.
    """
    h = as_hurst(h)
    n = _check_power_of_two(n)
    m = 2 * n
    scale = np.sqrt(circulant_eigenvalues(h.h, n) / m)
    z = np.empty((len(seeds), m), dtype=complex)
    # normals fill (re_0, im_0, re_1, im_1, ...) of each row in stream order
    flat = z.view(np.float64)
    for j, seed in enumerate(seeds):
        make_rng(_check_seed(seed)).standard_normal(out=flat[j])
    z *= scale
    y = np.fft.fft(z, axis=1)[:, :n]
    increments = np.empty((2 * len(seeds), n))
    increments[0::2] = y.real
    increments[1::2] = y.imag
    return _to_path(increments, h)


def generate_circulant_pair(h: HurstLike, n: int, seed: int) -> tuple[FbmPath, FbmPath]:
    h = as_hurst(h)
    rows = circulant_batch(h, n, [seed])
    return tuple(FbmPath(int(n), row, h, int(seed), GeneratorId.CIRCULANT) for row in rows)


def generate_circulant(h: HurstLike, n: int, seed: int) -> FbmPath:
    """Exact fBm sample on ``i/n`` by circulant embedding (real lane)."""
    return generate_circulant_pair(h, n, seed)[0]


# ---------------------------------------------------------------------------
# Durbin-Levinson
# ---------------------------------------------------------------------------


def durbin_levinson_batch(h: HurstLike, n: int, seeds: Sequence[int]) -> np.ndarray:
    """Sequential exact fGn synthesis, one path per seed, shape ``(len(seeds), n + 1)``.

    Each step predicts ``x_t`` from ``x_{t-1}, ..., x_0`` with the current
    partial-regression coefficients, adds an innovation with the predicted
    variance, then extends the coefficients by one lag.
    """
    h = as_hurst(h)
    n = int(n)
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    gamma = fgn_autocovariances(h, n + 1)
    z = np.stack([make_rng(_check_seed(s)).standard_normal(n) for s in seeds])
    x = np.empty_like(z)

    phi = np.zeros(0)
    v = gamma[0]
    for t in range(n):
        if not v > 0.0:
            raise NumericalBreakdown(f"innovation variance {v:.3e} at step {t} (H={h.h}, n={n})")
        # x[:, t-1::-1] pairs phi_j with x_{t-j}
        mean = x[:, t - 1 :: -1] @ phi if t else 0.0
        x[:, t] = mean + math.sqrt(v) * z[:, t]
        if t + 1 < n:
            reflection = (gamma[t + 1] - phi @ gamma[t:0:-1]) / v
            phi = np.concatenate([phi - reflection * phi[::-1], [reflection]])
            v *= 1.0 - reflection * reflection
    return _to_path(x, h)


def generate_durbin_levinson(h: HurstLike, n: int, seed: int) -> FbmPath:
    h = as_hurst(h)
    row = durbin_levinson_batch(h, n, [seed])[0]
    return FbmPath(int(n), row, h, int(seed), GeneratorId.DURBIN_LEVINSON)


# ---------------------------------------------------------------------------
# Cholesky oracle
# ---------------------------------------------------------------------------


@lru_cache(maxsize=16)
def _cholesky_factor(h: float, n: int) -> np.ndarray:
    times = np.arange(1, n + 1) / n
    try:
        factor = np.linalg.cholesky(fbm_covariance(h, times))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"fBm covariance not positive definite (H={h}, n={n})") from exc
    factor.setflags(write=False)
    return factor


def cholesky_batch(h: HurstLike, n: int, seeds: Sequence[int]) -> np.ndarray:
    """Dense-factorization samples on ``i/n``, shape ``(len(seeds), n + 1)``."""
    h = as_hurst(h)
    n = int(n)
    if not 1 <= n <= CHOLESKY_MAX_N:
        raise ValueError(f"Cholesky oracle needs 1 <= n <= {CHOLESKY_MAX_N}, got {n}")
    factor = _cholesky_factor(h.h, n)
    z = np.stack([make_rng(_check_seed(s)).standard_normal(n) for s in seeds])
    out = np.zeros((len(seeds), n + 1))
    out[:, 1:] = z @ factor.T
    return out


def generate_cholesky_oracle(h: HurstLike, n: int, seed: int) -> FbmPath:
    h = as_hurst(h)
    row = cholesky_batch(h, n, [seed])[0]
    return FbmPath(int(n), row, h, int(seed), GeneratorId.CHOLESKY)


def normal_tail(v):
    """Standard normal upper tail ``P(N > v) = erfc(v / sqrt 2) / 2``."""
    out = 0.5 * special.erfc(np.asarray(v, dtype=float) / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out
