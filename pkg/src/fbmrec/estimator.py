"""Least-squares slopes, box-counting dimension estimates and covering values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DegenerateRegression
from .records import BoxCountCurve, max_scale

__all__ = [
    "OlsFit",
    "DimensionEstimate",
    "Covering",
    "ols_slope",
    "default_fit_range",
    "estimate_dimension",
    "alpha_value",
]


class OlsFit(NamedTuple):
    slope: float
    intercept: float
    stderr: float
    r_squared: float


def ols_slope(points) -> OlsFit:
    """Ordinary least squares line through ``(x, y)`` points.

    ``stderr`` is the usual standard error of the slope,
    ``sqrt(SSR / (m - 2) / Sxx)``.  A zero total sum of squares (constant y)
    is reported with ``r_squared = 1``.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DegenerateRegression("need at least 3 (x, y) points")
    x, y = pts[:, 0], pts[:, 1]
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx <= 0.0:
        raise DegenerateRegression("all x values are equal")
    yc = y - y.mean()
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    ssr = float(resid @ resid)
    sst = float(yc @ yc)
    stderr = math.sqrt(ssr / (len(x) - 2) / sxx)
    r2 = 1.0 if sst == 0.0 else min(1.0, max(0.0, 1.0 - ssr / sst))
    return OlsFit(slope, intercept, stderr, r2)


@dataclass(frozen=True)
class DimensionEstimate:
    """Box-counting dimension from the slope of log2 M_eps against log2 eps.

    This is a box-counting (Minkowski) estimate, used as the operational
    proxy for the Hausdorff dimension of the record set.
    """

    slope: float
    stderr: float
    k_range: tuple[int, int]
    r_squared: float

    @property
    def dimension(self) -> float:
        return -self.slope

    def to_dict(self) -> dict:
        return {
            "kind": "box-counting",
            "slope": self.slope,
            "dimension": self.dimension,
            "stderr": self.stderr,
            "k_range": list(self.k_range),
            "r_squared": self.r_squared,
        }


def default_fit_range(n: int) -> tuple[int, int]:
    """Default scales ``k in [6, log2(n) - 3]``, the finest boxes still allowed.

    Finite-size corrections shrink as boxes get finer, so the fit leans on the
    fine end; the lower bound drops below 6 only when the grid is too short to
    leave three scales.
    """
    hi = max_scale(int(n))
    return max(0, min(6, hi - 2)), hi


def estimate_dimension(curve: BoxCountCurve, k_min: int | None = None, k_max: int | None = None) -> DimensionEstimate:
    """Regress ``log2 M_eps`` on ``log2 eps = -k`` over ``[k_min, k_max]``.

    Missing bounds fall back to :func:`default_fit_range`.
    """
    lo, hi = default_fit_range(curve.n)
    k_min = lo if k_min is None else int(k_min)
    k_max = hi if k_max is None else int(k_max)
    sub = curve.sub_range(k_min, k_max)
    fit = ols_slope(np.column_stack([-sub.ks.astype(float), np.log2(sub.m_eps)]))
    return DimensionEstimate(fit.slope, fit.stderr, (k_min, k_max), fit.r_squared)


@dataclass(frozen=True)
class Covering:
    """Finitely many intervals ``(left, right)`` with ``left < right``."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not a < b:
                raise ValueError(f"interval ({a}, {b}) is empty")
        object.__setattr__(self, "intervals", ivs)

    @classmethod
    def uniform(cls, count: int, left: float = 0.0, right: float = 1.0) -> "Covering":
        edges = np.linspace(left, right, count + 1)
        return cls(tuple(zip(edges[:-1], edges[1:])))

    @property
    def diameters(self) -> np.ndarray:
        return np.array([b - a for a, b in self.intervals], dtype=float)


def alpha_value(cov: Covering | Sequence[tuple[float, float]], alpha: float) -> float:
    """Sum of interval diameters raised to ``alpha``."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    if not isinstance(cov, Covering):
        cov = Covering(tuple(cov))
    return float(np.sum(cov.diameters**alpha))
