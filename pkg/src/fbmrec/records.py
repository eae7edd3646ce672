"""Record sets of sampled paths and dyadic box counts of those record sets."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import FbmPath
from .errors import ScaleTooFine

__all__ = [
    "MIN_POINTS_PER_BOX",
    "RecordSet",
    "BoxCountEntry",
    "BoxCountCurve",
    "record_mask",
    "extract_records",
    "max_scale",
    "box_count",
    "box_count_curve",
]

# Boxes narrower than this many grid spacings are rejected.
MIN_POINTS_PER_BOX = 8


def record_mask(values) -> np.ndarray:
    """Boolean mask of record indices along the last axis.

    ``i`` is a record iff ``values[i] >= max(values[:i])``; index 0 always is.
    Ties count as records.  Works on a single path or a stack of paths.
    """
    values = np.asarray(values, dtype=float)
    # values[i] >= max(values[:i])  <=>  values[i] == running max at i
    return values == np.maximum.accumulate(values, axis=-1)


@dataclass(frozen=True, eq=False)
class RecordSet:
    """Sorted record indices of a path sampled on ``i/n``."""

    indices: np.ndarray = field(repr=False)
    n: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0 or idx[0] != 0:
            raise ValueError("record indices must be a non-empty 1-d array starting at 0")
        if np.any(np.diff(idx) <= 0) or idx[-1] > self.n:
            raise ValueError("record indices must be strictly increasing within [0, n]")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def from_times(cls, times, n: int) -> "RecordSet":
        """Build from record times lying on the grid ``i/n``."""
        idx = np.rint(np.asarray(times, dtype=float) * n).astype(np.int64)
        return cls(np.unique(idx), n)

    @property
    def times(self) -> np.ndarray:
        return self.indices / self.n

    def __len__(self):
        return self.indices.size


def extract_records(path) -> RecordSet:
    """Record set of an :class:`FbmPath` or of a raw 1-d value array."""
    values = path.values if isinstance(path, FbmPath) else np.asarray(path, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise ValueError("need a non-empty 1-d array of path values")
    return RecordSet(np.flatnonzero(record_mask(values)), values.size - 1)


def max_scale(n: int) -> int:
    """Largest k with boxes of width ``2**-k`` spanning >= 8 grid spacings."""
    if n < MIN_POINTS_PER_BOX:
        return -1
    return (n // MIN_POINTS_PER_BOX).bit_length() - 1


def _box_indices(indices: np.ndarray, n: int, k: int) -> np.ndarray:
    # box b covers [b 2^-k, (b+1) 2^-k); t = 1 folds into the last box
    boxes = 1 << k
    return np.minimum((indices * boxes) // n, boxes - 1)


def _check_scale(n: int, k: int) -> None:
    if k < 0:
        raise ValueError(f"scale exponent must be non-negative, got {k}")
    if k > max_scale(n):
        raise ScaleTooFine(
            f"k={k} gives boxes of {n / 2**k:g} grid spacings on n={n}; "
            f"need at least {MIN_POINTS_PER_BOX} (k <= {max_scale(n)})"
        )


def box_count(recs: RecordSet, k: int) -> int:
    """Number of the ``2**k`` dyadic boxes of [0, 1] containing a record time."""
    k = int(k)
    _check_scale(recs.n, k)
    return int(np.unique(_box_indices(recs.indices, recs.n, k)).size)


@dataclass(frozen=True)
class BoxCountEntry:
    k: int
    eps: float
    m_eps: float  # int for a single path, float for an ensemble mean


@dataclass(frozen=True)
class BoxCountCurve:
    entries: tuple[BoxCountEntry, ...]
    n: int
    record_source: str = ""

    @property
    def ks(self) -> np.ndarray:
        return np.array([e.k for e in self.entries])

    @property
    def eps(self) -> np.ndarray:
        return np.array([e.eps for e in self.entries])

    @property
    def m_eps(self) -> np.ndarray:
        return np.array([e.m_eps for e in self.entries])

    @classmethod
    def ensemble_mean(cls, ks, counts, n: int) -> "BoxCountCurve":
        """Curve of per-scale mean counts over a stack of replicates (rows)."""
        counts = np.asarray(counts, dtype=float)
        means = counts.mean(axis=0)
        entries = tuple(BoxCountEntry(int(k), 2.0**-int(k), float(m)) for k, m in zip(ks, means))
        return cls(entries, n, f"ensemble mean of {counts.shape[0]} paths")

    def sub_range(self, k_min: int, k_max: int) -> "BoxCountCurve":
        wanted = set(range(k_min, k_max + 1))
        have = {e.k for e in self.entries}
        if not wanted <= have:
            raise ValueError(f"curve does not cover k in [{k_min}, {k_max}]")
        entries = tuple(e for e in self.entries if e.k in wanted)
        return BoxCountCurve(entries, self.n, self.record_source)


def box_count_curve(recs: RecordSet, k_min: int, k_max: int, record_source: str = "") -> BoxCountCurve:
    """Box counts for every ``k`` in ``[k_min, k_max]``."""
    if k_min > k_max:
        raise ValueError(f"k_min={k_min} exceeds k_max={k_max}")
    _check_scale(recs.n, k_min)
    _check_scale(recs.n, k_max)
    # Coarser boxes are unions of finer ones, so reuse the finest assignment.
    finest = np.unique(_box_indices(recs.indices, recs.n, k_max))
    entries = []
    for k in range(k_min, k_max + 1):
        m = np.unique(finest >> (k_max - k)).size
        entries.append(BoxCountEntry(k, 2.0**-k, int(m)))
    return BoxCountCurve(tuple(entries), recs.n, record_source)
