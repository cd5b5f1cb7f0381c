"""Data ingestion, block maxima, top-order-statistic excesses and empirical quantiles."""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class RawSeries:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise DomainError("a series needs at least one value")
        if not np.all(np.isfinite(v)):
            raise DomainError("series values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class BlockMaximaSample:
    block_size: int
    maxima: np.ndarray
    sorted_maxima: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mx = np.asarray(self.maxima, dtype=float)
        mx.setflags(write=False)
        srt = np.sort(mx)
        srt.setflags(write=False)
        object.__setattr__(self, "maxima", mx)
        object.__setattr__(self, "sorted_maxima", srt)

    @property
    def num_blocks(self) -> int:
        return self.maxima.size

    k = num_blocks


@dataclass(frozen=True)
class ExcessSample:
    threshold: float
    excesses: np.ndarray
    requested_k: int

    @property
    def k(self) -> int:
        return self.excesses.size

    @property
    def ties_at_threshold(self) -> bool:
        """True when ties at the threshold left fewer than the requested excesses."""
        return self.k < self.requested_k


class DataFormatError(ValueError):
    def __init__(self, path, lineno: int, text: str):
        super().__init__(f"{path}:{lineno}: not a number: {text!r}")
        self.lineno = lineno


def parse_lines(lines, source: str = "<input>") -> RawSeries:
    """One value per line; blank lines and lines starting with ``#`` are skipped."""
    vals = []
    for lineno, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s.startswith("#"):
            continue
        try:
            v = float(s)
        except ValueError:
            raise DataFormatError(source, lineno, s) from None
        if not math.isfinite(v):
            raise DataFormatError(source, lineno, s)
        vals.append(v)
    if not vals:
        raise DomainError(f"{source}: no data values")
    return RawSeries(np.array(vals))


def read_series(path: str | os.PathLike) -> RawSeries:
    with open(path, encoding="utf-8") as fh:
        return parse_lines(fh, str(path))


def block_maxima(series: RawSeries, m: int) -> BlockMaximaSample:
    """Maxima of the ``floor(n/m)`` complete blocks of length ``m``, in block order."""
    n = len(series)
    if not (1 <= m <= n):
        raise DomainError(f"block size must be in [1, {n}], got {m}")
    k = n // m
    if k * m < n:
        log.debug("discarding %d trailing values of an incomplete block", n - k * m)
    return BlockMaximaSample(int(m), series.values[: k * m].reshape(k, m).max(axis=1))


def excesses_over_top_k(series: RawSeries, k: int) -> ExcessSample:
    """Excesses of the top ``k`` values over the ``(k+1)``-th largest.

    Only values strictly above the threshold are kept, so ties at the
    threshold can leave fewer than ``k`` excesses (see ``ties_at_threshold``).
    """
    n = len(series)
    if not (1 <= k < n):
        raise DomainError(f"k must be in [1, {n - 1}], got {k}")
    srt = np.sort(series.values)
    u = srt[n - k - 1]
    top = srt[n - k:]
    exc = top[top > u] - u
    if exc.size < k:
        log.warning("%d of the top %d values tie with the threshold and were dropped", k - exc.size, k)
    exc.setflags(write=False)
    return ExcessSample(float(u), exc, int(k))


def empirical_quantile(sample: BlockMaximaSample, s: float, a_m: float = 1.0, b_m: float = 0.0) -> float:
    """``(M_{ceil(k s):k} - b_m) / a_m`` with 1-based order statistics."""
    if not (0.0 < s < 1.0):
        raise DomainError(f"s must lie in (0, 1), got {s!r}")
    if not a_m > 0:
        raise DomainError("a_m must be positive")
    k = sample.num_blocks
    # ceil(k*s) can exceed k only through rounding; clip defensively
    j = min(max(math.ceil(k * s), 1), k)
    return float((sample.sorted_maxima[j - 1] - b_m) / a_m)
