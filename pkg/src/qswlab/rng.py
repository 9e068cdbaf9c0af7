"""Counter-based random streams and online statistics.

Every trajectory draws from its own stream, keyed by (master seed,
stream index), so results do not depend on scheduling order or on how
trajectories are split across workers.
"""

from __future__ import annotations

import math
from typing import Iterable, Sequence

import numpy as np

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_MUL = 0xD2B74407B1CE6E93
_STREAM_ADD = 0x8BB84B93962EACC9


def _mix64(z: int) -> int:
    """SplitMix64 finalizer: bijective avalanche mix on 64-bit ints."""
    z &= _MASK
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK
    return z ^ (z >> 31)


def _stream_key(master_seed: int, stream_index: int) -> int:
    a = _mix64((master_seed + _GOLDEN) & _MASK)
    b = _mix64((stream_index * _STREAM_MUL + _STREAM_ADD) & _MASK)
    return _mix64(a ^ b)


class RngStream:
    """Deterministic uniform stream for one trajectory.

    Draw k of stream (seed, index) is a pure function of (seed, index, k):
    the stream can be advanced one value at a time or in vectorized
    batches and produces bit-identical floats either way.
    """

    __slots__ = ("master_seed", "stream_index", "_key", "_count")

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or stream_index < 0:
            raise ValueError("seed and stream index must be non-negative")
        self.master_seed = master_seed & _MASK
        self.stream_index = stream_index & _MASK
        self._key = _stream_key(self.master_seed, self.stream_index)
        self._count = 0

    @property
    def draw_count(self) -> int:
        return self._count

    def uniform_open(self) -> float:
        """Next uniform variate in the open interval (0, 1)."""
        self._count += 1
        x = _mix64((self._key + self._count * _GOLDEN) & _MASK)
        return (x + 0.5) / 2.0**64

    def uniforms(self, n: int) -> np.ndarray:
        """Next n uniform variates as an array; same sequence as
        n calls to uniform_open."""
        if n < 0:
            raise ValueError("n must be non-negative")
        ks = np.arange(self._count + 1, self._count + n + 1, dtype=np.uint64)
        self._count += n
        with np.errstate(over="ignore"):
            z = ks * np.uint64(_GOLDEN) + np.uint64(self._key)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
            z = z ^ (z >> np.uint64(31))
        return (z.astype(np.float64) + 0.5) / 2.0**64

    def weighted_choice(self, weights: Sequence[float]) -> int:
        """Sample an index proportionally to non-negative weights.

        Inverts the cumulative sum at a single uniform draw, so it
        consumes exactly one value from the stream.
        """
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d sequence")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and non-negative")
        total = float(w.sum())
        if total <= 0.0:
            raise ValueError("at least one weight must be positive")
        cum = np.cumsum(w)
        u = self.uniform_open() * total
        idx = int(np.searchsorted(cum, u, side="right"))
        # u < total always, but guard the right edge against rounding
        return min(idx, w.size - 1)


class RunningStats:
    """Welford accumulator for streaming mean and variance.

    Works on scalars or fixed-shape arrays; updates are O(size) per
    push and numerically stable for long runs.
    """

    def __init__(self):
        self.count = 0
        self._mean: np.ndarray | float = 0.0
        self._m2: np.ndarray | float = 0.0

    def push(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if self.count == 0:
            self._mean = np.zeros_like(x)
            self._m2 = np.zeros_like(x)
        elif np.shape(self._mean) != x.shape:
            raise ValueError("shape mismatch with previous samples")
        self.count += 1
        delta = x - self._mean
        self._mean = self._mean + delta / self.count
        self._m2 = self._m2 + delta * (x - self._mean)

    @property
    def mean(self):
        if self.count == 0:
            raise ValueError("no samples")
        return np.array(self._mean, copy=True)

    @property
    def variance(self):
        """Sample variance (ddof=1); zero until two samples are seen."""
        if self.count == 0:
            raise ValueError("no samples")
        if self.count < 2:
            return np.zeros_like(np.asarray(self._mean, dtype=float))
        return np.maximum(np.asarray(self._m2) / (self.count - 1), 0.0)

    @property
    def stderr(self):
        return np.sqrt(self.variance / max(self.count, 1))


def merge_stats(a: RunningStats, b: RunningStats) -> RunningStats:
    """Combine two accumulators as if their samples were pushed into one.

    Uses the pairwise (Chan) update, so merging is exact up to floating
    point regardless of how samples were partitioned.
    """
    if a.count == 0:
        return _copy_stats(b)
    if b.count == 0:
        return _copy_stats(a)
    if np.shape(a._mean) != np.shape(b._mean):
        raise ValueError("cannot merge stats over different shapes")
    out = RunningStats()
    n = a.count + b.count
    delta = np.asarray(b._mean) - np.asarray(a._mean)
    out.count = n
    out._mean = np.asarray(a._mean) + delta * (b.count / n)
    out._m2 = (
        np.asarray(a._m2)
        + np.asarray(b._m2)
        + delta * delta * (a.count * b.count / n)
    )
    return out


def _copy_stats(s: RunningStats) -> RunningStats:
    out = RunningStats()
    out.count = s.count
    out._mean = np.array(s._mean, copy=True) if s.count else 0.0
    out._m2 = np.array(s._m2, copy=True) if s.count else 0.0
    return out


def collect_stats(samples: Iterable) -> RunningStats:
    """Push every sample from an iterable into a fresh accumulator."""
    out = RunningStats()
    for x in samples:
        out.push(x)
    return out
