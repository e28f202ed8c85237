"""Rank-order temporal coding.

Real-valued feature maps are turned into per-neuron first-spike times over T
discrete steps: stronger values fire earlier, zeros stay silent, and only the
ordering of values matters. Since every neuron fires at most once, a latency
map (one time slot per neuron) is the canonical spike representation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import PackedBits, pack

NONE = -1  # sentinel time for neurons that never fire


@dataclass(frozen=True)
class LatencyMap:
    """Per-neuron first-spike time: integers in [0, steps) or NONE."""

    times: np.ndarray  # int16, shaped
    steps: int

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.int16)
        object.__setattr__(self, "times", t)
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if t.size and (t.min() < NONE or t.max() >= self.steps):
            raise ValueError(
                f"spike times must lie in [0, {self.steps}) or be {NONE}"
            )

    @property
    def shape(self):
        return self.times.shape

    def fired(self) -> np.ndarray:
        return self.times != NONE

    def count_fired(self) -> int:
        return int((self.times != NONE).sum())


def rank_order_encode(features, steps: int) -> LatencyMap:
    """Encode a non-negative feature map into first-spike latencies.

    All nonzero values compete globally across the whole (multi-channel)
    map: sorted descending, the value of rank r among N nonzeros fires at
    t = floor(r * steps / N). Ties break by flat index, ascending. Zeros
    never fire.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    v = np.asarray(features, dtype=np.float64)
    flat = v.ravel()
    if flat.size and flat.min() < 0:
        raise ValueError("rank-order encoding requires non-negative features")
    times = np.full(flat.shape, NONE, dtype=np.int16)
    n = int((flat > 0).sum())
    if n:
        order = np.argsort(-flat, kind="stable")[:n]
        times[order] = (np.arange(n, dtype=np.int64) * steps) // n
    return LatencyMap(times.reshape(v.shape), steps)


def timed_readout(latmap: LatencyMap) -> np.ndarray:
    """Map spike times to magnitudes: T - t for fired neurons, 0 for silent.

    Earlier spikes give larger values (max T); silence reads as 0, still
    distinguishable from the latest possible spike (value 1).
    """
    t = latmap.times
    return np.where(t != NONE, float(latmap.steps) - t, 0.0)


def raster(latmap: LatencyMap) -> PackedBits:
    """Time-unrolled binary view: bit [t, n] set iff neuron n fires at t."""
    t = latmap.times
    steps = latmap.steps
    grid = np.arange(steps, dtype=np.int16).reshape((steps,) + (1,) * t.ndim)
    planes = (t[None, ...] == grid)
    return pack(planes.astype(np.uint8))
