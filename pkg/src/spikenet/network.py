"""Spiking convolutional layers: IF dynamics, pooling, and competition.

The forward pass unrolls the integrate-and-fire update V(t) = V(t-1) +
conv(spikes(t), W) over discrete time. A neuron fires once, the first step
its potential reaches threshold, and is then frozen at its at-fire value.
Winner selection picks the earliest/strongest neurons for plasticity under
channel-wise and spatial lateral inhibition.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._accel import if_forward_events, pool_min_time
from .encoding import NONE, LatencyMap
from .tensor import PackedBits, conv_output_size, convolve2d_packed, unpack


@dataclass(frozen=True)
class ConvLayerConfig:
    """Geometry and firing threshold of one IF convolution layer."""

    out_channels: int
    window: int
    stride: int = 1
    pad: int = 0
    threshold: float = 10.0
    window_w: int = None  # defaults to `window` (square kernels)

    def __post_init__(self):
        if self.window_w is None:
            object.__setattr__(self, "window_w", self.window)
        if self.out_channels < 1:
            raise ValueError(f"out_channels must be >= 1, got {self.out_channels}")
        if self.window < 1 or self.window_w < 1:
            raise ValueError(f"window must be >= 1, got {self.window}x{self.window_w}")
        if self.stride < 1 or self.pad < 0:
            raise ValueError(f"invalid stride/pad: {self.stride}, {self.pad}")
        if self.threshold <= 0:
            raise ValueError(f"threshold must be positive, got {self.threshold}")


@dataclass(frozen=True)
class NetworkConfig:
    """Two conv+pool stages plus the temporal and competition parameters."""

    layer1: ConvLayerConfig
    pool1_window: int
    layer2: ConvLayerConfig
    pool2_window: int
    steps: int = 15
    wta_k: int = 5
    wta_radius: int = 3

    PRESET_CHANNELS = {"small": (50, 100), "medium": (100, 200), "large": (200, 400)}

    def __post_init__(self):
        if self.pool1_window < 1 or self.pool2_window < 1:
            raise ValueError("pooling windows must be >= 1")
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.wta_k < 1 or self.wta_radius < 0:
            raise ValueError("wta_k must be >= 1 and wta_radius >= 0")

    @classmethod
    def preset(cls, name: str, threshold1: float = 10.0, threshold2: float = 60.0,
               steps: int = 15, wta_k: int = 5, wta_radius: int = 3) -> "NetworkConfig":
        """Named channel presets; conv geometry 5/1/2 then 3/1/1, pools 2 and 3."""
        if name not in cls.PRESET_CHANNELS:
            raise ValueError(f"unknown preset {name!r}; have {sorted(cls.PRESET_CHANNELS)}")
        c1, c2 = cls.PRESET_CHANNELS[name]
        return cls(
            layer1=ConvLayerConfig(c1, 5, 1, 2, threshold1),
            pool1_window=2,
            layer2=ConvLayerConfig(c2, 3, 1, 1, threshold2),
            pool2_window=3,
            steps=steps,
            wta_k=wta_k,
            wta_radius=wta_radius,
        )


def _events_by_time(times: np.ndarray, steps: int):
    cs, ys, xs = np.nonzero(times != NONE)
    ts = times[cs, ys, xs]
    order = np.argsort(ts, kind="stable")
    starts = np.searchsorted(ts[order], np.arange(steps + 1)).astype(np.int64)
    return (starts, cs[order].astype(np.int64), ys[order].astype(np.int64),
            xs[order].astype(np.int64))


def if_conv_forward(inp: LatencyMap, weights, cfg: ConvLayerConfig):
    """Run one IF convolution layer over all time steps.

    `weights` is either a real-valued [K,C,kh,kw] array in [0,1] or a
    PackedBits bank of the same shape (binary weights, integer popcount
    arithmetic; results are bit-identical to the real-valued path run on
    the unpacked values). Returns (spike latencies, final potentials);
    fired neurons keep the potential they had when they fired.
    """
    packed = isinstance(weights, PackedBits)
    if packed:
        k, c, kh, kw = weights.shape
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.ndim != 4:
            raise ValueError(f"expected weights [K,C,kh,kw], got {weights.shape}")
        k, c, kh, kw = weights.shape
        if weights.size and (weights.min() < 0.0 or weights.max() > 1.0):
            raise ValueError("weights must lie in [0, 1]")
    if (kh, kw) != (cfg.window, cfg.window_w) or k != cfg.out_channels:
        raise ValueError(
            f"weights {weights.shape if not packed else weights.shape} do not match "
            f"layer config ({cfg.out_channels},*,{cfg.window},{cfg.window_w})"
        )
    cin, h, w = inp.shape
    if cin != c:
        raise ValueError(f"input has {cin} channels, weights expect {c}")
    ho = conv_output_size(h, kh, cfg.stride, cfg.pad)
    wo = conv_output_size(w, kw, cfg.stride, cfg.pad)
    if ho < 1 or wo < 1:
        raise ValueError("layer geometry yields an empty output")

    if packed:
        return _if_forward_packed(inp, weights, cfg, ho, wo)

    out_times = np.full((ho, wo, k), NONE, dtype=np.int16)
    potentials = np.zeros((ho, wo, k))
    starts, cs, ys, xs = _events_by_time(inp.times, inp.steps)
    weights_t = np.ascontiguousarray(weights.transpose(1, 2, 3, 0))
    if_forward_events(starts, cs, ys, xs, weights_t, cfg.stride, cfg.pad,
                      inp.steps, cfg.threshold, out_times, potentials)
    return (
        LatencyMap(np.ascontiguousarray(out_times.transpose(2, 0, 1)), inp.steps),
        np.ascontiguousarray(potentials.transpose(2, 0, 1)),
    )


def _if_forward_packed(inp: LatencyMap, weights: PackedBits, cfg, ho, wo):
    """Dense per-step path using AND+popcount convolution of binary planes."""
    from .tensor import pack  # local: avoids importing pack at module top for one use

    k = cfg.out_channels
    out_times = np.full((k, ho, wo), NONE, dtype=np.int16)
    potentials = np.zeros((k, ho, wo))
    for t in range(inp.steps):
        plane = (inp.times == t).astype(np.uint8)
        if plane.any():
            counts = convolve2d_packed(pack(plane), weights, cfg.stride, cfg.pad)
            alive = out_times == NONE
            potentials[alive] += counts[alive].astype(np.float64)
        newly = (out_times == NONE) & (potentials >= cfg.threshold)
        out_times[newly] = t
    return LatencyMap(out_times, inp.steps), potentials


def spike_pool(inp: LatencyMap, window: int) -> LatencyMap:
    """Earliest-spike pooling over non-overlapping tiles (stride == window).

    A tile's output time is the minimum defined time inside it, or NONE for
    an all-silent tile. Trailing rows/columns that do not fill a tile are
    dropped.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if window == 1:
        return inp
    return LatencyMap(pool_min_time(inp.times, window), inp.steps)


def select_winners(spikes: LatencyMap, potentials: np.ndarray, k: int,
                   inhibition_radius: int):
    """Greedy winner-take-all selection among fired neurons.

    Candidates are ordered by earlier spike time, then higher potential,
    then lower flat index. Accepting a winner removes every remaining
    candidate in its channel and every candidate within Chebyshev distance
    <= inhibition_radius of its location, across all channels. Returns up
    to k (channel, y, x) tuples, possibly fewer.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    times = spikes.times
    cs, ys, xs = np.nonzero(times != NONE)
    if cs.size == 0:
        return []
    flat = np.ravel_multi_index((cs, ys, xs), times.shape)
    order = np.lexsort((flat, -potentials[cs, ys, xs], times[cs, ys, xs]))
    cs, ys, xs = cs[order], ys[order], xs[order]
    alive = np.ones(cs.size, dtype=bool)
    winners = []
    for _ in range(k):
        idx = int(np.argmax(alive))
        if not alive[idx]:
            break
        ch, y, x = int(cs[idx]), int(ys[idx]), int(xs[idx])
        winners.append((ch, y, x))
        near = (np.abs(ys - y) <= inhibition_radius) & (np.abs(xs - x) <= inhibition_radius)
        alive &= ~(near | (cs == ch))
    return winners


def grid_search(grids, evaluate):
    """Exhaustive search over per-layer threshold grids.

    `evaluate` maps a tuple of thresholds (one per layer) to a validation
    accuracy; every grid-point combination is evaluated exactly once, in
    ascending lexicographic order, and ties keep the smaller thresholds.
    """
    grids = [sorted(float(v) for v in g) for g in grids]
    if not grids or any(len(g) == 0 for g in grids):
        raise ValueError("every threshold grid must be non-empty")
    best, best_score = None, -np.inf
    for combo in itertools.product(*grids):
        score = evaluate(combo)
        if score > best_score:
            best, best_score = combo, score
    return best
