"""Layer-wise STDP training with quantization and a switch-rate stopping rule.

Winners of the WTA competition update their kernel by the sign of the
pre/post timing difference, scaled by a stabilizer (W-L)(U-W) that pins the
bounds as fixed points. Learning rates double on a fixed sample schedule up
to a cap. Every update reports the fraction of weights that crossed the
quantization midpoint ("switched"); training stops once the smoothed switch
rate stays below a threshold, after which weights are binarized.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .encoding import NONE, LatencyMap
from .network import ConvLayerConfig, if_conv_forward, select_winners
from .tensor import PackedBits, pack


@dataclass(frozen=True)
class StdpConfig:
    """Learning rates, stabilizer bounds, schedule and stopping parameters."""

    a_plus: float = 0.0004
    a_minus: float = -0.0003
    lower: float = 0.0
    upper: float = 1.0
    double_every: int = 2000
    rate_cap: float = 0.15
    quantize_at: float = 0.5
    init_mean: float = 0.5
    init_std: float = 0.02
    stop_epsilon: float = 1e-4
    stop_patience: int = 50
    stop_window: int = 11

    def __post_init__(self):
        if self.a_plus <= 0:
            raise ValueError(f"a_plus must be positive, got {self.a_plus}")
        if self.a_minus >= 0:
            raise ValueError(f"a_minus must be negative, got {self.a_minus}")
        if not self.lower < self.quantize_at < self.upper:
            raise ValueError(
                f"need lower < quantize_at < upper, got "
                f"{self.lower}, {self.quantize_at}, {self.upper}"
            )
        if abs(self.a_plus) > self.rate_cap:
            raise ValueError(f"|a_plus| must not exceed rate_cap {self.rate_cap}")
        if self.double_every < 1:
            raise ValueError("double_every must be a positive sample count")
        if self.stop_window % 2 == 0:
            raise ValueError("stop_window must be odd")


@dataclass
class TrainState:
    """Mutable per-layer training progress."""

    layer_index: int
    a_plus: float
    a_minus: float
    samples_seen: int = 0
    switch_history: list = field(default_factory=list)
    update_samples: list = field(default_factory=list)  # sample idx per update
    update_rates: list = field(default_factory=list)    # a_plus per update
    stopped_early: bool = False


def stdp_update(weights, winner, winner_time, inp: LatencyMap, cfg: StdpConfig,
                stride: int = 1, pad: int = 0, a_plus: float = None,
                a_minus: float = None):
    """Apply one STDP update for a single winner, in place.

    Every afferent (c, i, j) of the winner's kernel compares its input
    spike time t_j (silent or off-image positions count as +inf) with the
    winner's time: t_j <= t_i potentiates with a_plus, otherwise a_minus
    depresses. dW = A * (W - L) * (U - W), then W is clamped to [L, U].
    Returns (weights, switched_fraction) where the fraction counts kernel
    entries that crossed the quantization midpoint. a_plus/a_minus override
    the config rates (the schedule changes them over a training run).
    """
    ch, y, x = winner
    kernel = weights[ch]
    c, kh, kw = kernel.shape

    t_rf = np.full((c, kh, kw), NONE, dtype=np.int16)
    y0 = y * stride - pad
    x0 = x * stride - pad
    ys = slice(max(0, y0), min(inp.shape[1], y0 + kh))
    xs = slice(max(0, x0), min(inp.shape[2], x0 + kw))
    t_rf[:, ys.start - y0:ys.stop - y0, xs.start - x0:xs.stop - x0] = \
        inp.times[:, ys, xs]

    potentiate = (t_rf != NONE) & (t_rf <= winner_time)
    rate = np.where(potentiate,
                    cfg.a_plus if a_plus is None else a_plus,
                    cfg.a_minus if a_minus is None else a_minus)
    before_high = kernel > cfg.quantize_at
    updated = kernel + rate * (kernel - cfg.lower) * (cfg.upper - kernel)
    np.clip(updated, cfg.lower, cfg.upper, out=updated)
    switched = float(np.mean((updated > cfg.quantize_at) != before_high))
    weights[ch] = updated
    return weights, switched


def schedule_step(state: TrainState, cfg: StdpConfig) -> TrainState:
    """Count one sample; double both rates every `double_every` samples.

    Doubling stops at the cap: the positive rate is clamped to rate_cap
    exactly and the negative rate is scaled by the factor actually applied.
    """
    state.samples_seen += 1
    if state.samples_seen % cfg.double_every == 0 and state.a_plus < cfg.rate_cap:
        factor = min(2.0, cfg.rate_cap / state.a_plus)
        state.a_plus = min(state.a_plus * factor, cfg.rate_cap)
        state.a_minus *= factor
    return state


def quantize(weights, at: float = 0.5) -> PackedBits:
    """Binarize weights: 1 where strictly above `at`, else 0; bit-packed."""
    return pack((np.asarray(weights) > at).astype(np.uint8))


def switch_rate_curve(history, window: int = 11) -> np.ndarray:
    """Centered moving average with the window shrinking at both edges."""
    if window % 2 == 0:
        raise ValueError(f"window must be odd, got {window}")
    h = np.asarray(history, dtype=np.float64)
    if h.size == 0:
        return h
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(h)])
    idx = np.arange(h.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, h.size)
    return (csum[hi] - csum[lo]) / (hi - lo)


def should_stop(curve, epsilon: float, patience: int) -> bool:
    """True once the smoothed rate sat below epsilon for `patience` points."""
    curve = np.asarray(curve, dtype=np.float64)
    if curve.size < patience:
        return False
    return bool(np.all(curve[-patience:] < epsilon))


def init_weights(out_channels: int, in_channels: int, kh: int, kw: int,
                 cfg: StdpConfig, rng) -> np.ndarray:
    w = rng.normal(cfg.init_mean, cfg.init_std,
                   size=(out_channels, in_channels, kh, kw))
    return np.clip(w, cfg.lower, cfg.upper)


def train_layer(inputs, layer_cfg: ConvLayerConfig, in_channels: int, steps: int,
                cfg: StdpConfig, *, passes: int = 1, seed: int = 0,
                wta_k: int = 5, wta_radius: int = 3, layer_index: int = 0,
                log_path=None):
    """Train one convolution layer with online STDP and quantize it.

    `inputs` is a sequence of LatencyMap (the frozen prefix's outputs).
    Each sample runs the IF forward with the current real-valued weights,
    selects winners, applies one STDP update per winner and advances the
    rate schedule. Training ends after `passes` sweeps or as soon as the
    smoothed switch rate stays below cfg.stop_epsilon for
    cfg.stop_patience consecutive updates. The stop check arms only after
    the rate schedule reaches its cap: while rates are still tiny, weights
    barely move and the switch rate is trivially near zero, so the decay
    that signals convergence can only be read after the ramp.

    Returns (binary weights as PackedBits, TrainState). If `log_path` is
    given, a CSV with one row per update (sample index, a_plus, switch
    fraction, smoothed rate) is written at the end.
    """
    if passes < 1:
        raise ValueError(f"passes must be >= 1, got {passes}")
    rng = np.random.default_rng(seed)
    weights = init_weights(layer_cfg.out_channels, in_channels,
                           layer_cfg.window, layer_cfg.window_w, cfg, rng)
    state = TrainState(layer_index=layer_index, a_plus=cfg.a_plus,
                       a_minus=cfg.a_minus)
    tail = cfg.stop_patience + cfg.stop_window // 2
    done = False
    for _ in range(passes):
        for lat in inputs:
            spikes, potentials = if_conv_forward(lat, weights, layer_cfg)
            for winner in select_winners(spikes, potentials, wta_k, wta_radius):
                t_i = int(spikes.times[winner])
                _, frac = stdp_update(weights, winner, t_i, lat, cfg,
                                      layer_cfg.stride, layer_cfg.pad,
                                      a_plus=state.a_plus, a_minus=state.a_minus)
                state.switch_history.append(frac)
                state.update_samples.append(state.samples_seen)
                state.update_rates.append(state.a_plus)
            schedule_step(state, cfg)
            if state.a_plus >= cfg.rate_cap:
                recent = switch_rate_curve(state.switch_history[-tail:],
                                           cfg.stop_window)
                if should_stop(recent, cfg.stop_epsilon, cfg.stop_patience):
                    state.stopped_early = True
                    done = True
                    break
        if done:
            break

    if log_path is not None:
        smoothed = switch_rate_curve(state.switch_history, cfg.stop_window)
        with open(log_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sample", "a_plus", "switch_fraction", "smoothed"])
            for i, frac in enumerate(state.switch_history):
                writer.writerow([
                    state.update_samples[i],
                    f"{state.update_rates[i]:.10g}",
                    f"{frac:.10g}",
                    f"{smoothed[i]:.10g}",
                ])
    return quantize(weights, cfg.quantize_at), state
