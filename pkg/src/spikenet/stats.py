"""Benchmark statistics: repeated-run aggregation and significance testing.

Repeated train/eval runs collect (accuracy, wall time) samples; differences
between two collections are judged by whether the two-sample mean-difference
confidence interval excludes zero. Intervals use the normal quantile on the
sample standard deviations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np


def normal_quantile(level: float) -> float:
    """Two-sided z value: Phi^-1((1 + level) / 2)."""
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    return NormalDist().inv_cdf((1.0 + level) / 2.0)


@dataclass
class RunStats:
    """Accuracy and wall-time samples from repeated runs."""

    accuracies: list = field(default_factory=list)
    times: list = field(default_factory=list)

    def add(self, accuracy: float, wall_time_s: float) -> None:
        self.accuracies.append(float(accuracy))
        self.times.append(float(wall_time_s))

    @property
    def n(self) -> int:
        return len(self.accuracies)

    @property
    def accuracy_mean(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def accuracy_sd(self) -> float:
        return float(np.std(self.accuracies, ddof=1)) if self.n > 1 else 0.0

    @property
    def time_mean(self) -> float:
        return float(np.mean(self.times))

    @property
    def time_sd(self) -> float:
        return float(np.std(self.times, ddof=1)) if self.n > 1 else 0.0


def mean_diff_ci(a: RunStats, b: RunStats, level: float = 0.999,
                 on: str = "accuracy"):
    """Two-sample mean-difference interval (mean_a - mean_b) +/- z * SE.

    SE = sqrt(sd_a^2/n_a + sd_b^2/n_b) with sample standard deviations;
    the difference is significant at `level` when the interval excludes 0.
    `on` selects "accuracy" or "time" samples.
    """
    xa = a.accuracies if on == "accuracy" else a.times
    xb = b.accuracies if on == "accuracy" else b.times
    if len(xa) < 2 or len(xb) < 2:
        raise ValueError("both sample sets need n >= 2 for an interval")
    z = normal_quantile(level)
    diff = float(np.mean(xa) - np.mean(xb))
    se = float(np.sqrt(np.var(xa, ddof=1) / len(xa) + np.var(xb, ddof=1) / len(xb)))
    return diff - z * se, diff + z * se
