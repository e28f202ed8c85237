"""Multiclass linear max-margin classifier (one-vs-rest hinge loss).

Trained with Pegasos-style stochastic subgradient descent: step size
1/(lambda*t), seeded shuffling each epoch, all class heads updated in one
pass over the data. An optional random Fourier feature expansion
approximates an RBF kernel in front of the linear heads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray   # [classes, dim]
    bias: np.ndarray      # [classes]
    reg_lambda: float
    epochs: int
    seed: int

    @property
    def classes(self) -> int:
        return self.weights.shape[0]


def svm_train(x, y, reg_lambda: float = 1e-5, epochs: int = 20,
              seed: int = 0) -> LinearModel:
    """Train one-vs-rest hinge-loss heads with SGD.

    Labels must be integers in [0, classes); each head sees label c as +1
    and the rest as -1. The bias acts as a weight on a constant feature
    (L2-regularized like the rest; an unshrunk bias would keep the huge
    1/(lambda*t) step it takes at t=1). The run is fully determined by the
    seed.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise ValueError(f"bad shapes: x {x.shape}, y {y.shape}")
    if reg_lambda <= 0:
        raise ValueError(f"reg_lambda must be positive, got {reg_lambda}")
    classes = int(y.max()) + 1
    if y.min() < 0:
        raise ValueError("labels must be non-negative")
    if len(np.unique(y)) < 2:
        raise ValueError("training data must contain at least 2 classes")
    n, dim = x.shape
    if n < classes:
        raise ValueError(f"need at least {classes} samples, got {n}")

    targets = np.full((n, classes), -1.0)
    targets[np.arange(n), y] = 1.0
    w = np.zeros((classes, dim))
    b = np.zeros(classes)
    rng = np.random.default_rng(seed)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (reg_lambda * t)
            xi = x[i]
            sign = targets[i]
            margins = sign * (w @ xi + b)
            viol = margins < 1.0
            shrink = 1.0 - eta * reg_lambda
            w *= shrink
            b *= shrink
            if viol.any():
                w[viol] += (eta * sign[viol])[:, None] * xi
                b[viol] += eta * sign[viol]
    return LinearModel(w, b, float(reg_lambda), int(epochs), int(seed))


def predict(model: LinearModel, x) -> np.ndarray:
    """Argmax of class scores; ties resolve to the lowest class index."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.weights.shape[1]:
        raise ValueError(
            f"expected [N, {model.weights.shape[1]}] features, got {x.shape}"
        )
    scores = x @ model.weights.T + model.bias
    return np.argmax(scores, axis=1)


def accuracy(pred, truth) -> float:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {truth.shape}")
    return float(np.mean(pred == truth))


def hinge_objective(model: LinearModel, x, y) -> float:
    """Mean one-vs-rest hinge loss plus the L2 penalty (for diagnostics)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0]
    targets = np.full((n, model.classes), -1.0)
    targets[np.arange(n), y] = 1.0
    margins = targets * (x @ model.weights.T + model.bias)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return float(hinge + 0.5 * model.reg_lambda * (model.weights ** 2).sum())


def rff_expand(x, dims: int, gamma: float, seed: int = 0) -> np.ndarray:
    """Random Fourier features approximating exp(-gamma * ||a - b||^2).

    Directions are Gaussian scaled by sqrt(2*gamma); the output stacks
    cos and sin projections scaled by sqrt(2/dims), so inner products of
    expanded rows estimate the RBF kernel (exactly 1 for a == b as
    cos^2 + sin^2 collapses).
    """
    x = np.asarray(x, dtype=np.float64)
    if dims % 2 != 0 or dims < 2:
        raise ValueError(f"dims must be a positive even number, got {dims}")
    if gamma < 0:
        raise ValueError(f"gamma must be non-negative, got {gamma}")
    rng = np.random.default_rng(seed)
    omega = rng.normal(size=(dims // 2, x.shape[1])) * np.sqrt(2.0 * gamma)
    proj = x @ omega.T
    return np.sqrt(2.0 / dims) * np.concatenate([np.cos(proj), np.sin(proj)], axis=1)
