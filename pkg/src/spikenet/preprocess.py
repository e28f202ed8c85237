"""Retina-like preprocessing in front of the spiking layers.

A bank of Laplacian-of-Gaussian filters produces band-pass responses that
are split into on/off polarity channels, rectified, and cut off below a
noise floor. Color inputs are first moved to HSV so hue, saturation and
intensity are filtered as separate channels. ZCA whitening is provided as
an alternative two-channel transform for real-world images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .tensor import convolve2d


def log_kernel(sigma: float) -> np.ndarray:
    """Laplacian-of-Gaussian kernel for a given scale.

    Side length is 2*ceil(3*sigma)+1. The raw response
    ((x^2+y^2-2*sigma^2)/sigma^4) * exp(-(x^2+y^2)/(2*sigma^2)) is
    mean-subtracted (so flat inputs give exactly zero) and scaled to
    max|k| = 1 (so one cutoff threshold works across scales).
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    half = math.ceil(3 * sigma)
    coords = np.arange(-half, half + 1, dtype=np.float64)
    r2 = coords[:, None] ** 2 + coords[None, :] ** 2
    k = ((r2 - 2 * sigma**2) / sigma**4) * np.exp(-r2 / (2 * sigma**2))
    k -= k.mean()
    k /= np.abs(k).max()
    return k


@dataclass(frozen=True)
class FilterBank:
    """LoG filters (one per sigma) plus the rectification cutoff."""

    sigmas: tuple
    kernels: list = field(compare=False)
    cutoff: float = 0.01

    def __post_init__(self):
        if self.cutoff < 0:
            raise ValueError(f"cutoff must be non-negative, got {self.cutoff}")
        for k in self.kernels:
            if k.shape[0] % 2 == 0 or abs(k.sum()) > 1e-9:
                raise ValueError("filter kernels must be odd-sized and zero-mean")

    @classmethod
    def from_sigmas(cls, sigmas, cutoff: float = 0.01) -> "FilterBank":
        sigmas = tuple(float(s) for s in sigmas)
        return cls(sigmas, [log_kernel(s) for s in sigmas], cutoff)

    @property
    def channels_per_input(self) -> int:
        """Output channels produced per input channel (filters x polarities)."""
        return 2 * len(self.kernels)


def filter_rectify(image: np.ndarray, bank: FilterBank) -> np.ndarray:
    """Filter every channel with every kernel and split polarities.

    For input [C,H,W] the output is [2*F*C,H,W], ordered (filter, channel,
    on/off): the on map keeps positive responses, the off map the negated
    negative ones, and anything below the bank cutoff is reset to zero.
    Same-size output via edge-replicate padding, so flat regions stay flat
    at the border and a constant image maps to exactly zero.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3:
        raise ValueError(f"expected image [C,H,W], got shape {image.shape}")
    if image.size and (image.min() < 0.0 or image.max() > 1.0):
        raise ValueError("image values must lie in [0, 1]")
    c, h, w = image.shape
    out = np.empty((2 * len(bank.kernels) * c, h, w))
    idx = 0
    for kernel in bank.kernels:
        pad = kernel.shape[0] // 2
        padded = np.pad(image, ((0, 0), (pad, pad), (pad, pad)), mode="edge")
        for ch in range(c):
            resp = convolve2d(padded[ch:ch + 1], kernel[None, None], 1, 0)[0]
            on = np.maximum(resp, 0.0)
            off = np.maximum(-resp, 0.0)
            on[on < bank.cutoff] = 0.0
            off[off < bank.cutoff] = 0.0
            out[idx] = on
            out[idx + 1] = off
            idx += 2
    return out


def rgb_to_hsv(image: np.ndarray) -> np.ndarray:
    """Hexcone RGB -> HSV with all three outputs in [0, 1].

    H and S are defined as 0 where max == min; V is the channel maximum.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 3 or image.shape[0] != 3:
        raise ValueError(f"expected image [3,H,W], got shape {image.shape}")
    if image.min() < 0.0 or image.max() > 1.0:
        raise ValueError("image values must lie in [0, 1]")
    r, g, b = image
    mx = image.max(axis=0)
    mn = image.min(axis=0)
    delta = mx - mn
    flat = delta == 0

    safe = np.where(flat, 1.0, delta)
    hue = np.zeros_like(mx)
    is_r = (mx == r) & ~flat
    is_g = (mx == g) & ~flat & ~is_r
    is_b = ~flat & ~is_r & ~is_g
    hue[is_r] = np.mod((g - b)[is_r] / safe[is_r], 6.0)
    hue[is_g] = (b - r)[is_g] / safe[is_g] + 2.0
    hue[is_b] = (r - g)[is_b] / safe[is_b] + 4.0
    hue /= 6.0

    sat = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    return np.stack([hue, sat, mx])


@dataclass(frozen=True)
class ZcaModel:
    """Whitening transform fitted to a training set of equal-shape images."""

    mean: np.ndarray        # [D]
    transform: np.ndarray   # [D, D], symmetric
    epsilon: float
    shape: tuple            # spatial shape the model was fitted on


def zca_fit(images, epsilon: float) -> ZcaModel:
    """Fit a ZCA whitening transform on single-channel images.

    Computes W = E diag(1/sqrt(lambda+epsilon)) E^T from the eigensystem of
    the pixel covariance; applying W decorrelates pixels at unit variance
    while staying close to the original pixel space.
    """
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    arrays = [np.asarray(im, dtype=np.float64) for im in images]
    if len(arrays) < 2:
        raise ValueError(f"zca_fit needs at least 2 images, got {len(arrays)}")
    shape = arrays[0].shape
    if any(a.shape != shape for a in arrays):
        raise ValueError("all training images must share one shape")
    x = np.stack([a.ravel() for a in arrays])
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (len(arrays) - 1)
    evals, evecs = np.linalg.eigh(cov)
    if not np.all(np.isfinite(evals)):
        raise ArithmeticError("covariance eigendecomposition did not converge")
    evals = np.maximum(evals, 0.0)
    transform = (evecs / np.sqrt(evals + epsilon)) @ evecs.T
    return ZcaModel(mean, transform, float(epsilon), tuple(shape))


def zca_apply(model: ZcaModel, image, cutoff: float = 0.0) -> np.ndarray:
    """Whiten one image and split the result into on/off channels.

    Returns [2,H,W]: rectified positive and negative parts of the whitened
    pixels, with values below `cutoff` reset to zero.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.shape != model.shape:
        raise ValueError(
            f"image shape {image.shape} does not match fitted shape {model.shape}"
        )
    white = ((image.ravel() - model.mean) @ model.transform).reshape(model.shape)
    on = np.maximum(white, 0.0)
    off = np.maximum(-white, 0.0)
    if cutoff > 0:
        on[on < cutoff] = 0.0
        off[off < cutoff] = 0.0
    return np.stack([on, off])


def _area_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic matrix averaging n_in samples into n_out cells by overlap."""
    w = np.zeros((n_out, n_in))
    scale = n_in / n_out
    for i in range(n_out):
        lo = i * scale
        hi = (i + 1) * scale
        j0 = int(math.floor(lo))
        j1 = min(int(math.ceil(hi)), n_in)
        for j in range(j0, j1):
            w[i, j] = min(hi, j + 1) - max(lo, j)
    return w / scale


def resize_area(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Area-averaging resize (exact fractional overlap), channelwise for 3-D input."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        return np.stack([resize_area(ch, out_h, out_w) for ch in image])
    if image.ndim != 2:
        raise ValueError(f"expected 2-D or 3-D image, got shape {image.shape}")
    h, w = image.shape
    return _area_weights(h, out_h) @ image @ _area_weights(w, out_w).T
