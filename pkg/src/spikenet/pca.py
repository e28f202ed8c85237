"""Principal component analysis over readout feature vectors.

The spike readout is sparse and high-dimensional; projecting onto the top
principal components shrinks classifier training time without giving up
accuracy. Covariance eigendecomposition is the default route; when the
feature dimension exceeds both the sample count and a size cap, a thin SVD
of the centered data computes the same factors more cheaply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_COV_DIM_CAP = 4096  # above this (and with D > N) covariance assembly loses to SVD


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray                # [D]
    components: np.ndarray          # [k, D], orthonormal rows
    explained_variance: np.ndarray  # [k], non-increasing


def pca_fit(features, k: int) -> PcaModel:
    """Fit the top-k principal components of [N, D] feature rows.

    Components carry a deterministic sign: the coordinate of largest
    magnitude in each component is positive. Requires k <= min(N-1, D).
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"expected [N, D] features, got shape {x.shape}")
    n, d = x.shape
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if not 1 <= k <= min(n - 1, d):
        raise ValueError(f"k must lie in [1, min(N-1, D)] = [1, {min(n - 1, d)}], got {k}")
    mean = x.mean(axis=0)
    xc = x - mean
    if d <= max(n, _COV_DIM_CAP):
        cov = xc.T @ xc / (n - 1)
        evals, evecs = np.linalg.eigh(cov)
        evals = np.maximum(evals[::-1], 0.0)[:k]
        components = evecs[:, ::-1][:, :k].T
    else:
        _, svals, vt = np.linalg.svd(xc, full_matrices=False)
        evals = (svals[:k] ** 2) / (n - 1)
        components = vt[:k]
    components = components.copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0
    return PcaModel(mean, components, evals)


def pca_transform(model: PcaModel, features) -> np.ndarray:
    """Project [N, D] rows onto the fitted components: (x - mean) @ C^T."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.mean.shape[0]:
        raise ValueError(
            f"expected [N, {model.mean.shape[0]}] features, got shape {x.shape}"
        )
    return (x - model.mean) @ model.components.T
