"""Synthetic image generators for fixtures and demos.

Eight geometric object classes (disk, ring, square frame, cross, diagonal
stripes, horizontal bars, diamond, checker) rendered with per-instance
color/scale variation and per-view position/rotation jitter. Useful as a
stand-in for multi-view object datasets and for smoke-testing the full
pipeline without external downloads.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import write_idx_images, write_idx_labels, write_pnm

CLASS_NAMES = ("disk", "ring", "frame", "cross", "stripes", "bars",
               "diamond", "checker")


def _shape_mask(kind: str, size: int, cx: float, cy: float, radius: float,
                angle: float) -> np.ndarray:
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    dx, dy = xx - cx, yy - cy
    c, s = np.cos(angle), np.sin(angle)
    rx = c * dx - s * dy
    ry = s * dx + c * dy
    r = np.hypot(rx, ry)
    if kind == "disk":
        return r <= radius
    if kind == "ring":
        return (r <= radius) & (r >= 0.55 * radius)
    if kind == "frame":
        inside = (np.abs(rx) <= radius) & (np.abs(ry) <= radius)
        inner = (np.abs(rx) <= 0.55 * radius) & (np.abs(ry) <= 0.55 * radius)
        return inside & ~inner
    if kind == "cross":
        arm = 0.35 * radius
        return ((np.abs(rx) <= arm) | (np.abs(ry) <= arm)) & (r <= 1.2 * radius)
    if kind == "stripes":
        period = max(3.0, radius * 0.8)
        return (np.mod(rx + ry, period) < period / 2) & (r <= 1.2 * radius)
    if kind == "bars":
        period = max(3.0, radius * 0.8)
        return (np.mod(ry, period) < period / 2) & (np.abs(rx) <= radius) \
            & (np.abs(ry) <= radius)
    if kind == "diamond":
        return (np.abs(rx) + np.abs(ry)) <= 1.2 * radius
    if kind == "checker":
        period = max(4.0, radius * 0.9)
        cells = (np.floor(rx / period) + np.floor(ry / period)) % 2 == 0
        return cells & (np.abs(rx) <= radius) & (np.abs(ry) <= radius)
    raise ValueError(f"unknown shape kind {kind!r}")


def render_object(class_idx: int, size: int, rng, color: bool = True,
                  base_hue=None, base_scale=None) -> np.ndarray:
    """One view of one object instance: [3,size,size] (or [1,...]) in [0,1]."""
    kind = CLASS_NAMES[class_idx % len(CLASS_NAMES)]
    radius = (base_scale if base_scale is not None else rng.uniform(0.22, 0.3)) * size
    cx = size / 2 + rng.uniform(-0.08, 0.08) * size
    cy = size / 2 + rng.uniform(-0.08, 0.08) * size
    angle = rng.uniform(0, 2 * np.pi)
    mask = _shape_mask(kind, size, cx, cy, radius, angle)
    if not color:
        img = np.full((1, size, size), 0.12)
        img[0][mask] = 0.9
    else:
        hue = base_hue if base_hue is not None else rng.uniform(0, 1)
        fg = _hue_to_rgb(hue)
        bg = _hue_to_rgb((hue + 0.5) % 1.0) * 0.25
        img = np.empty((3, size, size))
        for ch in range(3):
            img[ch] = np.where(mask, fg[ch], bg[ch])
    # noise must vanish under band-pass cutoffs as low as 0.0025: flat
    # regions have to stay flat, only shape edges should carry response
    img += rng.normal(0, 0.0005, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def _hue_to_rgb(h: float) -> np.ndarray:
    x = np.array([(h + 0.0) % 1.0, (h + 1 / 3) % 1.0, (h + 2 / 3) % 1.0])
    return np.clip(np.abs(x * 6.0 - 3.0) - 1.0, 0.2, 0.95)


def make_image_dir(root, classes: int = 8, instances: int = 10, views: int = 6,
                   size: int = 64, color: bool = True, seed: int = 0) -> None:
    """Write a category/instance/view tree of PPM (or PGM) files."""
    rng = np.random.default_rng(seed)
    root = Path(root)
    for c in range(classes):
        name = CLASS_NAMES[c % len(CLASS_NAMES)]
        for i in range(instances):
            d = root / f"{c}_{name}" / f"obj{i + 1}"
            d.mkdir(parents=True, exist_ok=True)
            # color correlates with the class (as with real object categories),
            # with per-instance variation around the class hue
            hue = (c / classes + rng.uniform(-0.4, 0.4) / classes) % 1.0
            scale = rng.uniform(0.2, 0.32)
            for v in range(views):
                img = render_object(c, size, rng, color=color,
                                    base_hue=hue, base_scale=scale)
                ext = "ppm" if color else "pgm"
                write_pnm(d / f"view{v:03d}.{ext}", img)


def make_idx_digits(out_dir, n_train: int = 400, n_test: int = 100,
                    size: int = 28, classes: int = 10, seed: int = 0):
    """Write a 10-class greyscale IDX quadruple shaped like the digit files.

    Classes are geometric patterns (not handwriting); good for wiring and
    smoke tests of the IDX pipeline path at arbitrary scale.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    def batch(n):
        images = np.empty((n, size, size), dtype=np.uint8)
        labels = (np.arange(n) % classes).astype(np.uint8)
        rng.shuffle(labels)
        for i in range(n):
            img = render_object(int(labels[i]) % len(CLASS_NAMES), size, rng,
                                color=False)[0]
            if labels[i] >= len(CLASS_NAMES):  # two extra classes: scaled variants
                img = np.roll(img, size // 3, axis=labels[i] % 2)
            images[i] = np.round(img * 255).astype(np.uint8)
        return images, labels

    tr_img, tr_lab = batch(n_train)
    te_img, te_lab = batch(n_test)
    paths = {
        "train_images": out_dir / "train-images-idx3-ubyte",
        "train_labels": out_dir / "train-labels-idx1-ubyte",
        "test_images": out_dir / "t10k-images-idx3-ubyte",
        "test_labels": out_dir / "t10k-labels-idx1-ubyte",
    }
    write_idx_images(paths["train_images"], tr_img)
    write_idx_labels(paths["train_labels"], tr_lab)
    write_idx_images(paths["test_images"], te_img)
    write_idx_labels(paths["test_labels"], te_lab)
    return paths
