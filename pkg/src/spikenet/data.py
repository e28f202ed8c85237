"""Dataset loading: IDX digit files, PGM/PPM image trees, instance splits.

IDX parsing is bit-exact (re-serializing a parsed file reproduces its
bytes). Image directories follow a category/instance/view layout with
binary PGM (P5) or PPM (P6) files at maxval 255; images are rescaled to a
common square size by area averaging at load time.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError
from .preprocess import resize_area

IDX_IMAGE_MAGIC = 2051
IDX_LABEL_MAGIC = 2049


@dataclass(frozen=True)
class Dataset:
    """Images [N,C,H,W] in [0,1] with integer labels and optional instance ids."""

    images: np.ndarray
    labels: np.ndarray
    name: str = ""
    split: str = ""
    instance_ids: np.ndarray = None

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise ValueError(
                f"{len(self.images)} images vs {len(self.labels)} labels"
            )

    def __len__(self):
        return len(self.labels)

    def take(self, n: int) -> "Dataset":
        """First n samples (0 means everything)."""
        if n <= 0 or n >= len(self):
            return self
        ids = None if self.instance_ids is None else self.instance_ids[:n]
        return Dataset(self.images[:n], self.labels[:n], self.name, self.split, ids)

    def subset(self, mask) -> "Dataset":
        ids = None if self.instance_ids is None else self.instance_ids[mask]
        return Dataset(self.images[mask], self.labels[mask], self.name,
                       self.split, ids)


def _read_be32(data: bytes, offset: int, path) -> int:
    if offset + 4 > len(data):
        raise FormatError(f"{path}: truncated header at byte offset {offset}")
    return struct.unpack_from(">i", data, offset)[0]


def load_mnist(images_path, labels_path) -> Dataset:
    """Parse an IDX image/label file pair into a Dataset scaled to [0, 1].

    Big-endian magic 2051 (images, dims N,H,W follow) and 2049 (labels);
    malformed content raises FormatError with the offending byte offset.
    """
    images_path, labels_path = Path(images_path), Path(labels_path)
    raw = images_path.read_bytes()
    magic = _read_be32(raw, 0, images_path)
    if magic != IDX_IMAGE_MAGIC:
        raise FormatError(
            f"{images_path}: bad image magic {magic} at byte offset 0 "
            f"(expected {IDX_IMAGE_MAGIC})"
        )
    count = _read_be32(raw, 4, images_path)
    rows = _read_be32(raw, 8, images_path)
    cols = _read_be32(raw, 12, images_path)
    need = 16 + count * rows * cols
    if len(raw) != need:
        raise FormatError(
            f"{images_path}: expected {need} bytes, file ends at byte offset {len(raw)}"
        )
    pixels = np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, 1, rows, cols)

    raw_l = labels_path.read_bytes()
    magic_l = _read_be32(raw_l, 0, labels_path)
    if magic_l != IDX_LABEL_MAGIC:
        raise FormatError(
            f"{labels_path}: bad label magic {magic_l} at byte offset 0 "
            f"(expected {IDX_LABEL_MAGIC})"
        )
    count_l = _read_be32(raw_l, 4, labels_path)
    if len(raw_l) != 8 + count_l:
        raise FormatError(
            f"{labels_path}: expected {8 + count_l} bytes, "
            f"file ends at byte offset {len(raw_l)}"
        )
    if count_l != count:
        raise FormatError(
            f"label count {count_l} does not match image count {count}"
        )
    labels = np.frombuffer(raw_l, dtype=np.uint8, offset=8).astype(np.int64)
    return Dataset(pixels.astype(np.float64) / 255.0, labels, name="mnist")


def write_idx_images(path, images) -> None:
    """Serialize uint8 images [N,H,W] in IDX format (inverse of load_mnist)."""
    images = np.asarray(images, dtype=np.uint8)
    n, h, w = images.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack(">iiii", IDX_IMAGE_MAGIC, n, h, w))
        fh.write(images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">ii", IDX_LABEL_MAGIC, len(labels)))
        fh.write(labels.tobytes())


def _read_pnm_token(data: bytes, pos: int, path) -> tuple:
    while pos < len(data):
        ch = data[pos:pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError(f"{path}: truncated header")
    return data[start:pos], pos


def read_pnm(path) -> np.ndarray:
    """Read a binary PGM (P5) or PPM (P6), maxval 255, as [C,H,W] in [0,1]."""
    path = Path(path)
    data = path.read_bytes()
    magic = data[:2]
    if magic not in (b"P5", b"P6"):
        raise FormatError(
            f"{path}: unsupported format {magic!r} (need binary P5/P6)"
        )
    pos = 2
    fields = []
    for _ in range(3):
        token, pos = _read_pnm_token(data, pos, path)
        fields.append(int(token))
    width, height, maxval = fields
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval} (need 255)")
    pos += 1  # single whitespace byte after maxval
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    raster = data[pos:pos + need]
    if len(raster) != need:
        raise FormatError(f"{path}: raster truncated ({len(raster)}/{need} bytes)")
    img = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, channels)
    return img.transpose(2, 0, 1).astype(np.float64) / 255.0


def write_pnm(path, image) -> None:
    """Write [C,H,W] or [H,W] values in [0,1] as binary P5/P6, maxval 255."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim == 2:
        img = img[None]
    c, h, w = img.shape
    if c not in (1, 3):
        raise ValueError(f"can only write 1- or 3-channel images, got {c}")
    raster = np.round(img * 255.0).astype(np.uint8).transpose(1, 2, 0)
    with open(path, "wb") as fh:
        fh.write(b"P6" if c == 3 else b"P5")
        fh.write(f"\n{w} {h}\n255\n".encode())
        fh.write(raster.tobytes())


def _instance_number(name: str, fallback: int) -> int:
    m = re.search(r"(\d+)\s*$", name)
    return int(m.group(1)) if m else fallback


def load_image_dir(root, size: int = 64) -> Dataset:
    """Load a category/instance/view tree of PGM/PPM files.

    Categories are the sorted top-level directories (label = index);
    instance ids come from trailing digits of the second-level directory
    names (sorted position otherwise). Every image is resized to
    size x size by area averaging.
    """
    root = Path(root)
    if not root.is_dir():
        raise FormatError(f"{root}: not a directory")
    categories = sorted(p for p in root.iterdir() if p.is_dir())
    if not categories:
        raise FormatError(f"{root}: contains no category directories")
    images, labels, instances = [], [], []
    for label, cat in enumerate(categories):
        inst_dirs = sorted(p for p in cat.iterdir() if p.is_dir())
        count_before = len(images)
        for pos, inst in enumerate(inst_dirs):
            inst_id = _instance_number(inst.name, pos)
            for f in sorted(inst.iterdir()):
                if f.suffix.lower() not in (".pgm", ".ppm", ".pnm"):
                    continue
                img = read_pnm(f)
                if img.shape[1] != size or img.shape[2] != size:
                    img = resize_area(img, size, size)
                images.append(np.clip(img, 0.0, 1.0))
                labels.append(label)
                instances.append(inst_id)
        if len(images) == count_before:
            raise FormatError(
                f"{cat}: category contains no images (labels must be contiguous)"
            )
    channel_counts = {im.shape[0] for im in images}
    if len(channel_counts) != 1:
        raise FormatError(f"mixed channel counts in tree: {sorted(channel_counts)}")
    return Dataset(
        np.stack(images), np.asarray(labels, dtype=np.int64),
        name=root.name, instance_ids=np.asarray(instances, dtype=np.int64),
    )


def split_by_instance(dataset: Dataset, train_instances_per_class: int = 5,
                      seed: int = 0):
    """Pick train instances per category at random; all views stay together.

    Returns (train, test) Datasets forming a partition. Every class needs
    at least train_instances_per_class + 1 instances so the test side is
    never empty.
    """
    if dataset.instance_ids is None:
        raise ValueError("dataset has no instance ids to split by")
    rng = np.random.default_rng(seed)
    train_mask = np.zeros(len(dataset), dtype=bool)
    for label in np.unique(dataset.labels):
        in_class = dataset.labels == label
        ids = np.unique(dataset.instance_ids[in_class])
        if len(ids) < train_instances_per_class + 1:
            raise ValueError(
                f"class {label} has {len(ids)} instances; need at least "
                f"{train_instances_per_class + 1}"
            )
        chosen = rng.choice(ids, size=train_instances_per_class, replace=False)
        train_mask |= in_class & np.isin(dataset.instance_ids, chosen)
    train = dataset.subset(train_mask)
    test = dataset.subset(~train_mask)
    return (
        Dataset(train.images, train.labels, dataset.name, "train", train.instance_ids),
        Dataset(test.images, test.labels, dataset.name, "test", test.instance_ids),
    )
