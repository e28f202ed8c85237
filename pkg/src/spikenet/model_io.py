"""Binary container for trained pipelines.

Layout: magic "SPKN", format version u16, then named sections (u8 name
length + ASCII name + u64 payload length + payload), all little-endian.
Sections: digest (sha256 of the canonical config), frontend (preprocessing
parameters), optional zca, one layer section per conv layer (geometry,
threshold, bit-packed binary weights), pca, svm, optional rff. Weight
payloads are exactly ceil(bits/8) bytes.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .pca import PcaModel
from .preprocess import ZcaModel
from .svm import LinearModel
from .tensor import PackedBits

MAGIC = b"SPKN"
VERSION = 1
LAYER_HEADER_BYTES = 7 * 4 + 8  # out,in,kh,kw,stride,pad,pool (u32) + threshold (f64)

_MODES = {"log-grey": 0, "log-hsv": 1, "zca": 2}
_MODES_BACK = {v: k for k, v in _MODES.items()}


@dataclass(frozen=True)
class LayerModel:
    """One trained conv layer: geometry, threshold, binary weights."""

    out_channels: int
    in_channels: int
    kh: int
    kw: int
    stride: int
    pad: int
    pool_window: int
    threshold: float
    weights: PackedBits


@dataclass(frozen=True)
class RffParams:
    dims: int
    gamma: float
    seed: int


@dataclass(frozen=True)
class TrainedModel:
    """Everything needed to run the frozen pipeline on new images."""

    config_digest: bytes
    mode: str
    steps: int
    resize: int
    cutoff: float
    sigmas: tuple
    zca_epsilon: float
    layers: tuple          # LayerModel, in forward order
    pca: PcaModel
    svm: LinearModel
    zca: ZcaModel = None   # present iff mode == "zca"
    rff: RffParams = None


def _f64_bytes(arr) -> bytes:
    return np.ascontiguousarray(arr, dtype="<f8").tobytes()


def _read_f64(payload, offset, count, section):
    end = offset + 8 * count
    if end > len(payload):
        raise FormatError(f"section '{section}': truncated float data")
    return np.frombuffer(payload, dtype="<f8", count=count, offset=offset), end


def save_model(path, model: TrainedModel) -> None:
    sections = []

    if len(model.config_digest) != 32:
        raise ValueError("config digest must be 32 bytes (sha256)")
    sections.append(("digest", model.config_digest))

    frontend = struct.pack(
        "<BHHddH", _MODES[model.mode], model.steps, model.resize,
        model.cutoff, model.zca_epsilon, len(model.sigmas),
    ) + _f64_bytes(np.asarray(model.sigmas))
    sections.append(("frontend", frontend))

    if model.zca is not None:
        h, w = model.zca.shape
        d = model.zca.mean.shape[0]
        payload = struct.pack("<IHHd", d, h, w, model.zca.epsilon)
        payload += _f64_bytes(model.zca.mean) + _f64_bytes(model.zca.transform)
        sections.append(("zca", payload))

    for layer in model.layers:
        head = struct.pack(
            "<7Id", layer.out_channels, layer.in_channels, layer.kh, layer.kw,
            layer.stride, layer.pad, layer.pool_window, layer.threshold,
        )
        sections.append(("layer", head + layer.weights.tobytes()))

    k, d = model.pca.components.shape
    payload = struct.pack("<II", k, d)
    payload += _f64_bytes(model.pca.mean) + _f64_bytes(model.pca.components)
    payload += _f64_bytes(model.pca.explained_variance)
    sections.append(("pca", payload))

    classes, dim = model.svm.weights.shape
    payload = struct.pack("<IIdIq", classes, dim, model.svm.reg_lambda,
                          model.svm.epochs, model.svm.seed)
    payload += _f64_bytes(model.svm.weights) + _f64_bytes(model.svm.bias)
    sections.append(("svm", payload))

    if model.rff is not None:
        sections.append(("rff", struct.pack("<Idq", model.rff.dims,
                                            model.rff.gamma, model.rff.seed)))

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<H", VERSION))
        for name, payload in sections:
            encoded = name.encode("ascii")
            fh.write(struct.pack("<B", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<Q", len(payload)))
            fh.write(payload)


def _parse_sections(data: bytes, path):
    if data[:4] != MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r} (expected {MAGIC!r})")
    if len(data) < 6:
        raise FormatError(f"{path}: truncated header")
    version = struct.unpack_from("<H", data, 4)[0]
    if version != VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    pos = 6
    sections = []
    while pos < len(data):
        name_len = data[pos]
        pos += 1
        if pos + name_len + 8 > len(data):
            raise FormatError(f"{path}: truncated section header at byte {pos}")
        name = data[pos:pos + name_len].decode("ascii")
        pos += name_len
        payload_len = struct.unpack_from("<Q", data, pos)[0]
        pos += 8
        if pos + payload_len > len(data):
            raise FormatError(f"{path}: section '{name}' truncated")
        sections.append((name, data[pos:pos + payload_len]))
        pos += payload_len
    return sections


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        data = fh.read()
    sections = _parse_sections(data, path)
    by_name = {}
    layers = []
    for name, payload in sections:
        if name == "layer":
            layers.append(payload)
        else:
            by_name[name] = payload

    for required in ("digest", "frontend", "pca", "svm"):
        if required not in by_name:
            raise FormatError(f"{path}: missing section '{required}'")
    if not layers:
        raise FormatError(f"{path}: missing section 'layer'")

    digest = by_name["digest"]
    if len(digest) != 32:
        raise FormatError("section 'digest': expected 32 bytes")

    fr = by_name["frontend"]
    mode_id, steps, resize, cutoff, zca_epsilon, n_sigmas = struct.unpack_from(
        "<BHHddH", fr, 0)
    if mode_id not in _MODES_BACK:
        raise FormatError(f"section 'frontend': unknown mode id {mode_id}")
    sigmas, _ = _read_f64(fr, struct.calcsize("<BHHddH"), n_sigmas, "frontend")

    zca = None
    if "zca" in by_name:
        payload = by_name["zca"]
        d, h, w, eps = struct.unpack_from("<IHHd", payload, 0)
        off = struct.calcsize("<IHHd")
        mean, off = _read_f64(payload, off, d, "zca")
        transform, off = _read_f64(payload, off, d * d, "zca")
        zca = ZcaModel(mean.copy(), transform.reshape(d, d).copy(), eps, (h, w))

    layer_models = []
    for payload in layers:
        if len(payload) < LAYER_HEADER_BYTES:
            raise FormatError("section 'layer': truncated header")
        out_c, in_c, kh, kw, stride, pad, pool = struct.unpack_from("<7I", payload, 0)
        threshold = struct.unpack_from("<d", payload, 28)[0]
        shape = (out_c, in_c, kh, kw)
        nbytes = (int(np.prod(shape)) + 7) // 8
        raw = payload[LAYER_HEADER_BYTES:]
        if len(raw) != nbytes:
            raise FormatError(
                f"section 'layer': expected {nbytes} weight bytes, got {len(raw)}"
            )
        weights = PackedBits.frombytes(shape, raw)
        layer_models.append(LayerModel(out_c, in_c, kh, kw, stride, pad, pool,
                                       threshold, weights))

    payload = by_name["pca"]
    k, d = struct.unpack_from("<II", payload, 0)
    off = 8
    mean, off = _read_f64(payload, off, d, "pca")
    components, off = _read_f64(payload, off, k * d, "pca")
    explained, off = _read_f64(payload, off, k, "pca")
    pca = PcaModel(mean.copy(), components.reshape(k, d).copy(), explained.copy())

    payload = by_name["svm"]
    classes, dim, reg, epochs, seed = struct.unpack_from("<IIdIq", payload, 0)
    off = struct.calcsize("<IIdIq")
    weights, off = _read_f64(payload, off, classes * dim, "svm")
    bias, off = _read_f64(payload, off, classes, "svm")
    svm = LinearModel(weights.reshape(classes, dim).copy(), bias.copy(),
                      reg, epochs, seed)

    rff = None
    if "rff" in by_name:
        dims, gamma, rff_seed = struct.unpack_from("<Idq", by_name["rff"], 0)
        rff = RffParams(dims, gamma, rff_seed)

    return TrainedModel(
        config_digest=bytes(digest),
        mode=_MODES_BACK[mode_id],
        steps=int(steps),
        resize=int(resize),
        cutoff=float(cutoff),
        sigmas=tuple(float(s) for s in sigmas),
        zca_epsilon=float(zca_epsilon),
        layers=tuple(layer_models),
        pca=pca,
        svm=svm,
        zca=zca,
        rff=rff,
    )
