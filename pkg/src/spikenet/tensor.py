"""Dense 2-D convolution and bit-packed binary arrays.

Images and feature maps are row-major float64 arrays laid out [C, H, W];
kernel banks are [K, C, kh, kw]. Binary data (spike planes, quantized
weights) can be stored one bit per element in :class:`PackedBits`, and
convolved with AND+popcount arithmetic instead of multiply-accumulate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv_output_size(size: int, window: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - window) // stride + 1


def convolve2d(image, kernels, stride: int = 1, pad: int = 0):
    """Cross-correlate a [C,H,W] image with a [K,C,kh,kw] kernel bank.

    out[k,y,x] = sum_{c,i,j} image[c, y*stride+i-pad, x*stride+j-pad] * kernels[k,c,i,j]
    with zero padding for out-of-bounds reads. Returns [K,H',W'] float64.
    """
    image = np.asarray(image, dtype=np.float64)
    kernels = np.asarray(kernels, dtype=np.float64)
    if image.ndim != 3 or kernels.ndim != 4:
        raise ValueError(
            f"expected image [C,H,W] and kernels [K,C,kh,kw], "
            f"got {image.shape} and {kernels.shape}"
        )
    c, h, w = image.shape
    k, kc, kh, kw = kernels.shape
    if kc != c:
        raise ValueError(f"channel mismatch: image has {c}, kernels expect {kc}")
    if stride < 1 or pad < 0:
        raise ValueError(f"stride must be >= 1 and pad >= 0, got {stride}, {pad}")
    ho = conv_output_size(h, kh, stride, pad)
    wo = conv_output_size(w, kw, stride, pad)
    if ho < 1 or wo < 1:
        raise ValueError(
            f"kernel {kh}x{kw} with stride {stride}, pad {pad} yields empty "
            f"output for {h}x{w} input"
        )
    if pad:
        padded = np.zeros((c, h + 2 * pad, w + 2 * pad))
        padded[:, pad:pad + h, pad:pad + w] = image
    else:
        padded = image
    # windows: [C, H', W', kh, kw]
    windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    return np.tensordot(kernels, windows, axes=([1, 2, 3], [0, 3, 4]))


@dataclass(frozen=True)
class PackedBits:
    """Bit-packed binary array: one bit per element, row-major.

    Bit i of the flattened array lives in word i // 64 at bit i % 64
    (little bit order); trailing padding bits of the last word are zero.
    """

    shape: tuple
    words: np.ndarray  # uint64

    @property
    def nbits(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64)) if self.shape else 1

    @property
    def nbytes_packed(self) -> int:
        """Bytes needed for the payload bits alone (no word padding)."""
        return (self.nbits + 7) // 8

    def tobytes(self) -> bytes:
        """Payload bits as ceil(nbits/8) little-bit-order bytes."""
        return self.words.tobytes()[: self.nbytes_packed]

    @classmethod
    def frombytes(cls, shape, raw: bytes) -> "PackedBits":
        shape = tuple(int(s) for s in shape)
        nbits = int(np.prod(shape, dtype=np.int64)) if shape else 1
        nbytes = (nbits + 7) // 8
        if len(raw) < nbytes:
            raise ValueError(f"need {nbytes} bytes for shape {shape}, got {len(raw)}")
        buf = bytearray(raw[:nbytes])
        buf.extend(b"\0" * (-len(buf) % 8))
        words = np.frombuffer(bytes(buf), dtype="<u8").copy()
        p = cls(shape, words)
        if p.nbits % 8:
            # force padding bits of a foreign buffer to zero
            tail_bits = np.unpackbits(
                np.frombuffer(raw[nbytes - 1: nbytes], dtype=np.uint8),
                bitorder="little",
            )
            if tail_bits[p.nbits % 8:].any():
                raise ValueError("padding bits beyond the payload must be zero")
        return p


def pack(binary) -> PackedBits:
    """Pack a {0,1}-valued array into :class:`PackedBits`."""
    arr = np.asarray(binary)
    flat = arr.ravel()
    if not np.all((flat == 0) | (flat == 1)):
        bad = flat[(flat != 0) & (flat != 1)][0]
        raise ValueError(f"pack requires elements in {{0,1}}, found {bad!r}")
    bits = flat.astype(np.uint8)
    packed = np.packbits(bits, bitorder="little")
    pad_bytes = -len(packed) % 8
    if pad_bytes:
        packed = np.concatenate([packed, np.zeros(pad_bytes, dtype=np.uint8)])
    words = packed.view("<u8").copy()
    return PackedBits(tuple(arr.shape), words)


def unpack(p: PackedBits):
    """Expand :class:`PackedBits` back into a {0,1} float64 array."""
    bits = np.unpackbits(p.words.view(np.uint8), count=p.nbits, bitorder="little")
    return bits.reshape(p.shape).astype(np.float64)


def count_ones(p: PackedBits) -> int:
    return int(np.bitwise_count(p.words).sum())


def convolve2d_packed(image: PackedBits, kernels: PackedBits, stride: int = 1, pad: int = 0):
    """Binary convolution via AND + popcount on packed rows.

    `image` holds a [C,H,W] binary map and `kernels` a [K,C,kh,kw] binary
    bank. Receptive-field patches and kernels are packed into byte rows;
    each output value is popcount(patch & kernel), an exact integer, so
    the result equals :func:`convolve2d` on the unpacked operands.
    """
    if len(image.shape) != 3 or len(kernels.shape) != 4:
        raise ValueError(
            f"expected packed image [C,H,W] and kernels [K,C,kh,kw], "
            f"got {image.shape} and {kernels.shape}"
        )
    c, h, w = image.shape
    k, kc, kh, kw = kernels.shape
    if kc != c:
        raise ValueError(f"channel mismatch: image has {c}, kernels expect {kc}")
    ho = conv_output_size(h, kh, stride, pad)
    wo = conv_output_size(w, kw, stride, pad)
    if ho < 1 or wo < 1:
        raise ValueError("convolution geometry yields an empty output")

    bits = np.unpackbits(
        image.words.view(np.uint8), count=image.nbits, bitorder="little"
    ).reshape(c, h, w)
    padded = np.zeros((c, h + 2 * pad, w + 2 * pad), dtype=np.uint8)
    padded[:, pad:pad + h, pad:pad + w] = bits
    windows = sliding_window_view(padded, (kh, kw), axis=(1, 2))[:, ::stride, ::stride]
    # [positions, C*kh*kw] -> packed byte rows
    patches = windows.transpose(1, 2, 0, 3, 4).reshape(ho * wo, c * kh * kw)
    patch_rows = np.packbits(patches, axis=1, bitorder="little")

    kbits = np.unpackbits(
        kernels.words.view(np.uint8), count=kernels.nbits, bitorder="little"
    ).reshape(k, c * kh * kw)
    kernel_rows = np.packbits(kbits, axis=1, bitorder="little")

    counts = np.bitwise_count(patch_rows[:, None, :] & kernel_rows[None, :, :])
    out = counts.sum(axis=2, dtype=np.int64)  # [positions, K]
    return out.T.reshape(k, ho, wo)
