"""Convolution and bit-packing primitives, checked against loop oracles."""

import numpy as np
import pytest

from spikenet.tensor import (
    PackedBits,
    convolve2d,
    convolve2d_packed,
    count_ones,
    pack,
    unpack,
)


def conv2d_reference(image, kernels, stride, pad):
    """Direct six-nested-loop convolution, independent of the library path."""
    c_in, h, w = image.shape
    k, kc, kh, kw = kernels.shape
    assert kc == c_in
    ho = (h + 2 * pad - kh) // stride + 1
    wo = (w + 2 * pad - kw) // stride + 1
    out = np.zeros((k, ho, wo))
    for f in range(k):
        for y in range(ho):
            for x in range(wo):
                acc = 0.0
                for c in range(c_in):
                    for i in range(kh):
                        for j in range(kw):
                            yy = y * stride + i - pad
                            xx = x * stride + j - pad
                            if 0 <= yy < h and 0 <= xx < w:
                                acc += image[c, yy, xx] * kernels[f, c, i, j]
                out[f, y, x] = acc
    return out


class TestConvolve2d:
    def test_all_ones_3x3(self):
        image = np.ones((1, 3, 3))
        kernel = np.ones((1, 1, 3, 3))
        out = convolve2d(image, kernel, stride=1, pad=0)
        assert out.shape == (1, 1, 1)
        assert out[0, 0, 0] == 9.0

    def test_zero_kernel_annihilates(self):
        rng = np.random.default_rng(7)
        image = rng.uniform(size=(3, 6, 7))
        kernels = np.zeros((4, 3, 3, 3))
        out = convolve2d(image, kernels, stride=1, pad=1)
        assert out.shape == (4, 6, 7)
        assert np.all(out == 0.0)

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(42)
        image = rng.normal(size=(2, 5, 5))
        kernels = rng.normal(size=(3, 2, 3, 3))
        got = convolve2d(image, kernels, stride=1, pad=1)
        want = conv2d_reference(image, kernels, stride=1, pad=1)
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("stride,pad", [(1, 0), (2, 1), (3, 2), (2, 0)])
    def test_strides_and_pads_match_oracle(self, stride, pad):
        rng = np.random.default_rng(stride * 10 + pad)
        image = rng.normal(size=(2, 8, 9))
        kernels = rng.normal(size=(2, 2, 3, 4))
        got = convolve2d(image, kernels, stride=stride, pad=pad)
        want = conv2d_reference(image, kernels, stride=stride, pad=pad)
        assert got.shape == want.shape
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_linearity(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(2, 6, 6))
        y = rng.normal(size=(2, 6, 6))
        kernels = rng.normal(size=(3, 2, 3, 3))
        a, b = 1.7, -0.4
        lhs = convolve2d(a * x + b * y, kernels, 1, 1)
        rhs = a * convolve2d(x, kernels, 1, 1) + b * convolve2d(y, kernels, 1, 1)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-9)

    def test_channel_mismatch_rejected(self):
        with pytest.raises(ValueError):
            convolve2d(np.ones((2, 4, 4)), np.ones((1, 3, 3, 3)), 1, 0)

    def test_empty_output_rejected(self):
        with pytest.raises(ValueError):
            convolve2d(np.ones((1, 2, 2)), np.ones((1, 1, 5, 5)), 1, 0)


class TestPackedBits:
    def test_all_zeros(self):
        p = pack(np.zeros((4, 4)))
        assert np.all(p.words == 0)
        assert count_ones(p) == 0

    def test_word_boundary(self):
        p = pack(np.ones(65))
        assert p.words.shape == (2,)
        assert p.words[0] == np.uint64(0xFFFFFFFFFFFFFFFF)
        assert int(np.bitwise_count(p.words[1])) == 1

    def test_round_trip_random(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            t = (rng.uniform(size=(7, 9)) < 0.5).astype(float)
            p = pack(t)
            np.testing.assert_array_equal(unpack(p), t)
            assert count_ones(p) == int(t.sum())

    def test_padding_bits_zero(self):
        rng = np.random.default_rng(12)
        t = (rng.uniform(size=13) < 0.5).astype(float)
        p = pack(t)
        # bits beyond the 13 payload bits must be zero
        mask = (np.uint64(1) << np.uint64(13)) - np.uint64(1)
        assert p.words[0] & ~mask == 0

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            pack(np.array([0.0, 0.5, 1.0]))

    def test_round_trip_4d(self):
        rng = np.random.default_rng(13)
        t = (rng.uniform(size=(3, 2, 5, 5)) < 0.3).astype(float)
        np.testing.assert_array_equal(unpack(pack(t)), t)


class TestPackedConvolution:
    def test_popcount_conv_equals_float_conv(self):
        rng = np.random.default_rng(21)
        for trial in range(25):
            c = int(rng.integers(1, 4))
            k = int(rng.integers(1, 5))
            h = int(rng.integers(4, 9))
            w = int(rng.integers(4, 9))
            kh = int(rng.integers(1, 4))
            kw = int(rng.integers(1, 4))
            stride = int(rng.integers(1, 3))
            pad = int(rng.integers(0, 2))
            if (h + 2 * pad - kh) // stride + 1 < 1:
                continue
            if (w + 2 * pad - kw) // stride + 1 < 1:
                continue
            image = (rng.uniform(size=(c, h, w)) < 0.4).astype(float)
            kernels = (rng.uniform(size=(k, c, kh, kw)) < 0.5).astype(float)
            dense = convolve2d(image, kernels, stride, pad)
            packed = convolve2d_packed(pack(image), pack(kernels), stride, pad)
            assert packed.dtype.kind in "iu"
            np.testing.assert_array_equal(packed.astype(float), dense)

    def test_shape_mismatch_rejected(self):
        a = pack((np.arange(16).reshape(1, 4, 4) % 2).astype(float))
        b = pack(np.ones((2, 2, 3, 3)))
        with pytest.raises(ValueError):
            convolve2d_packed(a, b, 1, 0)
