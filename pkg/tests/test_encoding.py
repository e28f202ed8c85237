"""Rank-order temporal coding and the timed readout transform."""

import numpy as np
import pytest

from spikenet.encoding import NONE, LatencyMap, rank_order_encode, raster, timed_readout
from spikenet.tensor import count_ones, unpack


class TestRankOrderEncode:
    def test_binning_rule(self):
        # ranks 0,1,2 over N=3 nonzeros, T=2: t = floor(r*T/N)
        lat = rank_order_encode(np.array([0.9, 0.5, 0.1, 0.0]), steps=2)
        np.testing.assert_array_equal(lat.times, [0, 0, 1, NONE])

    def test_all_zero_map_is_silent(self):
        lat = rank_order_encode(np.zeros((3, 4)), steps=15)
        assert np.all(lat.times == NONE)

    def test_monotone_in_value(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            v = rng.uniform(size=(2, 6, 6)) * (rng.uniform(size=(2, 6, 6)) < 0.7)
            lat = rank_order_encode(v, steps=15)
            flat_v = v.ravel()
            flat_t = lat.times.ravel()
            nz = flat_v > 0
            order = np.argsort(-flat_v[nz], kind="stable")
            t_sorted = flat_t[nz][order]
            assert np.all(np.diff(t_sorted) >= 0)

    def test_scale_invariance(self):
        rng = np.random.default_rng(6)
        v = rng.uniform(size=(3, 5, 5))
        a = rank_order_encode(v, steps=15)
        b = rank_order_encode(3.7 * v, steps=15)
        np.testing.assert_array_equal(a.times, b.times)

    def test_count_conservation(self):
        rng = np.random.default_rng(7)
        v = rng.uniform(size=40) * (rng.uniform(size=40) < 0.5)
        lat = rank_order_encode(v, steps=8)
        assert int((lat.times != NONE).sum()) == int((v > 0).sum())

    def test_tie_break_by_flat_index(self):
        lat = rank_order_encode(np.array([0.5, 0.5, 0.5, 0.5]), steps=4)
        np.testing.assert_array_equal(lat.times, [0, 1, 2, 3])

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            rank_order_encode(np.array([0.1, -0.2]), steps=4)

    def test_times_below_steps(self):
        rng = np.random.default_rng(8)
        v = rng.uniform(size=200)
        lat = rank_order_encode(v, steps=5)
        assert lat.times.max() < 5


class TestTimedReadout:
    def test_earliest_spike_is_maximal(self):
        lat = LatencyMap(np.array([0], dtype=np.int16), steps=15)
        assert timed_readout(lat)[0] == 15.0

    def test_silent_is_zero(self):
        lat = LatencyMap(np.array([NONE], dtype=np.int16), steps=15)
        assert timed_readout(lat)[0] == 0.0

    def test_latest_spike_distinguishable_from_silence(self):
        lat = LatencyMap(np.array([14, NONE], dtype=np.int16), steps=15)
        out = timed_readout(lat)
        assert out[0] == 1.0
        assert out[1] == 0.0


class TestRaster:
    def test_single_spike_plane(self):
        times = np.full((2, 3), NONE, dtype=np.int16)
        times[1, 2] = 3
        r = raster(LatencyMap(times, steps=6))
        assert r.shape == (6, 2, 3)
        assert count_ones(r) == 1
        planes = unpack(r)
        assert planes[3, 1, 2] == 1.0

    def test_round_trip_argfirst(self):
        rng = np.random.default_rng(9)
        v = rng.uniform(size=(3, 4, 4)) * (rng.uniform(size=(3, 4, 4)) < 0.6)
        lat = rank_order_encode(v, steps=7)
        planes = unpack(raster(lat))
        recovered = np.full(lat.times.shape, NONE, dtype=np.int16)
        for t in reversed(range(7)):
            recovered[planes[t] > 0] = t
        np.testing.assert_array_equal(recovered, lat.times)

    def test_popcount_equals_fired_count(self):
        rng = np.random.default_rng(10)
        v = rng.uniform(size=(2, 5, 5)) * (rng.uniform(size=(2, 5, 5)) < 0.4)
        lat = rank_order_encode(v, steps=9)
        assert count_ones(raster(lat)) == int((lat.times != NONE).sum())


class TestLatencyMapValidation:
    def test_time_at_or_beyond_steps_rejected(self):
        with pytest.raises(ValueError):
            LatencyMap(np.array([5], dtype=np.int16), steps=5)

    def test_below_none_rejected(self):
        with pytest.raises(ValueError):
            LatencyMap(np.array([-2], dtype=np.int16), steps=5)
