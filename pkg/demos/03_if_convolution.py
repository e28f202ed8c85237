"""Integrate-and-fire convolution, stepped through time.

Input spikes arrive over discrete steps; each output neuron accumulates the
weights of the spikes inside its window and fires once when it crosses the
threshold, freezing its potential. With binary weights the same layer runs
on bit-packed kernels with AND+popcount arithmetic, to the same result.
"""

import numpy as np

from spikenet import ConvLayerConfig, LatencyMap, if_conv_forward, pack
from spikenet.encoding import NONE

steps = 4
times = np.full((1, 3, 3), NONE, dtype=np.int16)
times[0, 0, 0] = 0   # corner spike at t=0
times[0, 1, 1] = 1   # center spike at t=1
times[0, 2, 2] = 3   # late spike at t=3

weights = np.ones((1, 1, 3, 3))
cfg = ConvLayerConfig(out_channels=1, window=3, stride=1, pad=0, threshold=2.0)

print("input spike times (3x3, one channel):")
print(times[0])
print(f"\none 3x3 all-ones kernel, valid geometry -> single output neuron, "
      f"threshold {cfg.threshold}")

spikes, potential = if_conv_forward(LatencyMap(times, steps), weights, cfg)
print(f"output fires at t={int(spikes.times[0, 0, 0])} "
      f"(PSP reaches 2.0 on the second input spike)")
print(f"final potential: {potential[0, 0, 0]} "
      "(frozen at fire time; the t=3 spike no longer integrates)")

# threshold higher than everything the window can deliver: silence
silent_cfg = ConvLayerConfig(1, 3, 1, 0, threshold=9.5)
silent, _ = if_conv_forward(LatencyMap(times, steps), weights, silent_cfg)
print(f"\nthreshold 9.5 > total drive 3.0 -> fired neurons: {silent.count_fired()}")

# binary weights run packed: popcount arithmetic, identical output
rng = np.random.default_rng(1)
big_times = np.where(rng.uniform(size=(4, 10, 10)) < 0.4,
                     rng.integers(0, 6, size=(4, 10, 10)), NONE).astype(np.int16)
binary = (rng.uniform(size=(8, 4, 3, 3)) < 0.5).astype(float)
layer = ConvLayerConfig(8, 3, 1, 1, threshold=5.0)
lat = LatencyMap(big_times, 6)
s_real, p_real = if_conv_forward(lat, binary, layer)
s_packed, p_packed = if_conv_forward(lat, pack(binary), layer)
print("\nbit-packed binary forward equals the real-valued forward:",
      bool(np.array_equal(s_real.times, s_packed.times)
           and np.array_equal(p_real, p_packed)))
words = pack(binary).words
print(f"packed kernel bank: {binary.size} weights in {words.size * 8} bytes "
      f"({binary.size // 8} payload)")
