"""STDP convergence and the switch-rate stopping signal.

A single output neuron repeatedly sees one fixed input pattern. Afferents
that spike before the neuron get potentiated toward 1, the rest depressed
toward 0, so the quantized kernel converges to exactly the pattern's
support. The fraction of weights crossing 0.5 per update ("switch rate")
spikes while weights sort themselves out, then dies off; its smoothed curve
is the stopping signal.
"""

import numpy as np

from spikenet import ConvLayerConfig, LatencyMap, StdpConfig, train_layer, unpack
from spikenet.encoding import NONE
from spikenet.stdp import switch_rate_curve

pattern = np.zeros((1, 5, 5), dtype=bool)
pattern[0, 1:4, 1:4] = True
pattern[0, 0, 0] = True
times = np.where(pattern, 0, NONE).astype(np.int16)
inputs = [LatencyMap(times, steps=5)] * 400

cfg = StdpConfig(a_plus=0.05, a_minus=-0.05, double_every=10**9, rate_cap=0.05,
                 stop_epsilon=1e-4, stop_patience=50)
layer = ConvLayerConfig(out_channels=1, window=5, stride=1, pad=0, threshold=4.0)

packed, state = train_layer(inputs, layer, in_channels=1, steps=5, cfg=cfg, seed=7)

print("target pattern (support):")
print(pattern[0].astype(int))
print("\nlearned quantized kernel:")
print(unpack(packed)[0, 0].astype(int))
print("\nmatch:", bool(np.array_equal(unpack(packed)[0, 0].astype(bool), pattern[0])))

print(f"\nsamples seen: {state.samples_seen} of {len(inputs)} "
      f"(early stop: {state.stopped_early})")

curve = switch_rate_curve(state.switch_history, window=11)
peak = curve.max()
print(f"switch-rate curve: {len(curve)} updates, peak {peak:.3f}")
bins = np.array_split(curve, 8)
for i, chunk in enumerate(bins):
    bar = "#" * int(round(40 * chunk.mean() / peak)) if peak else ""
    print(f"  phase {i + 1}/8: mean {chunk.mean():.4f} {bar}")
print("the curve collapses once weights saturate at 0 or 1; training stops",
      "when it stays below epsilon.")
