"""Rank-order coding: from analog intensities to first-spike latencies.

A feature map is turned into spike times: the strongest values fire in the
earliest time step, weaker ones later, zeros never. Only the ordering
matters, so rescaling the input leaves the code untouched. The timed
readout then maps early spikes back to large magnitudes.
"""

import numpy as np

from spikenet import rank_order_encode, raster, timed_readout, unpack

rng = np.random.default_rng(0)

# a toy 6x6 "feature map" with a bright diagonal and sparse background
features = np.zeros((6, 6))
np.fill_diagonal(features, np.linspace(1.0, 0.4, 6))
features[0, 5] = 0.05
features[5, 0] = 0.05

steps = 8
lat = rank_order_encode(features, steps=steps)

print("input intensities:")
print(np.array2string(features, precision=2))
print(f"\nfirst-spike times over {steps} steps (-1 = silent):")
print(lat.times)

print("\nstronger input never fires later than a weaker one:")
order = np.argsort(-features.ravel())
fired = features.ravel()[order] > 0
print("  times in descending-intensity order:",
      lat.times.ravel()[order][fired])

print("\nscale invariance: encode(3.7 * x) equals encode(x):",
      np.array_equal(rank_order_encode(3.7 * features, steps).times, lat.times))

readout = timed_readout(lat)
print(f"\ntimed readout (T - t, 0 for silent): earliest spike reads {steps},")
print("latest possible spike reads 1, silence reads 0:")
print(np.array2string(readout, precision=0))

planes = unpack(raster(lat))
print(f"\nraster view: {planes.shape[0]} binary planes, "
      f"{int(planes.sum())} total spikes "
      f"(= {lat.count_fired()} fired neurons, one spike each)")
for t in range(steps):
    n = int(planes[t].sum())
    print(f"  t={t}: {n} spike(s)" + ("  " + "#" * n if n else ""))
