"""The Laplacian-of-Gaussian front end: band-pass channels with on/off polarity.

Three filter scales turn one greyscale image into six rectified channels
(positive and negative responses separately), and everything below the
cutoff threshold is silenced. A blob matched to a filter's scale produces a
clean center response; a flat image produces nothing at all.
"""

import numpy as np

from spikenet import FilterBank, filter_rectify, log_kernel

for sigma in (0.471, 1.099, 2.042):
    k = log_kernel(sigma)
    print(f"sigma={sigma}: kernel {k.shape[0]}x{k.shape[1]}, "
          f"sum={k.sum():+.2e} (zero mean), center={k[k.shape[0] // 2, k.shape[0] // 2]:+.3f}, "
          f"max|k|={np.abs(k).max():.3f}")

bank = FilterBank.from_sigmas([0.471, 1.099, 2.042], cutoff=0.01)

size = 28
image = np.zeros((1, size, size))
yy, xx = np.mgrid[0:size, 0:size]
image[0] = np.exp(-((yy - 14) ** 2 + (xx - 14) ** 2) / (2 * 2.0 ** 2))  # blob, sigma 2

channels = filter_rectify(image, bank)
print(f"\n1-channel input -> {channels.shape[0]} channels "
      f"(3 scales x on/off), shape preserved: {channels.shape[1:]} == ({size}, {size})")

names = [f"s={s:g}/{p}" for s in bank.sigmas for p in ("on", "off")]
for name, ch in zip(names, channels):
    nz = int((ch > 0).sum())
    print(f"  {name:>12}: {nz:4d} active pixels, max {ch.max():.3f}")

print("\non/off exclusivity: on * off == 0 everywhere:",
      bool(np.all(channels[0::2] * channels[1::2] == 0)))

flat = filter_rectify(np.full((1, size, size), 0.37), bank)
print("flat image -> all channels silent:", bool(np.all(flat == 0)))

tiny = filter_rectify(image * 0.001, bank)  # responses all under the cutoff
print("sub-cutoff image -> silenced by the 0.01 threshold:",
      bool(np.all(tiny == 0)))
