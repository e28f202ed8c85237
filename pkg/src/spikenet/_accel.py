"""Numba kernels for the hot loops of the time-unrolled forward pass."""

import numpy as np
from numba import njit


@njit(cache=True)
def if_forward_events(ev_start, ev_c, ev_y, ev_x, weights_t, stride, pad,
                      steps, threshold, out_times, potentials):
    """Event-driven integrate-and-fire convolution.

    Input spikes are given as a time-sorted event list (ev_start[t] slices
    the arrays per step; within a step events are ordered by (c, y, x)
    ascending, which per output neuron is exactly the (c, i, j) afferent
    order of the dense convolution). weights_t is [C,kh,kw,K]; out_times
    ([Ho,Wo,K], int16, initialized to -1) and potentials ([Ho,Wo,K]) are
    filled in place.

    Each step is accumulated into a scratch plane first and added to the
    potential as one grouped sum, so results are bit-identical to
    V(t) = V(t-1) + convolve2d(spike_plane(t), W) evaluated densely.
    Neurons at or above threshold fire once and freeze at their at-fire
    potential.
    """
    c_in, kh, kw, k_out = weights_t.shape
    ho, wo = out_times.shape[0], out_times.shape[1]
    step_acc = np.zeros((ho, wo, k_out))
    for t in range(steps):
        for e in range(ev_start[t], ev_start[t + 1]):
            c = ev_c[e]
            y = ev_y[e]
            x = ev_x[e]
            for ki in range(kh):
                yy = y + pad - ki
                if yy < 0 or yy % stride != 0:
                    continue
                oy = yy // stride
                if oy >= ho:
                    continue
                for kj in range(kw):
                    xx = x + pad - kj
                    if xx < 0 or xx % stride != 0:
                        continue
                    ox = xx // stride
                    if ox >= wo:
                        continue
                    for k in range(k_out):
                        if out_times[oy, ox, k] == -1:
                            step_acc[oy, ox, k] += weights_t[c, ki, kj, k]
        for oy in range(ho):
            for ox in range(wo):
                for k in range(k_out):
                    if out_times[oy, ox, k] == -1:
                        potentials[oy, ox, k] += step_acc[oy, ox, k]
                        if potentials[oy, ox, k] >= threshold:
                            out_times[oy, ox, k] = t
                    step_acc[oy, ox, k] = 0.0


@njit(cache=True)
def pool_min_time(times, window):
    """Per-channel min-time pooling over non-overlapping window x window tiles."""
    c, h, w = times.shape
    ho = h // window
    wo = w // window
    out = np.full((c, ho, wo), -1, dtype=np.int16)
    for cc in range(c):
        for oy in range(ho):
            for ox in range(wo):
                best = np.int16(-1)
                for i in range(window):
                    for j in range(window):
                        t = times[cc, oy * window + i, ox * window + j]
                        if t != -1 and (best == -1 or t < best):
                            best = t
                out[cc, oy, ox] = best
    return out
