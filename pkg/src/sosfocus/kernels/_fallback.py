"""NumPy twins of the compiled kernels, used when the extension is absent.

Per-pixel accumulation runs in ascending element order with the same
interpolation arithmetic as the Cython code, so both backends produce the
same images to floating-point rounding.
"""

import numpy as np


def _interpolated(samples_n, s, valid):
    ns = samples_n.shape[0]
    k = np.floor(s).astype(np.int64)
    k = np.clip(k, 0, ns - 1)
    k_next = np.minimum(k + 1, ns - 1)
    frac = np.where(k >= ns - 1, 0.0, s - k)
    val = samples_n[k] * (1.0 - frac) + samples_n[k_next] * frac
    return np.where(valid, val, 0.0)


def das_sum(samples, fs, t0, ex, ez, px, pz, tau_tx, ap_start, ap_stop,
            inv_c, out):
    ns = samples.shape[1]
    for n in range(samples.shape[0]):
        in_aperture = (ap_start <= n) & (n < ap_stop)
        if not in_aperture.any():
            continue
        t = tau_tx + np.sqrt((ex[n] - px) ** 2 + (ez[n] - pz) ** 2) * inv_c
        s = (t - t0) * fs
        valid = in_aperture & (s >= 0.0) & (s <= ns - 1)
        out += _interpolated(samples[n], s, valid)


def delay_gather(samples, fs, t0, ex, ez, px, pz, tau_tx, ap_start, ap_stop,
                 inv_c, out):
    ns = samples.shape[1]
    for n in range(samples.shape[0]):
        in_aperture = (ap_start <= n) & (n < ap_stop)
        if not in_aperture.any():
            continue
        t = tau_tx + np.sqrt((ex[n] - px) ** 2 + (ez[n] - pz) ** 2) * inv_c
        s = (t - t0) * fs
        valid = in_aperture & (s >= 0.0) & (s <= ns - 1)
        out[:, :, n] = _interpolated(samples[n], s, valid)


def deposit_pulses(samples, fs, t0, arrivals, amps, f0, sigma):
    ns = samples.shape[1]
    n_elem = arrivals.shape[1]
    half = 4.0 * sigma
    omega = 2.0 * np.pi * f0
    inv_2s2 = 1.0 / (2.0 * sigma * sigma)
    window = int(np.floor(2.0 * half * fs)) + 2
    offsets = np.arange(window)
    for i in range(arrivals.shape[0]):
        a = amps[i]
        k0 = np.ceil((arrivals[i] - half - t0) * fs).astype(np.int64)
        k1 = np.floor((arrivals[i] + half - t0) * fs).astype(np.int64)
        ks = k0[:, None] + offsets
        times = t0 + ks / fs - arrivals[i][:, None]
        burst = a * np.cos(omega * times) * np.exp(-times * times * inv_2s2)
        burst[ks > k1[:, None]] = 0.0  # same sample range as the compiled loop
        for n in range(n_elem):
            lo = k0[n]
            hi = lo + window
            src_lo = max(0, -lo)
            src_hi = window - max(0, hi - ns)
            if src_lo >= src_hi:
                continue
            samples[n, lo + src_lo:lo + src_hi] += burst[n, src_lo:src_hi]
