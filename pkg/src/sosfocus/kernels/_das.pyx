# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled hot loops: DAS accumulation, delayed-sample gather, pulse deposit.

Semantics (accumulation order, interpolation arithmetic) deliberately mirror
kernels/_fallback.py so both backends agree to floating-point rounding.
"""

from libc.math cimport sqrt, cos, exp, ceil, floor


def das_sum(const double[:, ::1] samples, double fs, double t0,
            const double[::1] ex, const double[::1] ez,
            const double[:, ::1] px, const double[:, ::1] pz,
            const double[:, ::1] tau_tx,
            const int[:, ::1] ap_start, const int[:, ::1] ap_stop,
            double inv_c, double[:, ::1] out):
    """Per-pixel sum over the aperture of linearly interpolated samples."""
    cdef Py_ssize_t nz = out.shape[0], nx = out.shape[1]
    cdef Py_ssize_t ns = samples.shape[1]
    cdef Py_ssize_t iz, ix, n
    cdef double acc, x, z, dx, dz, t, s, frac, val
    cdef Py_ssize_t k
    with nogil:
        for iz in range(nz):
            for ix in range(nx):
                acc = 0.0
                x = px[iz, ix]
                z = pz[iz, ix]
                for n in range(ap_start[iz, ix], ap_stop[iz, ix]):
                    dx = ex[n] - x
                    dz = ez[n] - z
                    t = tau_tx[iz, ix] + sqrt(dx * dx + dz * dz) * inv_c
                    s = (t - t0) * fs
                    if s < 0.0 or s > ns - 1:
                        continue
                    k = <Py_ssize_t>s
                    if k >= ns - 1:
                        val = samples[n, ns - 1]
                    else:
                        frac = s - k
                        val = samples[n, k] * (1.0 - frac) + samples[n, k + 1] * frac
                    acc += val
                out[iz, ix] = acc


def delay_gather(const double[:, ::1] samples, double fs, double t0,
                 const double[::1] ex, const double[::1] ez,
                 const double[:, ::1] px, const double[:, ::1] pz,
                 const double[:, ::1] tau_tx,
                 const int[:, ::1] ap_start, const int[:, ::1] ap_stop,
                 double inv_c, double[:, :, ::1] out):
    """Like das_sum but keeps the per-element delayed values (zeros outside
    the aperture or the temporal support)."""
    cdef Py_ssize_t nz = out.shape[0], nx = out.shape[1]
    cdef Py_ssize_t ns = samples.shape[1]
    cdef Py_ssize_t iz, ix, n
    cdef double x, z, dx, dz, t, s, frac, val
    cdef Py_ssize_t k
    with nogil:
        for iz in range(nz):
            for ix in range(nx):
                x = px[iz, ix]
                z = pz[iz, ix]
                for n in range(ap_start[iz, ix], ap_stop[iz, ix]):
                    dx = ex[n] - x
                    dz = ez[n] - z
                    t = tau_tx[iz, ix] + sqrt(dx * dx + dz * dz) * inv_c
                    s = (t - t0) * fs
                    if s < 0.0 or s > ns - 1:
                        continue
                    k = <Py_ssize_t>s
                    if k >= ns - 1:
                        val = samples[n, ns - 1]
                    else:
                        frac = s - k
                        val = samples[n, k] * (1.0 - frac) + samples[n, k + 1] * frac
                    out[iz, ix, n] = val


def deposit_pulses(double[:, ::1] samples, double fs, double t0,
                   const double[:, ::1] arrivals, const double[::1] amps,
                   double f0, double sigma):
    """Add amps[i] * pulse(t - arrivals[i, n]) onto each channel n.

    The pulse is a Gaussian-windowed cosine, evaluated analytically and
    truncated at +-4 sigma.  Scatterers are applied in index order so the
    accumulation is deterministic.
    """
    cdef Py_ssize_t n_scat = arrivals.shape[0]
    cdef Py_ssize_t n_elem = arrivals.shape[1]
    cdef Py_ssize_t ns = samples.shape[1]
    cdef double half = 4.0 * sigma
    cdef double omega = 6.283185307179586 * f0
    cdef double inv_2s2 = 1.0 / (2.0 * sigma * sigma)
    cdef Py_ssize_t i, n, k, k0, k1
    cdef double a, arrival, t
    with nogil:
        for i in range(n_scat):
            a = amps[i]
            for n in range(n_elem):
                arrival = arrivals[i, n]
                k0 = <Py_ssize_t>ceil((arrival - half - t0) * fs)
                k1 = <Py_ssize_t>floor((arrival + half - t0) * fs)
                if k0 < 0:
                    k0 = 0
                if k1 > ns - 1:
                    k1 = ns - 1
                for k in range(k0, k1 + 1):
                    t = t0 + k / fs - arrival
                    samples[n, k] += a * cos(omega * t) * exp(-t * t * inv_2s2)
