"""Autofocus image metrics over a sound-speed sweep.

Three per-ROI component metrics on linear envelope data — gradient-matrix
sharpness (first singular value), total gradient magnitude, and high-pass
spatial-frequency energy — each normalized to its sweep maximum, multiplied
into a composite whose argmax is the image-selected optimal sound speed.

The high-pass band is expressed as fractions of the maximum representable
radial spatial frequency of the ROI lattice; coefficients outside the band
are zeroed and the sum of inverse-transform magnitudes is returned.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import MetricError

DEFAULT_BAND = (0.75, 0.95)
MIN_ROI_SIDE = 8  # gradient and FFT support

COMPONENT_NAMES = ("sharpness", "gradient", "highpass")


@dataclass(frozen=True)
class Roi:
    """Half-open pixel rectangle [x_start:x_stop) x [z_start:z_stop)."""

    x_start: int
    x_stop: int
    z_start: int
    z_stop: int

    def __post_init__(self):
        if self.x_start < 0 or self.z_start < 0:
            raise MetricError("ROI indices must be nonnegative")
        if self.width < MIN_ROI_SIDE or self.height < MIN_ROI_SIDE:
            raise MetricError(f"ROI must be at least {MIN_ROI_SIDE} pixels "
                              "on each side")

    @property
    def width(self):
        return self.x_stop - self.x_start

    @property
    def height(self):
        return self.z_stop - self.z_start

    def extract(self, data):
        if self.z_stop > data.shape[0] or self.x_stop > data.shape[1]:
            raise MetricError("ROI exceeds the image bounds")
        return data[self.z_start:self.z_stop, self.x_start:self.x_stop]

    @classmethod
    def centered(cls, grid, center, width_px, height_px):
        """ROI of given pixel size centered on a physical position."""
        iz, ix = grid.index_of(*center)
        return cls(ix - width_px // 2, ix - width_px // 2 + width_px,
                   iz - height_px // 2, iz - height_px // 2 + height_px)


def _check_roi_pixels(pixels):
    pixels = np.asarray(pixels, dtype=float)
    if pixels.ndim != 2 or min(pixels.shape) < MIN_ROI_SIDE:
        raise MetricError(f"metric input must be 2-D, >= {MIN_ROI_SIDE} "
                          "pixels per side")
    return pixels


def _gradients(pixels, dx, dz):
    gz, gx = np.gradient(pixels, dz, dx)  # central interior, one-sided edges
    return gx, gz


def sharpness_metric(roi_pixels, dx=1.0, dz=1.0):
    """Largest singular value of the (n_pixels, 2) gradient matrix.

    Computed from the closed-form eigenvalues of the 2x2 Gram matrix, which
    equals the SVD route without forming the tall matrix.
    """
    pixels = _check_roi_pixels(roi_pixels)
    gx, gz = _gradients(pixels, dx, dz)
    a = float((gx * gx).sum())
    c = float((gz * gz).sum())
    b = float((gx * gz).sum())
    half_tr = 0.5 * (a + c)
    disc = math.sqrt(max(0.0, (0.5 * (a - c)) ** 2 + b * b))
    return math.sqrt(max(0.0, half_tr + disc))


def gradient_metric(roi_pixels, dx=1.0, dz=1.0):
    """Sum of per-pixel gradient magnitudes over the ROI."""
    pixels = _check_roi_pixels(roi_pixels)
    gx, gz = _gradients(pixels, dx, dz)
    return float(np.sqrt(gx * gx + gz * gz).sum())


def highpass_metric(roi_pixels, band=DEFAULT_BAND, dx=1.0, dz=1.0,
                    taper=False):
    """Band-limited spatial-frequency energy of the ROI.

    band gives (low, high) fractions of the maximum representable radial
    wavenumber; taper applies a cosine (Hann) window before the transform.
    """
    pixels = _check_roi_pixels(roi_pixels)
    lo, hi = band
    if not 0.0 < lo < hi <= 1.0:
        raise MetricError("band must satisfy 0 < low < high <= 1")
    if taper:
        nz, nx = pixels.shape
        pixels = pixels * np.outer(np.hanning(nz), np.hanning(nx))
    radius = _normalized_radius(pixels.shape, dx, dz)
    spectrum = np.fft.fft2(pixels)
    spectrum[(radius < lo) | (radius > hi)] = 0.0
    return float(np.abs(np.fft.ifft2(spectrum)).sum())


def _normalized_radius(shape, dx, dz):
    nz, nx = shape
    kz = 2.0 * math.pi * np.fft.fftfreq(nz, dz)
    kx = 2.0 * math.pi * np.fft.fftfreq(nx, dx)
    k_max = math.hypot(math.pi / dx, math.pi / dz)
    return np.sqrt(kz[:, None] ** 2 + kx[None, :] ** 2) / k_max


@dataclass(frozen=True)
class MetricCurve:
    """Component and composite metric values across the sweep."""

    c_values: np.ndarray
    sharpness: np.ndarray
    gradient: np.ndarray
    highpass: np.ndarray
    composite: np.ndarray
    optimal_sos: float
    flat: bool  # True when the composite has no unique maximum

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["c_bf", "M_S", "M_G", "M_HP", "M"])
            for row in zip(self.c_values, self.sharpness, self.gradient,
                           self.highpass, self.composite):
                writer.writerow([repr(float(v)) for v in row])


def composite_metric(stack, roi, band=DEFAULT_BAND, taper=False):
    """Evaluate the three components per speed, normalize, multiply, argmax.

    Ties (and flat curves) resolve toward the smallest candidate speed; a
    flat composite is flagged rather than trusted.
    """
    grid = stack.grid
    dx, dz = grid.dx, grid.dz
    raw = {name: [] for name in COMPONENT_NAMES}
    for image in stack.images:
        if image.state != "linear":
            raise MetricError("metrics operate on linear envelope images")
        pixels = roi.extract(image.data)
        raw["sharpness"].append(sharpness_metric(pixels, dx, dz))
        raw["gradient"].append(gradient_metric(pixels, dx, dz))
        raw["highpass"].append(highpass_metric(pixels, band, dx, dz, taper))
    curves = {}
    for name in COMPONENT_NAMES:
        values = np.array(raw[name])
        peak = values.max()
        if peak <= 0.0:
            raise MetricError(f"{name} metric is identically zero "
                              "across the sweep")
        curves[name] = values / peak
    composite = (curves["sharpness"] * curves["gradient"]
                 * curves["highpass"])
    best = int(np.argmax(composite))
    flat = bool(np.ptp(composite) <= 1e-12 * composite.max())
    return MetricCurve(stack.c_values, curves["sharpness"],
                       curves["gradient"], curves["highpass"], composite,
                       float(stack.c_values[best]), flat)


def slsc_value_map(delayed, lag_max=12, kernel=12):
    """Short-lag spatial coherence per pixel, clamped to [0, 1].

    delayed is the (nz, nx, n_elements) pre-sum stack; coherence at each
    pixel averages the normalized correlation of channel pairs at lags
    1..lag_max over an axial kernel window.  Zero-energy pairs contribute 0.
    """
    nz, nx, n_elem = delayed.shape
    if lag_max >= n_elem:
        raise MetricError("lag_max must be smaller than the element count")
    coherence = np.zeros((nz, nx))
    for ix in range(nx):
        d = delayed[:, ix, :]
        energy = uniform_filter1d(d * d, size=kernel, axis=0,
                                  mode="constant") * kernel
        lag_sum = np.zeros(nz)
        for m in range(1, lag_max + 1):
            num = uniform_filter1d(d[:, :-m] * d[:, m:], size=kernel, axis=0,
                                   mode="constant") * kernel
            den = np.sqrt(energy[:, :-m] * energy[:, m:])
            with np.errstate(invalid="ignore", divide="ignore"):
                rho = np.where(den > 0.0, num / den, 0.0)
            lag_sum += rho.mean(axis=1)
        coherence[:, ix] = lag_sum / lag_max
    return np.clip(coherence, 0.0, 1.0)


def slsc_weighted_image(delayed, das_image, lag_max=12, kernel=12,
                        weight_exponent=0.5):
    """Coherence-masked DAS image: (SLSC ** exponent) * envelope."""
    from dataclasses import replace

    weights = slsc_value_map(delayed, lag_max, kernel) ** weight_exponent \
        if weight_exponent != 0.0 else 1.0
    return replace(das_image, data=das_image.data * weights)
