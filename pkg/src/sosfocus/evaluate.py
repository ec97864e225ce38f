"""Image-quality measures (FWHM, CNR, boundary gradient) and metric timing."""

import math
import platform
import time
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import CnrError, TargetError
from .geometry import ImagingGrid
from .metrics import Roi, composite_metric


@dataclass(frozen=True)
class FwhmReport:
    """Lateral width of one point target across the sweep."""

    target: tuple                 # nominal (x, z) position
    c_values: np.ndarray
    widths: np.ndarray            # meters, per candidate speed
    selected_sos: float
    selected_width: float
    reference_sos: float
    reference_width: float

    @property
    def relative_reduction(self):
        return 1.0 - self.selected_width / self.reference_width


@dataclass(frozen=True)
class CnrReport:
    roi_inside: Roi
    roi_outside: Roi
    selected_cnr_db: float
    reference_cnr_db: float

    @property
    def delta_db(self):
        return self.selected_cnr_db - self.reference_cnr_db


def find_peak(image, approximate_peak, window=(6e-3, 6e-3)):
    """Pixel (iz, ix) of the envelope maximum near an expected position."""
    grid = image.grid
    x0, z0 = approximate_peak
    wx, wz = window
    ix0 = max(0, int(round((x0 - wx / 2 - grid.x_min) / grid.dx)))
    ix1 = min(len(grid.xs), int(round((x0 + wx / 2 - grid.x_min) / grid.dx)) + 1)
    iz0 = max(0, int(round((z0 - wz / 2 - grid.z_min) / grid.dz)))
    iz1 = min(len(grid.zs), int(round((z0 + wz / 2 - grid.z_min) / grid.dz)) + 1)
    if ix1 <= ix0 or iz1 <= iz0:
        raise TargetError("search window lies outside the image")
    patch = image.data[iz0:iz1, ix0:ix1]
    k = int(np.argmax(patch))
    return iz0 + k // patch.shape[1], ix0 + k % patch.shape[1]


def lateral_fwhm(image, approximate_peak, window=(6e-3, 6e-3)):
    """Full width at half maximum of the lateral profile through the peak.

    Half-maximum crossings are linearly interpolated on either side of the
    envelope peak; a missing crossing raises TargetError.
    """
    if image.state != "linear":
        raise TargetError("FWHM is measured on linear envelope images")
    iz, ix = find_peak(image, approximate_peak, window)
    profile = image.data[iz]
    peak = profile[ix]
    if peak <= 0:
        raise TargetError("no energy at the expected target position")
    half = 0.5 * peak
    left = _crossing(profile, ix, -1, half)
    right = _crossing(profile, ix, +1, half)
    return (right - left) * image.grid.dx


def _crossing(profile, start, step, half):
    """Fractional index where the profile first falls through `half`."""
    i = start
    while 0 <= i + step < len(profile):
        j = i + step
        if profile[j] < half:
            frac = (profile[i] - half) / (profile[i] - profile[j])
            return i + step * frac
        i = j
    raise TargetError("no half-maximum crossing inside the image")


def fwhm_report(stack, target, selected_sos, reference_sos=1540.0,
                window=(6e-3, 6e-3)):
    """FWHM across a stack plus the selected-vs-reference comparison."""
    widths = np.array([lateral_fwhm(im, target, window)
                       for im in stack.images])
    sel = lateral_fwhm(stack.at(selected_sos), target, window)
    ref = lateral_fwhm(stack.at(reference_sos), target, window)
    return FwhmReport(tuple(target), stack.c_values, widths,
                      float(selected_sos), sel, float(reference_sos), ref)


def cnr(image, roi_inside, roi_outside):
    """20*log10(|mu_in - mu_out| / sqrt(var_in + var_out)) on envelope data.

    Identical statistics return -inf (zero contrast), a zero denominator
    raises CnrError.
    """
    if _overlap(roi_inside, roi_outside):
        raise CnrError("CNR regions must be disjoint")
    for roi in (roi_inside, roi_outside):
        if roi.width * roi.height < 100:
            raise CnrError("CNR regions need at least 100 pixels")
    inside = roi_inside.extract(image.data)
    outside = roi_outside.extract(image.data)
    denom = math.sqrt(inside.var() + outside.var())
    if denom == 0.0:
        raise CnrError("zero variance in both regions")
    contrast = abs(float(inside.mean()) - float(outside.mean()))
    if contrast == 0.0:
        return -math.inf
    return 20.0 * math.log10(contrast / denom)


def _overlap(a, b):
    return not (a.x_stop <= b.x_start or b.x_stop <= a.x_start
                or a.z_stop <= b.z_start or b.z_stop <= a.z_start)


def boundary_gradient(image, segment, num_profiles=10, spacing=1e-3):
    """Peak |slope| of the mean of parallel intensity profiles.

    segment runs across the boundary; the parallel copies are offset
    perpendicular to it.  Profiles leaving the grid are clipped to the edge
    value and counted in a warning.
    """
    (x0, z0), (x1, z1) = segment
    grid = image.grid
    length = math.hypot(x1 - x0, z1 - z0)
    if length == 0:
        raise ValueError("boundary segment has zero length")
    ux, uz = (x1 - x0) / length, (z1 - z0) / length
    perp_x, perp_z = -uz, ux
    ds = min(grid.dx, grid.dz)
    n_steps = max(2, int(round(length / ds)) + 1)
    s = np.linspace(0.0, length, n_steps)
    offsets = (np.arange(num_profiles) - (num_profiles - 1) / 2.0) * spacing

    profiles = np.empty((num_profiles, n_steps))
    clipped = 0
    for k, off in enumerate(offsets):
        xs = x0 + s * ux + off * perp_x
        zs = z0 + s * uz + off * perp_z
        col = (xs - grid.x_min) / grid.dx
        row = (zs - grid.z_min) / grid.dz
        inside = ((col >= 0) & (col <= len(grid.xs) - 1)
                  & (row >= 0) & (row <= len(grid.zs) - 1))
        if not inside.all():
            clipped += 1
        profiles[k] = map_coordinates(image.data, [row, col], order=1,
                                      mode="nearest")
    if clipped:
        warnings.warn(f"{clipped} of {num_profiles} profiles exited the "
                      "grid and were clipped", stacklevel=2)
    mean_profile = profiles.mean(axis=0)
    slope = np.diff(mean_profile) / (s[1] - s[0])
    return float(np.abs(slope).max())


def benchmark_metrics(roi_sizes, num_sos, repeats=10, seed=0):
    """Median composite-metric wall time per (ROI size, sweep length).

    Returns rows of (roi_size, num_sos, median_seconds, per_sos_seconds)
    measured on synthetic speckle-like stacks after a warm-up call.
    """
    from .beamform import BeamformedImage, ImageStack

    rng = np.random.default_rng(seed)
    rows = []
    warm = True
    for size in roi_sizes:
        grid = ImagingGrid(0.0, (size - 1) * 1e-4, 1e-3,
                           1e-3 + (size - 1) * 1e-4, 1e-4, 1e-4)
        roi = Roi(0, size, 0, size)
        for count in num_sos:
            c_values = 1460.0 + 10.0 * np.arange(count)
            images = tuple(
                BeamformedImage(rng.random((size, size)) + 0.05, grid,
                                float(c), 1.41)
                for c in c_values)
            stack = ImageStack(images, 1540.0)
            if warm:
                composite_metric(stack, roi)
                warm = False
            times = []
            for _ in range(repeats):
                start = time.perf_counter()
                composite_metric(stack, roi)
                times.append(time.perf_counter() - start)
            median = float(np.median(times))
            rows.append((size, count, median, median / count))
    return rows


def write_benchmark_csv(rows, path):
    """Benchmark table with a machine-metadata comment header."""
    with open(path, "w") as fh:
        fh.write(f"# machine: {platform.machine()} {platform.processor()}\n")
        fh.write(f"# python: {platform.python_version()}\n")
        fh.write("roi_size,num_sos,median_seconds,per_sos_seconds\n")
        for size, count, median, per in rows:
            fh.write(f"{size},{count},{median!r},{per!r}\n")
