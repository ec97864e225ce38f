"""Analytically optimal bulk sound speed and its spatial maps.

For each field point the optimum is the constant receive speed whose
geometric delays best match the true layered arrival times across the
active aperture (summed absolute error).  Alongside the optimum we report
the residual per-element errors and the coherent aperture fraction: the
longest contiguous run of elements whose residual stays under a fraction
of the wave period, relative to the aperture size.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .delays import straight_ray_delays
from .errors import ApertureError, SoundSpeedError
from .geometry import active_aperture

DEFAULT_THRESHOLD_PERIODS = 0.2
_GRID_MARGIN = 10.0  # m/s beyond the layer/background bracket


@dataclass(frozen=True)
class OptimalSosResult:
    sos: float                     # m/s minimizing the summed |error|
    mean_abs_error: float          # seconds, at the optimum
    per_element_errors: np.ndarray  # signed, true minus geometric, seconds
    coherent_fraction: float
    aperture_size: int


@dataclass(frozen=True)
class SosMap:
    """Per-pixel optimum, residual error (in periods), coherent fraction."""

    grid: object
    sos: np.ndarray
    mean_error_periods: np.ndarray
    coherent_fraction: np.ndarray


def default_sos_grid(medium, step=1.0):
    lo, hi = medium.sos_bounds()
    n = int(round((hi - lo + 2 * _GRID_MARGIN) / step)) + 1
    return lo - _GRID_MARGIN + step * np.arange(n)


def solve_optimal_sos(point, medium, array, f_number, sos_grid=None,
                      threshold_periods=DEFAULT_THRESHOLD_PERIODS,
                      convention="paper"):
    """Exhaustive-grid argmin of the summed |true - geometric| delay error.

    Ties break toward the smallest candidate speed.  The coherent fraction
    is evaluated at the array center frequency.
    """
    if sos_grid is None:
        sos_grid = default_sos_grid(medium)
    else:
        sos_grid = np.asarray(sos_grid, dtype=float)
        lo, hi = medium.sos_bounds()
        if sos_grid[0] > lo - _GRID_MARGIN or sos_grid[-1] < hi + _GRID_MARGIN:
            raise SoundSpeedError("candidate grid must bracket both layer "
                                  "and background speeds by 10 m/s")
        if np.max(np.diff(sos_grid)) > 1.0 + 1e-12:
            raise SoundSpeedError("candidate grid step must be <= 1 m/s")
    aperture = active_aperture(point, array, f_number, convention)
    idx = aperture.indices
    ex = array.element_x[idx]
    ez = array.element_z[idx]
    true_times = straight_ray_delays(ex, ez, point, medium)
    dist = np.sqrt((point[0] - ex) ** 2 + (point[1] - ez) ** 2)
    # (n_candidates, n_elements) |error| summed over the aperture
    total = np.abs(true_times - dist / sos_grid[:, None]).sum(axis=1)
    best = int(np.argmin(total))  # first minimum = smallest speed on ties
    sos = float(sos_grid[best])
    errors = true_times - dist / sos
    fraction = coherent_aperture_fraction(
        errors, 1.0 / array.center_frequency, threshold_periods)
    return OptimalSosResult(sos, float(np.abs(errors).mean()), errors,
                            fraction, aperture.size)


def coherent_aperture_fraction(errors, period,
                               threshold_periods=DEFAULT_THRESHOLD_PERIODS):
    """Longest sub-threshold contiguous run over the aperture size."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ApertureError("empty per-element error list")
    ok = np.abs(errors) < threshold_periods * period
    best = run = 0
    for flag in ok:
        run = run + 1 if flag else 0
        best = max(best, run)
    return best / errors.size


def optimal_sos_map(region, medium, array, f_number, sos_grid=None,
                    threshold_periods=DEFAULT_THRESHOLD_PERIODS,
                    convention="paper", threads=None):
    """solve_optimal_sos on every grid pixel; failures become NaN pixels."""
    if sos_grid is None:
        sos_grid = default_sos_grid(medium)
    nz, nx = region.shape
    sos = np.full((nz, nx), np.nan)
    err = np.full((nz, nx), np.nan)
    frac = np.full((nz, nx), np.nan)
    f0 = array.center_frequency

    def fill_row(iz):
        z = region.zs[iz]
        for ix, x in enumerate(region.xs):
            try:
                res = solve_optimal_sos((x, z), medium, array, f_number,
                                        sos_grid, threshold_periods,
                                        convention)
            except ApertureError:
                continue
            sos[iz, ix] = res.sos
            err[iz, ix] = res.mean_abs_error * f0
            frac[iz, ix] = res.coherent_fraction

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_row, range(nz)))
    else:
        for iz in range(nz):
            fill_row(iz)
    return SosMap(region, sos, err, frac)
