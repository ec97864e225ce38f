"""Arrival times between elements and field points in a layered medium.

Three delay models:

* straight-ray through the layer (the ground truth for all optimal-SoS
  analysis): the slowness 1/c(z) integrated along the straight segment,
  which has a closed form for a single flat interface;
* uniform: straight segment at one assumed bulk speed;
* refracted: two-segment path bent at the interface per Snell's law, solved
  independently in the x-z and y-z planes; used only to quantify how small
  the bending correction is.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import PathError, RefractionError, SoundSpeedError
from .geometry import active_aperture

DELAY_MODELS = ("true-layered", "uniform", "refracted")


def straight_ray_delay(element, point, medium):
    """Travel time along the straight segment from element to point.

    The layer occupies z <= thickness; the fraction of the segment inside it
    scales with the z-extent because the interface is flat.
    """
    ex, ez = element
    px, pz = point
    length = math.hypot(px - ex, pz - ez)
    if length == 0.0:
        raise PathError("field point coincides with the element")
    if pz <= ez:
        raise PathError("field point must lie below the element")
    if pz <= medium.thickness:
        return length / medium.layer_sos
    frac = (medium.thickness - ez) / (pz - ez)
    frac = min(max(frac, 0.0), 1.0)
    return length * (frac / medium.layer_sos + (1.0 - frac) / medium.background_sos)


def straight_ray_delays(element_x, element_z, point, medium):
    """Vectorized straight_ray_delay over element position arrays."""
    px, pz = point
    ex = np.asarray(element_x, dtype=float)
    ez = np.asarray(element_z, dtype=float)
    length = np.sqrt((px - ex) ** 2 + (pz - ez) ** 2)
    if np.any(length == 0.0) or np.any(pz <= ez):
        raise PathError("field point must lie strictly below every element")
    if pz <= medium.thickness:
        return length / medium.layer_sos
    frac = np.clip((medium.thickness - ez) / (pz - ez), 0.0, 1.0)
    return length * (frac / medium.layer_sos
                     + (1.0 - frac) / medium.background_sos)


def straight_ray_delay_matrix(element_x, element_z, points, medium):
    """(n_points, n_elements) straight-ray times for many scatterers at once."""
    ex = np.asarray(element_x, dtype=float)
    ez = np.asarray(element_z, dtype=float)
    px = np.asarray(points, dtype=float)[:, 0:1]
    pz = np.asarray(points, dtype=float)[:, 1:2]
    if np.any(pz <= ez):
        raise PathError("every point must lie strictly below every element")
    length = np.sqrt((px - ex) ** 2 + (pz - ez) ** 2)
    frac = np.clip((medium.thickness - ez) / (pz - ez), 0.0, 1.0)
    times = length * (frac / medium.layer_sos
                      + (1.0 - frac) / medium.background_sos)
    inside = (pz <= medium.thickness)[:, 0]
    if np.any(inside):
        times[inside] = length[inside] / medium.layer_sos
    return times


def line_integral_delay(element, point, medium, n_samples=1 << 20):
    """Midpoint-rule integration of 1/c along the straight segment.

    Independent numerical oracle for straight_ray_delay; error is bounded by
    length*|1/c1 - 1/c2|/(2*n_samples) since the integrand is piecewise
    constant with a single jump.
    """
    ex, ez = element
    px, pz = point
    length = math.hypot(px - ex, pz - ez)
    s = (np.arange(n_samples) + 0.5) / n_samples
    z = ez + s * (pz - ez)
    slowness = np.where(z <= medium.thickness,
                        1.0 / medium.layer_sos, 1.0 / medium.background_sos)
    return length * float(slowness.mean())


def uniform_delay(element, point, sos):
    """Geometric travel time |r_point - r_element| / sos."""
    if sos <= 0:
        raise SoundSpeedError(f"sound speed must be positive, got {sos}")
    ex, ez = element
    px, pz = point
    return math.hypot(px - ex, pz - ez) / sos


@dataclass(frozen=True)
class RefractionSolution:
    """Snell-refracted two-segment path, solved per plane.

    theta_1* are angles in the layer, theta_2* below the interface;
    time_layer/time_background are the two segment times, time_uniform the
    no-layer reference, and extra_delay their difference (the aberration
    the layer adds on this path).
    """

    theta_1x: float
    theta_2x: float
    theta_1y: float
    theta_2y: float
    time_layer: float
    time_background: float
    time_uniform: float
    extra_delay: float

    def snell_residual(self, medium):
        rx = (math.sin(self.theta_1x) / medium.layer_sos
              - math.sin(self.theta_2x) / medium.background_sos)
        ry = (math.sin(self.theta_1y) / medium.layer_sos
              - math.sin(self.theta_2y) / medium.background_sos)
        return max(abs(rx), abs(ry))


def _solve_plane(offset, d_layer, d_background, c1, c2):
    """Angles (theta1, theta2) whose bent path spans `offset` laterally.

    Root of f(theta1) = d_layer*tan(theta1) + d_background*tan(theta2) - offset
    with sin(theta2) = (c2/c1)*sin(theta1); f is strictly increasing, so
    bisection on the total-internal-reflection-safe bracket always converges.
    """
    if offset == 0.0:
        return 0.0, 0.0
    ratio = c2 / c1
    limit = math.asin(min(1.0, 1.0 / ratio)) if ratio > 1.0 else 0.5 * math.pi
    eps = 1e-9 * limit
    lo, hi = -limit + eps, limit - eps

    def residual(theta1):
        theta2 = math.asin(max(-1.0, min(1.0, ratio * math.sin(theta1))))
        return (d_layer * math.tan(theta1)
                + d_background * math.tan(theta2) - offset)

    f_lo, f_hi = residual(lo), residual(hi)
    if not (f_lo < 0.0 < f_hi):
        raise RefractionError(
            f"no Snell root for offset {offset:.4g} m within the bracket")
    theta1 = 0.0
    f_mid = residual(theta1)
    for _ in range(200):
        if f_mid > 0.0:
            hi = theta1
        else:
            lo = theta1
        theta1 = 0.5 * (lo + hi)
        f_mid = residual(theta1)
        if abs(f_mid) < 1e-13 and hi - lo < 1e-15:
            break
    if abs(f_mid) > 1e-12:
        raise RefractionError(f"Snell bisection stalled at residual {f_mid:.3g} m")
    theta2 = math.asin(max(-1.0, min(1.0, ratio * math.sin(theta1))))
    return theta1, theta2


def refracted_delay(element, point, medium):
    """Two-segment refracted arrival time between 3-D positions.

    element = (x', y', z') with z' above the interface, point = (x, y, z)
    below it.  The effective layer thickness is d - z' so curved-array
    elements behind the tangent plane traverse more slow material.
    """
    exq, eyq, ezq = element
    px, py, pz = point
    d = medium.thickness
    if not pz > d:
        raise PathError("refracted paths need the field point below the layer")
    if not d > ezq:
        raise PathError("refracted paths need the element above the interface")
    c1, c2 = medium.layer_sos, medium.background_sos
    d_layer = d - ezq
    d_background = pz - d

    t1x, t2x = _solve_plane(px - exq, d_layer, d_background, c1, c2)
    t1y, t2y = _solve_plane(py - eyq, d_layer, d_background, c1, c2)

    time_layer = d_layer * math.sqrt(
        1.0 + math.tan(t1x) ** 2 + math.tan(t1y) ** 2) / c1
    time_background = d_background * math.sqrt(
        1.0 + math.tan(t2x) ** 2 + math.tan(t2y) ** 2) / c2
    dist = math.sqrt((px - exq) ** 2 + (py - eyq) ** 2 + (pz - ezq) ** 2)
    time_uniform = dist / c2
    return RefractionSolution(
        theta_1x=t1x, theta_2x=t2x, theta_1y=t1y, theta_2y=t2y,
        time_layer=time_layer, time_background=time_background,
        time_uniform=time_uniform,
        extra_delay=time_layer + time_background - time_uniform)


def fermat_crossing_delay(element, point, medium, span=0.2, coarse=4001):
    """Brute-force least-time two-segment path for in-plane geometry.

    Minimizes layer_time + background_time over the interface crossing
    abscissa with a coarse scan plus ternary refinement; independent check
    of the Snell solution (exact only when element and point share a plane).
    """
    exq, eyq, ezq = element
    px, py, pz = point
    if eyq != py and exq != px:
        raise PathError("Fermat oracle expects a single-plane geometry")
    d = medium.thickness
    d_layer = d - ezq
    d_background = pz - d
    c1, c2 = medium.layer_sos, medium.background_sos

    # Work in the offset plane: crossing coordinate u measured from the
    # element toward the point's lateral offset.
    offset = (px - exq) if exq != px or eyq == py else (py - eyq)

    def total_time(u):
        return (math.hypot(u, d_layer) / c1
                + math.hypot(offset - u, d_background) / c2)

    lo, hi = min(0.0, offset) - span, max(0.0, offset) + span
    us = np.linspace(lo, hi, coarse)
    times = (np.hypot(us, d_layer) / c1
             + np.hypot(offset - us, d_background) / c2)
    k = int(np.argmin(times))
    lo = us[max(0, k - 1)]
    hi = us[min(coarse - 1, k + 1)]
    for _ in range(200):  # ternary search on the convex travel time
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if total_time(m1) <= total_time(m2):
            hi = m2
        else:
            lo = m1
        if hi - lo < 1e-14:
            break
    return total_time(0.5 * (lo + hi))


def transverse_elevational_ratio(array, point, medium, elevation_extent,
                                 samples=41):
    """Ratio of extra-delay spread across the lateral aperture to the spread
    across one element's elevational extent.

    Large values mean elevational delay variation is negligible next to the
    element-direction variation.  Returns +inf when the layer adds no delay.
    """
    if elevation_extent <= 0:
        raise PathError("elevation extent must be positive")
    if medium.is_uniform:
        return math.inf  # no interface, no extra delay anywhere
    px, pz = point
    lateral = np.array([
        refracted_delay((x, 0.0, z), (px, 0.0, pz), medium).extra_delay
        for x, z in zip(array.element_x, array.element_z)])
    ys = np.linspace(-0.5 * elevation_extent, 0.5 * elevation_extent, samples)
    elevational = np.array([
        refracted_delay((0.0, y, 0.0), (px, 0.0, pz), medium).extra_delay
        for y in ys])
    lateral_range = float(lateral.max() - lateral.min())
    elev_range = float(elevational.max() - elevational.min())
    if elev_range == 0.0:
        return math.inf
    return lateral_range / elev_range


@dataclass(frozen=True)
class DelayProfile:
    """Per-element arrival times toward one field point under one model."""

    element_index: np.ndarray
    element_x: np.ndarray
    element_z: np.ndarray
    times: np.ndarray
    point: tuple
    model: str

    def __post_init__(self):
        if not np.all(np.isfinite(self.times)) or np.any(self.times <= 0):
            raise PathError("delay profile times must be positive and finite")


def delay_profile(array, point, medium=None, model="true-layered", sos=None,
                  f_number=None, convention="paper"):
    """Arrival-time profile across the array (or an F#-limited aperture)."""
    if model not in DELAY_MODELS:
        raise ValueError(f"unknown delay model {model!r}")
    if f_number is None:
        idx = np.arange(array.num_elements)
    else:
        idx = active_aperture(point, array, f_number, convention).indices
    ex = array.element_x[idx]
    ez = array.element_z[idx]
    if model == "true-layered":
        times = straight_ray_delays(ex, ez, point, medium)
    elif model == "uniform":
        times = (np.sqrt((point[0] - ex) ** 2 + (point[1] - ez) ** 2)
                 / float(sos))
    else:
        def bent_time(x, z):
            sol = refracted_delay((x, 0.0, z), (point[0], 0.0, point[1]),
                                  medium)
            return sol.time_layer + sol.time_background
        times = np.array([bent_time(x, z) for x, z in zip(ex, ez)])
    return DelayProfile(idx, ex, ez, times, tuple(point), model)


def write_delay_csv(profile, path):
    """Dump a DelayProfile as element_index,x,z,tau_seconds rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["element_index", "x", "z", "tau_seconds"])
        for i, x, z, t in zip(profile.element_index, profile.element_x,
                              profile.element_z, profile.times):
            writer.writerow([int(i), repr(float(x)), repr(float(z)),
                             repr(float(t))])
