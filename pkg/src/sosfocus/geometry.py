"""Transducer arrays, layered media, imaging grids, and aperture selection.

Coordinate convention: the origin sits at the center of the probe face with
the x-axis tangent to it; z points into the medium, so a convex array has its
off-center elements at z <= 0 and every image point has z > 0.
"""

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ApertureError, ConfigError, GeometryError

# Sentinel radius for a linear (flat) array.
FLAT = math.inf

# Aperture selection: an element n is active for point (x, z) when
# factor * (z - z_n) > F# * |x - x_n|.  The verbatim inequality from the
# text uses factor 2; the conventional F# = depth/width reading uses 1/2.
_APERTURE_FACTORS = {"paper": 2.0, "conventional": 0.5}


@dataclass(frozen=True)
class ArrayGeometry:
    """Curvilinear (or flat) transducer array, symmetric about the z-axis."""

    num_elements: int
    pitch: float                # arc length between element centers, m
    radius: float               # radius of curvature, m; FLAT for linear
    center_frequency: float     # Hz

    def __post_init__(self):
        if self.num_elements < 1:
            raise GeometryError("array needs at least one element")
        if not (self.pitch > 0 and self.center_frequency > 0):
            raise GeometryError("pitch and center frequency must be positive")
        if not self.radius > 0:  # rejects nan and -inf; +inf (FLAT) passes
            raise GeometryError("radius must be positive or FLAT")
        if self.is_curved and self.num_elements * self.pitch >= math.pi * self.radius:
            raise GeometryError("element arc exceeds half the circle")

    @property
    def is_curved(self):
        return math.isfinite(self.radius)

    @cached_property
    def element_x(self):
        offsets = np.arange(self.num_elements) - (self.num_elements - 1) / 2.0
        if self.is_curved:
            x = self.radius * np.sin(offsets * self.pitch / self.radius)
        else:
            x = offsets * self.pitch
        x.flags.writeable = False
        return x

    @cached_property
    def element_z(self):
        if self.is_curved:
            offsets = np.arange(self.num_elements) - (self.num_elements - 1) / 2.0
            z = -self.radius * (1.0 - np.cos(offsets * self.pitch / self.radius))
        else:
            z = np.zeros(self.num_elements)
        z.flags.writeable = False
        return z

    @property
    def wavelength(self):
        """Wavelength at 1540 m/s and the array center frequency."""
        return 1540.0 / self.center_frequency

    def element_position(self, index):
        return (float(self.element_x[index]), float(self.element_z[index]))


def curvilinear_array(num_elements, pitch, radius, center_frequency):
    """Build a convex array on a circular arc, or a flat one for radius=FLAT."""
    return ArrayGeometry(int(num_elements), float(pitch), float(radius),
                         float(center_frequency))


@dataclass(frozen=True)
class LayeredMedium:
    """Uniform slab (z <= thickness) of one sound speed over a background.

    The slab extends upward past the tangent plane, so a convex element at
    z' < 0 sees an effective layer thickness of d - z'.
    """

    thickness: float        # m; 0 collapses to (nearly) uniform
    layer_sos: float        # m/s inside the slab
    background_sos: float   # m/s below it

    def __post_init__(self):
        if self.thickness < 0:
            raise GeometryError("layer thickness must be >= 0")
        if not (self.layer_sos > 0 and self.background_sos > 0):
            raise GeometryError("sound speeds must be positive")

    @property
    def is_uniform(self):
        return self.thickness == 0.0 or self.layer_sos == self.background_sos

    @classmethod
    def uniform(cls, sos):
        return cls(0.0, float(sos), float(sos))

    def sos_bounds(self):
        lo = min(self.layer_sos, self.background_sos)
        hi = max(self.layer_sos, self.background_sos)
        return lo, hi


@dataclass(frozen=True)
class ImagingGrid:
    """Cartesian pixel lattice; rows run along z (axial), columns along x."""

    x_min: float
    x_max: float
    z_min: float
    z_max: float
    dx: float
    dz: float

    def __post_init__(self):
        if not (self.dx > 0 and self.dz > 0):
            raise GeometryError("pixel spacings must be positive")
        if self.x_max < self.x_min or self.z_max < self.z_min:
            raise GeometryError("grid extents are empty")
        if self.z_min <= 0:
            raise GeometryError("grid must lie strictly below the probe face")

    @cached_property
    def xs(self):
        n = int(math.floor((self.x_max - self.x_min) / self.dx + 1e-9)) + 1
        x = self.x_min + self.dx * np.arange(n)
        x.flags.writeable = False
        return x

    @cached_property
    def zs(self):
        n = int(math.floor((self.z_max - self.z_min) / self.dz + 1e-9)) + 1
        z = self.z_min + self.dz * np.arange(n)
        z.flags.writeable = False
        return z

    @property
    def shape(self):
        return (len(self.zs), len(self.xs))

    def positions(self, axial_scale=1.0):
        """Pixel coordinates as (X, Z) matrices of self.shape.

        axial_scale stretches the axial coordinate (range-mapping rescale in
        a sound-speed sweep); the lateral coordinate is untouched.
        """
        x2d = np.broadcast_to(self.xs, self.shape).copy()
        z2d = np.broadcast_to(self.zs[:, None] * axial_scale, self.shape).copy()
        return x2d, z2d

    def index_of(self, x, z):
        """Nearest pixel (iz, ix) for a physical position; no bounds clamp."""
        return (int(round((z - self.z_min) / self.dz)),
                int(round((x - self.x_min) / self.dx)))


@dataclass(frozen=True)
class PolarGrid:
    """Scan-line lattice for a curved array: rows along range, columns = lines.

    Lines fan out from the curvature center through equally spaced points on
    the probe face; range is measured from the face.
    """

    array: ArrayGeometry
    num_lines: int
    range_min: float
    range_max: float
    dr: float

    def __post_init__(self):
        if not self.array.is_curved:
            raise GeometryError("polar grids require a curved array")
        if self.num_lines < 2 or self.dr <= 0 or self.range_max < self.range_min:
            raise GeometryError("bad polar grid parameters")
        if self.range_min <= 0:
            raise GeometryError("range must start below the probe face")

    @cached_property
    def line_angles(self):
        half_span = (self.array.num_elements - 1) / 2.0 * self.array.pitch / self.array.radius
        a = np.linspace(-half_span, half_span, self.num_lines)
        a.flags.writeable = False
        return a

    @cached_property
    def ranges(self):
        n = int(math.floor((self.range_max - self.range_min) / self.dr + 1e-9)) + 1
        r = self.range_min + self.dr * np.arange(n)
        r.flags.writeable = False
        return r

    @property
    def shape(self):
        return (len(self.ranges), self.num_lines)

    def positions(self, axial_scale=1.0):
        rad = self.array.radius
        face_x = rad * np.sin(self.line_angles)
        face_z = -rad * (1.0 - np.cos(self.line_angles))
        dir_x = np.sin(self.line_angles)
        dir_z = np.cos(self.line_angles)
        r = self.ranges[:, None] * axial_scale
        return face_x + r * dir_x, face_z + r * dir_z


@dataclass(frozen=True)
class Aperture:
    """Contiguous run of active element indices [start, stop) for one point."""

    f_number: float
    start: int
    stop: int

    def __post_init__(self):
        if self.stop <= self.start:
            raise ApertureError("aperture is empty")

    @property
    def size(self):
        return self.stop - self.start

    @property
    def indices(self):
        return np.arange(self.start, self.stop)


def aperture_mask(x, z, array, f_number, convention="paper"):
    """Boolean (..., num_elements) mask of the raw aperture inequality.

    Written multiplicatively (factor*(z - z_n) > F#*|x - x_n|) so elements
    directly under the point (x == x_n) are always included, as required.
    """
    factor = _aperture_factor(convention)
    x = np.asarray(x)[..., None]
    z = np.asarray(z)[..., None]
    return factor * (z - array.element_z) > f_number * np.abs(x - array.element_x)


def _aperture_factor(convention):
    try:
        return _APERTURE_FACTORS[convention]
    except KeyError:
        raise ConfigError(f"unknown aperture convention {convention!r}") from None


def nearest_element(x, z, array):
    """Index of the element closest to a field point."""
    d2 = (array.element_x - x) ** 2 + (array.element_z - z) ** 2
    return int(np.argmin(d2))


def active_aperture(point, array, f_number, convention="paper"):
    """Receive aperture for a field point: the contiguous run of elements
    satisfying the F# inequality that contains the nearest element."""
    x, z = point
    if z <= float(array.element_z.max()):
        raise ApertureError("field point must lie below the array")
    mask = aperture_mask(x, z, array, f_number, convention)
    near = nearest_element(x, z, array)
    if not mask[near]:
        raise ApertureError(
            f"no active elements at ({x:.4g}, {z:.4g}) for F#={f_number}")
    start = near
    while start > 0 and mask[start - 1]:
        start -= 1
    stop = near + 1
    while stop < array.num_elements and mask[stop]:
        stop += 1
    return Aperture(f_number, start, stop)


def aperture_bounds_grid(x2d, z2d, array, f_number, convention="paper"):
    """Vectorized aperture [start, stop) maps over a pixel-position grid.

    Returns int32 arrays shaped like x2d.  Pixels whose nearest element fails
    the inequality get an empty range (start == stop); the beamformer treats
    those as zero contribution.
    """
    factor = _aperture_factor(convention)
    ex = array.element_x
    ez = array.element_z
    n = array.num_elements
    shape = x2d.shape
    start = np.empty(shape, dtype=np.int32)
    stop = np.empty(shape, dtype=np.int32)
    idx = np.arange(n)
    for i in range(shape[0]):  # row-wise keeps the (nx, n) temporaries small
        x = x2d[i][:, None]
        z = z2d[i][:, None]
        mask = factor * (z - ez) > f_number * np.abs(x - ex)
        near = np.argmin((x - ex) ** 2 + (z - ez) ** 2, axis=1)
        rows = np.arange(shape[1])
        fails = ~mask
        # Last failing index at or before `near`, first failing index after.
        left = np.maximum.accumulate(np.where(fails, idx, -1), axis=1)
        right = np.minimum.accumulate(
            np.where(fails, idx, n)[:, ::-1], axis=1)[:, ::-1]
        lo = left[rows, near] + 1
        hi = right[rows, near]
        ok = mask[rows, near]
        start[i] = np.where(ok, lo, 0)
        stop[i] = np.where(ok, hi, 0)
    return start, stop


def array_from_config(cfg):
    """ArrayGeometry from flat config keys: elements, pitch_m, radius_m, f0_hz."""
    try:
        radius_raw = str(cfg["radius_m"]).strip().lower()
        radius = FLAT if radius_raw in ("flat", "inf") else float(radius_raw)
        return curvilinear_array(int(cfg["elements"]), float(cfg["pitch_m"]),
                                 radius, float(cfg["f0_hz"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad array config: {exc}") from exc


def medium_from_config(cfg):
    """LayeredMedium from keys layer_d_m, layer_c, background_c."""
    try:
        return LayeredMedium(float(cfg["layer_d_m"]), float(cfg["layer_c"]),
                             float(cfg["background_c"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad medium config: {exc}") from exc


def grid_from_config(cfg):
    """ImagingGrid from keys x_min_m/x_max_m/z_min_m/z_max_m/dx_m/dz_m."""
    try:
        return ImagingGrid(float(cfg["x_min_m"]), float(cfg["x_max_m"]),
                           float(cfg["z_min_m"]), float(cfg["z_max_m"]),
                           float(cfg["dx_m"]), float(cfg["dz_m"]))
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad grid config: {exc}") from exc
