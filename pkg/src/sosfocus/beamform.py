"""Delay-and-sum beamforming, the receive-sound-speed sweep, and stack tools.

Receive delays use the candidate beamforming speed; transmit delays always
use the acquisition reference (1540 m/s by default), since a scanner cannot
retroactively change them.  Within a sweep the axial pixel coordinate is
scaled by c_bf/c_ref for the receive path so features stay registered
across the stack, and the aperture is computed once at the nominal (c_ref)
geometry, mirroring a hard-coded receive aperture.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.signal import hilbert

from . import kernels
from .errors import ConfigError, SoundSpeedError
from .geometry import aperture_bounds_grid

REFERENCE_SOS = 1540.0  # m/s, transmit-delay speed used during acquisition

LINEAR = "linear"
LOG_DB = "log-db"


@dataclass(frozen=True)
class BeamformedImage:
    """Envelope (or log-compressed) image on a pixel grid."""

    data: np.ndarray       # (nz, nx)
    grid: object
    sos: float             # receive beamforming speed, m/s
    f_number: float
    state: str = LINEAR

    def __post_init__(self):
        if self.sos <= 0:
            raise SoundSpeedError("beamforming speed must be positive")
        if self.state == LINEAR and np.any(self.data < 0):
            raise ValueError("linear-state intensities must be nonnegative")


@dataclass(frozen=True)
class ImageStack:
    """Images over ascending beamforming speeds on a common grid."""

    images: tuple
    c_ref: float

    def __post_init__(self):
        c = self.c_values
        if len(c) == 0:
            raise ValueError("empty image stack")
        if np.any(np.diff(c) <= 0):
            raise ValueError("stack speeds must be strictly increasing")

    @property
    def c_values(self):
        return np.array([im.sos for im in self.images])

    @property
    def grid(self):
        return self.images[0].grid

    @property
    def data(self):
        """(n_speeds, nz, nx) view of the stacked pixel data."""
        return np.stack([im.data for im in self.images])

    def at(self, sos):
        """Image whose speed is nearest to `sos`."""
        k = int(np.argmin(np.abs(self.c_values - sos)))
        return self.images[k]


def _transmit_map(x2d, z2d, transmit_model, tx_element, array, c_ref):
    if transmit_model == "ideal":
        return np.sqrt(x2d ** 2 + z2d ** 2) / c_ref
    if transmit_model == "reciprocal":
        tx_x, tx_z = array.element_position(tx_element)
        return np.sqrt((x2d - tx_x) ** 2 + (z2d - tx_z) ** 2) / c_ref
    raise ConfigError(f"unknown transmit model {transmit_model!r}")


def _geometry_tables(channels, grid, f_number, transmit_model, tx_element,
                     c_ref, convention):
    """Per-pixel transmit delays and aperture bounds at nominal geometry."""
    array = channels.array
    x2d, z2d = grid.positions()
    tau_tx = _transmit_map(x2d, z2d, transmit_model, tx_element, array, c_ref)
    ap_start, ap_stop = aperture_bounds_grid(x2d, z2d, array, f_number,
                                             convention)
    return np.ascontiguousarray(tau_tx), ap_start, ap_stop


def _rf_sum(channels, sos, grid, tau_tx, ap_start, ap_stop, axial_scale):
    x2d, z2d = grid.positions(axial_scale)
    out = np.zeros(grid.shape)
    kernels.das_sum(np.ascontiguousarray(channels.samples),
                    channels.sampling_rate, channels.start_time,
                    np.ascontiguousarray(channels.array.element_x),
                    np.ascontiguousarray(channels.array.element_z),
                    np.ascontiguousarray(x2d), np.ascontiguousarray(z2d),
                    tau_tx, ap_start, ap_stop, 1.0 / sos, out)
    return out


def envelope(rf):
    """Magnitude of the analytic signal along each axial line."""
    return np.abs(hilbert(rf, axis=0))


def das_beamform(channels, sos, grid, f_number, transmit_model=None,
                 tx_element=None, c_ref=REFERENCE_SOS, axial_scale=1.0,
                 convention="paper"):
    """Envelope image from delay-and-sum at one receive sound speed."""
    if sos <= 0:
        raise SoundSpeedError("beamforming speed must be positive")
    if transmit_model is None:
        transmit_model = channels.transmit_model
    if tx_element is None:
        tx_element = channels.tx_element
    tau_tx, ap_start, ap_stop = _geometry_tables(
        channels, grid, f_number, transmit_model, tx_element, c_ref,
        convention)
    rf = _rf_sum(channels, sos, grid, tau_tx, ap_start, ap_stop, axial_scale)
    return BeamformedImage(envelope(rf), grid, float(sos), f_number)


def sweep_beamform(channels, c_list, grid, f_number, transmit_model=None,
                   tx_element=None, c_ref=REFERENCE_SOS, convention="paper",
                   threads=None):
    """Beamform at each candidate speed with the range mapping rescaled by
    c_bf/c_ref so features stay put across the stack."""
    c_list = np.asarray(c_list, dtype=float)
    if c_list.ndim != 1 or len(c_list) == 0:
        raise ValueError("need a 1-D list of candidate speeds")
    steps = np.diff(c_list)
    if len(steps) and (np.any(steps <= 0)
                       or np.any(np.abs(steps - steps[0]) > 1e-9 * steps[0])):
        raise ValueError("candidate speeds must ascend with uniform spacing")
    if transmit_model is None:
        transmit_model = channels.transmit_model
    if tx_element is None:
        tx_element = channels.tx_element
    tau_tx, ap_start, ap_stop = _geometry_tables(
        channels, grid, f_number, transmit_model, tx_element, c_ref,
        convention)

    def build(sos):
        rf = _rf_sum(channels, sos, grid, tau_tx, ap_start, ap_stop,
                     axial_scale=sos / c_ref)
        return BeamformedImage(envelope(rf), grid, float(sos), f_number)

    if threads is not None and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            images = tuple(pool.map(build, c_list))
    else:
        images = tuple(build(c) for c in c_list)
    return ImageStack(images, c_ref)


def interpolate_stack(stack, target_step, monotone=False):
    """Per-pixel spline over beamforming speed, refined to target_step.

    Natural cubic by default; monotone=True switches to a shape-preserving
    (PCHIP) spline that cannot overshoot the sampled pixel range.
    """
    c = stack.c_values
    if len(c) < 4:
        raise ValueError("stack interpolation needs at least 4 speed samples")
    span = c[-1] - c[0]
    ratio = span / target_step
    if abs(ratio - round(ratio)) > 1e-9:
        raise ValueError("target step must divide the stack span")
    new_c = c[0] + target_step * np.arange(int(round(ratio)) + 1)
    data = stack.data
    maker = PchipInterpolator if monotone else _natural_cubic
    values = maker(c, data)(new_c)
    template = stack.images[0]
    images = tuple(
        replace(template, data=np.maximum(values[i], 0.0), sos=float(s))
        for i, s in enumerate(new_c))
    return ImageStack(images, stack.c_ref)


def _natural_cubic(x, y):
    return CubicSpline(x, y, axis=0, bc_type="natural")


def log_compress(image, dynamic_range_db=54.0):
    """20*log10(I / max I), clamped to [-dynamic_range_db, 0]."""
    if image.state != LINEAR:
        raise ValueError("log compression expects a linear-state image")
    peak = float(image.data.max())
    if peak <= 0:
        raise ValueError("all-zero image has no normalization")
    with np.errstate(divide="ignore"):
        db = 20.0 * np.log10(image.data / peak)
    db = np.clip(db, -dynamic_range_db, 0.0)
    return replace(image, data=db, state=LOG_DB)


def delayed_channel_stack(channels, sos, grid, f_number=None,
                          transmit_model=None, tx_element=None,
                          c_ref=REFERENCE_SOS, convention="paper"):
    """(nz, nx, n_elements) per-pixel delayed channel samples (pre-sum).

    Feeds coherence weighting; f_number=None keeps every element active.
    """
    if transmit_model is None:
        transmit_model = channels.transmit_model
    if tx_element is None:
        tx_element = channels.tx_element
    array = channels.array
    x2d, z2d = grid.positions()
    tau_tx = np.ascontiguousarray(
        _transmit_map(x2d, z2d, transmit_model, tx_element, array, c_ref))
    if f_number is None:
        ap_start = np.zeros(grid.shape, dtype=np.int32)
        ap_stop = np.full(grid.shape, array.num_elements, dtype=np.int32)
    else:
        ap_start, ap_stop = aperture_bounds_grid(x2d, z2d, array, f_number,
                                                 convention)
    out = np.zeros(grid.shape + (array.num_elements,))
    kernels.delay_gather(np.ascontiguousarray(channels.samples),
                         channels.sampling_rate, channels.start_time,
                         np.ascontiguousarray(array.element_x),
                         np.ascontiguousarray(array.element_z),
                         np.ascontiguousarray(x2d), np.ascontiguousarray(z2d),
                         tau_tx, ap_start, ap_stop, 1.0 / sos, out)
    return out


def normalized_pixel_difference(candidate, reference):
    """mean |candidate - reference| / mean |reference| over all pixels."""
    ref = np.asarray(reference, dtype=float)
    return float(np.abs(np.asarray(candidate) - ref).mean()
                 / np.abs(ref).mean())


def save_stack(stack, basepath):
    """Header + flat little-endian float32, image-major then row-major."""
    basepath = str(basepath)
    grid = stack.grid
    first = stack.images[0]
    lines = [
        f"images = {len(stack.images)}",
        f"rows = {grid.shape[0]}",
        f"cols = {grid.shape[1]}",
        f"c_list = {' '.join(repr(float(c)) for c in stack.c_values)}",
        f"c_ref = {stack.c_ref!r}",
        f"state = {first.state}",
        f"f_number = {first.f_number!r}",
        (f"grid = x_min_m={grid.x_min!r} x_max_m={grid.x_max!r} "
         f"z_min_m={grid.z_min!r} z_max_m={grid.z_max!r} "
         f"dx_m={grid.dx!r} dz_m={grid.dz!r}"),
    ]
    with open(basepath + ".hdr", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    stack.data.astype("<f4").tofile(basepath + ".f32")


def load_stack(basepath):
    from .geometry import ImagingGrid
    from .simulate import _parse_header, _parse_kv

    basepath = str(basepath)
    fields = _parse_header(basepath + ".hdr")
    n = int(fields["images"])
    rows = int(fields["rows"])
    cols = int(fields["cols"])
    g = _parse_kv(fields["grid"])
    grid = ImagingGrid(float(g["x_min_m"]), float(g["x_max_m"]),
                       float(g["z_min_m"]), float(g["z_max_m"]),
                       float(g["dx_m"]), float(g["dz_m"]))
    c_list = [float(v) for v in fields["c_list"].split()]
    data = np.fromfile(basepath + ".f32", dtype="<f4").astype(float)
    data = data.reshape(n, rows, cols)
    f_number = float(fields["f_number"])
    state = fields["state"]
    images = tuple(BeamformedImage(data[i], grid, c_list[i], f_number, state)
                   for i in range(n))
    return ImageStack(images, float(fields["c_ref"]))
