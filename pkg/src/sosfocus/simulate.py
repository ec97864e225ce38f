"""Synthetic channel data for scatterer scenes under a layered medium.

Propagation is delay-only (straight rays, no attenuation, directivity, or
spreading by default): each scatterer stamps a Gaussian-windowed cosine onto
every channel at its true layered arrival time, so envelope peak times are
exact oracles for the delay engine.  Transmit timing is either "ideal"
(true time from the probe-face origin, isolating receive aberration) or
"reciprocal" (true time from one designated transmit element).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .delays import straight_ray_delay_matrix
from .errors import ConfigError, PulseError, SceneError
from .geometry import ImagingGrid

TRANSMIT_MODELS = ("ideal", "reciprocal")
SCENE_KINDS = ("point-grid", "speckle", "anechoic-lesion", "composite")

# Amplitude -6 dB half-width of a Gaussian spectrum in units of sigma_f.
_SIX_DB_SIGMAS = math.sqrt(2.0 * math.log(10.0 ** 0.3))


@dataclass(frozen=True)
class Pulse:
    """Gaussian-modulated cosine, unit peak at t = 0, truncated at 4 sigma."""

    center_frequency: float
    fractional_bandwidth: float
    sampling_rate: float
    sigma: float  # envelope standard deviation, seconds

    @property
    def half_width(self):
        return 4.0 * self.sigma

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        value = (np.cos(2.0 * math.pi * self.center_frequency * t)
                 * np.exp(-t * t / (2.0 * self.sigma ** 2)))
        return np.where(np.abs(t) <= self.half_width, value, 0.0)

    def waveform(self):
        """Sampled (times, amplitudes) covering the truncated support."""
        k = int(math.floor(self.half_width * self.sampling_rate))
        times = np.arange(-k, k + 1) / self.sampling_rate
        return times, self(times)


def make_pulse(center_frequency, fractional_bandwidth, sampling_rate):
    """Pulse whose -6 dB spectral width equals the fractional bandwidth."""
    if not 0.0 < fractional_bandwidth < 2.0:
        raise PulseError("fractional bandwidth must be in (0, 2)")
    if sampling_rate < 4.0 * center_frequency:
        raise PulseError("sampling rate must be at least 4x the carrier")
    if center_frequency <= 0:
        raise PulseError("center frequency must be positive")
    sigma_f = fractional_bandwidth * center_frequency / (2.0 * _SIX_DB_SIGMAS)
    sigma_t = 1.0 / (2.0 * math.pi * sigma_f)
    return Pulse(float(center_frequency), float(fractional_bandwidth),
                 float(sampling_rate), sigma_t)


@dataclass(frozen=True)
class Scene:
    """Scatterers as (n, 2) positions plus reflectivities, with a kind tag."""

    kind: str
    positions: np.ndarray
    reflectivity: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        refl = np.atleast_1d(np.asarray(self.reflectivity, dtype=float))
        if pos.size and pos.shape[1] != 2:
            raise SceneError("positions must be (n, 2)")
        if pos.shape[0] != refl.shape[0]:
            raise SceneError("positions and reflectivities disagree in length")
        if refl.size and not np.all(np.isfinite(refl)):
            raise SceneError("reflectivities must be finite")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "reflectivity", refl)

    @property
    def num_scatterers(self):
        return self.positions.shape[0]


def _region_bounds(region):
    if isinstance(region, ImagingGrid):
        return region.x_min, region.x_max, region.z_min, region.z_max
    x_min, x_max, z_min, z_max = region
    return x_min, x_max, z_min, z_max


def point_grid_scene(points, reflectivity=1.0):
    points = np.atleast_2d(np.asarray(points, dtype=float))
    refl = np.full(points.shape[0], float(reflectivity))
    return Scene("point-grid", points, refl)


def speckle_scene(region, wavelength, f_number, density_per_cell=10.0,
                  seed=None):
    """Diffuse scatterers, >= density_per_cell per (wavelength*F#)^2 cell,
    standard-normal reflectivities."""
    if density_per_cell <= 0:
        raise SceneError("speckle density must be positive")
    x_min, x_max, z_min, z_max = _region_bounds(region)
    area = (x_max - x_min) * (z_max - z_min)
    cell = (wavelength * f_number) ** 2
    count = int(math.ceil(density_per_cell * area / cell))
    rng = np.random.default_rng(seed)
    pos = np.column_stack([rng.uniform(x_min, x_max, count),
                           rng.uniform(z_min, z_max, count)])
    return Scene("speckle", pos, rng.standard_normal(count))


def anechoic_lesion_scene(region, wavelength, f_number, center, radius,
                          density_per_cell=10.0, seed=None):
    """Speckle background with a scatterer-free disc."""
    if radius <= 0:
        raise SceneError("lesion radius must be positive")
    base = speckle_scene(region, wavelength, f_number, density_per_cell, seed)
    cx, cz = center
    keep = ((base.positions[:, 0] - cx) ** 2
            + (base.positions[:, 1] - cz) ** 2) > radius ** 2
    return Scene("anechoic-lesion", base.positions[keep],
                 base.reflectivity[keep])


def composite_scene(scenes):
    if not scenes:
        raise SceneError("composite scene needs at least one part")
    pos = np.vstack([s.positions for s in scenes])
    refl = np.concatenate([s.reflectivity for s in scenes])
    return Scene("composite", pos, refl)


def make_scene(kind, **params):
    """Dispatch on the scene kind tag."""
    builders = {
        "point-grid": point_grid_scene,
        "speckle": speckle_scene,
        "anechoic-lesion": anechoic_lesion_scene,
        "composite": composite_scene,
    }
    if kind not in builders:
        raise SceneError(f"unknown scene kind {kind!r}")
    return builders[kind](**params)


@dataclass(frozen=True)
class ChannelDataSet:
    """Per-element received time series plus acquisition metadata."""

    samples: np.ndarray          # (num_elements, num_samples) float64
    sampling_rate: float
    start_time: float
    array: object                # ArrayGeometry
    medium: object = None        # ground-truth LayeredMedium, if known
    transmit_model: str = "ideal"
    tx_element: int = field(default=-1)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 2:
            raise SceneError("channel samples must be (elements, samples)")
        if not np.all(np.isfinite(samples)):
            raise SceneError("channel samples must be finite")
        if self.start_time < 0:
            raise SceneError("start time must be >= 0")
        object.__setattr__(self, "samples", samples)

    @property
    def num_elements(self):
        return self.samples.shape[0]

    @property
    def num_samples(self):
        return self.samples.shape[1]

    @property
    def duration(self):
        return self.num_samples / self.sampling_rate


def transmit_times(scene_positions, array, medium, transmit_model,
                   tx_element=-1):
    """True layered one-way times from the transmit reference to each point."""
    if transmit_model == "ideal":
        origin = (0.0, 0.0)
    elif transmit_model == "reciprocal":
        origin = array.element_position(tx_element)
    else:
        raise ConfigError(f"unknown transmit model {transmit_model!r}")
    return straight_ray_delay_matrix(
        np.array([origin[0]]), np.array([origin[1]]),
        np.asarray(scene_positions, dtype=float), medium)[:, 0]


def synthesize_channel_data(scene, medium, array, pulse,
                            transmit_model="ideal", noise_rms=0.0,
                            seed=None, tx_element=-1):
    """Sum of per-scatterer pulses at true layered arrival times plus noise.

    Deterministic for a fixed seed; scatterers accumulate in index order.
    """
    if transmit_model not in TRANSMIT_MODELS:
        raise ConfigError(f"unknown transmit model {transmit_model!r}")
    if scene.num_scatterers == 0 and noise_rms <= 0:
        raise SceneError("empty scene with no noise produces nothing")
    fs = pulse.sampling_rate

    if scene.num_scatterers:
        tx = transmit_times(scene.positions, array, medium, transmit_model,
                            tx_element)
        rx = straight_ray_delay_matrix(array.element_x, array.element_z,
                                       scene.positions, medium)
        arrivals = tx[:, None] + rx
        n_samples = int(math.ceil((arrivals.max() + pulse.half_width) * fs)) + 2
        samples = np.zeros((array.num_elements, n_samples))
        kernels.deposit_pulses(samples, fs, 0.0,
                               np.ascontiguousarray(arrivals),
                               np.ascontiguousarray(scene.reflectivity,
                                                    dtype=float),
                               pulse.center_frequency, pulse.sigma)
        peak_amp = float(np.abs(scene.reflectivity).max())
    else:
        n_samples = int(math.ceil(64 * pulse.half_width * fs))
        samples = np.zeros((array.num_elements, n_samples))
        peak_amp = 1.0

    if noise_rms > 0:
        rng = np.random.default_rng(seed)
        samples = samples + rng.normal(0.0, noise_rms * peak_amp,
                                       samples.shape)
    return ChannelDataSet(samples, fs, 0.0, array, medium, transmit_model,
                          tx_element)


def save_channels(data, basepath):
    """Header text file + little-endian float32 binary (elements x samples)."""
    basepath = str(basepath)
    med = data.medium
    lines = [
        f"elements = {data.num_elements}",
        f"samples = {data.num_samples}",
        f"fs_hz = {data.sampling_rate!r}",
        f"start_time_s = {data.start_time!r}",
        ("geometry = "
         f"elements={data.array.num_elements} pitch_m={data.array.pitch!r} "
         f"radius_m={data.array.radius!r} f0_hz={data.array.center_frequency!r}"),
        ("medium = none" if med is None else
         f"medium = layer_d_m={med.thickness!r} layer_c={med.layer_sos!r} "
         f"background_c={med.background_sos!r}"),
        f"transmit = model={data.transmit_model} tx_element={data.tx_element}",
    ]
    with open(basepath + ".hdr", "w") as fh:
        fh.write("\n".join(lines) + "\n")
    data.samples.astype("<f4").tofile(basepath + ".f32")


def _parse_header(path):
    fields = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or "=" not in line:
                continue
            key, value = line.split("=", 1)
            fields[key.strip()] = value.strip()
    return fields


def _parse_kv(blob):
    out = {}
    for chunk in blob.split():
        key, value = chunk.split("=", 1)
        out[key] = value
    return out


def load_channels(basepath):
    from .geometry import LayeredMedium, curvilinear_array

    basepath = str(basepath)
    fields = _parse_header(basepath + ".hdr")
    n_elem = int(fields["elements"])
    n_samp = int(fields["samples"])
    geo = _parse_kv(fields["geometry"])
    array = curvilinear_array(int(geo["elements"]), float(geo["pitch_m"]),
                              float(geo["radius_m"]), float(geo["f0_hz"]))
    medium = None
    if fields.get("medium", "none") != "none":
        med = _parse_kv(fields["medium"])
        medium = LayeredMedium(float(med["layer_d_m"]), float(med["layer_c"]),
                               float(med["background_c"]))
    tx = _parse_kv(fields.get("transmit", "model=ideal tx_element=-1"))
    samples = np.fromfile(basepath + ".f32", dtype="<f4")
    samples = samples.reshape(n_elem, n_samp).astype(float)
    return ChannelDataSet(samples, float(fields["fs_hz"]),
                          float(fields["start_time_s"]), array, medium,
                          tx["model"], int(tx["tx_element"]))
