import numpy as np
import pytest

from sosfocus.delays import straight_ray_delays, uniform_delay
from sosfocus.errors import ConfigError, PulseError, SceneError
from sosfocus.geometry import FLAT, ImagingGrid, curvilinear_array
from sosfocus.simulate import (ChannelDataSet, anechoic_lesion_scene,
                               composite_scene, load_channels, make_pulse,
                               make_scene, point_grid_scene, save_channels,
                               speckle_scene, synthesize_channel_data)


@pytest.fixture(scope="module")
def pulse():
    return make_pulse(3e6, 0.6, 20e6)


# ------------------------------------------------------------------ pulse

def test_pulse_peaks_at_origin(pulse):
    assert pulse(0.0) == 1.0
    _, amps = pulse.waveform()
    assert np.abs(amps).max() == 1.0


def test_pulse_is_time_symmetric(pulse):
    t = np.linspace(-pulse.half_width, pulse.half_width, 501)
    np.testing.assert_allclose(pulse(t), pulse(-t), atol=1e-15)


def test_pulse_spectrum_peaks_at_carrier(pulse):
    _, amps = pulse.waveform()
    n = 1 << 14
    spectrum = np.abs(np.fft.rfft(amps, n))
    freqs = np.fft.rfftfreq(n, 1.0 / pulse.sampling_rate)
    peak = freqs[np.argmax(spectrum)]
    assert abs(peak - 3e6) <= freqs[1]


def test_pulse_bandwidth_is_six_db(pulse):
    _, amps = pulse.waveform()
    n = 1 << 15
    spectrum = np.abs(np.fft.rfft(amps, n))
    freqs = np.fft.rfftfreq(n, 1.0 / pulse.sampling_rate)
    peak = spectrum.max()
    above = freqs[spectrum >= peak * 10 ** (-6 / 20)]
    width = above.max() - above.min()
    assert width == pytest.approx(0.6 * 3e6, rel=0.02)


@pytest.mark.parametrize("args", [(3e6, 0.0, 20e6), (3e6, 2.5, 20e6),
                                  (3e6, 0.6, 10e6), (0.0, 0.6, 20e6)])
def test_pulse_validation(args):
    with pytest.raises(PulseError):
        make_pulse(*args)


# ------------------------------------------------------------------ scenes

def test_point_grid_scene():
    scene = point_grid_scene([(0.0, 0.02), (0.0, 0.04), (0.0, 0.06)])
    assert scene.num_scatterers == 3
    np.testing.assert_allclose(scene.reflectivity, 1.0)
    assert scene.kind == "point-grid"


def test_lesion_scene_has_empty_core(rng):
    region = (-0.015, 0.015, 0.035, 0.065)
    scene = anechoic_lesion_scene(region, 513e-6, 1.41, (0.0, 0.05), 5e-3,
                                  seed=7)
    r = np.hypot(scene.positions[:, 0], scene.positions[:, 1] - 0.05)
    assert scene.num_scatterers > 0
    assert np.all(r > 5e-3)


def test_speckle_scene_density_and_determinism():
    region = (-0.01, 0.01, 0.03, 0.05)
    a = speckle_scene(region, 513e-6, 1.41, 10.0, seed=3)
    b = speckle_scene(region, 513e-6, 1.41, 10.0, seed=3)
    np.testing.assert_array_equal(a.positions, b.positions)
    np.testing.assert_array_equal(a.reflectivity, b.reflectivity)
    area = 0.02 * 0.02
    cell = (513e-6 * 1.41) ** 2
    assert a.num_scatterers >= 10.0 * area / cell


def test_make_scene_dispatch_and_errors():
    scene = make_scene("point-grid", points=[(0.0, 0.05)])
    assert scene.num_scatterers == 1
    with pytest.raises(SceneError):
        make_scene("warp-field")
    with pytest.raises(SceneError):
        speckle_scene((-0.01, 0.01, 0.03, 0.05), 513e-6, 1.41, -1.0)
    with pytest.raises(SceneError):
        anechoic_lesion_scene((-0.01, 0.01, 0.03, 0.05), 513e-6, 1.41,
                              (0.0, 0.04), -5e-3)
    with pytest.raises(SceneError):
        composite_scene([])


# ------------------------------------------------------------- synthesis

def test_single_scatterer_peak_times(desk_array, uniform_1540, pulse):
    scene = point_grid_scene([(0.0, 0.05)])
    channels = synthesize_channel_data(scene, uniform_1540, desk_array, pulse)
    fs = channels.sampling_rate
    tx = uniform_delay((0.0, 0.0), (0.0, 0.05), 1540.0)
    for n in (0, 21, 42, 63):
        expected = tx + uniform_delay(desk_array.element_position(n),
                                      (0.0, 0.05), 1540.0)
        peak = np.argmax(np.abs(channels.samples[n])) / fs
        assert abs(peak - expected) <= 1.0 / fs


def test_superposition_is_exact(desk_array, uniform_1540, pulse):
    one = point_grid_scene([(-3e-3, 0.04)])
    two = point_grid_scene([(4e-3, 0.055)])
    both = composite_scene([one, two])
    a = synthesize_channel_data(one, uniform_1540, desk_array, pulse)
    b = synthesize_channel_data(two, uniform_1540, desk_array, pulse)
    ab = synthesize_channel_data(both, uniform_1540, desk_array, pulse)
    combined = np.zeros_like(ab.samples)
    combined[:, :a.num_samples] += a.samples
    combined[:, :b.num_samples] += b.samples
    np.testing.assert_allclose(ab.samples, combined, atol=1e-12)


def test_layer_shifts_peaks_per_delay_engine(desk_array, fat_layer, pulse):
    scene = point_grid_scene([(0.0, 0.06)])
    channels = synthesize_channel_data(scene, fat_layer, desk_array, pulse)
    fs = channels.sampling_rate
    true_rx = straight_ray_delays(desk_array.element_x, desk_array.element_z,
                                  (0.0, 0.06), fat_layer)
    geometric_rx = np.sqrt(desk_array.element_x ** 2
                           + (0.06 - desk_array.element_z) ** 2) / 1540.0
    tx_true = straight_ray_delays(np.zeros(1), np.zeros(1), (0.0, 0.06),
                                  fat_layer)[0]
    tx_geo = 0.06 / 1540.0
    for n in (0, 31, 63):
        peak = np.argmax(np.abs(channels.samples[n])) / fs
        uniform_prediction = tx_geo + geometric_rx[n]
        excess = (tx_true - tx_geo) + (true_rx[n] - geometric_rx[n])
        assert peak > uniform_prediction
        assert abs(peak - uniform_prediction - excess) <= 1.0 / fs


def test_reciprocal_transmit_uses_element_position(desk_array, uniform_1540,
                                                   pulse):
    scene = point_grid_scene([(0.0, 0.05)])
    channels = synthesize_channel_data(scene, uniform_1540, desk_array, pulse,
                                       transmit_model="reciprocal",
                                       tx_element=0)
    fs = channels.sampling_rate
    tx = uniform_delay(desk_array.element_position(0), (0.0, 0.05), 1540.0)
    rx = uniform_delay(desk_array.element_position(63), (0.0, 0.05), 1540.0)
    peak = np.argmax(np.abs(channels.samples[63])) / fs
    assert abs(peak - (tx + rx)) <= 1.0 / fs
    with pytest.raises(ConfigError):
        synthesize_channel_data(scene, uniform_1540, desk_array, pulse,
                                transmit_model="warp")


def test_noise_determinism_and_scaling(desk_array, uniform_1540, pulse):
    scene = point_grid_scene([(0.0, 0.05)])
    a = synthesize_channel_data(scene, uniform_1540, desk_array, pulse,
                                noise_rms=0.1, seed=11)
    b = synthesize_channel_data(scene, uniform_1540, desk_array, pulse,
                                noise_rms=0.1, seed=11)
    np.testing.assert_array_equal(a.samples, b.samples)
    c = synthesize_channel_data(scene, uniform_1540, desk_array, pulse,
                                noise_rms=0.1, seed=12)
    assert not np.array_equal(a.samples, c.samples)


def test_reflectivity_scaling_is_linear(desk_array, uniform_1540, pulse):
    base = point_grid_scene([(0.0, 0.05)], reflectivity=1.0)
    double = point_grid_scene([(0.0, 0.05)], reflectivity=2.0)
    a = synthesize_channel_data(base, uniform_1540, desk_array, pulse)
    b = synthesize_channel_data(double, uniform_1540, desk_array, pulse)
    np.testing.assert_allclose(b.samples, 2.0 * a.samples, rtol=1e-15)


def test_empty_scene_requires_noise(desk_array, uniform_1540, pulse):
    empty = point_grid_scene(np.empty((0, 2)))
    with pytest.raises(SceneError):
        synthesize_channel_data(empty, uniform_1540, desk_array, pulse)
    noisy = synthesize_channel_data(empty, uniform_1540, desk_array, pulse,
                                    noise_rms=0.5, seed=1)
    assert noisy.samples.std() > 0


def test_channel_round_trip(tmp_path, desk_array, fat_layer, pulse):
    scene = point_grid_scene([(0.0, 0.05)])
    channels = synthesize_channel_data(scene, fat_layer, desk_array, pulse)
    save_channels(channels, tmp_path / "chan")
    loaded = load_channels(tmp_path / "chan")
    assert loaded.num_elements == channels.num_elements
    assert loaded.sampling_rate == channels.sampling_rate
    assert loaded.medium == fat_layer
    assert loaded.array.radius == desk_array.radius
    np.testing.assert_allclose(loaded.samples,
                               channels.samples.astype(np.float32),
                               atol=0.0)


def test_channel_dataset_validation(desk_array):
    with pytest.raises(SceneError):
        ChannelDataSet(np.full((2, 4), np.nan), 20e6, 0.0, desk_array)
    with pytest.raises(SceneError):
        ChannelDataSet(np.zeros((2, 4)), 20e6, -1e-6, desk_array)
