import numpy as np
import pytest

from sosfocus.delays import straight_ray_delays
from sosfocus.errors import ApertureError, SoundSpeedError
from sosfocus.geometry import (ImagingGrid, LayeredMedium, active_aperture,
                               curvilinear_array)
from sosfocus.optimal import (coherent_aperture_fraction, default_sos_grid,
                              optimal_sos_map, solve_optimal_sos)


def test_uniform_medium_recovers_background(probe_array, uniform_1540):
    result = solve_optimal_sos((0.0, 60e-3), uniform_1540, probe_array, 1.41)
    assert result.sos == pytest.approx(1540.0, abs=1.0)
    assert result.mean_abs_error == pytest.approx(0.0, abs=1e-15)
    assert result.coherent_fraction == 1.0


def test_point_inside_layer_recovers_layer_speed(probe_array, fat_layer):
    # whole propagation path lies inside the slab, so the layer speed is exact
    result = solve_optimal_sos((0.0, 10e-3), fat_layer, probe_array, 1.41)
    assert result.sos == pytest.approx(1450.0, abs=1.0)
    assert result.mean_abs_error < 1e-12


def test_optimum_rises_toward_background_with_depth(probe_array, fat_layer):
    values = [solve_optimal_sos((0.0, z), fat_layer, probe_array, 1.41).sos
              for z in (0.03, 0.06, 0.09, 0.12)]
    assert values == sorted(values)
    assert all(np.diff(values) > 0)
    assert values[-1] < 1540.0


def test_optimum_bracketed_by_layer_and_background(probe_array, rng):
    for _ in range(25):
        medium = LayeredMedium(rng.uniform(0.005, 0.035),
                               rng.uniform(1400.0, 1650.0),
                               rng.uniform(1400.0, 1650.0))
        point = (rng.uniform(-0.02, 0.02), rng.uniform(0.045, 0.12))
        result = solve_optimal_sos(point, medium, probe_array, 1.41)
        lo, hi = medium.sos_bounds()
        assert lo - 1e-9 <= result.sos <= hi + 1e-9


def test_candidate_grid_validation(probe_array, fat_layer):
    with pytest.raises(SoundSpeedError):
        solve_optimal_sos((0.0, 0.06), fat_layer, probe_array, 1.41,
                          sos_grid=np.arange(1500.0, 1530.0, 1.0))
    with pytest.raises(SoundSpeedError):
        solve_optimal_sos((0.0, 0.06), fat_layer, probe_array, 1.41,
                          sos_grid=np.arange(1400.0, 1600.0, 5.0))


def test_unit_grid_matches_fine_grid_argmin(probe_array, fat_layer):
    coarse = solve_optimal_sos((4e-3, 0.07), fat_layer, probe_array, 1.41)
    fine_grid = 1430.0 + 0.1 * np.arange(int(round((1560 - 1430) / 0.1)) + 1)
    fine = solve_optimal_sos((4e-3, 0.07), fat_layer, probe_array, 1.41,
                             sos_grid=fine_grid)
    assert abs(coarse.sos - fine.sos) <= 1.0


def test_lambda_quarter_feasibility_spot_check(probe_array):
    # the full acceptance matrix runs in tests/test_acceptance.py
    medium = LayeredMedium(0.02, 1450.0, 1540.0)
    for z in (0.04, 0.08, 0.12):
        result = solve_optimal_sos((0.0, z), medium, probe_array, 1.41)
        assert result.mean_abs_error < 83e-9


# ------------------------------------------------- coherent fraction

def test_coherent_fraction_all_zero_errors():
    assert coherent_aperture_fraction(np.zeros(17), 1 / 3e6) == 1.0


def test_coherent_fraction_longest_run():
    period = 1 / 3e6
    errors = np.array([0.1, 0.3, 0.1, 0.1, 0.1]) * period
    assert coherent_aperture_fraction(errors, period, 0.2) == pytest.approx(0.6)


def test_coherent_fraction_empty_errors():
    with pytest.raises(ApertureError):
        coherent_aperture_fraction(np.array([]), 1 / 3e6)


def test_fraction_at_optimum_beats_default(probe_array, fat_layer):
    result = solve_optimal_sos((0.0, 0.06), fat_layer, probe_array, 1.41)
    aperture = active_aperture((0.0, 0.06), probe_array, 1.41)
    ex = probe_array.element_x[aperture.indices]
    ez = probe_array.element_z[aperture.indices]
    true_times = straight_ray_delays(ex, ez, (0.0, 0.06), fat_layer)
    dist = np.sqrt(ex ** 2 + (0.06 - ez) ** 2)
    at_default = coherent_aperture_fraction(
        true_times - dist / 1540.0, 1.0 / probe_array.center_frequency)
    assert result.coherent_fraction > at_default


def test_fraction_never_drops_with_f_number(probe_array, fat_layer):
    fractions = [solve_optimal_sos((0.0, 0.06), fat_layer, probe_array,
                                   fn).coherent_fraction
                 for fn in (1.0, 1.41, 2.0, 4.0, 6.0, 8.0)]
    assert all(b >= a - 1e-12 for a, b in zip(fractions, fractions[1:]))


# ------------------------------------------------------------- maps

def test_uniform_map_is_constant(desk_array, uniform_1540):
    grid = ImagingGrid(-5e-3, 5e-3, 0.03, 0.05, 2.5e-3, 5e-3)
    sos_map = optimal_sos_map(grid, uniform_1540, desk_array, 1.41)
    np.testing.assert_allclose(sos_map.sos, 1540.0, atol=1.0)
    np.testing.assert_allclose(sos_map.mean_error_periods, 0.0, atol=1e-9)
    np.testing.assert_allclose(sos_map.coherent_fraction, 1.0)


def test_map_matches_pointwise_solution(desk_array, fat_layer):
    grid = ImagingGrid(-4e-3, 4e-3, 0.04, 0.06, 4e-3, 1e-2)
    sos_map = optimal_sos_map(grid, fat_layer, desk_array, 1.41)
    for iz, z in enumerate(grid.zs):
        for ix, x in enumerate(grid.xs):
            reference = solve_optimal_sos((x, z), fat_layer, desk_array, 1.41)
            assert sos_map.sos[iz, ix] == reference.sos
            assert sos_map.coherent_fraction[iz, ix] == \
                reference.coherent_fraction


def test_map_threading_is_deterministic(desk_array, fat_layer):
    grid = ImagingGrid(-6e-3, 6e-3, 0.035, 0.055, 3e-3, 5e-3)
    serial = optimal_sos_map(grid, fat_layer, desk_array, 1.41, threads=1)
    threaded = optimal_sos_map(grid, fat_layer, desk_array, 1.41, threads=4)
    np.testing.assert_array_equal(serial.sos, threaded.sos)
    np.testing.assert_array_equal(serial.mean_error_periods,
                                  threaded.mean_error_periods)


def test_error_decreases_with_thickness_and_layer_speed(probe_array):
    depths = (0.05, 0.07, 0.09, 0.11, 0.12)

    def mean_error(d, layer_sos):
        medium = LayeredMedium(d, layer_sos, 1540.0)
        return np.mean([solve_optimal_sos((0.0, z), medium, probe_array,
                                          1.41).mean_abs_error
                        for z in depths])

    by_thickness = [mean_error(d, 1450.0) for d in (0.01, 0.02, 0.03)]
    assert by_thickness[0] > by_thickness[1] > by_thickness[2]
    by_speed = [mean_error(0.02, c) for c in (1400.0, 1450.0, 1500.0)]
    assert by_speed[0] > by_speed[1] > by_speed[2]


def test_default_grid_covers_bracket(fat_layer):
    grid = default_sos_grid(fat_layer)
    assert grid[0] == pytest.approx(1440.0)
    assert grid[-1] == pytest.approx(1550.0)
    assert np.allclose(np.diff(grid), 1.0)
