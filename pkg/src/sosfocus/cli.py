"""Command-line front end: atlas | pipeline | bench.

All figures are emitted as data (CSV) plus rendered PGM images, and every
run writes its resolved configuration next to the outputs so results can be
reproduced exactly from that file.

Exit codes: 0 success, 1 configuration error, 2 compute error.
"""

import argparse
import configparser
import os
import sys
from pathlib import Path

import numpy as np

from . import beamform, evaluate, export, geometry, metrics, optimal, simulate
from .errors import ConfigError


class StageFailure(Exception):
    """A pipeline stage raised; carries the stage name for the exit message."""

    def __init__(self, stage, original):
        super().__init__(f"stage {stage} failed: {original}")
        self.stage = stage
        self.original = original


def _parse_pairs(text):
    """'x:z;x:z' -> list of (x, z) floats."""
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        x, z = chunk.split(":")
        pairs.append((float(x), float(z)))
    return pairs


def _parse_floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _parse_ints(text):
    return [int(v) for v in text.replace(",", " ").split()]


def load_config(path):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    if not parser.read(path):
        raise ConfigError(f"cannot read config file {path}")
    return parser


def _section(cfg, name):
    if not cfg.has_section(name):
        raise ConfigError(f"config is missing the [{name}] section")
    return cfg[name]


def _build_common(cfg):
    array = geometry.array_from_config(_section(cfg, "array"))
    medium = geometry.medium_from_config(_section(cfg, "medium"))
    grid = geometry.grid_from_config(_section(cfg, "grid"))
    aperture = _section(cfg, "aperture")
    try:
        f_number = float(aperture["f_number"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad aperture config: {exc}") from exc
    convention = aperture.get("convention", "paper")
    if convention not in ("paper", "conventional"):
        raise ConfigError(f"unknown aperture convention {convention!r}")
    return array, medium, grid, f_number, convention


def _roi_from_meters(grid, bounds):
    x_min, x_max, z_min, z_max = bounds
    ix0 = int(round((x_min - grid.x_min) / grid.dx))
    ix1 = int(round((x_max - grid.x_min) / grid.dx)) + 1
    iz0 = int(round((z_min - grid.z_min) / grid.dz))
    iz1 = int(round((z_max - grid.z_min) / grid.dz)) + 1
    return metrics.Roi(ix0, ix1, iz0, iz1)


def _parse_rois(text, grid):
    rois = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        bounds = [float(v) for v in chunk.split(":")]
        if len(bounds) != 4:
            raise ConfigError("ROI entries need x_min:x_max:z_min:z_max")
        rois.append(_roi_from_meters(grid, bounds))
    if not rois:
        raise ConfigError("no ROIs configured")
    return rois


def _build_scene(cfg, grid, medium, f_number, seed):
    section = _section(cfg, "scene")
    kind = section.get("kind", "point-grid")
    wavelength = medium.background_sos / float(_section(cfg, "array")["f0_hz"])
    if kind == "point-grid":
        return simulate.point_grid_scene(
            _parse_pairs(section["points"]),
            float(section.get("reflectivity", "1.0")))
    if kind == "speckle":
        return simulate.speckle_scene(
            grid, wavelength, f_number,
            float(section.get("density_per_cell", "10")), seed)
    if kind == "anechoic-lesion":
        center = _parse_pairs(section["lesion_center"])[0]
        return simulate.anechoic_lesion_scene(
            grid, wavelength, f_number, center,
            float(section["lesion_radius_m"]),
            float(section.get("density_per_cell", "10")), seed)
    if kind == "composite":
        parts = []
        if section.get("points"):
            parts.append(simulate.point_grid_scene(
                _parse_pairs(section["points"]),
                float(section.get("reflectivity", "1.0"))))
        if section.get("lesion_center"):
            center = _parse_pairs(section["lesion_center"])[0]
            parts.append(simulate.anechoic_lesion_scene(
                grid, wavelength, f_number, center,
                float(section["lesion_radius_m"]),
                float(section.get("density_per_cell", "10")), seed))
        return simulate.composite_scene(parts)
    raise ConfigError(f"unknown scene kind {kind!r}")


def _tag(value):
    return f"{value:g}".replace("-", "m").replace(".", "p")


def cmd_atlas(cfg, out_dir, threads, verbose):
    array, medium, grid, f_number, convention = _build_common(cfg)
    atlas = cfg["atlas"] if cfg.has_section("atlas") else {}
    thicknesses = _parse_floats(atlas.get("thicknesses_m", "")) \
        or [medium.thickness]
    layer_speeds = _parse_floats(atlas.get("layer_sos", "")) \
        or [medium.layer_sos]
    f_numbers = _parse_floats(atlas.get("f_numbers", "")) or [f_number]
    summary = []
    for d in thicknesses:
        for c_layer in layer_speeds:
            for fnum in f_numbers:
                med = geometry.LayeredMedium(d, c_layer, medium.background_sos)
                sos_map = optimal.optimal_sos_map(grid, med, array, fnum,
                                                  convention=convention,
                                                  threads=threads)
                stem = f"atlas_d{_tag(d * 1e3)}mm_c{_tag(c_layer)}_f{_tag(fnum)}"
                fields = {"sos": sos_map.sos,
                          "error_periods": sos_map.mean_error_periods,
                          "coherent": sos_map.coherent_fraction}
                for name, values in fields.items():
                    export.write_grid_csv(values, out_dir / f"{stem}_{name}.csv")
                    export.write_pgm(values, out_dir / f"{stem}_{name}.pgm")
                finite = sos_map.sos[np.isfinite(sos_map.sos)]
                summary.append(
                    f"{stem}: sos [{finite.min():.1f}, {finite.max():.1f}] m/s,"
                    f" mean error {np.nanmean(sos_map.mean_error_periods):.4f}"
                    f" periods, coherent {np.nanmean(sos_map.coherent_fraction):.3f}")
                if verbose:
                    print(summary[-1])
    (out_dir / "atlas_summary.txt").write_text("\n".join(summary) + "\n")


def cmd_pipeline(cfg, out_dir, threads, seed, verbose):
    """simulate -> sweep -> interpolate -> metrics -> evaluate, staged."""
    state = {}
    stages = (
        ("simulate", _stage_simulate),
        ("beamform", _stage_beamform),
        ("interpolate", _stage_interpolate),
        ("metrics", _stage_metrics),
        ("evaluate", _stage_evaluate),
    )
    state.update(cfg=cfg, out_dir=out_dir, threads=threads, seed=seed,
                 verbose=verbose)
    for name, runner in stages:
        try:
            runner(state)
        except ConfigError:
            raise
        except Exception as exc:
            raise StageFailure(name, exc) from exc


def _stage_simulate(state):
    cfg = state["cfg"]
    array, medium, grid, f_number, convention = _build_common(cfg)
    run = cfg["run"] if cfg.has_section("run") else {}
    pulse_cfg = _section(cfg, "pulse")
    scene = _build_scene(cfg, grid, medium, f_number, state["seed"])
    pulse = simulate.make_pulse(array.center_frequency,
                                float(pulse_cfg["fractional_bandwidth"]),
                                float(pulse_cfg["fs_hz"]))
    channels = simulate.synthesize_channel_data(
        scene, medium, array, pulse,
        run.get("transmit_model", "ideal"),
        float(cfg["scene"].get("noise_rms", "0")), state["seed"])
    simulate.save_channels(channels, state["out_dir"] / "channels")
    if state["verbose"]:
        print(f"simulate: {scene.num_scatterers} scatterers, "
              f"{channels.num_samples} samples/channel")
    state.update(grid=grid, f_number=f_number, convention=convention,
                 channels=channels)


def _stage_beamform(state):
    sweep_cfg = _section(state["cfg"], "sweep")
    c_min = float(sweep_cfg["c_min"])
    c_max = float(sweep_cfg["c_max"])
    c_step = float(sweep_cfg["c_step"])
    c_list = c_min + c_step * np.arange(int(round((c_max - c_min) / c_step)) + 1)
    stack = beamform.sweep_beamform(state["channels"], c_list, state["grid"],
                                    state["f_number"],
                                    convention=state["convention"],
                                    threads=state["threads"])
    beamform.save_stack(stack, state["out_dir"] / "stack")
    state["stack"] = stack


def _stage_interpolate(state):
    sweep_cfg = _section(state["cfg"], "sweep")
    state["fine"] = beamform.interpolate_stack(
        state["stack"], float(sweep_cfg.get("interp_step", "1")))


def _stage_metrics(state):
    cfg = state["cfg"]
    metric_cfg = _section(cfg, "metric")
    band = (float(metric_cfg.get("band_lo", "0.75")),
            float(metric_cfg.get("band_hi", "0.95")))
    rois = _parse_rois(metric_cfg["rois"], state["grid"])
    curves = []
    lines = []
    for k, roi in enumerate(rois):
        curve = metrics.composite_metric(state["fine"], roi, band)
        curve.to_csv(state["out_dir"] / f"metric_roi{k}.csv")
        curves.append(curve)
        lines.append(f"roi{k}: optimal_sos = {curve.optimal_sos:.1f} m/s"
                     + (" (flat curve)" if curve.flat else ""))
        if state["verbose"]:
            print(lines[-1])
    (state["out_dir"] / "optimal_sos.txt").write_text("\n".join(lines) + "\n")
    state["curves"] = curves


def _stage_evaluate(state):
    cfg = state["cfg"]
    out_dir = state["out_dir"]
    fine = state["fine"]
    selected = state["curves"][0].optimal_sos
    reference = beamform.REFERENCE_SOS
    eval_cfg = cfg["evaluate"] if cfg.has_section("evaluate") else {}
    pin_rows = ["x_m,z_m,fwhm_selected_m,fwhm_reference_m,relative_reduction"]
    for pin in _parse_pairs(eval_cfg.get("pins", "")):
        report = evaluate.fwhm_report(fine, pin, selected, reference)
        pin_rows.append(f"{pin[0]!r},{pin[1]!r},{report.selected_width!r},"
                        f"{report.reference_width!r},"
                        f"{report.relative_reduction!r}")
    if len(pin_rows) > 1:
        (out_dir / "fwhm_report.csv").write_text("\n".join(pin_rows) + "\n")
    if eval_cfg.get("cnr_inside") and eval_cfg.get("cnr_outside"):
        grid = state["grid"]
        roi_in = _roi_from_meters(
            grid, [float(v) for v in eval_cfg["cnr_inside"].split(":")])
        roi_out = _roi_from_meters(
            grid, [float(v) for v in eval_cfg["cnr_outside"].split(":")])
        sel_cnr = evaluate.cnr(fine.at(selected), roi_in, roi_out)
        ref_cnr = evaluate.cnr(fine.at(reference), roi_in, roi_out)
        (out_dir / "cnr_report.csv").write_text(
            "cnr_selected_db,cnr_reference_db,delta_db\n"
            f"{sel_cnr!r},{ref_cnr!r},{sel_cnr - ref_cnr!r}\n")
    before = beamform.log_compress(fine.at(reference))
    after = beamform.log_compress(fine.at(selected))
    export.write_pgm(before.data, out_dir / "image_reference.pgm",
                     vmin=-54.0, vmax=0.0)
    export.write_pgm(after.data, out_dir / "image_selected.pgm",
                     vmin=-54.0, vmax=0.0)


def cmd_bench(cfg, out_dir, verbose):
    bench = cfg["bench"] if cfg.has_section("bench") else {}
    roi_sizes = _parse_ints(bench.get("roi_sizes", "25,50,100,200"))
    num_sos = _parse_ints(bench.get("num_sos", "10"))
    repeats = int(bench.get("repeats", "10"))
    rows = evaluate.benchmark_metrics(roi_sizes, num_sos, repeats)
    evaluate.write_benchmark_csv(rows, out_dir / "metric_timing.csv")
    if verbose:
        for size, count, median, per in rows:
            print(f"roi {size}x{size}, {count} speeds: "
                  f"{median * 1e3:.2f} ms ({per * 1e3:.3f} ms per speed)")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sosfocus",
        description="bulk speed-of-sound autofocus toolkit")
    parser.add_argument("command", choices=("atlas", "pipeline", "bench"))
    parser.add_argument("--config", required=True, help="run config file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=0,
                        help="worker threads (0 = all cores)")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the configured random seed")
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
        run = cfg["run"] if cfg.has_section("run") else {}
        seed = args.seed if args.seed is not None else int(run.get("seed", "0"))
        threads = args.threads or int(run.get("threads", "0")) \
            or (os.cpu_count() or 1)
        if not cfg.has_section("run"):
            cfg.add_section("run")
        cfg["run"]["seed"] = str(seed)
        cfg["run"]["threads"] = str(threads)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        with open(out_dir / "config_resolved.cfg", "w") as fh:
            cfg.write(fh)
    except (ConfigError, OSError, KeyError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    try:
        if args.command == "atlas":
            cmd_atlas(cfg, out_dir, threads, args.verbose)
        elif args.command == "pipeline":
            cmd_pipeline(cfg, out_dir, threads, seed, args.verbose)
        else:
            cmd_bench(cfg, out_dir, args.verbose)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except StageFailure as exc:
        print(exc, file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
