"""Plain-data exporters: CSV grids and 8-bit PGM images with scale sidecars."""

import numpy as np


def write_grid_csv(values, path):
    """Matrix as rows of comma-separated full-precision floats."""
    np.savetxt(path, np.asarray(values, dtype=float), delimiter=",",
               fmt="%.17g")


def write_pgm(values, path, vmin=None, vmax=None):
    """8-bit grayscale PGM (P5) plus a `<path>.scale.txt` min/max sidecar.

    NaNs map to black; the sidecar records the values mapped to 0 and 255.
    """
    data = np.asarray(values, dtype=float)
    finite = data[np.isfinite(data)]
    if vmin is None:
        vmin = float(finite.min()) if finite.size else 0.0
    if vmax is None:
        vmax = float(finite.max()) if finite.size else 1.0
    span = vmax - vmin if vmax > vmin else 1.0
    scaled = np.clip((data - vmin) / span, 0.0, 1.0)
    scaled = np.where(np.isfinite(data), scaled, 0.0)
    pixels = np.round(255.0 * scaled).astype(np.uint8)
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n255\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(pixels.tobytes())
    with open(str(path) + ".scale.txt", "w") as fh:
        fh.write(f"min = {vmin!r}\nmax = {vmax!r}\n")
