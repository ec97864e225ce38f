"""Bulk speed-of-sound autofocus toolkit for layer-aberrated ultrasound.

Submodules
----------
geometry   transducer arrays, layered media, grids, aperture selection
delays     straight-ray, uniform, and refracted arrival times
optimal    analytic optimal bulk sound speed and its spatial maps
simulate   pulses, scatterer scenes, synthetic channel data
beamform   delay-and-sum, sound-speed sweep, stack interpolation
metrics    autofocus image metrics and the composite optimum
evaluate   FWHM / CNR / boundary-gradient measures and metric timing
cli        atlas | pipeline | bench command-line front end
"""

from . import geometry, delays, optimal, simulate, beamform, metrics, evaluate

__all__ = ["geometry", "delays", "optimal", "simulate", "beamform",
           "metrics", "evaluate"]
__version__ = "0.1.0"
