"""Exception hierarchy for geometry, simulation, and analysis failures."""


class SosfocusError(Exception):
    """Base class for all package-specific errors."""


class GeometryError(SosfocusError):
    """Invalid transducer, grid, or medium geometry."""


class ApertureError(SosfocusError):
    """Degenerate (empty) receive aperture for a field point."""


class SoundSpeedError(SosfocusError):
    """Non-physical speed of sound."""


class PathError(SosfocusError):
    """Zero-length or otherwise degenerate propagation path."""


class RefractionError(SosfocusError):
    """Snell system has no root in the search bracket."""


class PulseError(SosfocusError):
    """Pulse parameters violate sampling or bandwidth constraints."""


class SceneError(SosfocusError):
    """Scatterer scene parameters are inconsistent."""


class ConfigError(SosfocusError):
    """Run configuration is missing keys or fails validation."""


class MetricError(SosfocusError):
    """Degenerate metric input (undersized ROI, identically zero component)."""


class TargetError(SosfocusError):
    """Point target could not be resolved (no half-maximum crossing)."""


class CnrError(SosfocusError):
    """Contrast-to-noise ratio undefined (zero variance in both regions)."""
