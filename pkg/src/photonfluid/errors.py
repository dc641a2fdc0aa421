"""Exception hierarchy shared across the package.

Each class carries the process exit code used by the CLI:
2 = configuration / validation, 3 = numerical failure,
4 = measurement quality.
"""


class PhotonFluidError(Exception):
    exit_code = 1


class ConfigError(PhotonFluidError):
    """Bad or inconsistent configuration, domain errors on inputs."""
    exit_code = 2


class GridMismatchError(ConfigError):
    """Fields passed to one operation live on different grids."""


class CommensurabilityError(ConfigError):
    """Requested flow speed is not commensurate with the periodic grid."""

    def __init__(self, message, nearest_speed=None):
        super().__init__(message)
        self.nearest_speed = nearest_speed


class ModelValidityError(ConfigError):
    """Operation requested outside the regime where the model holds."""


class NumericalError(PhotonFluidError):
    exit_code = 3


class NumericalBlowupError(NumericalError):
    """NaN/Inf detected during time stepping."""

    def __init__(self, message, step_index=None):
        super().__init__(message)
        self.step_index = step_index


class FixedPointError(NumericalError):
    """Fixed-point iteration did not converge; carries the iterate trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []


class MeasurementQualityError(PhotonFluidError):
    exit_code = 4


class DomainTooSmallError(MeasurementQualityError):
    """Wrap-around contamination reached the analysis window."""


class OutOfBandError(MeasurementQualityError):
    """Requested probe frequency resolves outside the measurable band."""


class SnapshotFormatError(ConfigError):
    """Snapshot file is not a valid PHFL field dump."""
