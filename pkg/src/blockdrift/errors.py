"""Exception types raised across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class AdmissibilityError(ValueError):
    """Model parameters produce an error probability outside [0, 1]."""


class ConfigurationError(ValueError):
    """Objects that must agree (block length, baseline rate) do not."""


class CalibrationError(RuntimeError):
    """A null sample is too degenerate to calibrate a threshold from."""


class InsufficientDataError(ValueError):
    pass


class DependencyError(RuntimeError):
    """A pipeline stage needs output from a stage that has not been run."""
