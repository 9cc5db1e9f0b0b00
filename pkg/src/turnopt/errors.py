"""Exception types shared across the package."""


class TurnoptError(Exception):
    """Base class for all turnopt errors."""


class NotSymmetric(TurnoptError):
    """Matrix asymmetry exceeds the allowed tolerance."""


class NotPositiveDefinite(TurnoptError):
    """Matrix has a non-positive (or numerically zero) eigenvalue."""


class DimensionMismatch(TurnoptError):
    """Operands have incompatible shapes."""


class SingularSystem(TurnoptError):
    """Linear system violates its solvability precondition."""


class DegenerateForecast(TurnoptError):
    """Requested moment ratio is undefined for a noiseless forecast."""


class InvalidConfig(TurnoptError):
    """Simulation configuration violates its invariants."""


class InsufficientData(TurnoptError):
    """Estimator has no usable post-burn-in data."""


class ConfigError(TurnoptError):
    """Experiment config file violates the schema."""


class IOFailure(TurnoptError):
    """Report could not be written."""
