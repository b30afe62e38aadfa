"""Exception hierarchy shared by all ellipstat modules."""


class EllipstatError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(EllipstatError, ValueError):
    """A distribution, policy or experiment description is invalid."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class DegenerateTruncationError(EllipstatError, ArithmeticError):
    pass


class EnsembleStateError(EllipstatError, RuntimeError):
    pass


class ResourceError(EllipstatError, MemoryError):
    pass


class DomainError(EllipstatError, ValueError):
    """A point lies inside (or on) the limiting support where a formula is undefined."""


class GeometryError(EllipstatError, ValueError):
    pass


class QuadratureError(EllipstatError, ArithmeticError):
    """A quadrature rule failed to converge within its node cap."""


class TruncationError(EllipstatError, ArithmeticError):
    """A series was cut off before its terms decayed."""


class NumericError(EllipstatError, ArithmeticError):
    """A dense linear-algebra kernel failed; carries the seed of the offending matrix."""

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


class ConditioningError(NumericError):
    pass


class ExperimentError(EllipstatError, RuntimeError):
    pass


class DegenerateDataError(EllipstatError, ValueError):
    """Sample data too degenerate for the requested statistic (e.g. zero variance)."""
