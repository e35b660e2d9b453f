"""Exception types shared across the package."""


class MyofieldError(Exception):
    """Base class for all package errors."""


class ParamError(MyofieldError, ValueError):
    """A physical or grid parameter violates an invariant."""


class ConfigError(MyofieldError, ValueError):
    """Config file cannot be parsed or contains unknown/ill-typed keys."""


class DomainError(MyofieldError, ValueError):
    """Argument outside a function's mathematical domain."""


class OverflowRangeError(MyofieldError, OverflowError):
    """Unscaled result would overflow; use the scaled variant."""


class WindowingError(MyofieldError, ValueError):
    """Source waveform support is too wide for the axial window."""


class IntegrationError(MyofieldError, RuntimeError):
    """Time integration became unstable."""


class EstimationError(MyofieldError, RuntimeError):
    """A quantity could not be estimated from the given trace."""


class SolverError(MyofieldError, RuntimeError):
    """Boundary-value solve failed (singular or non-finite system)."""


class SingularityError(MyofieldError, ValueError):
    """Field point coincides with a source singularity."""


class UndefinedSnrError(MyofieldError, ZeroDivisionError):
    """SNR undefined because the in-band noise RMS is zero."""
