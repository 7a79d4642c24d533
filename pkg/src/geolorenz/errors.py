"""Exception hierarchy.

Domain errors (bad inputs, failed constructions) derive from
``GeoLorenzError``; configuration problems derive from ``ConfigurationError``
so the command line can map them to distinct exit codes.
"""


class GeoLorenzError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(GeoLorenzError):
    """Missing or inconsistent configuration (exit code 2 on the CLI)."""


class SingularLeafError(GeoLorenzError, ValueError):
    """A point lies on the singular leaf x = 0."""


class ParameterError(GeoLorenzError, ValueError):
    """Model parameters are inconsistent with the requested operation."""


class BlowUpError(GeoLorenzError, ArithmeticError):
    """Numerical integration diverged."""


class ModelDegenerateError(GeoLorenzError):
    """A required preimage does not exist in the expected branch."""


class InfeasibleError(GeoLorenzError):
    """No admissible cut parameter exists."""


class NonTerminationError(GeoLorenzError):
    """An iteration exceeded its cap."""


class NumericError(GeoLorenzError, ArithmeticError):
    """An iterative solver failed to converge."""


class ConstructionError(GeoLorenzError):
    """A Cantor construction produced no usable output.

    ``stage`` names the filter at which the construction ran dry.
    """

    def __init__(self, message, stage=None):
        super().__init__(message)
        self.stage = stage


class DependencyError(GeoLorenzError):
    """A required upstream result is missing or invalid."""


class EmptySpecError(ConstructionError):
    """No cylinder survived the avoidance constraint."""


class DomainError(GeoLorenzError, ValueError):
    """Input outside the mathematical domain of an operation."""


class NotExpandingError(DomainError):
    """A branch derivative bound is not larger than one."""


class DegenerateError(GeoLorenzError, ValueError):
    """Input data carries no geometric information (e.g. a single point)."""


class InsufficientDataError(GeoLorenzError, ValueError):
    """Too few data points for the requested estimate."""


class SingularOrbitError(GeoLorenzError):
    """An orbit came within tolerance of the singular leaf."""


class SamplingError(GeoLorenzError):
    """Too many sampled orbits failed."""


class UnsupportedError(GeoLorenzError):
    """The input is outside the supported class (e.g. non-periodic words)."""


class ResourceError(GeoLorenzError, MemoryError):
    """The requested resolution exceeds the memory budget."""
