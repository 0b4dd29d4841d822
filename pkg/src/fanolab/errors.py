"""Exception hierarchy.

Everything raised on purpose by the package derives from ``FanoLabError`` so
callers (and the CLI) can tell domain failures apart from programming errors.
"""


class FanoLabError(Exception):
    """Base class for all package errors."""


class ConfigError(FanoLabError, ValueError):
    """Malformed or inconsistent scenario configuration."""


class DomainError(FanoLabError, ValueError):
    """An argument lies outside the domain where the operation is defined."""


class InterpolationRangeError(DomainError):
    """Tabulated density queried inside its support but outside its table."""


class EndpointSingularityError(DomainError):
    """Principal value requested exactly at a support endpoint."""


class TruncationError(FanoLabError):
    """Tail of an unbounded integral is too large to neglect."""


class ResolutionError(FanoLabError):
    """Quadrature too coarse for the requested operation."""


class BracketError(FanoLabError):
    """Root-finder could not bracket the pole."""


class ConvergenceError(FanoLabError):
    """Iterative solver failed to reach its tolerance."""


class StabilityError(FanoLabError):
    """Time stepper became unstable."""


class ConsistencyError(FanoLabError):
    """Inputs derived from different sources were combined."""
