"""Typed exceptions shared across the package."""


class GasGiantError(Exception):
    """Base class for all package errors."""


class SingularAtBoundary(GasGiantError):
    """A quantity carrying negative powers of x was requested at x = 0."""


class Unsupported(GasGiantError):
    """Operation not defined for this model dimension."""


class ToleranceFailure(GasGiantError):
    """Adaptive step control could not satisfy the requested tolerances."""


class NoExit(GasGiantError):
    """The traced ray did not reach the boundary (escaped or timed out)."""


class InvalidGrid(GasGiantError):
    """Degenerate phase-grid parameters."""


class UnsupportedSupport(GasGiantError):
    """Field touches an x-face but no boundary term was requested."""


class ConfigError(GasGiantError):
    """Malformed experiment configuration."""


class SuiteFailure(GasGiantError):
    """A suite criterion was not met (artifacts are still written)."""

    def __init__(self, message: str, results=None):
        super().__init__(message)
        self.results = results
