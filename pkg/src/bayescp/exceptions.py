"""Exception types raised across the package."""


class BayescpError(Exception):
    """Base class for all bayescp-specific errors."""


class InsufficientDataError(BayescpError):
    """An operation needs more observed values than the data provides."""


class DegenerateVarianceError(BayescpError):
    """Sample variance is zero, so a proper scale prior cannot be formed."""


class WindowError(BayescpError):
    """Window bounds are malformed for the sequence at hand."""


class ConfigError(BayescpError):
    """Invalid or contradictory configuration values."""


class DomainError(BayescpError):
    """Argument outside the mathematical domain of an operation."""


class ModelError(BayescpError):
    """No feasible model state (e.g. every segment count has prior mass zero)."""


class OracleScaleError(BayescpError):
    """Instance too large for a brute-force reference computation."""


class OracleNumericsError(BayescpError):
    """Numerical quadrature failed to converge to the requested accuracy."""


class IngestError(BayescpError):
    """Malformed input data file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
