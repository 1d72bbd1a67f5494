"""Exception types shared across the package."""


class TripProfileError(Exception):
    """Base class for all package-specific errors."""


class ParseError(TripProfileError):
    """Raised when a CSV row cannot be parsed.

    Attributes:
        line: 1-based line number of the offending row (header is line 1).
    """

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(TripProfileError):
    """Raised when parsed data violates a domain invariant."""


class DegenerateScaleError(TripProfileError):
    """Raised when a column has zero variance and cannot be scaled."""


class SingularCovarianceError(TripProfileError):
    """Raised when a covariance matrix cannot be inverted without a ridge."""


class UndefinedMetricError(TripProfileError):
    """Raised when a metric is undefined for the given labels."""


class NotFittedError(TripProfileError):
    """Raised when apply/predict is called before fit."""


class StageDependencyError(TripProfileError):
    """Raised by the CLI when a required upstream artifact is missing."""
