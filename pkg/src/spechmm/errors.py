"""Exception types shared across the package."""


class SpechmmError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SpechmmError, ValueError):
    """Invalid parameters, malformed inputs, or broken invariants."""


class FormatError(ValidationError):
    """A text artifact (model, dataset, operators, config, CSV) failed to parse."""
