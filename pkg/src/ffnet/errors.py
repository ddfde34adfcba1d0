"""Exception types raised across the library.

Everything subclasses ValueError so callers that do not care about the
distinction can catch one built-in type.
"""


class ShapeError(ValueError):
    """Operand shapes are inconsistent with the requested operation."""


class ConfigError(ValueError):
    """A configuration value is missing, out of range, or contradictory."""


class DataFormatError(ValueError):
    """A dataset file does not match its declared on-disk format."""


class DomainError(ValueError):
    """An input lies outside an estimator's mathematical domain."""


class EstimationError(ValueError):
    """Not enough data to form the requested estimate."""


class CheckpointError(ValueError):
    """A checkpoint file is malformed or incompatible with the request."""
