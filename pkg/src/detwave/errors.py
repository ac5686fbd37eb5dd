"""Exception types shared across the package."""


class DetwaveError(Exception):
    """Base class for package errors."""


class ConfigError(DetwaveError, ValueError):
    """Invalid configuration, shape or grid mismatch."""


class ParameterError(DetwaveError, ValueError):
    """An operation argument is outside its admissible range."""


class BlowUpError(DetwaveError, RuntimeError):
    """A run produced NaN or exceeded the growth threshold.

    ``last_state`` holds the last valid state, ``partial`` any partial record.
    """

    def __init__(self, message, last_state=None, partial=None):
        super().__init__(message)
        self.last_state = last_state
        self.partial = partial


class DegenerateFitError(DetwaveError, ValueError):
    """Not enough positive samples to fit a decay rate."""


class UndefinedRatioError(DetwaveError, ValueError):
    """A ratio was requested for a zero denominator (e.g. a zero block)."""


class SnapshotError(DetwaveError, IOError):
    """Snapshot header corruption, version mismatch or invariant violation."""
