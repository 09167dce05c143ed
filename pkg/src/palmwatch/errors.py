"""Exception types shared across the package."""


class PalmwatchError(Exception):
    """Base class for all palmwatch errors."""


class RejectedSampleError(PalmwatchError):
    """A sample's values cannot form a valid reading (non-finite axes, bad seq)."""


class CorruptInputError(PalmwatchError):
    """More than half of an input log failed to parse."""


class ConfigurationError(PalmwatchError):
    """Invalid configuration value or combination."""


class ValidationError(PalmwatchError):
    """A record field is out of its allowed range."""


class InsufficientDataError(PalmwatchError):
    """Not enough samples to run the requested computation."""


class EmptyBandError(PalmwatchError):
    """A frequency-band restriction selected no bins."""


class ComparisonError(PalmwatchError):
    """Two results were produced with incompatible settings and cannot be compared."""
