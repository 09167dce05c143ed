"""Palm-farm vibration telemetry toolkit.

Synthesizes or ingests 100 Hz accelerometer streams from palm-mounted
sensors, moves them through a gateway/edge/cloud pipeline, extracts
spectral and statistical infestation fingerprints, classifies per-palm
infestation likelihood, and exposes the live state over an HTTP +
websocket service consumed by the bundled web dashboard.
"""

__version__ = "0.1.0"

from . import detector, fieldsim, ingest, model, spectral, stats
from .errors import (
    ComparisonError,
    ConfigurationError,
    CorruptInputError,
    EmptyBandError,
    InsufficientDataError,
    PalmwatchError,
    RejectedSampleError,
    ValidationError,
)
from .model import (
    AccelSample,
    CreatedBy,
    DeviceRecord,
    Digest,
    FarmRecord,
    HealthLevel,
    HealthStatus,
    Likelihood,
    Placement,
    SampleWindow,
    magnitude_of,
)

__all__ = [
    "AccelSample",
    "ComparisonError",
    "ConfigurationError",
    "CorruptInputError",
    "CreatedBy",
    "DeviceRecord",
    "Digest",
    "EmptyBandError",
    "FarmRecord",
    "HealthLevel",
    "HealthStatus",
    "InsufficientDataError",
    "Likelihood",
    "PalmwatchError",
    "Placement",
    "RejectedSampleError",
    "SampleWindow",
    "ValidationError",
    "detector",
    "fieldsim",
    "ingest",
    "magnitude_of",
    "model",
    "spectral",
    "stats",
]
