"""Domain types shared by the whole telemetry pipeline.

Every type here is an immutable value with a canonical JSON object shape
(``to_dict`` / ``from_dict``). The same shapes are used on the wire, in log
files, and in the service's persisted store, so round-trips are lossless.

Accelerations are metres per second squared throughout; gravity at rest puts
magnitudes near 9.8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import RejectedSampleError, ValidationError

MAGNITUDE_REL_TOL = 1e-9
# Decoders accept externally produced magnitudes that were rounded for
# display; anything inside this tolerance is canonicalised to the exact norm.
WIRE_MAGNITUDE_REL_TOL = 1e-6


# ---------------------------------------------------------------------------
# time handling

def parse_timestamp(value: str) -> datetime:
    """Parse an ISO-8601 timestamp, tolerating a trailing ``Z``."""
    if value.endswith("Z") or value.endswith("z"):
        value = value[:-1] + "+00:00"
    dt = datetime.fromisoformat(value)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    """Millisecond-precision UTC form used on every wire format."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc).isoformat(timespec="milliseconds").replace("+00:00", "Z")


def to_epoch(dt: datetime) -> float:
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def from_epoch(seconds: float) -> datetime:
    return datetime.fromtimestamp(seconds, tz=timezone.utc)


# ---------------------------------------------------------------------------
# enums

class Placement(str, Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"


class CreatedBy(str, Enum):
    MANUAL = "Manual"
    GATEWAY_AUTO_DETECT = "GatewayAutoDetect"


class Likelihood(str, Enum):
    LOW = "Low"
    MEDIUM = "Medium"
    HIGH = "High"


class HealthLevel(str, Enum):
    HEALTHY = "Healthy"
    SUSPECT = "Suspect"
    INFESTED = "Infested"


LEVEL_FOR_LIKELIHOOD = {
    Likelihood.LOW: HealthLevel.HEALTHY,
    Likelihood.MEDIUM: HealthLevel.SUSPECT,
    Likelihood.HIGH: HealthLevel.INFESTED,
}

COLOR_FOR_LEVEL = {
    HealthLevel.HEALTHY: "green",
    HealthLevel.SUSPECT: "yellow",
    HealthLevel.INFESTED: "red",
}


def level_for_likelihood(likelihood: Likelihood) -> HealthLevel:
    return LEVEL_FOR_LIKELIHOOD[Likelihood(likelihood)]


# ---------------------------------------------------------------------------
# operations

def magnitude_of(ax: float, ay: float, az: float) -> float:
    """Combined acceleration across the three axes (Euclidean norm)."""
    if not (math.isfinite(ax) and math.isfinite(ay) and math.isfinite(az)):
        raise RejectedSampleError(f"non-finite axis values: ({ax}, {ay}, {az})")
    return math.hypot(ax, ay, az)


# ---------------------------------------------------------------------------
# records

@dataclass(frozen=True, slots=True)
class AccelSample:
    """One timestamped three-axis reading from a palm-mounted sensor."""

    device_id: str
    seq: int
    timestamp: datetime
    ax: float
    ay: float
    az: float
    magnitude: float

    def __post_init__(self) -> None:
        if self.seq < 0:
            raise RejectedSampleError(f"negative seq {self.seq}")
        norm = magnitude_of(self.ax, self.ay, self.az)
        if abs(self.magnitude - norm) > MAGNITUDE_REL_TOL * max(norm, 1.0):
            raise RejectedSampleError(
                f"magnitude {self.magnitude} inconsistent with axes (norm {norm})"
            )

    @classmethod
    def create(
        cls, device_id: str, seq: int, timestamp: datetime, ax: float, ay: float, az: float
    ) -> "AccelSample":
        return cls(device_id, seq, timestamp, ax, ay, az, magnitude_of(ax, ay, az))

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "seq": self.seq,
            "timestamp": format_timestamp(self.timestamp),
            "ax": self.ax,
            "ay": self.ay,
            "az": self.az,
            "magnitude": self.magnitude,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AccelSample":
        ax, ay, az = float(data["ax"]), float(data["ay"]), float(data["az"])
        norm = magnitude_of(ax, ay, az)
        if "magnitude" in data and data["magnitude"] is not None:
            given = float(data["magnitude"])
            if abs(given - norm) > WIRE_MAGNITUDE_REL_TOL * max(norm, 1.0):
                raise RejectedSampleError(
                    f"declared magnitude {given} does not match axes (norm {norm})"
                )
        return cls(
            device_id=str(data["device_id"]),
            seq=int(data["seq"]),
            timestamp=parse_timestamp(data["timestamp"]),
            ax=ax,
            ay=ay,
            az=az,
            magnitude=norm,
        )


class SampleWindow:
    """One device-hour (by default) of readings, stored as parallel arrays.

    Columns are ordered by (timestamp, seq). Array storage keeps hour-scale
    windows (hundreds of thousands of samples at 100 Hz) cheap to analyse;
    ``samples`` materialises :class:`AccelSample` objects on demand.
    """

    __slots__ = ("device_id", "window_start", "nominal_duration", "sample_rate_hz",
                 "times", "seqs", "ax", "ay", "az", "magnitudes")

    def __init__(
        self,
        device_id: str,
        window_start: datetime,
        times: np.ndarray,
        seqs: np.ndarray,
        ax: np.ndarray,
        ay: np.ndarray,
        az: np.ndarray,
        magnitudes: np.ndarray,
        nominal_duration: float = 3600.0,
        sample_rate_hz: float = 100.0,
    ) -> None:
        n = len(times)
        if not (len(seqs) == len(ax) == len(ay) == len(az) == len(magnitudes) == n):
            raise ValidationError("window columns have mismatched lengths")
        start = to_epoch(window_start)
        if n:
            if times[0] < start or times[-1] >= start + nominal_duration:
                raise ValidationError("samples fall outside the window span")
        order = np.lexsort((seqs, times))
        if not np.array_equal(order, np.arange(n)):
            times, seqs = times[order], seqs[order]
            ax, ay, az, magnitudes = ax[order], ay[order], az[order], magnitudes[order]
        self.device_id = device_id
        self.window_start = window_start
        self.nominal_duration = float(nominal_duration)
        self.sample_rate_hz = float(sample_rate_hz)
        self.times = np.asarray(times, dtype=np.float64)
        self.seqs = np.asarray(seqs, dtype=np.int64)
        self.ax = np.asarray(ax, dtype=np.float64)
        self.ay = np.asarray(ay, dtype=np.float64)
        self.az = np.asarray(az, dtype=np.float64)
        self.magnitudes = np.asarray(magnitudes, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.times)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SampleWindow):
            return NotImplemented
        return (
            self.device_id == other.device_id
            and self.window_start == other.window_start
            and self.nominal_duration == other.nominal_duration
            and self.sample_rate_hz == other.sample_rate_hz
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.seqs, other.seqs)
            and np.array_equal(self.ax, other.ax)
            and np.array_equal(self.ay, other.ay)
            and np.array_equal(self.az, other.az)
            and np.array_equal(self.magnitudes, other.magnitudes)
        )

    @property
    def duration_minutes(self) -> float:
        return self.nominal_duration / 60.0

    @property
    def samples(self) -> tuple[AccelSample, ...]:
        return tuple(
            AccelSample(
                self.device_id,
                int(self.seqs[i]),
                from_epoch(float(self.times[i])),
                float(self.ax[i]),
                float(self.ay[i]),
                float(self.az[i]),
                float(self.magnitudes[i]),
            )
            for i in range(len(self))
        )

    @classmethod
    def from_samples(
        cls,
        samples: Sequence[AccelSample],
        window_start: datetime,
        nominal_duration: float = 3600.0,
        sample_rate_hz: float = 100.0,
        device_id: str | None = None,
    ) -> "SampleWindow":
        if device_id is None:
            if not samples:
                raise ValidationError("cannot infer device_id from an empty window")
            device_id = samples[0].device_id
        if any(s.device_id != device_id for s in samples):
            raise ValidationError("window mixes samples from different devices")
        return cls(
            device_id,
            window_start,
            times=np.array([to_epoch(s.timestamp) for s in samples], dtype=np.float64),
            seqs=np.array([s.seq for s in samples], dtype=np.int64),
            ax=np.array([s.ax for s in samples], dtype=np.float64),
            ay=np.array([s.ay for s in samples], dtype=np.float64),
            az=np.array([s.az for s in samples], dtype=np.float64),
            magnitudes=np.array([s.magnitude for s in samples], dtype=np.float64),
            nominal_duration=nominal_duration,
            sample_rate_hz=sample_rate_hz,
        )

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "window_start": format_timestamp(self.window_start),
            "nominal_duration": self.nominal_duration,
            "sample_rate_hz": self.sample_rate_hz,
            "samples": [s.to_dict() for s in self.samples],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampleWindow":
        samples = [AccelSample.from_dict(s) for s in data["samples"]]
        return cls.from_samples(
            samples,
            window_start=parse_timestamp(data["window_start"]),
            nominal_duration=float(data["nominal_duration"]),
            sample_rate_hz=float(data["sample_rate_hz"]),
            device_id=str(data["device_id"]),
        )


@dataclass(frozen=True, slots=True)
class HealthStatus:
    """Per-palm display status; the level is derived from the likelihood."""

    level: HealthLevel
    likelihood: Likelihood
    updated_at: datetime

    def __post_init__(self) -> None:
        expected = level_for_likelihood(self.likelihood)
        if self.level != expected:
            raise ValidationError(
                f"level {self.level.value} does not match likelihood {self.likelihood.value}"
            )

    @property
    def color(self) -> str:
        return COLOR_FOR_LEVEL[self.level]

    @classmethod
    def from_likelihood(cls, likelihood: Likelihood, updated_at: datetime) -> "HealthStatus":
        likelihood = Likelihood(likelihood)
        return cls(level_for_likelihood(likelihood), likelihood, updated_at)

    def to_dict(self) -> dict:
        return {
            "level": self.level.value,
            "likelihood": self.likelihood.value,
            "updated_at": format_timestamp(self.updated_at),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "HealthStatus":
        return cls(
            HealthLevel(data["level"]),
            Likelihood(data["likelihood"]),
            parse_timestamp(data["updated_at"]),
        )


@dataclass(frozen=True, slots=True)
class DeviceRecord:
    """A sensor node mounted on one palm.

    Coordinates may be None for gateway-auto-detected devices whose
    position has not been surveyed yet.
    """

    device_id: str
    farm_id: str
    cluster_id: str
    latitude: float | None
    longitude: float | None
    sensor_placement: Placement
    sensors: tuple[str, ...]
    status: HealthStatus
    created_by: CreatedBy

    def __post_init__(self) -> None:
        if self.latitude is not None and not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if self.longitude is not None and not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")

    def with_status(self, status: HealthStatus) -> "DeviceRecord":
        return replace(self, status=status)

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "farm_id": self.farm_id,
            "cluster_id": self.cluster_id,
            "latitude": self.latitude,
            "longitude": self.longitude,
            "sensor_placement": self.sensor_placement.value,
            "sensors": list(self.sensors),
            "status": self.status.to_dict(),
            "created_by": self.created_by.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DeviceRecord":
        return cls(
            device_id=str(data["device_id"]),
            farm_id=str(data["farm_id"]),
            cluster_id=str(data["cluster_id"]),
            latitude=None if data.get("latitude") is None else float(data["latitude"]),
            longitude=None if data.get("longitude") is None else float(data["longitude"]),
            sensor_placement=Placement(data["sensor_placement"]),
            sensors=tuple(data.get("sensors", ())),
            status=HealthStatus.from_dict(data["status"]),
            created_by=CreatedBy(data["created_by"]),
        )


@dataclass(frozen=True, slots=True)
class FarmRecord:
    """A farm: owners plus the clusters (one gateway each) it is split into."""

    farm_id: str
    name: str
    owner_user_ids: tuple[str, ...]
    cluster_ids: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "farm_id": self.farm_id,
            "name": self.name,
            "owner_user_ids": list(self.owner_user_ids),
            "cluster_ids": list(self.cluster_ids),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FarmRecord":
        return cls(
            farm_id=str(data["farm_id"]),
            name=str(data["name"]),
            owner_user_ids=tuple(data.get("owner_user_ids", ())),
            cluster_ids=tuple(data.get("cluster_ids", ())),
        )


@dataclass(frozen=True, slots=True)
class Digest:
    """Edge-computed summary of one device over one aggregation interval."""

    device_id: str
    window_start: datetime
    count: int
    min: float
    mean: float
    max: float

    def __post_init__(self) -> None:
        if self.count <= 0:
            raise ValidationError("digest count must be positive")
        if not self.min <= self.mean <= self.max:
            raise ValidationError(
                f"digest ordering violated: min {self.min}, mean {self.mean}, max {self.max}"
            )

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "window_start": format_timestamp(self.window_start),
            "count": self.count,
            "min": self.min,
            "mean": self.mean,
            "max": self.max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Digest":
        return cls(
            device_id=str(data["device_id"]),
            window_start=parse_timestamp(data["window_start"]),
            count=int(data["count"]),
            min=float(data["min"]),
            mean=float(data["mean"]),
            max=float(data["max"]),
        )
