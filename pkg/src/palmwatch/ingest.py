"""Raw telemetry log parsing, outlier cleaning, and hourly segmentation.

Field logs are lossy: rows can be truncated or garbled, and whole stretches
of samples go missing. Parsing therefore skips and counts malformed rows
instead of aborting, and windowing never assumes gap-free streams.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import ConfigurationError, CorruptInputError
from .model import (
    AccelSample,
    SampleWindow,
    from_epoch,
    magnitude_of,
    parse_timestamp,
    to_epoch,
)

# Cleaning bounds for combined acceleration, m/s^2. Readings at rest sit near
# gravity; anything outside this range is sensor glitch or handling noise.
DEFAULT_LOWER_BOUND = 6.0
DEFAULT_UPPER_BOUND = 17.0

CSV_COLUMNS = ("device_id", "seq", "timestamp", "ax", "ay", "az", "magnitude")
# Relative tolerance when a log row declares its own magnitude column.
CSV_MAGNITUDE_REL_TOL = 1e-6


@dataclass(frozen=True, slots=True)
class CleaningReport:
    """Bookkeeping for rows dropped during parsing or cleaning."""

    total_in: int
    kept: int
    dropped_low: int = 0
    dropped_high: int = 0
    dropped_malformed: int = 0

    def __post_init__(self) -> None:
        if self.total_in != self.kept + self.dropped_low + self.dropped_high + self.dropped_malformed:
            raise ValueError("cleaning report counts do not add up")

    def to_dict(self) -> dict:
        return {
            "total_in": self.total_in,
            "kept": self.kept,
            "dropped_low": self.dropped_low,
            "dropped_high": self.dropped_high,
            "dropped_malformed": self.dropped_malformed,
        }


def _open_lines(source: str | Path | IO) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from fh
        return
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    yield from io.StringIO(data)


def _parse_csv_row(row: Sequence[str]) -> AccelSample:
    if len(row) not in (6, 7):
        raise ValueError(f"expected 6 or 7 columns, got {len(row)}")
    device_id = row[0].strip()
    if not device_id:
        raise ValueError("empty device id")
    seq = int(row[1])
    ts = parse_timestamp(row[2].strip())
    ax, ay, az = float(row[3]), float(row[4]), float(row[5])
    norm = magnitude_of(ax, ay, az)
    if len(row) == 7 and row[6].strip():
        declared = float(row[6])
        if abs(declared - norm) > CSV_MAGNITUDE_REL_TOL * max(norm, 1.0):
            raise ValueError(f"magnitude column {declared} disagrees with norm {norm}")
    return AccelSample(device_id, seq, ts, ax, ay, az, norm)


def parse_log(
    source: str | Path | IO, format: str = "csv"
) -> tuple[list[AccelSample], CleaningReport]:
    """Parse a telemetry log into samples plus a malformed-row count.

    ``format`` is ``"csv"`` (columns ``device_id,seq,timestamp,ax,ay,az``
    with an optional validated ``magnitude`` column) or ``"jsonl"`` (one
    canonical sample object per line). Blank lines are ignored; a leading
    CSV header row is skipped. Raises :class:`CorruptInputError` when more
    than half of the non-blank rows fail to parse.
    """
    if format not in ("csv", "jsonl"):
        raise ConfigurationError(f"unknown log format {format!r}")
    samples: list[AccelSample] = []
    malformed = 0
    total = 0
    for line in _open_lines(source):
        line = line.strip()
        if not line:
            continue
        if format == "csv" and line.startswith("device_id,"):
            continue  # header
        total += 1
        try:
            if format == "csv":
                row = next(csv.reader([line]))
                samples.append(_parse_csv_row(row))
            else:
                samples.append(AccelSample.from_dict(json.loads(line)))
        except Exception:
            malformed += 1
    if total and malformed * 2 > total:
        raise CorruptInputError(
            f"{malformed} of {total} rows malformed; refusing to treat input as a telemetry log"
        )
    report = CleaningReport(total_in=total, kept=len(samples), dropped_malformed=malformed)
    return samples, report


def clean_outliers(
    samples: Sequence[AccelSample],
    lower: float = DEFAULT_LOWER_BOUND,
    upper: float = DEFAULT_UPPER_BOUND,
) -> tuple[list[AccelSample], CleaningReport]:
    """Drop samples whose magnitude falls outside [lower, upper] (inclusive).

    Order is preserved and the operation is idempotent. ``lower`` must be
    strictly below ``upper``.
    """
    if not (math.isfinite(lower) and math.isfinite(upper)):
        raise ConfigurationError("cleaning bounds must be finite")
    if lower >= upper:
        raise ConfigurationError(f"lower bound {lower} must be below upper bound {upper}")
    kept: list[AccelSample] = []
    low = high = 0
    for s in samples:
        if s.magnitude < lower:
            low += 1
        elif s.magnitude > upper:
            high += 1
        else:
            kept.append(s)
    report = CleaningReport(
        total_in=len(samples), kept=len(kept), dropped_low=low, dropped_high=high
    )
    return kept, report


def windowize(
    samples: Sequence[AccelSample],
    window_seconds: float = 3600.0,
    sample_rate_hz: float = 100.0,
) -> list[SampleWindow]:
    """Split samples into fixed windows of ``window_seconds``.

    Each sample lands in exactly one window, keyed by
    ``floor(epoch_timestamp / window_seconds)``; empty windows are simply
    absent. Multiple devices may be mixed in the input; windows are grouped
    per device and returned ordered by (device_id, window_start).
    """
    if window_seconds <= 0:
        raise ConfigurationError("window_seconds must be positive")
    buckets: dict[tuple[str, int], list[AccelSample]] = {}
    for s in samples:
        idx = int(to_epoch(s.timestamp) // window_seconds)
        buckets.setdefault((s.device_id, idx), []).append(s)
    windows = []
    for (device_id, idx) in sorted(buckets):
        start = from_epoch(idx * window_seconds)
        windows.append(
            SampleWindow.from_samples(
                buckets[(device_id, idx)],
                window_start=start,
                nominal_duration=window_seconds,
                sample_rate_hz=sample_rate_hz,
                device_id=device_id,
            )
        )
    return windows


def window_magnitude_bounds_ok(
    windows: Iterable[SampleWindow],
    lower: float = DEFAULT_LOWER_BOUND,
    upper: float = DEFAULT_UPPER_BOUND,
) -> bool:
    """True when every magnitude in every window lies inside the clean range."""
    return all(
        len(w) == 0 or (w.magnitudes.min() >= lower and w.magnitudes.max() <= upper)
        for w in windows
    )
