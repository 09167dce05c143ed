"""Descriptive-statistics fingerprinting of magnitude windows.

Healthy palms produce tight, symmetric magnitude distributions around
gravity; larval activity widens them and nudges the centre. The summary
here captures the usual central-tendency measures plus box-plot whisker
bounds, whose span (whisker_high - whisker_low, algebraically 4*IQR) turned
out to be one of the stronger single discriminators.

Quartiles interpolate linearly between the closest order statistics, the
standard deviation uses the sample (n-1) denominator, and mean/std are
accumulated with exact float summation so results are reproducible to the
bit across platforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, InsufficientDataError, ValidationError
from .model import SampleWindow

DEFAULT_BIN_COUNT = 50


def _values(source: SampleWindow | Sequence[float] | np.ndarray) -> np.ndarray:
    if isinstance(source, SampleWindow):
        return source.magnitudes
    return np.asarray(source, dtype=np.float64)


def _lerp_quantile(sorted_values: np.ndarray, q: float) -> float:
    """Linear interpolation between closest order statistics."""
    h = (len(sorted_values) - 1) * q
    lo = math.floor(h)
    hi = math.ceil(h)
    a = float(sorted_values[lo])
    if hi == lo:
        return a
    return a + (float(sorted_values[hi]) - a) * (h - lo)


def whisker_span_from_quartiles(q25: float, q75: float) -> float:
    """Distance between box-plot whiskers: (q75 + 1.5*IQR) - (q25 - 1.5*IQR) = 4*IQR."""
    if q75 < q25:
        raise ValidationError(f"q75 {q75} below q25 {q25}")
    return 4.0 * (q75 - q25)


@dataclass(frozen=True, slots=True)
class StatSummary:
    """Central-tendency measures plus whisker bounds for one window."""

    n: int
    mean: float
    std: float
    median: float
    min: float
    max: float
    q25: float
    q75: float
    iqr: float
    whisker_low: float
    whisker_high: float
    whisker_span: float
    duration_minutes: float

    CSV_HEADER = (
        "sample_size,mean,std,median,min,q25,q50,q75,max,"
        "whisker_low,whisker_high,whisker_span,duration_minutes"
    )

    def csv_row(self) -> str:
        # Column order mirrors the usual central-tendency table layout,
        # with the median repeated as the 50th percentile.
        return ",".join(
            repr(v)
            for v in (
                self.n, self.mean, self.std, self.median, self.min,
                self.q25, self.median, self.q75, self.max,
                self.whisker_low, self.whisker_high, self.whisker_span,
                self.duration_minutes,
            )
        )

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mean": self.mean,
            "std": self.std,
            "median": self.median,
            "min": self.min,
            "max": self.max,
            "q25": self.q25,
            "q75": self.q75,
            "iqr": self.iqr,
            "whisker_low": self.whisker_low,
            "whisker_high": self.whisker_high,
            "whisker_span": self.whisker_span,
            "duration_minutes": self.duration_minutes,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "StatSummary":
        return cls(**{k: (int(data[k]) if k == "n" else float(data[k])) for k in (
            "n", "mean", "std", "median", "min", "max", "q25", "q75", "iqr",
            "whisker_low", "whisker_high", "whisker_span", "duration_minutes",
        )})

    @classmethod
    def from_quartile_table(
        cls,
        n: int,
        mean: float,
        std: float,
        median: float,
        minimum: float,
        q25: float,
        q75: float,
        maximum: float,
        duration_minutes: float,
    ) -> "StatSummary":
        """Build a summary from already-tabulated measures (rounded is fine)."""
        iqr = q75 - q25
        return cls(
            n=n, mean=mean, std=std, median=median, min=minimum, max=maximum,
            q25=q25, q75=q75, iqr=iqr,
            whisker_low=q25 - 1.5 * iqr,
            whisker_high=q75 + 1.5 * iqr,
            whisker_span=whisker_span_from_quartiles(q25, q75),
            duration_minutes=duration_minutes,
        )


def summarize(
    source: SampleWindow | Sequence[float] | np.ndarray,
    duration_minutes: float | None = None,
) -> StatSummary:
    """Compute the full summary for one window (needs at least 2 samples)."""
    values = _values(source)
    n = len(values)
    if n < 2:
        raise InsufficientDataError(f"summary needs at least 2 samples, got {n}")
    if duration_minutes is None:
        duration_minutes = (
            source.duration_minutes if isinstance(source, SampleWindow) else 0.0
        )
    ordered = np.sort(values)
    mean = math.fsum(ordered) / n
    std = math.sqrt(math.fsum((float(v) - mean) ** 2 for v in ordered) / (n - 1))
    q25 = _lerp_quantile(ordered, 0.25)
    median = _lerp_quantile(ordered, 0.5)
    q75 = _lerp_quantile(ordered, 0.75)
    iqr = q75 - q25
    return StatSummary(
        n=n,
        mean=mean,
        std=std,
        median=median,
        min=float(ordered[0]),
        max=float(ordered[-1]),
        q25=q25,
        q75=q75,
        iqr=iqr,
        whisker_low=q25 - 1.5 * iqr,
        whisker_high=q75 + 1.5 * iqr,
        whisker_span=whisker_span_from_quartiles(q25, q75),
        duration_minutes=float(duration_minutes),
    )


def outlier_count(source: SampleWindow | Sequence[float] | np.ndarray) -> int:
    """Number of box-plot outliers (values beyond the whiskers)."""
    values = _values(source)
    s = summarize(values)
    return int(np.count_nonzero((values < s.whisker_low) | (values > s.whisker_high)))


@dataclass(frozen=True)
class HistogramResult:
    """Uniform-bin histogram over [data min, data max]."""

    bin_count: int
    bin_edges: np.ndarray  # length bin_count + 1
    counts: np.ndarray  # length bin_count

    def to_dict(self) -> dict:
        return {
            "bin_count": self.bin_count,
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
        }

    def csv_rows(self) -> list[tuple[float, float, int]]:
        return [
            (float(self.bin_edges[i]), float(self.bin_edges[i + 1]), int(self.counts[i]))
            for i in range(self.bin_count)
        ]


def histogram(
    source: SampleWindow | Sequence[float] | np.ndarray,
    bin_count: int = DEFAULT_BIN_COUNT,
) -> HistogramResult:
    """Histogram with ``bin_count`` uniform bins; the max lands in the last bin.

    An all-equal input has zero range, which is widened symmetrically to
    [v - 0.5, v + 0.5] so bins keep nonzero width and counts still conserve n.
    """
    if bin_count < 1:
        raise ConfigurationError("bin_count must be at least 1")
    values = _values(source)
    if len(values) == 0:
        raise InsufficientDataError("histogram needs at least 1 sample")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bin_count + 1)
    counts, _ = np.histogram(values, bins=edges)
    return HistogramResult(bin_count, edges, counts)


@dataclass(frozen=True)
class EcdfResult:
    """Empirical CDF evaluated at each distinct sorted value."""

    values: np.ndarray
    fractions: np.ndarray

    def to_dict(self) -> dict:
        return {"values": self.values.tolist(), "fractions": self.fractions.tolist()}

    def csv_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.values.tolist(), self.fractions.tolist()))

    def evaluate(self, points: Sequence[float] | np.ndarray) -> np.ndarray:
        """Step-function value F(p) = fraction of samples <= p."""
        idx = np.searchsorted(self.values, np.asarray(points, dtype=np.float64), side="right")
        padded = np.concatenate(([0.0], self.fractions))
        return padded[idx]


def ecdf(source: SampleWindow | Sequence[float] | np.ndarray) -> EcdfResult:
    """F(v) = (#samples <= v) / n at each distinct sorted value."""
    values = _values(source)
    n = len(values)
    if n == 0:
        raise InsufficientDataError("ecdf needs at least 1 sample")
    distinct, counts = np.unique(values, return_counts=True)
    fractions = np.cumsum(counts) / n
    return EcdfResult(distinct, fractions)


@dataclass(frozen=True, slots=True)
class DistributionComparison:
    """Before/after distribution drift measures."""

    ks_statistic: float
    mean_shift: float
    spread_ratio: float

    def to_dict(self) -> dict:
        return {
            "ks_statistic": self.ks_statistic,
            "mean_shift": self.mean_shift,
            "spread_ratio": self.spread_ratio,
        }


def _ecdf_moments(e: EcdfResult) -> tuple[float, float]:
    weights = np.diff(np.concatenate(([0.0], e.fractions)))
    mean = float(np.dot(weights, e.values))
    var = float(np.dot(weights, (e.values - mean) ** 2))
    return mean, math.sqrt(var)


def compare_distributions(before: EcdfResult, after: EcdfResult) -> DistributionComparison:
    """Sup-distance between the two ECDFs plus mean shift and spread ratio.

    ``mean_shift`` is after minus before; ``spread_ratio`` is the population
    std of the after data over that of the before data (both reconstructed
    from the ECDF weights).
    """
    if len(before.values) == 0 or len(after.values) == 0:
        raise InsufficientDataError("cannot compare empty distributions")
    grid = np.union1d(before.values, after.values)
    ks = float(np.max(np.abs(before.evaluate(grid) - after.evaluate(grid))))
    mean_b, std_b = _ecdf_moments(before)
    mean_a, std_a = _ecdf_moments(after)
    ratio = std_a / std_b if std_b > 0 else math.inf
    return DistributionComparison(ks_statistic=ks, mean_shift=mean_a - mean_b, spread_ratio=ratio)
