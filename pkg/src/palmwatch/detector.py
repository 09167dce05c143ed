"""Infestation likelihood from spectral and statistical evidence.

Each device keeps a per-placement baseline profile built from windows known
to be healthy. A fresh window is then scored against that baseline by four
independent indicators:

* ``fft_level``     - fraction of non-DC FFT amplitude bins above an
                      absolute threshold (sustained broadband energy),
* ``psd_pad``       - peaks-average difference of the 0-10 Hz Welch PSD
                      versus the baseline peaks (low-frequency energy gain),
* ``whisker_ratio`` - box-plot whisker span relative to baseline
                      (distribution widening),
* ``mean_shift``    - magnitude mean drift measured in baseline sigmas.

The fired-indicator count maps to a three-level likelihood: 0-1 Low,
2 Medium, 3-4 High. Every indicator records its raw value even when it
does not fire, so operators can see near-misses.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Mapping, Sequence

import numpy as np

from .errors import ComparisonError, ConfigurationError, InsufficientDataError
from .model import (
    DeviceRecord,
    Likelihood,
    Placement,
    SampleWindow,
    format_timestamp,
    from_epoch,
    parse_timestamp,
    to_epoch,
)
from .spectral import (
    DEFAULT_BAND_HIGH_HZ,
    DEFAULT_BAND_LOW_HZ,
    DEFAULT_OVERLAP_FRACTION,
    DEFAULT_PEAK_THRESHOLD,
    DEFAULT_SEGMENT_LENGTH,
    PeakSet,
    band_slice,
    fft_spectrum,
    peaks_average_difference,
    psd_peaks,
    spectrum_peaks,
    welch_psd,
)
from .stats import StatSummary, summarize

INDICATOR_NAMES = ("fft_level", "psd_pad", "whisker_ratio", "mean_shift")


@dataclass(frozen=True, slots=True)
class DetectorConfig:
    """Flat, file-loadable tuning knobs for the four indicators."""

    fft_abs_threshold: float = 0.004
    fft_fraction: float = 0.10
    pad_min: float = 0.0
    whisker_ratio_min: float = 1.3
    mean_shift_sigmas: float = 0.5
    peak_threshold_fraction: float = DEFAULT_PEAK_THRESHOLD
    psd_segment_length: int = DEFAULT_SEGMENT_LENGTH
    psd_overlap_fraction: float = DEFAULT_OVERLAP_FRACTION
    band_low_hz: float = DEFAULT_BAND_LOW_HZ
    band_high_hz: float = DEFAULT_BAND_HIGH_HZ

    def to_dict(self) -> dict:
        return {
            "fft_abs_threshold": self.fft_abs_threshold,
            "fft_fraction": self.fft_fraction,
            "pad_min": self.pad_min,
            "whisker_ratio_min": self.whisker_ratio_min,
            "mean_shift_sigmas": self.mean_shift_sigmas,
            "peak_threshold_fraction": self.peak_threshold_fraction,
            "psd_segment_length": self.psd_segment_length,
            "psd_overlap_fraction": self.psd_overlap_fraction,
            "band_low_hz": self.band_low_hz,
            "band_high_hz": self.band_high_hz,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DetectorConfig":
        known = {f: data[f] for f in cls.__dataclass_fields__ if f in data}
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown detector settings: {sorted(unknown)}")
        cfg = cls(**known)
        if cfg.psd_segment_length < 2:
            raise ConfigurationError("psd_segment_length must be at least 2")
        if not 0 < cfg.fft_fraction:
            raise ConfigurationError("fft_fraction must be positive")
        return cfg


@dataclass(frozen=True, slots=True)
class IndicatorResult:
    """Outcome of one indicator against one window."""

    fired: bool
    value: float | None
    threshold: float
    evaluable: bool = True

    def to_dict(self) -> dict:
        return {
            "fired": self.fired,
            "value": self.value,
            "threshold": self.threshold,
            "evaluable": self.evaluable,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "IndicatorResult":
        return cls(
            fired=bool(data["fired"]),
            value=None if data["value"] is None else float(data["value"]),
            threshold=float(data["threshold"]),
            evaluable=bool(data.get("evaluable", True)),
        )


def classify(fired_count: int) -> Likelihood:
    """Map the number of fired indicators to a likelihood level."""
    if not 0 <= fired_count <= len(INDICATOR_NAMES):
        raise ConfigurationError(f"fired_count {fired_count} outside 0..4")
    if fired_count <= 1:
        return Likelihood.LOW
    if fired_count == 2:
        return Likelihood.MEDIUM
    return Likelihood.HIGH


@dataclass(frozen=True, slots=True)
class HealthAssessment:
    """Per-window verdict with the evidence that produced it."""

    device_id: str
    window_start: datetime
    indicators: Mapping[str, IndicatorResult]
    fired_count: int
    likelihood: Likelihood

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "window_start": format_timestamp(self.window_start),
            "indicators": {k: v.to_dict() for k, v in self.indicators.items()},
            "fired_count": self.fired_count,
            "likelihood": self.likelihood.value,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "HealthAssessment":
        return cls(
            device_id=str(data["device_id"]),
            window_start=parse_timestamp(data["window_start"]),
            indicators={
                k: IndicatorResult.from_dict(v) for k, v in data["indicators"].items()
            },
            fired_count=int(data["fired_count"]),
            likelihood=Likelihood(data["likelihood"]),
        )


def _assemble(device_id: str, window_start: datetime,
              indicators: dict[str, IndicatorResult]) -> HealthAssessment:
    fired = sum(1 for r in indicators.values() if r.fired)
    return HealthAssessment(
        device_id=device_id,
        window_start=window_start,
        indicators=indicators,
        fired_count=fired,
        likelihood=classify(fired),
    )


@dataclass(frozen=True, slots=True)
class BaselineProfile:
    """Healthy-state reference for one device and placement."""

    device_id: str
    placement: Placement
    stat: StatSummary
    psd_peaks: PeakSet
    fft_peaks: PeakSet
    established_at: datetime
    source_window_count: int

    def to_dict(self) -> dict:
        return {
            "device_id": self.device_id,
            "placement": self.placement.value,
            "stat": self.stat.to_dict(),
            "psd_peaks": self.psd_peaks.to_dict(),
            "fft_peaks": self.fft_peaks.to_dict(),
            "established_at": format_timestamp(self.established_at),
            "source_window_count": self.source_window_count,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "BaselineProfile":
        return cls(
            device_id=str(data["device_id"]),
            placement=Placement(data["placement"]),
            stat=StatSummary.from_dict(data["stat"]),
            psd_peaks=PeakSet.from_dict(data["psd_peaks"]),
            fft_peaks=PeakSet.from_dict(data["fft_peaks"]),
            established_at=parse_timestamp(data["established_at"]),
            source_window_count=int(data["source_window_count"]),
        )


def _band_psd_peaks(values: np.ndarray, sample_rate_hz: float,
                    config: DetectorConfig) -> PeakSet:
    psd = welch_psd(
        values,
        segment_length=config.psd_segment_length,
        overlap_fraction=config.psd_overlap_fraction,
        sample_rate_hz=sample_rate_hz,
    )
    return psd_peaks(
        band_slice(psd, config.band_low_hz, config.band_high_hz),
        config.peak_threshold_fraction,
    )


def build_baseline(
    device: DeviceRecord,
    healthy_windows: Sequence[SampleWindow],
    config: DetectorConfig | None = None,
) -> BaselineProfile:
    """Profile a device from windows captured before any larvae were present.

    Statistics and spectra are computed over the concatenation of all the
    given windows, so short captures pool into one usable reference.
    """
    config = config or DetectorConfig()
    if not healthy_windows:
        raise InsufficientDataError("baseline needs at least one healthy window")
    for w in healthy_windows:
        if w.device_id != device.device_id:
            raise ComparisonError(
                f"window from {w.device_id} cannot profile device {device.device_id}"
            )
    rates = {w.sample_rate_hz for w in healthy_windows}
    if len(rates) != 1:
        raise ComparisonError(f"baseline windows mix sample rates {sorted(rates)}")
    values = np.concatenate([w.magnitudes for w in healthy_windows])
    minutes = sum(w.duration_minutes for w in healthy_windows)
    rate = rates.pop()
    established = from_epoch(
        max(to_epoch(w.window_start) + w.nominal_duration for w in healthy_windows)
    )
    return BaselineProfile(
        device_id=device.device_id,
        placement=device.sensor_placement,
        stat=summarize(values, duration_minutes=minutes),
        psd_peaks=_band_psd_peaks(values, rate, config),
        fft_peaks=spectrum_peaks(
            fft_spectrum(values, sample_rate_hz=rate), config.peak_threshold_fraction
        ),
        established_at=established,
        source_window_count=len(healthy_windows),
    )


def _stat_indicators(
    window_stat: StatSummary, baseline_stat: StatSummary, config: DetectorConfig
) -> tuple[IndicatorResult, IndicatorResult]:
    if baseline_stat.whisker_span > 0:
        ratio = window_stat.whisker_span / baseline_stat.whisker_span
    else:
        ratio = float("inf") if window_stat.whisker_span > 0 else 1.0
    whisker = IndicatorResult(
        fired=ratio >= config.whisker_ratio_min,
        value=ratio,
        threshold=config.whisker_ratio_min,
    )
    shift = abs(window_stat.mean - baseline_stat.mean)
    shift_threshold = config.mean_shift_sigmas * baseline_stat.std
    mean_shift = IndicatorResult(
        fired=shift >= shift_threshold, value=shift, threshold=shift_threshold
    )
    return whisker, mean_shift


def assess_window(
    window: SampleWindow,
    baseline: BaselineProfile,
    config: DetectorConfig | None = None,
    placement: Placement | None = None,
) -> HealthAssessment:
    """Score one cleaned window against the device's healthy baseline.

    The window must come from the same device and placement the baseline
    was built for; pass ``placement`` when the caller knows the sensor's
    current position so the mismatch can be rejected. A window shorter than
    one PSD segment leaves the PSD indicator marked non-evaluable rather
    than firing it.
    """
    config = config or DetectorConfig()
    if window.device_id != baseline.device_id:
        raise ComparisonError(
            f"window from {window.device_id} assessed against baseline for {baseline.device_id}"
        )
    if placement is not None and Placement(placement) != baseline.placement:
        raise ComparisonError(
            f"window captured {Placement(placement).value} but baseline is "
            f"{baseline.placement.value}"
        )
    spectrum = fft_spectrum(window)
    above = np.count_nonzero(spectrum.amplitudes[1:] > config.fft_abs_threshold)
    fraction = above / max(1, len(spectrum.amplitudes) - 1)
    fft_level = IndicatorResult(
        fired=fraction > config.fft_fraction,
        value=float(fraction),
        threshold=config.fft_fraction,
    )
    if len(window) >= config.psd_segment_length:
        current = _band_psd_peaks(window.magnitudes, window.sample_rate_hz, config)
        pad = peaks_average_difference(current, baseline.psd_peaks)
        psd_pad = IndicatorResult(
            fired=pad > config.pad_min, value=pad, threshold=config.pad_min
        )
    else:
        psd_pad = IndicatorResult(
            fired=False, value=None, threshold=config.pad_min, evaluable=False
        )
    whisker, mean_shift = _stat_indicators(summarize(window), baseline.stat, config)
    return _assemble(window.device_id, window.window_start, {
        "fft_level": fft_level,
        "psd_pad": psd_pad,
        "whisker_ratio": whisker,
        "mean_shift": mean_shift,
    })


def assess_from_summaries(
    device_id: str,
    window_start: datetime,
    window_stat: StatSummary,
    baseline_stat: StatSummary,
    config: DetectorConfig | None = None,
) -> HealthAssessment:
    """Statistics-only assessment when no raw window is available.

    Only the whisker-ratio and mean-shift indicators can be evaluated from
    tabulated summaries; the spectral indicators are marked non-evaluable,
    so the strongest possible verdict here is Medium.
    """
    config = config or DetectorConfig()
    whisker, mean_shift = _stat_indicators(window_stat, baseline_stat, config)
    skipped = IndicatorResult(fired=False, value=None, threshold=0.0, evaluable=False)
    return _assemble(device_id, window_start, {
        "fft_level": replace(skipped, threshold=config.fft_fraction),
        "psd_pad": replace(skipped, threshold=config.pad_min),
        "whisker_ratio": whisker,
        "mean_shift": mean_shift,
    })


class BaselineStore:
    """Thread-safe per-device baseline registry.

    Reads are frequent (every incoming window); replacement happens only on
    recalibration, so a single lock around a dict copy-on-read is plenty.
    """

    def __init__(self) -> None:
        self._profiles: dict[str, BaselineProfile] = {}
        self._lock = threading.RLock()

    def get(self, device_id: str) -> BaselineProfile | None:
        with self._lock:
            return self._profiles.get(device_id)

    def replace(self, profile: BaselineProfile) -> None:
        with self._lock:
            self._profiles[profile.device_id] = profile

    def remove(self, device_id: str) -> None:
        with self._lock:
            self._profiles.pop(device_id, None)

    def device_ids(self) -> list[str]:
        with self._lock:
            return sorted(self._profiles)
