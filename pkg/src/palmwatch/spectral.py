"""Frequency-domain fingerprinting of vibration magnitude streams.

Two complementary views are produced for each window of data:

* a Hanning-windowed one-sided FFT amplitude spectrum, amplitude-corrected
  so a sustained unit sine reads ~1.0, and
* a Welch power spectral density estimate (averaged overlapped segment
  periodograms, 2048-point segments by default).

Larval activity shows up as extra energy below roughly 10 Hz, so spectra
are usually restricted to that band before extracting peaks. The mean of
the surviving peaks, compared between two captures, is the peaks-average
difference (PAD): positive PAD means the later capture carries more
low-frequency energy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    ComparisonError,
    ConfigurationError,
    EmptyBandError,
    InsufficientDataError,
)
from .model import SampleWindow

DEFAULT_SEGMENT_LENGTH = 2048
DEFAULT_OVERLAP_FRACTION = 0.5
DEFAULT_PEAK_THRESHOLD = 0.6
DEFAULT_BAND_LOW_HZ = 0.0
DEFAULT_BAND_HIGH_HZ = 10.0


def _values_and_rate(
    source: SampleWindow | Sequence[float] | np.ndarray,
    sample_rate_hz: float | None,
) -> tuple[np.ndarray, float]:
    if isinstance(source, SampleWindow):
        return source.magnitudes, source.sample_rate_hz
    if sample_rate_hz is None:
        raise ConfigurationError("sample_rate_hz is required for bare value arrays")
    return np.asarray(source, dtype=np.float64), float(sample_rate_hz)


def hanning_window(n: int) -> np.ndarray:
    """Raised-cosine taper w[k] = 0.5 - 0.5*cos(2*pi*k/(n-1)).

    Symmetric, zero at both ends, maximal at the centre. n == 1 returns
    [1.0] so a degenerate window passes data through unchanged.
    """
    if n < 1:
        raise ConfigurationError("window length must be at least 1")
    if n == 1:
        return np.ones(1)
    k = np.arange(n)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * k / (n - 1))


def next_pow2(n: int) -> int:
    """Smallest power of two >= n (minimum 2)."""
    if n <= 2:
        return 2
    return 1 << (n - 1).bit_length()


@dataclass(frozen=True)
class SpectrumResult:
    """One-sided amplitude spectrum with a max-normalised companion."""

    sample_rate_hz: float
    n_fft: int
    freqs: np.ndarray
    amplitudes: np.ndarray
    normalized: np.ndarray

    def __post_init__(self) -> None:
        if not (len(self.freqs) == len(self.amplitudes) == len(self.normalized)):
            raise ConfigurationError("spectrum columns have mismatched lengths")

    def to_dict(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "n_fft": self.n_fft,
            "freqs": self.freqs.tolist(),
            "amplitudes": self.amplitudes.tolist(),
            "normalized": self.normalized.tolist(),
        }

    def csv_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.freqs.tolist(), self.amplitudes.tolist()))


@dataclass(frozen=True)
class PsdResult:
    """Welch power spectral density, (m/s^2)^2 per Hz."""

    sample_rate_hz: float
    segment_length: int
    overlap_fraction: float
    freqs: np.ndarray
    power_density: np.ndarray

    def to_dict(self) -> dict:
        return {
            "sample_rate_hz": self.sample_rate_hz,
            "segment_length": self.segment_length,
            "overlap_fraction": self.overlap_fraction,
            "freqs": self.freqs.tolist(),
            "power_density": self.power_density.tolist(),
        }

    def csv_rows(self) -> list[tuple[float, float]]:
        return list(zip(self.freqs.tolist(), self.power_density.tolist()))


@dataclass(frozen=True)
class PeakSet:
    """Spectral peaks at or above a fraction of the spectrum maximum."""

    threshold_fraction: float
    peaks: tuple[tuple[float, float], ...]  # (freq_hz, value)
    peak_average: float

    def to_dict(self) -> dict:
        return {
            "threshold_fraction": self.threshold_fraction,
            "peaks": [[f, v] for f, v in self.peaks],
            "peak_average": self.peak_average,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PeakSet":
        return cls(
            threshold_fraction=float(data["threshold_fraction"]),
            peaks=tuple((float(f), float(v)) for f, v in data["peaks"]),
            peak_average=float(data["peak_average"]),
        )


def fft_spectrum(
    source: SampleWindow | Sequence[float] | np.ndarray,
    sample_rate_hz: float | None = None,
    detrend: bool = True,
) -> SpectrumResult:
    """Hanning-windowed one-sided amplitude spectrum of a magnitude stream.

    The mean is subtracted first (unless ``detrend`` is false) so that the
    gravity offset near 9.8 m/s^2 does not bury the sub-unit structure of
    interest. The transform length is the next power of two at or above the
    sample count (zero-padded), keeping bin spacing comparable across
    variable-length windows. Amplitudes are corrected by 2/sum(w) so a
    sustained unit sine reads ~1.0; the DC and Nyquist bins take 1/sum(w)
    since they have no mirrored half.
    """
    x, fs = _values_and_rate(source, sample_rate_hz)
    n = len(x)
    if n == 0:
        raise InsufficientDataError("cannot take the spectrum of an empty window")
    if not np.all(np.isfinite(x)):
        raise InsufficientDataError("window contains non-finite magnitudes")
    if detrend:
        x = x - x.mean()
    w = hanning_window(n)
    wsum = w.sum() if n > 1 else 1.0
    n_fft = next_pow2(n)
    spectrum = np.fft.rfft(w * x, n_fft)
    amplitudes = np.abs(spectrum) * (2.0 / wsum)
    amplitudes[0] *= 0.5
    amplitudes[-1] *= 0.5
    freqs = np.fft.rfftfreq(n_fft, d=1.0 / fs)
    peak = amplitudes.max()
    normalized = amplitudes / peak if peak > 0 else np.zeros_like(amplitudes)
    return SpectrumResult(fs, n_fft, freqs, amplitudes, normalized)


def welch_psd(
    source: SampleWindow | Sequence[float] | np.ndarray,
    segment_length: int = DEFAULT_SEGMENT_LENGTH,
    overlap_fraction: float = DEFAULT_OVERLAP_FRACTION,
    detrend: bool = True,
    sample_rate_hz: float | None = None,
) -> PsdResult:
    """Welch PSD estimate: averaged Hanning-windowed segment periodograms.

    Segments of ``segment_length`` samples advance by
    ``segment_length * (1 - overlap_fraction)``; a partial tail is
    discarded. Each segment is mean-removed (when ``detrend``), tapered,
    and scaled by 1/(fs * sum(w^2)) with one-sided doubling everywhere but
    DC and Nyquist, so the PSD integrates to the signal's variance.
    """
    x, fs = _values_and_rate(source, sample_rate_hz)
    if segment_length < 2:
        raise ConfigurationError("segment_length must be at least 2")
    if not 0.0 <= overlap_fraction < 1.0:
        raise ConfigurationError("overlap_fraction must lie in [0, 1)")
    n = len(x)
    if n < segment_length:
        raise InsufficientDataError(
            f"need at least {segment_length} samples for one segment, got {n}"
        )
    step = max(1, int(round(segment_length * (1.0 - overlap_fraction))))
    w = hanning_window(segment_length)
    wsq = float(np.dot(w, w))
    n_segments = 1 + (n - segment_length) // step
    acc = np.zeros(segment_length // 2 + 1)
    for i in range(n_segments):
        seg = x[i * step : i * step + segment_length]
        if detrend:
            seg = seg - seg.mean()
        acc += np.abs(np.fft.rfft(w * seg)) ** 2
    psd = acc / (n_segments * fs * wsq)
    psd[1:-1] *= 2.0
    freqs = np.fft.rfftfreq(segment_length, d=1.0 / fs)
    return PsdResult(fs, segment_length, overlap_fraction, freqs, psd)


def band_slice(
    psd: PsdResult,
    f_lo: float = DEFAULT_BAND_LOW_HZ,
    f_hi: float = DEFAULT_BAND_HIGH_HZ,
) -> PsdResult:
    """Restrict a PSD to bins with f_lo <= freq <= f_hi (inclusive)."""
    nyquist = psd.sample_rate_hz / 2.0
    if not (0.0 <= f_lo <= f_hi <= nyquist):
        raise ConfigurationError(
            f"band [{f_lo}, {f_hi}] must satisfy 0 <= f_lo <= f_hi <= {nyquist}"
        )
    mask = (psd.freqs >= f_lo) & (psd.freqs <= f_hi)
    if not mask.any():
        raise EmptyBandError(f"band [{f_lo}, {f_hi}] selects no bins")
    return PsdResult(
        psd.sample_rate_hz,
        psd.segment_length,
        psd.overlap_fraction,
        psd.freqs[mask],
        psd.power_density[mask],
    )


def extract_peaks(
    freqs: Sequence[float] | np.ndarray,
    values: Sequence[float] | np.ndarray,
    threshold_fraction: float = DEFAULT_PEAK_THRESHOLD,
) -> PeakSet:
    """Strict local maxima at or above ``threshold_fraction`` of the max.

    A plateau counts once, at its leftmost index. Runs touching either end
    of the array have no neighbour to fall away on that side and are not
    peaks; in particular an all-constant (or all-zero) input has none.
    """
    freqs = np.asarray(freqs, dtype=np.float64)
    vals = np.asarray(values, dtype=np.float64)
    if len(freqs) != len(vals):
        raise ConfigurationError("freqs and values must have equal length")
    if np.any(vals < 0):
        raise ConfigurationError("peak extraction expects non-negative values")
    n = len(vals)
    peaks: list[tuple[float, float]] = []
    if n:
        floor = threshold_fraction * vals.max()
        i = 0
        while i < n:
            j = i
            while j + 1 < n and vals[j + 1] == vals[i]:
                j += 1
            if 0 < i and j < n - 1 and vals[i - 1] < vals[i] and vals[j + 1] < vals[i]:
                if vals[i] >= floor:
                    peaks.append((float(freqs[i]), float(vals[i])))
            i = j + 1
    average = float(np.mean([v for _, v in peaks])) if peaks else 0.0
    return PeakSet(threshold_fraction, tuple(peaks), average)


def psd_peaks(
    psd: PsdResult, threshold_fraction: float = DEFAULT_PEAK_THRESHOLD
) -> PeakSet:
    return extract_peaks(psd.freqs, psd.power_density, threshold_fraction)


def spectrum_peaks(
    spectrum: SpectrumResult, threshold_fraction: float = DEFAULT_PEAK_THRESHOLD
) -> PeakSet:
    return extract_peaks(spectrum.freqs, spectrum.amplitudes, threshold_fraction)


def peaks_average_difference(after: PeakSet, before: PeakSet) -> float:
    """Signed change in mean peak value: after minus before.

    Both peak sets must have been extracted with the same threshold, else
    the comparison is meaningless and a :class:`ComparisonError` is raised.
    """
    if after.threshold_fraction != before.threshold_fraction:
        raise ComparisonError(
            f"peak sets use different thresholds "
            f"({after.threshold_fraction} vs {before.threshold_fraction})"
        )
    return after.peak_average - before.peak_average
