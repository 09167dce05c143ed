"""Shared test oracles and fixtures.

The oracles here are deliberately naive and independent of the library's
code paths: a matrix-product DFT instead of an FFT, a pure-Python
sort-based summary, brute-force loops for digests and ECDF suprema. Tests
compare library output against these.
"""

from __future__ import annotations

import math
from datetime import datetime, timezone

import numpy as np

from palmwatch.model import AccelSample, SampleWindow, from_epoch

T0 = datetime(2024, 3, 1, tzinfo=timezone.utc)
T0_EPOCH = T0.timestamp()


def make_window(
    magnitudes,
    sample_rate_hz: float = 100.0,
    device_id: str = "palm-001",
    start_epoch: float = T0_EPOCH,
    nominal_duration: float | None = None,
) -> SampleWindow:
    """Window whose z axis carries the given magnitudes (x = y = 0)."""
    values = np.asarray(magnitudes, dtype=np.float64)
    n = len(values)
    if nominal_duration is None:
        nominal_duration = max(3600.0, n / sample_rate_hz)
    times = start_epoch + np.arange(n) / sample_rate_hz
    return SampleWindow(
        device_id,
        from_epoch(start_epoch),
        times=times,
        seqs=np.arange(n, dtype=np.int64),
        ax=np.zeros(n),
        ay=np.zeros(n),
        az=values.copy(),
        magnitudes=np.abs(values),
        nominal_duration=nominal_duration,
        sample_rate_hz=sample_rate_hz,
    )


def make_samples(magnitudes, sample_rate_hz=100.0, device_id="palm-001",
                 start_epoch=T0_EPOCH, seq_start=0) -> list[AccelSample]:
    out = []
    for i, v in enumerate(magnitudes):
        t = from_epoch(start_epoch + i / sample_rate_hz)
        out.append(AccelSample.create(device_id, seq_start + i, t, 0.0, 0.0, float(v)))
    return out


# ---------------------------------------------------------------------------
# spectral oracle: direct O(n^2) DFT through the same preprocessing contract

_DFT_BASIS: dict[int, np.ndarray] = {}


def _dft_basis(n_fft: int) -> np.ndarray:
    # one basis per transform size; each signal still pays the full O(n^2)
    # matrix product
    if n_fft not in _DFT_BASIS:
        bins = np.arange(n_fft // 2 + 1)
        _DFT_BASIS[n_fft] = np.exp(-2j * np.pi * np.outer(bins, np.arange(n_fft)) / n_fft)
    return _DFT_BASIS[n_fft]


def oracle_fft_spectrum(values, sample_rate_hz: float, detrend: bool = True):
    """Direct DFT version of the amplitude spectrum.

    Preprocessing follows the documented contract (mean removal, raised
    cosine from its closed form, zero padding to the next power of two,
    2/sum(w) one-sided correction, halved at DC and Nyquist); the transform
    itself is an explicit complex matrix product, not an FFT.
    """
    x = np.asarray(values, dtype=np.float64)
    n = len(x)
    if detrend:
        x = x - x.mean()
    if n == 1:
        w = np.ones(1)
    else:
        w = np.array([0.5 - 0.5 * math.cos(2.0 * math.pi * k / (n - 1)) for k in range(n)])
    n_fft = 2
    while n_fft < n:
        n_fft *= 2
    y = np.zeros(n_fft)
    y[:n] = w * x
    transform = _dft_basis(n_fft) @ y
    amps = np.abs(transform) * 2.0 / w.sum()
    amps[0] *= 0.5
    amps[-1] *= 0.5
    freqs = np.arange(n_fft // 2 + 1) * sample_rate_hz / n_fft
    return freqs, amps


# ---------------------------------------------------------------------------
# statistics oracle: pure-Python, sort-based

def oracle_quantile(sorted_values: list[float], q: float) -> float:
    h = (len(sorted_values) - 1) * q
    lo = math.floor(h)
    hi = math.ceil(h)
    a = sorted_values[lo]
    if hi == lo:
        return a
    return a + (sorted_values[hi] - a) * (h - lo)


def oracle_summary(values) -> dict:
    data = sorted(float(v) for v in values)
    n = len(data)
    mean = math.fsum(data) / n
    std = math.sqrt(math.fsum((v - mean) ** 2 for v in data) / (n - 1))
    q25 = oracle_quantile(data, 0.25)
    median = oracle_quantile(data, 0.5)
    q75 = oracle_quantile(data, 0.75)
    iqr = q75 - q25
    return {
        "n": n,
        "mean": mean,
        "std": std,
        "median": median,
        "min": data[0],
        "max": data[-1],
        "q25": q25,
        "q75": q75,
        "iqr": iqr,
        "whisker_low": q25 - 1.5 * iqr,
        "whisker_high": q75 + 1.5 * iqr,
        "whisker_span": 4.0 * iqr,
    }


def oracle_digest(values) -> tuple[int, float, float, float]:
    count = 0
    lo = math.inf
    hi = -math.inf
    total = 0.0
    for v in values:
        count += 1
        v = float(v)
        lo = min(lo, v)
        hi = max(hi, v)
        total += v
    return count, lo, total / count, hi


def oracle_ks(before_values, after_values) -> float:
    """Brute-force sup of |F_before - F_after| over the merged support."""
    before = sorted(float(v) for v in before_values)
    after = sorted(float(v) for v in after_values)
    points = sorted(set(before) | set(after))
    best = 0.0
    for p in points:
        fb = sum(1 for v in before if v <= p) / len(before)
        fa = sum(1 for v in after if v <= p) / len(after)
        best = max(best, abs(fb - fa))
    return best
