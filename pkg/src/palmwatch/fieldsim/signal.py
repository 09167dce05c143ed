"""Synthetic accelerometer streams for healthy and infested palms.

A healthy palm reads as white Gaussian magnitude noise around gravity; the
exact centre and spread depend on whether the sensor sits inside the trunk
or on the bark. Infestation does two things to the stream: the sustained
noise floor shifts and widens (larvae keep the trunk interior in constant
low-level motion), and discrete feeding bursts arrive as Poisson events,
each a short exponentially damped sinusoid in the 1-8 Hz range.

Signal energy rides on the z axis; x and y carry small independent noise
so the three-axis norm stays faithful without changing the statistics.
Default levels are calibrated so hour-long captures land on the observed
inside/outside field statistics for both states.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from datetime import datetime
from typing import Iterator, Mapping

import numpy as np

from ..errors import ConfigurationError
from ..model import AccelSample, Placement, SampleWindow, from_epoch, to_epoch

# Burst envelope decays to ~5% of its initial amplitude by the end of the
# burst: exp(-DAMPING * t / duration).
BURST_DAMPING = 3.0


@dataclass(frozen=True, slots=True)
class SignalModel:
    """Parameters of one device's magnitude process (m/s^2, Hz, events/min)."""

    baseline_mean: float = 9.74
    baseline_std: float = 0.25
    infested_mean_shift: float = 0.20
    infested_std: float = 0.37
    burst_rate_per_minute: float = 6.0
    burst_freq_low_hz: float = 1.0
    burst_freq_high_hz: float = 8.0
    burst_amplitude: float = 0.6
    burst_duration_seconds: float = 0.5
    axis_noise_std: float = 0.02

    @classmethod
    def inside(cls) -> "SignalModel":
        return cls()

    @classmethod
    def outside(cls) -> "SignalModel":
        # Bark-mounted sensors see a stiffer, quieter signal: tighter noise,
        # a smaller infestation shift, and heavily attenuated bursts.
        return cls(
            baseline_mean=10.04,
            baseline_std=0.06,
            infested_mean_shift=0.04,
            infested_std=0.06,
            burst_amplitude=0.08,
        )

    @classmethod
    def for_placement(cls, placement: Placement) -> "SignalModel":
        return cls.inside() if Placement(placement) == Placement.INSIDE else cls.outside()

    def with_overrides(self, overrides: Mapping) -> "SignalModel":
        unknown = set(overrides) - set(self.__dataclass_fields__)
        if unknown:
            raise ConfigurationError(f"unknown signal model fields: {sorted(unknown)}")
        return replace(self, **{k: float(v) for k, v in overrides.items()})

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}


@dataclass(frozen=True)
class StreamChunk:
    """A contiguous run of samples for one device, column-oriented."""

    device_id: str
    times: np.ndarray  # epoch seconds
    seqs: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    az: np.ndarray
    magnitudes: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def select(self, mask: np.ndarray) -> "StreamChunk":
        return StreamChunk(
            self.device_id,
            self.times[mask], self.seqs[mask],
            self.ax[mask], self.ay[mask], self.az[mask], self.magnitudes[mask],
        )

    @classmethod
    def concat(cls, chunks: list["StreamChunk"]) -> "StreamChunk":
        if not chunks:
            raise ValueError("cannot concatenate zero chunks")
        return cls(
            chunks[0].device_id,
            np.concatenate([c.times for c in chunks]),
            np.concatenate([c.seqs for c in chunks]),
            np.concatenate([c.ax for c in chunks]),
            np.concatenate([c.ay for c in chunks]),
            np.concatenate([c.az for c in chunks]),
            np.concatenate([c.magnitudes for c in chunks]),
        )

    def to_samples(self) -> list[AccelSample]:
        return [
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
        ]

    def to_window(
        self,
        window_start: datetime,
        nominal_duration: float,
        sample_rate_hz: float,
    ) -> SampleWindow:
        return SampleWindow(
            self.device_id,
            window_start,
            times=self.times,
            seqs=self.seqs,
            ax=self.ax,
            ay=self.ay,
            az=self.az,
            magnitudes=self.magnitudes,
            nominal_duration=nominal_duration,
            sample_rate_hz=sample_rate_hz,
        )


def rng_for(seed: int, device_id: str, role: int) -> np.random.Generator:
    """Independent, reproducible stream per (seed, device, role)."""
    return np.random.default_rng(
        np.random.SeedSequence([int(seed), zlib.crc32(device_id.encode()), int(role)])
    )


def _add_bursts(
    z: np.ndarray,
    model: SignalModel,
    sample_rate_hz: float,
    rng: np.random.Generator,
) -> None:
    """Superimpose Poisson-arriving damped sinusoid bursts onto z, in place."""
    n = len(z)
    duration_s = n / sample_rate_hz
    count = rng.poisson(model.burst_rate_per_minute / 60.0 * duration_s)
    if count == 0:
        return
    starts = rng.uniform(0.0, duration_s, count)
    freqs = rng.uniform(model.burst_freq_low_hz, model.burst_freq_high_hz, count)
    phases = rng.uniform(0.0, 2.0 * np.pi, count)
    burst_len = max(1, int(round(model.burst_duration_seconds * sample_rate_hz)))
    t = np.arange(burst_len) / sample_rate_hz
    envelope = np.exp(-BURST_DAMPING * t / model.burst_duration_seconds)
    for k in range(count):
        i0 = int(starts[k] * sample_rate_hz)
        m = min(burst_len, n - i0)
        if m <= 0:
            continue
        z[i0 : i0 + m] += (
            model.burst_amplitude
            * envelope[:m]
            * np.sin(2.0 * np.pi * freqs[k] * t[:m] + phases[k])
        )


def generate_chunk(
    device_id: str,
    model: SignalModel,
    n: int,
    start_epoch: float,
    seq_start: int,
    rng: np.random.Generator,
    sample_rate_hz: float = 100.0,
    infested: bool = False,
) -> StreamChunk:
    """Generate n consecutive samples starting at start_epoch."""
    dt = 1.0 / sample_rate_hz
    times = start_epoch + np.arange(n) * dt
    seqs = seq_start + np.arange(n, dtype=np.int64)
    mean = model.baseline_mean + (model.infested_mean_shift if infested else 0.0)
    std = model.infested_std if infested else model.baseline_std
    z = rng.normal(mean, std, n)
    if infested:
        _add_bursts(z, model, sample_rate_hz, rng)
    x = rng.normal(0.0, model.axis_noise_std, n)
    y = rng.normal(0.0, model.axis_noise_std, n)
    return StreamChunk(
        device_id, times, seqs, x, y, z, np.sqrt(x * x + y * y + z * z)
    )


def generate_stream(
    device_id: str,
    model: SignalModel,
    duration_seconds: float,
    seed: int,
    start_time: datetime,
    sample_rate_hz: float = 100.0,
    infested_onset_seconds: float | None = None,
) -> Iterator[AccelSample]:
    """Yield one device's samples at fixed 1/rate spacing, seq from 0.

    ``infested_onset_seconds`` switches the generator to the infested
    process partway through; omit it for an entirely healthy stream.
    """
    if duration_seconds <= 0:
        raise ConfigurationError("duration must be positive")
    for chunk in generate_stream_chunks(
        device_id, model, duration_seconds, seed, start_time,
        sample_rate_hz=sample_rate_hz,
        infested_onset_seconds=infested_onset_seconds,
    ):
        yield from chunk.to_samples()


def generate_stream_chunks(
    device_id: str,
    model: SignalModel,
    duration_seconds: float,
    seed: int,
    start_time: datetime,
    sample_rate_hz: float = 100.0,
    infested_onset_seconds: float | None = None,
    chunk_seconds: float = 3600.0,
) -> Iterator[StreamChunk]:
    """Array-oriented variant of :func:`generate_stream`.

    Chunks are cut at ``chunk_seconds`` boundaries and additionally at the
    infestation onset, so each chunk is generated by a single process.
    """
    total = int(round(duration_seconds * sample_rate_hz))
    start_epoch = to_epoch(start_time)
    rng = rng_for(seed, device_id, role=0)
    onset_idx = total
    if infested_onset_seconds is not None:
        onset_idx = min(total, max(0, int(round(infested_onset_seconds * sample_rate_hz))))
    per_chunk = max(1, int(round(chunk_seconds * sample_rate_hz)))
    emitted = 0
    while emitted < total:
        n = min(per_chunk, total - emitted)
        # never straddle the onset: split the chunk there
        if emitted < onset_idx < emitted + n:
            n = onset_idx - emitted
        yield generate_chunk(
            device_id,
            model,
            n,
            start_epoch + emitted / sample_rate_hz,
            seq_start=emitted,
            rng=rng,
            sample_rate_hz=sample_rate_hz,
            infested=emitted >= onset_idx,
        )
        emitted += n
