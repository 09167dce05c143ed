"""Offline farm pipeline: node -> gateway -> {edge, cloud}.

Per-device streams are independent producers. The gateway is a dumb
forwarder: every sample is subject to one radio-loss draw on the
node->gateway hop, and each surviving sample is handed unmodified to both
the edge and the cloud (IP-side links are reliable). The edge aggregates a
digest per interval and, once it has seen enough healthy intervals to
profile the device, also runs the detector locally and attaches an
assessment, keeping raw-data load off the cloud.

Everything is driven by seeded generators and a logical clock, so a config
replays to identical streams, drops, digests, and assessments.
"""

from __future__ import annotations

import math
import time as _time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..detector import (
    BaselineProfile,
    DetectorConfig,
    HealthAssessment,
    assess_window,
    build_baseline,
)
from ..errors import InsufficientDataError
from ..model import (
    CreatedBy,
    DeviceRecord,
    Digest,
    HealthStatus,
    Likelihood,
    from_epoch,
    to_epoch,
)
from .config import ClusterSpec, DeviceSpec, FarmSpec, SimConfig
from .signal import StreamChunk, generate_stream_chunks, rng_for


@dataclass(frozen=True)
class GatewayForward:
    """Outcome of pushing one batch through a gateway."""

    to_edge: StreamChunk
    to_cloud: StreamChunk
    dropped: int


def gateway_forward(
    batch: StreamChunk, loss_probability: float, rng: np.random.Generator
) -> GatewayForward:
    """Apply per-sample radio loss, then fan the survivors out to both sinks.

    One Bernoulli draw decides each sample's fate: a dropped sample reaches
    neither destination, a delivered one reaches both. Order is preserved.
    """
    if not 0.0 <= loss_probability < 1.0:
        raise ValueError(f"loss probability {loss_probability} outside [0, 1)")
    if loss_probability == 0.0:
        return GatewayForward(batch, batch, 0)
    kept = rng.random(len(batch)) >= loss_probability
    delivered = batch.select(kept)
    return GatewayForward(delivered, delivered, int(len(batch) - len(delivered)))


@dataclass(frozen=True, slots=True)
class PacketAccounting:
    """Received-vs-lost percentages inferred from sequence-number gaps."""

    expected: int
    received: int
    received_pct: float
    lost_pct: float

    def to_dict(self) -> dict:
        return {
            "expected": self.expected,
            "received": self.received,
            "received_pct": self.received_pct,
            "lost_pct": self.lost_pct,
        }


def packet_accounting(seqs: Iterable[int]) -> PacketAccounting | None:
    """Account for packets over whatever seqs were received in a range.

    Expected count is max(seq) - min(seq) + 1; duplicates count once.
    Returns None when no packets were seen at all, which callers must keep
    distinct from a genuine 0% received.
    """
    distinct = set(int(s) for s in seqs)
    if not distinct:
        return None
    expected = max(distinct) - min(distinct) + 1
    received = len(distinct)
    received_pct = 100.0 * received / expected
    return PacketAccounting(expected, received, received_pct, 100.0 - received_pct)


def digest_of(device_id: str, window_start_epoch: float, chunks: Sequence[StreamChunk]) -> Digest:
    """min/mean/max of magnitude over the samples the edge actually received."""
    count = sum(len(c) for c in chunks)
    if count == 0:
        raise InsufficientDataError("no samples in interval")
    lo = min(float(c.magnitudes.min()) for c in chunks if len(c))
    hi = max(float(c.magnitudes.max()) for c in chunks if len(c))
    total = math.fsum(float(np.sum(c.magnitudes)) for c in chunks if len(c))
    return Digest(
        device_id=device_id,
        window_start=from_epoch(window_start_epoch),
        count=count,
        min=lo,
        mean=total / count,
        max=hi,
    )


class EdgeNode:
    """Per-device edge aggregation: interval digests plus local detection.

    The first ``baseline_windows`` closed intervals are pooled into the
    device's healthy baseline; those windows and every later one are then
    assessed against it. If the pooled baseline is still shorter than one
    PSD segment the edge emits digests only.
    """

    def __init__(
        self,
        record: DeviceRecord,
        interval_seconds: float,
        baseline_windows: int,
        detector_config: DetectorConfig,
        sample_rate_hz: float,
    ) -> None:
        self.record = record
        self.interval = interval_seconds
        self.baseline_windows = baseline_windows
        self.detector_config = detector_config
        self.sample_rate_hz = sample_rate_hz
        self.digests: list[Digest] = []
        self.assessments: list[HealthAssessment] = []
        self.baseline: BaselineProfile | None = None
        self.delivered = 0
        self._pending: list[StreamChunk] = []
        self._pending_idx: int | None = None
        self._baseline_pool: list = []  # SampleWindow stash until profiled

    def accept(self, chunk: StreamChunk) -> None:
        if len(chunk) == 0:
            return
        self.delivered += len(chunk)
        idx = int(chunk.times[0] // self.interval)
        if self._pending_idx is not None and idx != self._pending_idx:
            self._close_interval()
        self._pending_idx = idx
        self._pending.append(chunk)

    def finish(self, end_epoch: float) -> None:
        """Close out the run; a trailing partial interval is discarded."""
        if self._pending_idx is not None:
            interval_end = (self._pending_idx + 1) * self.interval
            if interval_end <= end_epoch + 1e-9:
                self._close_interval()
        self._pending = []
        self._pending_idx = None

    def _close_interval(self) -> None:
        idx = self._pending_idx
        chunks = self._pending
        self._pending = []
        self._pending_idx = None
        if not chunks or idx is None:
            return
        start_epoch = idx * self.interval
        self.digests.append(digest_of(self.record.device_id, start_epoch, chunks))
        window = StreamChunk.concat(chunks).to_window(
            from_epoch(start_epoch), self.interval, self.sample_rate_hz
        )
        if self.baseline is None:
            self._baseline_pool.append(window)
            if len(self._baseline_pool) >= self.baseline_windows:
                try:
                    self.baseline = build_baseline(
                        self.record, self._baseline_pool, self.detector_config
                    )
                except InsufficientDataError:
                    # Not enough pooled samples for spectral profiling; keep
                    # digesting and try again with the next interval.
                    return
                for pooled in self._baseline_pool:
                    self._assess(pooled)
                self._baseline_pool = []
            return
        self._assess(window)

    def _assess(self, window) -> None:
        self.assessments.append(
            assess_window(
                window,
                self.baseline,
                self.detector_config,
                placement=self.record.sensor_placement,
            )
        )


@dataclass
class DeviceRunResult:
    record: DeviceRecord
    generated: int = 0
    delivered_edge: int = 0
    delivered_cloud: int = 0
    dropped: int = 0
    digests: list[Digest] = field(default_factory=list)
    assessments: list[HealthAssessment] = field(default_factory=list)
    packet: PacketAccounting | None = None
    cloud_seqs: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    cloud_chunks: list[StreamChunk] = field(default_factory=list)

    def likelihood_counts(self) -> dict[str, int]:
        counts = {lk.value: 0 for lk in Likelihood}
        for a in self.assessments:
            counts[a.likelihood.value] += 1
        return counts


@dataclass
class SimRun:
    config: SimConfig
    duration_seconds: float
    devices: dict[str, DeviceRunResult]
    events: list[dict]

    def summary_dict(self) -> dict:
        return {
            "seed": self.config.seed,
            "duration_seconds": self.duration_seconds,
            "sample_rate_hz": self.config.sample_rate_hz,
            "loss_probability": self.config.loss_probability,
            "digest_interval_seconds": self.config.digest_interval_seconds,
            "baseline_windows": self.config.baseline_windows,
            "devices": {
                device_id: {
                    "generated": r.generated,
                    "delivered_edge": r.delivered_edge,
                    "delivered_cloud": r.delivered_cloud,
                    "dropped": r.dropped,
                    "digest_count": len(r.digests),
                    "assessment_count": len(r.assessments),
                    "likelihood_counts": r.likelihood_counts(),
                    "packet": r.packet.to_dict() if r.packet else None,
                }
                for device_id, r in sorted(self.devices.items())
            },
            "events": self.events,
        }


def device_record_for(
    farm: FarmSpec, cluster: ClusterSpec, spec: DeviceSpec, config: SimConfig
) -> DeviceRecord:
    return DeviceRecord(
        device_id=spec.device_id,
        farm_id=farm.farm_id,
        cluster_id=cluster.cluster_id,
        latitude=spec.latitude,
        longitude=spec.longitude,
        sensor_placement=spec.placement,
        sensors=("accelerometer",),
        status=HealthStatus.from_likelihood(Likelihood.LOW, config.start_time),
        created_by=CreatedBy.GATEWAY_AUTO_DETECT,
    )


def run_simulation(
    config: SimConfig,
    duration_seconds: float,
    detector_config: DetectorConfig | None = None,
    on_generated: Callable[[StreamChunk], None] | None = None,
    on_cloud: Callable[[StreamChunk], None] | None = None,
    keep_cloud_samples: bool = False,
    pace: bool = False,
) -> SimRun:
    """Drive every configured device through gateway, edge, and cloud roles.

    ``on_generated`` / ``on_cloud`` stream chunks out as they happen (the
    CLI uses them to write JSONL without holding streams in memory).
    ``keep_cloud_samples`` retains delivered chunks on the result for
    inspection. With ``pace`` and a nonzero ``time_compression`` the run
    sleeps so that simulated time advances at the configured multiple of
    wall-clock time.
    """
    detector_config = detector_config or DetectorConfig()
    start_epoch = to_epoch(config.start_time)
    end_epoch = start_epoch + duration_seconds
    devices: dict[str, DeviceRunResult] = {}
    events: list[dict] = []
    for farm, cluster, spec in config.iter_devices():
        record = device_record_for(farm, cluster, spec, config)
        result = DeviceRunResult(record=record)
        edge = EdgeNode(
            record,
            config.digest_interval_seconds,
            config.baseline_windows,
            detector_config,
            config.sample_rate_hz,
        )
        loss_rng = rng_for(config.seed, spec.device_id, role=1)
        cloud_seqs: list[np.ndarray] = []
        seen = False
        for chunk in generate_stream_chunks(
            spec.device_id,
            spec.signal,
            duration_seconds,
            config.seed,
            config.start_time,
            sample_rate_hz=config.sample_rate_hz,
            infested_onset_seconds=spec.infested_onset(),
            chunk_seconds=config.digest_interval_seconds,
        ):
            result.generated += len(chunk)
            if on_generated:
                on_generated(chunk)
            if not seen:
                seen = True
                events.append({
                    "type": "device_autodetected",
                    "device_id": spec.device_id,
                    "gateway_id": cluster.gateway_id,
                    "time": from_epoch(float(chunk.times[0])).isoformat(timespec="milliseconds"),
                })
            fwd = gateway_forward(chunk, config.loss_probability, loss_rng)
            result.dropped += fwd.dropped
            result.delivered_cloud += len(fwd.to_cloud)
            edge.accept(fwd.to_edge)
            # cloud role: exactly-once by (device_id, seq); generation never
            # duplicates, asserted rather than silently filtered
            cloud_seqs.append(fwd.to_cloud.seqs)
            if keep_cloud_samples:
                result.cloud_chunks.append(fwd.to_cloud)
            if on_cloud:
                on_cloud(fwd.to_cloud)
            if pace and config.time_compression > 0:
                _time.sleep(len(chunk) / config.sample_rate_hz / config.time_compression)
        edge.finish(end_epoch)
        result.delivered_edge = edge.delivered
        result.digests = edge.digests
        result.assessments = edge.assessments
        result.cloud_seqs = (
            np.concatenate(cloud_seqs) if cloud_seqs else np.empty(0, dtype=np.int64)
        )
        if len(np.unique(result.cloud_seqs)) != len(result.cloud_seqs):
            raise AssertionError(f"duplicate seqs reached the cloud for {spec.device_id}")
        result.packet = packet_accounting(result.cloud_seqs)
        devices[spec.device_id] = result
    return SimRun(config, duration_seconds, devices, events)
