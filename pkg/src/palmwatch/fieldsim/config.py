"""Declarative simulation config: farm topology, loss, timing, signal models.

The file is JSON:

.. code-block:: json

    {
      "seed": 42,
      "sample_rate_hz": 100,
      "loss_probability": 0.1,
      "digest_interval_seconds": 3600,
      "baseline_windows": 1,
      "time_compression": 0,
      "start_time": "2024-03-01T00:00:00Z",
      "farms": [
        {"farm_id": "farm-1", "name": "North grove", "clusters": [
          {"cluster_id": "cl-1", "gateway_id": "gw-1", "devices": [
            {"device_id": "palm-001", "latitude": 24.71, "longitude": 46.62,
             "placement": "Inside", "infested": true, "onset_seconds": 10800,
             "signal": {"burst_rate_per_minute": 8}}
          ]}
        ]}
      ]
    }

Identical configs (seed included) replay to bit-identical event streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, Mapping

from ..errors import ConfigurationError
from ..model import Placement, parse_timestamp
from .signal import SignalModel

DEFAULT_START_TIME = datetime(2024, 3, 1, tzinfo=timezone.utc)


@dataclass(frozen=True, slots=True)
class DeviceSpec:
    device_id: str
    latitude: float
    longitude: float
    placement: Placement
    infested: bool
    onset_seconds: float
    signal: SignalModel

    def infested_onset(self) -> float | None:
        return self.onset_seconds if self.infested else None


@dataclass(frozen=True, slots=True)
class ClusterSpec:
    cluster_id: str
    gateway_id: str
    devices: tuple[DeviceSpec, ...]


@dataclass(frozen=True, slots=True)
class FarmSpec:
    farm_id: str
    name: str
    clusters: tuple[ClusterSpec, ...]


@dataclass(frozen=True, slots=True)
class SimConfig:
    seed: int
    farms: tuple[FarmSpec, ...]
    sample_rate_hz: float = 100.0
    loss_probability: float = 0.0
    digest_interval_seconds: float = 3600.0
    baseline_windows: int = 1
    time_compression: float = 0.0
    start_time: datetime = DEFAULT_START_TIME

    def iter_devices(self) -> Iterator[tuple[FarmSpec, ClusterSpec, DeviceSpec]]:
        for farm in self.farms:
            for cluster in farm.clusters:
                for device in cluster.devices:
                    yield farm, cluster, device

    def device_count(self) -> int:
        return sum(1 for _ in self.iter_devices())


def _fail(path: str, message: str) -> ConfigurationError:
    return ConfigurationError(f"{path}: {message}")


def _device_from_dict(data: Mapping, path: str) -> DeviceSpec:
    try:
        device_id = str(data["device_id"])
    except KeyError:
        raise _fail(path, "missing device_id") from None
    lat = float(data.get("latitude", 0.0))
    lon = float(data.get("longitude", 0.0))
    if not -90.0 <= lat <= 90.0:
        raise _fail(path, f"latitude {lat} outside [-90, 90]")
    if not -180.0 <= lon <= 180.0:
        raise _fail(path, f"longitude {lon} outside [-180, 180]")
    try:
        placement = Placement(data.get("placement", "Inside"))
    except ValueError:
        raise _fail(path, f"placement must be Inside or Outside, got {data.get('placement')!r}") from None
    infested = bool(data.get("infested", False))
    onset = float(data.get("onset_seconds", 0.0))
    if onset < 0:
        raise _fail(path, f"onset_seconds {onset} must be >= 0")
    model = SignalModel.for_placement(placement)
    overrides = data.get("signal", {})
    if overrides:
        try:
            model = model.with_overrides(overrides)
        except ConfigurationError as exc:
            raise _fail(path + ".signal", str(exc)) from None
    return DeviceSpec(device_id, lat, lon, placement, infested, onset, model)


def sim_config_from_dict(data: Mapping) -> SimConfig:
    if "seed" not in data:
        raise _fail("$", "missing seed")
    seed = int(data["seed"])
    rate = float(data.get("sample_rate_hz", 100.0))
    if rate <= 0:
        raise _fail("$.sample_rate_hz", f"{rate} must be positive")
    loss = float(data.get("loss_probability", 0.0))
    if not 0.0 <= loss < 1.0:
        raise _fail("$.loss_probability", f"{loss} outside [0, 1)")
    interval = float(data.get("digest_interval_seconds", 3600.0))
    if interval <= 0:
        raise _fail("$.digest_interval_seconds", f"{interval} must be positive")
    baseline_windows = int(data.get("baseline_windows", 1))
    if baseline_windows < 1:
        raise _fail("$.baseline_windows", f"{baseline_windows} must be >= 1")
    compression = float(data.get("time_compression", 0.0))
    if compression < 0:
        raise _fail("$.time_compression", f"{compression} must be >= 0")
    start = (
        parse_timestamp(data["start_time"]) if "start_time" in data else DEFAULT_START_TIME
    )
    farms: list[FarmSpec] = []
    seen_devices: set[str] = set()
    seen_clusters: set[str] = set()
    if not data.get("farms"):
        raise _fail("$.farms", "at least one farm is required")
    for fi, fdata in enumerate(data["farms"]):
        fpath = f"$.farms[{fi}]"
        if "farm_id" not in fdata:
            raise _fail(fpath, "missing farm_id")
        clusters: list[ClusterSpec] = []
        for ci, cdata in enumerate(fdata.get("clusters", [])):
            cpath = f"{fpath}.clusters[{ci}]"
            if "cluster_id" not in cdata:
                raise _fail(cpath, "missing cluster_id")
            cluster_id = str(cdata["cluster_id"])
            if cluster_id in seen_clusters:
                raise _fail(cpath, f"cluster {cluster_id} appears in more than one farm")
            seen_clusters.add(cluster_id)
            devices: list[DeviceSpec] = []
            for di, ddata in enumerate(cdata.get("devices", [])):
                spec = _device_from_dict(ddata, f"{cpath}.devices[{di}]")
                if spec.device_id in seen_devices:
                    raise _fail(f"{cpath}.devices[{di}]", f"duplicate device {spec.device_id}")
                seen_devices.add(spec.device_id)
                devices.append(spec)
            clusters.append(
                ClusterSpec(cluster_id, str(cdata.get("gateway_id", f"gw-{cluster_id}")), tuple(devices))
            )
        farms.append(FarmSpec(str(fdata["farm_id"]), str(fdata.get("name", fdata["farm_id"])), tuple(clusters)))
    if not seen_devices:
        raise _fail("$.farms", "no devices defined")
    return SimConfig(
        seed=seed,
        farms=tuple(farms),
        sample_rate_hz=rate,
        loss_probability=loss,
        digest_interval_seconds=interval,
        baseline_windows=baseline_windows,
        time_compression=compression,
        start_time=start,
    )


def load_sim_config(path: str | Path) -> SimConfig:
    """Parse and validate a simulation config file.

    JSON syntax errors keep their line/column; semantic errors are anchored
    to the JSON path of the offending field.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"
        ) from None
    return sim_config_from_dict(data)
