"""Deterministic simulator of the farm, gateway, and edge layers."""

from .config import (
    ClusterSpec,
    DeviceSpec,
    FarmSpec,
    SimConfig,
    load_sim_config,
    sim_config_from_dict,
)
from .pipeline import (
    DeviceRunResult,
    EdgeNode,
    GatewayForward,
    PacketAccounting,
    SimRun,
    device_record_for,
    digest_of,
    gateway_forward,
    packet_accounting,
    run_simulation,
)
from .signal import (
    SignalModel,
    StreamChunk,
    generate_chunk,
    generate_stream,
    generate_stream_chunks,
    rng_for,
)

__all__ = [
    "ClusterSpec",
    "DeviceSpec",
    "DeviceRunResult",
    "EdgeNode",
    "FarmSpec",
    "GatewayForward",
    "PacketAccounting",
    "SignalModel",
    "SimConfig",
    "SimRun",
    "StreamChunk",
    "device_record_for",
    "digest_of",
    "gateway_forward",
    "generate_chunk",
    "generate_stream",
    "generate_stream_chunks",
    "load_sim_config",
    "packet_accounting",
    "rng_for",
    "run_simulation",
    "sim_config_from_dict",
]
