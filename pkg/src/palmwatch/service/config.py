"""Service configuration file handling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..detector import DetectorConfig
from ..errors import ConfigurationError
from ..model import FarmRecord
from .auth import UserAccount


@dataclass(frozen=True, slots=True)
class GatewayCredential:
    """Static bearer token for one gateway, tied to its cluster and farm."""

    token: str
    gateway_id: str
    farm_id: str
    cluster_id: str


@dataclass(frozen=True)
class ServiceConfig:
    bind_host: str = "127.0.0.1"
    bind_port: int = 8000
    storage_dir: str = "./palmwatch-data"
    session_ttl_seconds: float = 3600.0
    gateways: tuple[GatewayCredential, ...] = ()
    users: tuple[UserAccount, ...] = ()
    farms: tuple[FarmRecord, ...] = ()
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    static_dir: str | None = None
    weather_note: str | None = None

    def gateway_for_token(self, token: str | None) -> GatewayCredential | None:
        if not token:
            return None
        for gw in self.gateways:
            if gw.token == token:
                return gw
        return None


def service_config_from_dict(data: Mapping) -> ServiceConfig:
    gateways = []
    for i, g in enumerate(data.get("gateways", [])):
        for key in ("token", "gateway_id", "farm_id", "cluster_id"):
            if key not in g:
                raise ConfigurationError(f"$.gateways[{i}]: missing {key}")
        gateways.append(
            GatewayCredential(
                str(g["token"]), str(g["gateway_id"]), str(g["farm_id"]), str(g["cluster_id"])
            )
        )
    users = tuple(UserAccount.from_dict(u) for u in data.get("users", []))
    farms = tuple(FarmRecord.from_dict(f) for f in data.get("farms", []))
    detector = DetectorConfig.from_dict(data.get("detector", {}))
    port = int(data.get("bind_port", 8000))
    if not 0 < port < 65536:
        raise ConfigurationError(f"$.bind_port: {port} outside 1..65535")
    return ServiceConfig(
        bind_host=str(data.get("bind_host", "127.0.0.1")),
        bind_port=port,
        storage_dir=str(data.get("storage_dir", "./palmwatch-data")),
        session_ttl_seconds=float(data.get("session_ttl_seconds", 3600.0)),
        gateways=tuple(gateways),
        users=users,
        farms=farms,
        detector=detector,
        static_dir=data.get("static_dir"),
        weather_note=data.get("weather_note"),
    )


def load_service_config(path: str | Path) -> ServiceConfig:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    return service_config_from_dict(data)
