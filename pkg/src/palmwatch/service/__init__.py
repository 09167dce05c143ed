"""Cloud role: authenticated HTTP + streaming API over persisted telemetry."""

from .app import build_app, decimate
from .auth import Role, SessionRegistry, UserAccount, hash_password, verify_password
from .config import GatewayCredential, ServiceConfig, load_service_config, service_config_from_dict
from .storage import AuditEntry, NotificationRecord, TelemetryStore

__all__ = [
    "AuditEntry",
    "GatewayCredential",
    "NotificationRecord",
    "Role",
    "ServiceConfig",
    "SessionRegistry",
    "TelemetryStore",
    "UserAccount",
    "build_app",
    "decimate",
    "hash_password",
    "load_service_config",
    "service_config_from_dict",
    "verify_password",
]
