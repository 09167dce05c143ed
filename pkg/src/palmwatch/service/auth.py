"""Accounts, password hashing, and expiring session tokens.

Passwords are only ever held as salted PBKDF2 hashes; config files may
supply plaintext for convenience, which is hashed at load time and never
written anywhere.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import threading
import time
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from ..errors import ConfigurationError

_PBKDF2_ITERATIONS = 60_000


class Role(str, Enum):
    VIEWER = "Viewer"
    ADMIN = "Admin"


def hash_password(password: str, salt: str | None = None) -> str:
    salt = salt or secrets.token_hex(8)
    digest = hashlib.pbkdf2_hmac(
        "sha256", password.encode(), salt.encode(), _PBKDF2_ITERATIONS
    ).hex()
    return f"pbkdf2${_PBKDF2_ITERATIONS}${salt}${digest}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, iterations, salt, digest = stored.split("$")
        if scheme != "pbkdf2":
            return False
        candidate = hashlib.pbkdf2_hmac(
            "sha256", password.encode(), salt.encode(), int(iterations)
        ).hex()
        return hmac.compare_digest(candidate, digest)
    except (ValueError, AttributeError):
        return False


@dataclass(frozen=True, slots=True)
class UserAccount:
    user_id: str
    display_name: str
    password_hash: str
    role: Role
    farm_ids: tuple[str, ...]

    def can_access_farm(self, farm_id: str) -> bool:
        return farm_id in self.farm_ids

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "display_name": self.display_name,
            "password_hash": self.password_hash,
            "role": self.role.value,
            "farm_ids": list(self.farm_ids),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "UserAccount":
        if "password_hash" in data and data["password_hash"]:
            password_hash = str(data["password_hash"])
        elif "password" in data and data["password"]:
            password_hash = hash_password(str(data["password"]))
        else:
            raise ConfigurationError(
                f"user {data.get('user_id')!r} needs password or password_hash"
            )
        return cls(
            user_id=str(data["user_id"]),
            display_name=str(data.get("display_name", data["user_id"])),
            password_hash=password_hash,
            role=Role(data.get("role", "Viewer")),
            farm_ids=tuple(data.get("farm_ids", ())),
        )


@dataclass(frozen=True, slots=True)
class Session:
    token: str
    user_id: str
    expires_at: float


class SessionRegistry:
    """In-memory token store; restarting the service invalidates sessions."""

    def __init__(self, ttl_seconds: float = 3600.0) -> None:
        self.ttl_seconds = ttl_seconds
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def issue(self, user_id: str) -> Session:
        session = Session(
            token=secrets.token_urlsafe(32),
            user_id=user_id,
            expires_at=time.time() + self.ttl_seconds,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def resolve(self, token: str | None) -> Session | None:
        if not token:
            return None
        with self._lock:
            session = self._sessions.get(token)
            if session is None:
                return None
            if session.expires_at < time.time():
                del self._sessions[token]
                return None
            return session

    def revoke(self, token: str) -> None:
        with self._lock:
            self._sessions.pop(token, None)
