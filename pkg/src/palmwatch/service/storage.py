"""Embedded append-only store backing the cloud role.

Layout under the storage directory:

    samples/<device_id>/<segment>.jsonl   one canonical sample per line,
                                          segmented per device-hour
    digests/<device_id>.jsonl
    assessments/<device_id>.jsonl
    notifications.jsonl
    audit.jsonl
    devices.json / farms.json / users.json
    index.json                            segment manifest, written on flush

Raw sample lines are the source of truth; the in-memory per-device seq sets
used for deduplication are rebuilt by scanning segments at startup, so a
missing or stale index is harmless. All mutation goes through one lock
(ingestion is serialized per store); reads work on immutable snapshots.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

from ..detector import HealthAssessment
from ..model import (
    AccelSample,
    DeviceRecord,
    Digest,
    FarmRecord,
    HealthStatus,
    Likelihood,
    format_timestamp,
    from_epoch,
    to_epoch,
)
from .auth import UserAccount

SEGMENT_SECONDS = 3600.0


def _segment_name(epoch: float) -> str:
    idx = int(epoch // SEGMENT_SECONDS)
    return from_epoch(idx * SEGMENT_SECONDS).strftime("%Y%m%dT%H%M%SZ")


@dataclass(frozen=True, slots=True)
class NotificationRecord:
    """Operator-facing event scoped to one farm."""

    id: int
    farm_id: str
    kind: str  # StatusChange | DeviceAutoDetected
    payload: dict
    created_at: datetime
    read: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "farm_id": self.farm_id,
            "kind": self.kind,
            "payload": self.payload,
            "created_at": format_timestamp(self.created_at),
            "read": self.read,
        }


@dataclass(frozen=True, slots=True)
class AuditEntry:
    id: int
    user_id: str | None
    action: str
    target: str
    timestamp: datetime
    outcome: str  # ok | denied | error

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "user_id": self.user_id,
            "action": self.action,
            "target": self.target,
            "timestamp": format_timestamp(self.timestamp),
            "outcome": self.outcome,
        }


class TelemetryStore:
    def __init__(self, root: str | Path) -> None:
        self.root = Path(root)
        self._lock = threading.RLock()
        self.devices: dict[str, DeviceRecord] = {}
        self.farms: dict[str, FarmRecord] = {}
        self.users: dict[str, UserAccount] = {}
        self.notifications: list[NotificationRecord] = []
        self._seqs: dict[str, set[int]] = {}
        self._audit_count = 0
        self._notification_id = 0
        self._load()

    # -- loading ---------------------------------------------------------

    def _load(self) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        for name, target, decode in (
            ("devices.json", self.devices, DeviceRecord.from_dict),
            ("farms.json", self.farms, FarmRecord.from_dict),
            ("users.json", self.users, UserAccount.from_dict),
        ):
            path = self.root / name
            if path.exists():
                for item in json.loads(path.read_text()):
                    record = decode(item)
                    key = getattr(record, "device_id", None) or getattr(
                        record, "farm_id", None
                    ) or record.user_id
                    target[key] = record
        samples_dir = self.root / "samples"
        if samples_dir.exists():
            for device_dir in samples_dir.iterdir():
                seqs: set[int] = set()
                for segment in device_dir.glob("*.jsonl"):
                    with segment.open() as fh:
                        for line in fh:
                            if line.strip():
                                seqs.add(int(json.loads(line)["seq"]))
                self._seqs[device_dir.name] = seqs
        notif_path = self.root / "notifications.jsonl"
        if notif_path.exists():
            with notif_path.open() as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    data = json.loads(line)
                    if data.get("op") == "mark_read":
                        ids = set(data["ids"])
                        self.notifications = [
                            n if n.id not in ids else NotificationRecord(
                                n.id, n.farm_id, n.kind, n.payload, n.created_at, True
                            )
                            for n in self.notifications
                        ]
                        continue
                    from ..model import parse_timestamp  # local to avoid cycle noise

                    self.notifications.append(
                        NotificationRecord(
                            id=int(data["id"]),
                            farm_id=str(data["farm_id"]),
                            kind=str(data["kind"]),
                            payload=data["payload"],
                            created_at=parse_timestamp(data["created_at"]),
                            read=bool(data["read"]),
                        )
                    )
            if self.notifications:
                self._notification_id = max(n.id for n in self.notifications)
        audit_path = self.root / "audit.jsonl"
        if audit_path.exists():
            with audit_path.open() as fh:
                self._audit_count = sum(1 for line in fh if line.strip())

    # -- helpers ---------------------------------------------------------

    def _append_line(self, relative: str, payload: dict) -> None:
        path = self.root / relative
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(payload) + "\n")

    def _write_json(self, name: str, items: Iterable) -> None:
        path = self.root / name
        path.write_text(json.dumps([i.to_dict() for i in items], indent=1))

    # -- records ---------------------------------------------------------

    def upsert_user(self, user: UserAccount) -> None:
        with self._lock:
            self.users[user.user_id] = user
            self._write_json("users.json", self.users.values())

    def upsert_farm(self, farm: FarmRecord) -> None:
        with self._lock:
            self.farms[farm.farm_id] = farm
            self._write_json("farms.json", self.farms.values())

    def upsert_device(self, device: DeviceRecord) -> None:
        with self._lock:
            self.devices[device.device_id] = device
            self._write_json("devices.json", self.devices.values())

    def list_devices(self, farm_id: str | None = None) -> list[DeviceRecord]:
        with self._lock:
            records = list(self.devices.values())
        if farm_id is not None:
            records = [r for r in records if r.farm_id == farm_id]
        return sorted(records, key=lambda r: r.device_id)

    # -- samples ---------------------------------------------------------

    def append_samples(self, device_id: str, samples: Sequence[AccelSample]) -> list[AccelSample]:
        """Persist new samples, deduplicated by (device_id, seq).

        Returns the accepted (previously unseen) samples in input order.
        """
        with self._lock:
            seen = self._seqs.setdefault(device_id, set())
            fresh = [s for s in samples if s.seq not in seen]
            if not fresh:
                return []
            by_segment: dict[str, list[AccelSample]] = {}
            for s in fresh:
                seen.add(s.seq)
                by_segment.setdefault(_segment_name(to_epoch(s.timestamp)), []).append(s)
            for segment, items in by_segment.items():
                path = self.root / "samples" / device_id / f"{segment}.jsonl"
                path.parent.mkdir(parents=True, exist_ok=True)
                with path.open("a", encoding="utf-8") as fh:
                    for s in items:
                        fh.write(json.dumps(s.to_dict()) + "\n")
            return fresh

    def sample_count(self, device_id: str) -> int:
        with self._lock:
            return len(self._seqs.get(device_id, ()))

    def query_samples(
        self, device_id: str, t_from: float | None = None, t_to: float | None = None
    ) -> list[AccelSample]:
        device_dir = self.root / "samples" / device_id
        if not device_dir.exists():
            return []
        out: list[AccelSample] = []
        for segment in sorted(device_dir.glob("*.jsonl")):
            with segment.open() as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    sample = AccelSample.from_dict(json.loads(line))
                    epoch = to_epoch(sample.timestamp)
                    if t_from is not None and epoch < t_from:
                        continue
                    if t_to is not None and epoch > t_to:
                        continue
                    out.append(sample)
        out.sort(key=lambda s: (to_epoch(s.timestamp), s.seq))
        return out

    # -- digests and assessments -----------------------------------------

    def append_digest(self, digest: Digest) -> None:
        with self._lock:
            self._append_line(f"digests/{digest.device_id}.jsonl", digest.to_dict())

    def list_digests(self, device_id: str) -> list[Digest]:
        path = self.root / "digests" / f"{device_id}.jsonl"
        if not path.exists():
            return []
        with path.open() as fh:
            return [Digest.from_dict(json.loads(line)) for line in fh if line.strip()]

    def latest_digest(self, device_id: str) -> Digest | None:
        digests = self.list_digests(device_id)
        return digests[-1] if digests else None

    def append_assessment(self, assessment: HealthAssessment) -> Likelihood | None:
        """Store an assessment; returns the device's previous likelihood."""
        with self._lock:
            previous = None
            device = self.devices.get(assessment.device_id)
            if device is not None:
                previous = device.status.likelihood
                self.devices[assessment.device_id] = device.with_status(
                    HealthStatus.from_likelihood(
                        assessment.likelihood, assessment.window_start
                    )
                )
                self._write_json("devices.json", self.devices.values())
            self._append_line(
                f"assessments/{assessment.device_id}.jsonl", assessment.to_dict()
            )
            return previous

    def list_assessments(self, device_id: str) -> list[HealthAssessment]:
        path = self.root / "assessments" / f"{device_id}.jsonl"
        if not path.exists():
            return []
        with path.open() as fh:
            return [
                HealthAssessment.from_dict(json.loads(line)) for line in fh if line.strip()
            ]

    # -- notifications -----------------------------------------------------

    def add_notification(self, farm_id: str, kind: str, payload: dict,
                         created_at: datetime) -> NotificationRecord:
        with self._lock:
            self._notification_id += 1
            record = NotificationRecord(
                self._notification_id, farm_id, kind, payload, created_at
            )
            self.notifications.append(record)
            self._append_line("notifications.jsonl", record.to_dict())
            return record

    def list_notifications(
        self, farm_ids: Sequence[str], unread_only: bool = False
    ) -> list[NotificationRecord]:
        with self._lock:
            items = [n for n in self.notifications if n.farm_id in farm_ids]
        if unread_only:
            items = [n for n in items if not n.read]
        return sorted(items, key=lambda n: n.id, reverse=True)

    def mark_notifications_read(self, ids: Sequence[int], farm_ids: Sequence[str]) -> int:
        with self._lock:
            wanted = set(ids)
            updated = 0
            for i, n in enumerate(self.notifications):
                if n.id in wanted and n.farm_id in farm_ids and not n.read:
                    self.notifications[i] = NotificationRecord(
                        n.id, n.farm_id, n.kind, n.payload, n.created_at, True
                    )
                    updated += 1
            if updated:
                self._append_line(
                    "notifications.jsonl", {"op": "mark_read", "ids": sorted(wanted)}
                )
            return updated

    # -- audit -------------------------------------------------------------

    def append_audit(self, user_id: str | None, action: str, target: str,
                     timestamp: datetime, outcome: str) -> AuditEntry:
        with self._lock:
            self._audit_count += 1
            entry = AuditEntry(self._audit_count, user_id, action, target, timestamp, outcome)
            self._append_line("audit.jsonl", entry.to_dict())
            return entry

    def audit_count(self) -> int:
        with self._lock:
            return self._audit_count

    # -- lifecycle ---------------------------------------------------------

    def flush(self) -> None:
        """Write the segment index; data files are already durable."""
        with self._lock:
            index = {
                "devices": sorted(self.devices),
                "farms": sorted(self.farms),
                "segments": {
                    device_dir.name: sorted(p.name for p in device_dir.glob("*.jsonl"))
                    for device_dir in sorted((self.root / "samples").glob("*"))
                }
                if (self.root / "samples").exists()
                else {},
                "sample_counts": {d: len(s) for d, s in sorted(self._seqs.items())},
                "audit_entries": self._audit_count,
                "notifications": len(self.notifications),
            }
            (self.root / "index.json").write_text(json.dumps(index, indent=1))
