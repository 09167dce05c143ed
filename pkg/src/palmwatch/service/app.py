"""HTTP + streaming API over the telemetry store.

Request handling follows an AAA discipline: every endpoint but the login
and health checks requires a session token (gateway endpoints take a static
gateway token instead), farm-scoped data never crosses farm boundaries, and
every mutating request leaves exactly one audit entry, written by
middleware so denied and malformed attempts are accounted for too.

The ``/stream`` websocket carries the same canonical JSON objects as the
query endpoints: clients send ``{"token": ..., "device_ids": [...]}`` once,
then receive ``reading`` / ``assessment`` / ``notification`` events for
those devices, in per-device ingestion order, from subscription time on.
"""

from __future__ import annotations

import asyncio
import json
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, HTTPException, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from ..detector import HealthAssessment
from ..errors import PalmwatchError, RejectedSampleError, ValidationError
from ..fieldsim import packet_accounting
from ..model import (
    AccelSample,
    CreatedBy,
    DeviceRecord,
    Digest,
    HealthLevel,
    HealthStatus,
    Likelihood,
    Placement,
    format_timestamp,
    parse_timestamp,
    to_epoch,
)
from .auth import Role, Session, SessionRegistry, UserAccount, verify_password
from .config import GatewayCredential, ServiceConfig
from .storage import TelemetryStore

MUTATING_METHODS = {"POST", "PUT", "PATCH", "DELETE"}


class EventBus:
    """Fan-out of per-device events to websocket subscribers."""

    def __init__(self) -> None:
        self._subscribers: list[tuple[asyncio.Queue, frozenset[str]]] = []

    def subscribe(self, device_ids: frozenset[str]) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        self._subscribers.append((queue, device_ids))
        return queue

    def unsubscribe(self, queue: asyncio.Queue) -> None:
        self._subscribers = [(q, d) for q, d in self._subscribers if q is not queue]

    def publish(self, device_id: str, event: dict) -> None:
        for queue, device_ids in self._subscribers:
            if device_id in device_ids:
                queue.put_nowait(event)


def _bearer_token(request: Request) -> str | None:
    header = request.headers.get("authorization", "")
    if header.lower().startswith("bearer "):
        return header[7:].strip()
    return request.query_params.get("token")


def _parse_time(value: str | None) -> float | None:
    if value is None or value == "":
        return None
    try:
        return float(value)
    except ValueError:
        return to_epoch(parse_timestamp(value))


def decimate(items: list, max_points: int) -> list:
    """Uniform-stride selection of at most max_points, endpoints kept."""
    n = len(items)
    if max_points <= 0 or n == 0:
        return []
    if n <= max_points:
        return list(items)
    if max_points == 1:
        return [items[0]]
    indices = sorted({round(i * (n - 1) / (max_points - 1)) for i in range(max_points)})
    return [items[i] for i in indices]


def build_app(config: ServiceConfig, store: TelemetryStore | None = None) -> FastAPI:
    store = store if store is not None else TelemetryStore(config.storage_dir)
    sessions = SessionRegistry(ttl_seconds=config.session_ttl_seconds)
    bus = EventBus()

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        store.flush()

    app = FastAPI(title="palmwatch service", docs_url=None, redoc_url=None,
                  lifespan=lifespan)
    app.state.store = store
    app.state.sessions = sessions
    app.state.bus = bus
    app.state.config = config

    for user in config.users:
        store.upsert_user(user)
    for farm in config.farms:
        store.upsert_farm(farm)

    # -- auth helpers ------------------------------------------------------

    def require_session(request: Request) -> Session:
        session = sessions.resolve(_bearer_token(request))
        if session is None:
            raise HTTPException(401, "missing, invalid, or expired token")
        request.state.audit_user = session.user_id
        return session

    def require_user(request: Request) -> UserAccount:
        session = require_session(request)
        user = store.users.get(session.user_id)
        if user is None:
            raise HTTPException(401, "account no longer exists")
        return user

    def require_farm(user: UserAccount, farm_id: str) -> None:
        if not user.can_access_farm(farm_id):
            raise HTTPException(403, f"no access to farm {farm_id}")

    def require_device(user: UserAccount, device_id: str) -> DeviceRecord:
        device = store.devices.get(device_id)
        if device is None:
            raise HTTPException(404, f"unknown device {device_id}")
        require_farm(user, device.farm_id)
        return device

    def require_gateway(request: Request) -> GatewayCredential:
        gateway = config.gateway_for_token(_bearer_token(request))
        if gateway is None:
            raise HTTPException(401, "unknown gateway token")
        request.state.audit_user = gateway.gateway_id
        return gateway

    # -- accounting middleware ---------------------------------------------

    @app.middleware("http")
    async def audit_mutations(request: Request, call_next):
        response = await call_next(request)
        if request.method in MUTATING_METHODS:
            outcome = "ok"
            if response.status_code in (401, 403):
                outcome = "denied"
            elif response.status_code >= 400:
                outcome = "error"
            store.append_audit(
                user_id=getattr(request.state, "audit_user", None),
                action=f"{request.method} {request.url.path}",
                target=getattr(request.state, "audit_target", request.url.path),
                timestamp=datetime.now(timezone.utc),
                outcome=outcome,
            )
        return response

    @app.exception_handler(PalmwatchError)
    async def domain_error(request: Request, exc: PalmwatchError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    # -- health and auth ----------------------------------------------------

    @app.get("/health")
    async def health():
        return {"status": "ok", "devices": len(store.devices)}

    @app.post("/auth/login")
    async def login(request: Request):
        body = await request.json()
        user_id = str(body.get("user_id", ""))
        password = str(body.get("password", ""))
        request.state.audit_user = user_id or None
        user = store.users.get(user_id)
        # same message whether the account exists or not
        if user is None or not verify_password(password, user.password_hash):
            raise HTTPException(401, "invalid credentials")
        session = sessions.issue(user.user_id)
        return {
            "token": session.token,
            "expires_at": session.expires_at,
            "user": {
                "user_id": user.user_id,
                "display_name": user.display_name,
                "role": user.role.value,
                "farm_ids": list(user.farm_ids),
            },
        }

    # -- farms ---------------------------------------------------------------

    @app.get("/farms")
    async def list_farms(request: Request):
        user = require_user(request)
        farms = [
            f.to_dict() for f in store.farms.values() if user.can_access_farm(f.farm_id)
        ]
        return {"farms": sorted(farms, key=lambda f: f["farm_id"])}

    @app.get("/farms/{farm_id}/overview")
    async def farm_overview(farm_id: str, request: Request):
        user = require_user(request)
        if farm_id not in store.farms:
            raise HTTPException(404, f"unknown farm {farm_id}")
        require_farm(user, farm_id)
        devices = store.list_devices(farm_id)
        counts = {level.value: 0 for level in HealthLevel}
        for d in devices:
            counts[d.status.level.value] += 1
        total = len(devices)
        healthy_pct = 100.0 if total == 0 else 100.0 * counts["Healthy"] / total
        latest = {}
        for d in devices:
            digest = store.latest_digest(d.device_id)
            if digest is not None:
                latest[d.device_id] = digest.to_dict()
        return {
            "farm_id": farm_id,
            "palm_count": total,
            "healthy_pct": healthy_pct,
            "status_counts": counts,
            "latest_digests": latest,
            "weather_note": config.weather_note,
        }

    # -- devices ---------------------------------------------------------------

    @app.get("/devices")
    async def list_devices(request: Request, farm_id: str | None = None):
        user = require_user(request)
        if farm_id is not None:
            require_farm(user, farm_id)
            devices = store.list_devices(farm_id)
        else:
            devices = [
                d for d in store.list_devices() if user.can_access_farm(d.farm_id)
            ]
        return {"devices": [d.to_dict() for d in devices]}

    @app.get("/devices/{device_id}")
    async def get_device(device_id: str, request: Request):
        user = require_user(request)
        return require_device(user, device_id).to_dict()

    def _device_from_payload(body: dict, existing: DeviceRecord | None) -> DeviceRecord:
        def pick(key, fallback):
            return body.get(key, fallback)

        if existing is None:
            for key in ("device_id", "farm_id", "cluster_id"):
                if key not in body:
                    raise ValidationError(f"missing {key}")
        base = existing.to_dict() if existing else {}
        status = (
            existing.status
            if existing
            else HealthStatus.from_likelihood(Likelihood.LOW, datetime.now(timezone.utc))
        )
        lat = pick("latitude", base.get("latitude"))
        lon = pick("longitude", base.get("longitude"))
        return DeviceRecord(
            device_id=str(pick("device_id", base.get("device_id"))),
            farm_id=str(pick("farm_id", base.get("farm_id"))),
            cluster_id=str(pick("cluster_id", base.get("cluster_id"))),
            latitude=None if lat is None else float(lat),
            longitude=None if lon is None else float(lon),
            sensor_placement=Placement(pick("sensor_placement", base.get("sensor_placement", "Inside"))),
            sensors=tuple(pick("sensors", base.get("sensors", ("accelerometer",)))),
            status=status,
            created_by=existing.created_by if existing else CreatedBy.MANUAL,
        )

    def require_cluster_in_farm(device: DeviceRecord) -> None:
        # a cluster belongs to exactly one farm; reject placements that would
        # break that mapping (farms arrive from config, so absence is fine)
        farm = store.farms.get(device.farm_id)
        if farm is not None and farm.cluster_ids and device.cluster_id not in farm.cluster_ids:
            raise HTTPException(
                400, f"cluster {device.cluster_id} is not part of farm {device.farm_id}"
            )

    @app.post("/devices")
    async def create_device(request: Request):
        user = require_user(request)
        if user.role != Role.ADMIN:
            raise HTTPException(403, "device creation requires the Admin role")
        body = await request.json()
        device = _device_from_payload(body, existing=None)
        request.state.audit_target = device.device_id
        require_farm(user, device.farm_id)
        require_cluster_in_farm(device)
        if device.device_id in store.devices:
            raise HTTPException(409, f"device {device.device_id} already exists")
        store.upsert_device(device)
        return JSONResponse(status_code=201, content=device.to_dict())

    @app.put("/devices/{device_id}")
    async def update_device(device_id: str, request: Request):
        user = require_user(request)
        if user.role != Role.ADMIN:
            raise HTTPException(403, "device update requires the Admin role")
        existing = require_device(user, device_id)
        body = await request.json()
        body.pop("device_id", None)
        device = _device_from_payload(body, existing=existing)
        request.state.audit_target = device.device_id
        require_farm(user, device.farm_id)
        require_cluster_in_farm(device)
        store.upsert_device(device)
        return device.to_dict()

    # -- readings, assessments, packets ------------------------------------

    @app.get("/devices/{device_id}/readings")
    async def device_readings(
        device_id: str,
        request: Request,
        max_points: int = 1000,
    ):
        user = require_user(request)
        require_device(user, device_id)
        t_from = _parse_time(request.query_params.get("from"))
        t_to = _parse_time(request.query_params.get("to"))
        samples = store.query_samples(device_id, t_from, t_to)
        points = decimate(samples, max_points)
        return {
            "device_id": device_id,
            "total": len(samples),
            "points": [s.to_dict() for s in points],
        }

    @app.get("/devices/{device_id}/assessments")
    async def device_assessments(device_id: str, request: Request):
        user = require_user(request)
        require_device(user, device_id)
        return {
            "device_id": device_id,
            "assessments": [a.to_dict() for a in store.list_assessments(device_id)],
        }

    @app.get("/devices/{device_id}/packets")
    async def device_packets(device_id: str, request: Request):
        user = require_user(request)
        require_device(user, device_id)
        t_from = _parse_time(request.query_params.get("from"))
        t_to = _parse_time(request.query_params.get("to"))
        samples = store.query_samples(device_id, t_from, t_to)
        accounting = packet_accounting(s.seq for s in samples)
        if accounting is None:
            return {"device_id": device_id, "no_data": True}
        return {"device_id": device_id, "no_data": False, **accounting.to_dict()}

    # -- notifications -------------------------------------------------------

    @app.get("/notifications")
    async def list_notifications(request: Request, unread_only: bool = False):
        user = require_user(request)
        items = store.list_notifications(user.farm_ids, unread_only=unread_only)
        return {
            "notifications": [n.to_dict() for n in items],
            "unread": sum(1 for n in store.list_notifications(user.farm_ids) if not n.read),
        }

    @app.post("/notifications")
    async def mark_notifications(request: Request):
        user = require_user(request)
        body = await request.json()
        ids = [int(i) for i in body.get("mark_read", [])]
        updated = store.mark_notifications_read(ids, user.farm_ids)
        return {"updated": updated}

    # -- ingestion (gateway/edge token) --------------------------------------

    def _auto_register(device_id: str, gateway: GatewayCredential, when: datetime) -> None:
        if device_id in store.devices:
            return
        record = DeviceRecord(
            device_id=device_id,
            farm_id=gateway.farm_id,
            cluster_id=gateway.cluster_id,
            latitude=None,
            longitude=None,
            sensor_placement=Placement.INSIDE,
            sensors=("accelerometer",),
            status=HealthStatus.from_likelihood(Likelihood.LOW, when),
            created_by=CreatedBy.GATEWAY_AUTO_DETECT,
        )
        store.upsert_device(record)
        notification = store.add_notification(
            gateway.farm_id,
            "DeviceAutoDetected",
            {"device_id": device_id, "gateway_id": gateway.gateway_id},
            when,
        )
        bus.publish(device_id, {"type": "notification", "device_id": device_id,
                                "notification": notification.to_dict()})

    @app.post("/ingest/batch")
    async def ingest_batch(request: Request):
        gateway = require_gateway(request)
        body = await request.json()
        rows = body.get("samples", body if isinstance(body, list) else [])
        samples: list[AccelSample] = []
        errors: list[dict] = []
        for i, row in enumerate(rows):
            try:
                samples.append(AccelSample.from_dict(row))
            except (PalmwatchError, KeyError, TypeError, ValueError) as exc:
                errors.append({"row": i, "error": str(exc)})
        if errors:
            return JSONResponse(status_code=400, content={"accepted": 0, "errors": errors})
        now = datetime.now(timezone.utc)
        accepted = 0
        by_device: dict[str, list[AccelSample]] = {}
        for s in samples:
            by_device.setdefault(s.device_id, []).append(s)
        for device_id, device_samples in by_device.items():
            _auto_register(device_id, gateway, now)
            fresh = store.append_samples(device_id, device_samples)
            accepted += len(fresh)
            for s in fresh:
                bus.publish(device_id, {"type": "reading", "device_id": device_id,
                                        "sample": s.to_dict()})
        request.state.audit_target = ",".join(sorted(by_device)) or "empty-batch"
        return {"accepted": accepted, "errors": []}

    @app.post("/ingest/digests")
    async def ingest_digests(request: Request):
        gateway = require_gateway(request)
        body = await request.json()
        rows = body.get("digests", body if isinstance(body, list) else [])
        now = datetime.now(timezone.utc)
        stored = 0
        for row in rows:
            digest = Digest.from_dict(row)
            _auto_register(digest.device_id, gateway, now)
            store.append_digest(digest)
            stored += 1
        return {"accepted": stored}

    @app.post("/ingest/assessments")
    async def ingest_assessments(request: Request):
        gateway = require_gateway(request)
        body = await request.json()
        rows = body.get("assessments", body if isinstance(body, list) else [])
        now = datetime.now(timezone.utc)
        stored = 0
        for row in rows:
            assessment = HealthAssessment.from_dict(row)
            _auto_register(assessment.device_id, gateway, now)
            previous = store.append_assessment(assessment)
            stored += 1
            bus.publish(assessment.device_id, {
                "type": "assessment",
                "device_id": assessment.device_id,
                "assessment": assessment.to_dict(),
            })
            if previous is not None and previous != assessment.likelihood:
                notification = store.add_notification(
                    gateway.farm_id,
                    "StatusChange",
                    {
                        "device_id": assessment.device_id,
                        "from": previous.value,
                        "to": assessment.likelihood.value,
                        "window_start": format_timestamp(assessment.window_start),
                    },
                    now,
                )
                bus.publish(assessment.device_id, {
                    "type": "notification",
                    "device_id": assessment.device_id,
                    "notification": notification.to_dict(),
                })
        return {"accepted": stored}

    # -- streaming -------------------------------------------------------------

    @app.websocket("/stream")
    async def stream(websocket: WebSocket):
        await websocket.accept()
        try:
            hello = await websocket.receive_json()
        except (json.JSONDecodeError, WebSocketDisconnect):
            await websocket.close(code=1002)
            return
        session = sessions.resolve(hello.get("token"))
        if session is None:
            await websocket.send_json({"type": "error", "error": "invalid token"})
            await websocket.close(code=4401)
            return
        user = store.users.get(session.user_id)
        device_ids = [str(d) for d in hello.get("device_ids", [])]
        denied = [
            d for d in device_ids
            if d not in store.devices or not user.can_access_farm(store.devices[d].farm_id)
        ]
        if denied or not device_ids:
            await websocket.send_json({
                "type": "error",
                "error": "subscription rejected",
                "device_ids": denied,
            })
            await websocket.close(code=4403)
            return
        queue = bus.subscribe(frozenset(device_ids))
        await websocket.send_json({"type": "subscribed", "device_ids": sorted(device_ids)})
        try:
            while True:
                event = await queue.get()
                await websocket.send_json(event)
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            bus.unsubscribe(queue)

    if config.static_dir and Path(config.static_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.static_dir, html=True), name="dashboard")

    return app
