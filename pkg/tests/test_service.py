import json
import time
from datetime import datetime, timezone

import numpy as np
import pytest
from fastapi.testclient import TestClient

from palmwatch.detector import DetectorConfig, assess_from_summaries
from palmwatch.model import FarmRecord, format_timestamp, from_epoch
from palmwatch.service import (
    GatewayCredential,
    Role,
    ServiceConfig,
    TelemetryStore,
    UserAccount,
    build_app,
    decimate,
    hash_password,
)
from palmwatch.stats import summarize

from helpers import T0_EPOCH, make_samples
from test_stats import INSIDE_AFTER, INSIDE_BEFORE

GW_TOKEN = "gw-secret-1"
GW2_TOKEN = "gw-secret-2"


def make_config(storage_dir, session_ttl=3600.0) -> ServiceConfig:
    return ServiceConfig(
        storage_dir=str(storage_dir),
        session_ttl_seconds=session_ttl,
        gateways=(
            GatewayCredential(GW_TOKEN, "gw-1", "farm-1", "cl-1"),
            GatewayCredential(GW2_TOKEN, "gw-2", "farm-2", "cl-2"),
        ),
        users=(
            UserAccount("amal", "Amal", hash_password("palm-pass"), Role.ADMIN, ("farm-1",)),
            UserAccount("viewer", "Viewer", hash_password("view-pass"), Role.VIEWER, ("farm-1",)),
            UserAccount("rival", "Rival", hash_password("rival-pass"), Role.ADMIN, ("farm-2",)),
        ),
        farms=(
            FarmRecord("farm-1", "North grove", ("amal",), ("cl-1",)),
            FarmRecord("farm-2", "South grove", ("rival",), ("cl-2",)),
        ),
        detector=DetectorConfig(),
    )


@pytest.fixture()
def client(tmp_path):
    config = make_config(tmp_path / "data")
    app = build_app(config)
    with TestClient(app) as c:
        yield c


def login(client, user_id="amal", password="palm-pass") -> dict:
    response = client.post("/auth/login", json={"user_id": user_id, "password": password})
    assert response.status_code == 200, response.text
    return {"Authorization": f"Bearer {response.json()['token']}"}


def gw_headers(token=GW_TOKEN) -> dict:
    return {"Authorization": f"Bearer {token}"}


def sample_rows(n=10, device_id="palm-001", start=T0_EPOCH, seq_start=0):
    return [s.to_dict() for s in make_samples(
        9.8 + 0.001 * np.arange(n), device_id=device_id,
        start_epoch=start, seq_start=seq_start,
    )]


def ingest(client, rows, token=GW_TOKEN):
    response = client.post("/ingest/batch", json={"samples": rows}, headers=gw_headers(token))
    assert response.status_code == 200, response.text
    return response.json()


def assessment_payload(device_id, likelihood, window_epoch=T0_EPOCH) -> dict:
    before = INSIDE_BEFORE
    row = INSIDE_AFTER if likelihood != "Low" else INSIDE_BEFORE
    from palmwatch.stats import StatSummary

    def to_summary(r):
        return StatSummary.from_quartile_table(
            n=r["n"], mean=r["mean"], std=r["std"], median=r["median"],
            minimum=r["minimum"], q25=r["q25"], q75=r["q75"], maximum=r["maximum"],
            duration_minutes=r["duration_minutes"],
        )

    a = assess_from_summaries(
        device_id, from_epoch(window_epoch), to_summary(row), to_summary(before)
    )
    payload = a.to_dict()
    if likelihood == "High":
        # summaries alone top out at Medium; force the spectral indicators
        payload["indicators"]["fft_level"] = {"fired": True, "value": 0.5,
                                              "threshold": 0.1, "evaluable": True}
        payload["indicators"]["psd_pad"] = {"fired": True, "value": 0.002,
                                            "threshold": 0.0, "evaluable": True}
        payload["fired_count"] = 4
        payload["likelihood"] = "High"
    return payload


class TestHealthAndAuth:
    def test_health_is_open(self, client):
        assert client.get("/health").json()["status"] == "ok"

    def test_login_roundtrip(self, client):
        headers = login(client)
        assert client.get("/farms", headers=headers).status_code == 200

    def test_bad_credentials_uniform_message(self, client):
        wrong_pw = client.post("/auth/login", json={"user_id": "amal", "password": "nope"})
        no_user = client.post("/auth/login", json={"user_id": "ghost", "password": "nope"})
        assert wrong_pw.status_code == no_user.status_code == 401
        assert wrong_pw.json()["detail"] == no_user.json()["detail"]

    def test_failed_login_audited_denied(self, client, tmp_path):
        client.post("/auth/login", json={"user_id": "amal", "password": "nope"})
        store: TelemetryStore = client.app.state.store
        audit = (store.root / "audit.jsonl").read_text().strip().splitlines()
        last = json.loads(audit[-1])
        assert last["outcome"] == "denied"
        assert last["action"] == "POST /auth/login"
        assert last["user_id"] == "amal"

    def test_expired_token_rejected_everywhere(self, tmp_path):
        config = make_config(tmp_path / "data", session_ttl=0.05)
        with TestClient(build_app(config)) as client:
            headers = login(client)
            time.sleep(0.1)
            assert client.get("/farms", headers=headers).status_code == 401

    @pytest.mark.parametrize("method,path", [
        ("GET", "/farms"),
        ("GET", "/farms/farm-1/overview"),
        ("GET", "/devices"),
        ("GET", "/devices/palm-001/readings"),
        ("GET", "/devices/palm-001/assessments"),
        ("GET", "/devices/palm-001/packets"),
        ("GET", "/notifications"),
        ("POST", "/devices"),
        ("PUT", "/devices/palm-001"),
        ("POST", "/notifications"),
        ("POST", "/ingest/batch"),
        ("POST", "/ingest/digests"),
        ("POST", "/ingest/assessments"),
    ])
    def test_everything_rejects_missing_token(self, client, method, path):
        response = client.request(method, path, json={})
        assert response.status_code == 401

    def test_passwords_never_stored_in_clear(self, client):
        store: TelemetryStore = client.app.state.store
        users_file = (store.root / "users.json").read_text()
        assert "palm-pass" not in users_file
        assert "view-pass" not in users_file


class TestFarmBoundary:
    def test_farms_scoped_to_user(self, client):
        headers = login(client)
        farms = client.get("/farms", headers=headers).json()["farms"]
        assert [f["farm_id"] for f in farms] == ["farm-1"]

    def test_cross_farm_overview_denied(self, client):
        headers = login(client)
        assert client.get("/farms/farm-2/overview", headers=headers).status_code == 403

    def test_cross_farm_device_listing_denied(self, client):
        headers = login(client)
        assert client.get("/devices", params={"farm_id": "farm-2"},
                          headers=headers).status_code == 403

    def test_cross_farm_device_detail_denied(self, client):
        ingest(client, sample_rows(device_id="other-palm"), token=GW2_TOKEN)
        headers = login(client)  # amal: farm-1 only
        for path in ("/devices/other-palm", "/devices/other-palm/readings",
                     "/devices/other-palm/assessments", "/devices/other-palm/packets"):
            assert client.get(path, headers=headers).status_code == 403, path

    def test_notifications_scoped(self, client):
        ingest(client, sample_rows(device_id="other-palm"), token=GW2_TOKEN)
        ingest(client, sample_rows())
        ours = client.get("/notifications", headers=login(client)).json()["notifications"]
        assert {n["farm_id"] for n in ours} == {"farm-1"}


class TestIngest:
    def test_batch_accepted(self, client):
        result = ingest(client, sample_rows(100))
        assert result["accepted"] == 100

    def test_replay_is_idempotent(self, client):
        rows = sample_rows(50)
        assert ingest(client, rows)["accepted"] == 50
        store: TelemetryStore = client.app.state.store
        before = store.sample_count("palm-001")
        assert ingest(client, rows)["accepted"] == 0
        assert store.sample_count("palm-001") == before

    def test_unknown_device_autoregistered_with_notification(self, client):
        ingest(client, sample_rows(device_id="palm-new"))
        headers = login(client)
        device = client.get("/devices/palm-new", headers=headers).json()
        assert device["created_by"] == "GatewayAutoDetect"
        assert device["farm_id"] == "farm-1"
        assert device["latitude"] is None
        notifications = client.get("/notifications", headers=headers).json()["notifications"]
        assert any(
            n["kind"] == "DeviceAutoDetected" and n["payload"]["device_id"] == "palm-new"
            for n in notifications
        )

    def test_malformed_batch_rejected_with_row_errors(self, client):
        rows = sample_rows(3)
        rows[1] = {"device_id": "palm-001", "seq": "x"}
        response = client.post("/ingest/batch", json={"samples": rows},
                               headers=gw_headers())
        assert response.status_code == 400
        assert response.json()["errors"][0]["row"] == 1
        store: TelemetryStore = client.app.state.store
        assert store.sample_count("palm-001") == 0

    def test_bad_gateway_token(self, client):
        response = client.post("/ingest/batch", json={"samples": []},
                               headers=gw_headers("not-a-token"))
        assert response.status_code == 401


class TestReadings:
    def test_small_series_returned_whole(self, client):
        ingest(client, sample_rows(10))
        headers = login(client)
        body = client.get("/devices/palm-001/readings", params={"max_points": 10},
                          headers=headers).json()
        assert body["total"] == 10
        assert len(body["points"]) == 10

    def test_decimation_preserves_endpoints(self, client):
        ingest(client, sample_rows(1000))
        headers = login(client)
        body = client.get("/devices/palm-001/readings", params={"max_points": 100},
                          headers=headers).json()
        points = body["points"]
        assert len(points) == 100
        assert points[0]["seq"] == 0
        assert points[-1]["seq"] == 999

    def test_decimated_envelope_inside_raw(self, client):
        rows = sample_rows(500)
        ingest(client, rows)
        headers = login(client)
        body = client.get("/devices/palm-001/readings", params={"max_points": 40},
                          headers=headers).json()
        raw = [r["magnitude"] for r in rows]
        got = [p["magnitude"] for p in body["points"]]
        assert min(got) >= min(raw)
        assert max(got) <= max(raw)

    def test_empty_range_is_empty_not_error(self, client):
        ingest(client, sample_rows(10))
        headers = login(client)
        body = client.get(
            "/devices/palm-001/readings",
            params={"from": T0_EPOCH + 9000, "to": T0_EPOCH + 9100},
            headers=headers,
        ).json()
        assert body["points"] == [] and body["total"] == 0

    def test_decimate_helper(self):
        assert decimate(list(range(10)), 10) == list(range(10))
        sel = decimate(list(range(1000)), 100)
        assert len(sel) == 100 and sel[0] == 0 and sel[-1] == 999
        assert decimate([], 5) == []
        assert decimate([1, 2, 3], 1) == [1]


class TestPacketTracer:
    def test_gap_fixture(self, client):
        rows = [sample_rows(1, seq_start=s, start=T0_EPOCH + s)[0] for s in (1, 2, 4, 5)]
        ingest(client, rows)
        headers = login(client)
        body = client.get("/devices/palm-001/packets", headers=headers).json()
        assert body["no_data"] is False
        assert body["received_pct"] == pytest.approx(80.0)
        assert body["lost_pct"] == pytest.approx(20.0)

    def test_no_data_distinct_from_zero(self, client):
        ingest(client, sample_rows(1))
        headers = login(client)
        body = client.get(
            "/devices/palm-001/packets",
            params={"from": T0_EPOCH + 5000, "to": T0_EPOCH + 6000},
            headers=headers,
        ).json()
        assert body["no_data"] is True
        assert "lost_pct" not in body


DEVICE_CREATE = {
    "device_id": "palm-manual",
    "farm_id": "farm-1",
    "cluster_id": "cl-1",
    "latitude": 24.7,
    "longitude": 46.6,
    "sensor_placement": "Outside",
    "sensors": ["accelerometer", "temperature"],
}


class TestDeviceCrud:
    CREATE = DEVICE_CREATE

    def test_admin_create_retrievable(self, client):
        headers = login(client)
        created = client.post("/devices", json=self.CREATE, headers=headers)
        assert created.status_code == 201
        got = client.get("/devices/palm-manual", headers=headers).json()
        assert got["created_by"] == "Manual"
        assert got["latitude"] == pytest.approx(24.7)
        assert got["status"]["level"] == "Healthy"

    def test_viewer_denied_and_audited(self, client):
        headers = login(client, "viewer", "view-pass")
        response = client.post("/devices", json=self.CREATE, headers=headers)
        assert response.status_code == 403
        store: TelemetryStore = client.app.state.store
        lines = (store.root / "audit.jsonl").read_text().strip().splitlines()
        last = json.loads(lines[-1])
        assert last["outcome"] == "denied"
        assert last["user_id"] == "viewer"

    def test_invalid_latitude_rejected(self, client):
        headers = login(client)
        bad = dict(self.CREATE, latitude=95.0)
        response = client.post("/devices", json=bad, headers=headers)
        assert response.status_code == 400

    def test_update(self, client):
        headers = login(client)
        client.post("/devices", json=self.CREATE, headers=headers)
        response = client.put("/devices/palm-manual", json={"latitude": 25.0},
                              headers=headers)
        assert response.status_code == 200
        assert response.json()["latitude"] == pytest.approx(25.0)

    def test_create_outside_own_farm_denied(self, client):
        headers = login(client)
        foreign = dict(self.CREATE, farm_id="farm-2", cluster_id="cl-2")
        assert client.post("/devices", json=foreign, headers=headers).status_code == 403

    def test_cluster_must_belong_to_farm(self, client):
        headers = login(client)
        wrong = dict(self.CREATE, cluster_id="cl-2")  # cl-2 belongs to farm-2
        response = client.post("/devices", json=wrong, headers=headers)
        assert response.status_code == 400
        assert "cl-2" in response.json()["detail"]


class TestFarmOverview:
    def test_counts_and_percentage(self, client):
        headers = login(client)
        for i in range(5):
            ingest(client, sample_rows(2, device_id=f"palm-{i}", start=T0_EPOCH + i * 10,
                                       seq_start=0))
        client.post(
            "/ingest/assessments",
            json={"assessments": [assessment_payload("palm-0", "High")]},
            headers=gw_headers(),
        )
        body = client.get("/farms/farm-1/overview", headers=headers).json()
        assert body["palm_count"] == 5
        assert body["status_counts"]["Infested"] == 1
        assert body["status_counts"]["Healthy"] == 4
        assert body["healthy_pct"] == pytest.approx(80.0)
        assert sum(body["status_counts"].values()) == 5

    def test_empty_farm_is_healthy(self, client):
        headers = login(client)
        body = client.get("/farms/farm-1/overview", headers=headers).json()
        assert body["palm_count"] == 0
        assert body["healthy_pct"] == 100.0

    def test_latest_digest_included(self, client):
        ingest(client, sample_rows(5))
        digest = {
            "device_id": "palm-001",
            "window_start": format_timestamp(from_epoch(T0_EPOCH)),
            "count": 5, "min": 9.7, "mean": 9.8, "max": 9.9,
        }
        client.post("/ingest/digests", json={"digests": [digest]}, headers=gw_headers())
        headers = login(client)
        body = client.get("/farms/farm-1/overview", headers=headers).json()
        assert body["latest_digests"]["palm-001"]["count"] == 5


class TestNotifications:
    def test_status_change_emitted_only_on_change(self, client):
        ingest(client, sample_rows())
        for likelihood in ("Low", "Low", "High", "High", "Low"):
            client.post(
                "/ingest/assessments",
                json={"assessments": [assessment_payload("palm-001", likelihood)]},
                headers=gw_headers(),
            )
        headers = login(client)
        changes = [
            n for n in client.get("/notifications", headers=headers).json()["notifications"]
            if n["kind"] == "StatusChange"
        ]
        transitions = [(n["payload"]["from"], n["payload"]["to"]) for n in changes]
        assert sorted(transitions) == [("High", "Low"), ("Low", "High")]

    def test_mark_read(self, client):
        ingest(client, sample_rows(device_id="palm-new"))
        headers = login(client)
        body = client.get("/notifications", headers=headers).json()
        assert body["unread"] >= 1
        ids = [n["id"] for n in body["notifications"]]
        marked = client.post("/notifications", json={"mark_read": ids}, headers=headers)
        assert marked.json()["updated"] == len(ids)
        assert client.get("/notifications", headers=headers).json()["unread"] == 0


class TestAuditCompleteness:
    def test_every_mutation_is_one_entry(self, client):
        store: TelemetryStore = client.app.state.store
        start = store.audit_count()
        mutations = 0
        headers = login(client); mutations += 1
        ingest(client, sample_rows(5)); mutations += 1
        ingest(client, sample_rows(5)); mutations += 1  # replay still audited
        client.post("/devices", json=TestDeviceCrud.CREATE, headers=headers); mutations += 1
        client.put("/devices/palm-manual", json={"latitude": 20.0}, headers=headers); mutations += 1
        client.post("/auth/login", json={"user_id": "amal", "password": "bad"}); mutations += 1
        client.post("/devices", json=TestDeviceCrud.CREATE,
                    headers=login(client, "viewer", "view-pass")); mutations += 2  # login + denied post
        client.post("/notifications", json={"mark_read": []}, headers=headers); mutations += 1
        client.post("/ingest/batch", json={"samples": [{"bad": 1}]},
                    headers=gw_headers()); mutations += 1
        assert store.audit_count() - start == mutations

    def test_reads_are_not_audited(self, client):
        store: TelemetryStore = client.app.state.store
        headers = login(client)
        start = store.audit_count()
        client.get("/farms", headers=headers)
        client.get("/devices", headers=headers)
        client.get("/notifications", headers=headers)
        assert store.audit_count() == start


class TestStream:
    def test_subscription_filters_devices(self, client):
        ingest(client, sample_rows(1))
        ingest(client, sample_rows(1, device_id="palm-002", seq_start=0))
        token = client.post(
            "/auth/login", json={"user_id": "amal", "password": "palm-pass"}
        ).json()["token"]
        with client.websocket_connect("/stream") as ws:
            ws.send_json({"token": token, "device_ids": ["palm-001"]})
            assert ws.receive_json()["type"] == "subscribed"
            ingest(client, sample_rows(2, seq_start=100, start=T0_EPOCH + 100))
            ingest(client, sample_rows(2, device_id="palm-002", seq_start=100,
                                       start=T0_EPOCH + 100))
            ingest(client, sample_rows(1, seq_start=200, start=T0_EPOCH + 200))
            events = [ws.receive_json() for _ in range(3)]
        assert all(e["device_id"] == "palm-001" for e in events)
        assert [e["sample"]["seq"] for e in events] == [100, 101, 200]

    def test_two_subscribers_identical_sequences(self, client):
        ingest(client, sample_rows(1))
        token = client.post(
            "/auth/login", json={"user_id": "amal", "password": "palm-pass"}
        ).json()["token"]
        with client.websocket_connect("/stream") as ws1, \
                client.websocket_connect("/stream") as ws2:
            for ws in (ws1, ws2):
                ws.send_json({"token": token, "device_ids": ["palm-001"]})
                assert ws.receive_json()["type"] == "subscribed"
            ingest(client, sample_rows(5, seq_start=10, start=T0_EPOCH + 10))
            got1 = [ws1.receive_json() for _ in range(5)]
            got2 = [ws2.receive_json() for _ in range(5)]
        assert got1 == got2

    def test_unauthorized_device_rejected_with_ids(self, client):
        ingest(client, sample_rows(1))
        ingest(client, sample_rows(1, device_id="other-palm"), token=GW2_TOKEN)
        token = client.post(
            "/auth/login", json={"user_id": "amal", "password": "palm-pass"}
        ).json()["token"]
        with client.websocket_connect("/stream") as ws:
            ws.send_json({"token": token, "device_ids": ["palm-001", "other-palm"]})
            reply = ws.receive_json()
        assert reply["type"] == "error"
        assert reply["device_ids"] == ["other-palm"]

    def test_invalid_token_rejected(self, client):
        with client.websocket_connect("/stream") as ws:
            ws.send_json({"token": "junk", "device_ids": ["palm-001"]})
            assert ws.receive_json()["type"] == "error"

    def test_streamed_events_are_queryable(self, client):
        ingest(client, sample_rows(1))
        token = client.post(
            "/auth/login", json={"user_id": "amal", "password": "palm-pass"}
        ).json()["token"]
        with client.websocket_connect("/stream") as ws:
            ws.send_json({"token": token, "device_ids": ["palm-001"]})
            ws.receive_json()
            ingest(client, sample_rows(3, seq_start=50, start=T0_EPOCH + 50))
            streamed = [ws.receive_json()["sample"] for _ in range(3)]
        headers = {"Authorization": f"Bearer {token}"}
        stored = client.get("/devices/palm-001/readings", params={"max_points": 100},
                            headers=headers).json()["points"]
        for sample in streamed:
            assert sample in stored


class TestPersistence:
    def test_restart_preserves_state(self, tmp_path):
        config = make_config(tmp_path / "data")
        with TestClient(build_app(config)) as client:
            ingest(client, sample_rows(20))
            headers = login(client)
            client.post("/devices", json=TestDeviceCrud.CREATE, headers=headers)
        # shutdown flushed the index; a new app over the same directory
        # must see everything
        index = json.loads((tmp_path / "data" / "index.json").read_text())
        assert index["sample_counts"]["palm-001"] == 20
        with TestClient(build_app(config)) as client:
            headers = login(client)
            body = client.get("/devices/palm-001/readings", params={"max_points": 50},
                              headers=headers).json()
            assert body["total"] == 20
            assert client.get("/devices/palm-manual", headers=headers).status_code == 200
            # dedup index survives the restart
            assert ingest(client, sample_rows(20))["accepted"] == 0
