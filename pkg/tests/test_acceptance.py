"""Acceptance gate: every criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion.
"""

import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from palmwatch.cli import main
from palmwatch.detector import DetectorConfig, assess_from_summaries
from palmwatch.fieldsim import StreamChunk, run_simulation, sim_config_from_dict
from palmwatch.ingest import clean_outliers
from palmwatch.model import Likelihood, from_epoch
from palmwatch.service import build_app
from palmwatch.spectral import fft_spectrum, welch_psd
from palmwatch.stats import StatSummary, whisker_span_from_quartiles

from helpers import T0_EPOCH, make_samples, oracle_digest, oracle_fft_spectrum
from test_cli import SIM_CONFIG, tree_bytes, write_config
from test_service import (
    DEVICE_CREATE,
    gw_headers,
    ingest,
    login,
    make_config,
    sample_rows,
)
from test_stats import INSIDE_AFTER, INSIDE_BEFORE

FS = 100.0


def report(criterion: str, passed: bool, detail: str = "") -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert passed, line


def test_spectral_oracle_equivalence():
    """fft_spectrum equals a direct O(n^2) DFT on 200 random signals."""
    rng = np.random.default_rng(2024)
    started = time.monotonic()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(8, 4097))
        values = rng.normal(9.8, rng.uniform(0.05, 2.0), n)
        result = fft_spectrum(values, sample_rate_hz=FS)
        _, expected = oracle_fft_spectrum(values, FS)
        scale = expected.max()
        errors = np.abs(result.amplitudes - expected) / (expected + 1e-12 * scale)
        worst = max(worst, float(errors.max()))
        assert np.all(np.abs(result.amplitudes - expected) <= 1e-6 * expected + 1e-12 * scale)
    elapsed = time.monotonic() - started
    report(
        "spectral oracle: 200 signals within 1e-6/bin of direct DFT, <60 s",
        worst < 1e-6 and elapsed < 60.0,
        f"worst rel err {worst:.2e}, {elapsed:.1f}s",
    )


def test_welch_calibration():
    """Unit sine band power ~0.5 within 5%; noise PSD integral within 10%."""
    t = np.arange(40_960) / FS
    sine = np.sin(2 * np.pi * 5.0 * t)
    psd = welch_psd(sine, sample_rate_hz=FS)
    df = psd.freqs[1] - psd.freqs[0]
    centre = int(np.argmin(np.abs(psd.freqs - 5.0)))
    band_power = float(np.sum(psd.power_density[centre - 1 : centre + 2]) * df)
    sine_ok = abs(band_power - 0.5) <= 0.05 * 0.5

    rng = np.random.default_rng(77)
    noise = rng.normal(0.0, 0.9, 2048 * 60)  # 119 segments at 50% overlap
    npsd = welch_psd(noise, sample_rate_hz=FS)
    integral = float(np.sum(npsd.power_density) * df)
    noise_ok = abs(integral - noise.var()) <= 0.10 * noise.var()
    report(
        "welch calibration: sine band power 0.5 +-5%, noise integral +-10%",
        sine_ok and noise_ok,
        f"band {band_power:.4f}, integral/var {integral / noise.var():.4f}",
    )


def _summary_from_row(row) -> StatSummary:
    return StatSummary.from_quartile_table(
        n=row["n"], mean=row["mean"], std=row["std"], median=row["median"],
        minimum=row["minimum"], q25=row["q25"], q75=row["q75"],
        maximum=row["maximum"], duration_minutes=row["duration_minutes"],
    )


def test_whisker_reproduction_and_summary_detector():
    """Inside-sensor whisker spans match the reported 1.2169/1.7720 +-0.03,
    and the before/after summaries alone already reach Medium."""
    span_before = whisker_span_from_quartiles(INSIDE_BEFORE["q25"], INSIDE_BEFORE["q75"])
    span_after = whisker_span_from_quartiles(INSIDE_AFTER["q25"], INSIDE_AFTER["q75"])
    spans_ok = abs(span_before - 1.2169) <= 0.03 and abs(span_after - 1.7720) <= 0.03

    assessment = assess_from_summaries(
        "palm-001",
        from_epoch(T0_EPOCH),
        _summary_from_row(INSIDE_AFTER),
        _summary_from_row(INSIDE_BEFORE),
    )
    fired = assessment.indicators
    detector_ok = (
        fired["whisker_ratio"].fired
        and fired["mean_shift"].fired
        and assessment.likelihood in (Likelihood.MEDIUM, Likelihood.HIGH)
    )
    report(
        "whisker reproduction: 1.2169/1.7720 +-0.03; summary detector >= Medium",
        spans_ok and detector_ok,
        f"spans {span_before:.4f}/{span_after:.4f}, likelihood {assessment.likelihood.value}",
    )


def _end_to_end_config(seed: int) -> dict:
    return {
        "seed": seed,
        "loss_probability": 0.0,
        "digest_interval_seconds": 3600.0,
        "baseline_windows": 3,
        "start_time": "2024-03-01T00:00:00Z",
        "farms": [{
            "farm_id": "farm-1",
            "clusters": [{
                "cluster_id": "cl-1",
                "gateway_id": "gw-1",
                "devices": [{
                    "device_id": "palm-001",
                    "latitude": 24.7,
                    "longitude": 46.6,
                    "placement": "Inside",
                    "infested": True,
                    "onset_seconds": 3 * 3600.0,
                }],
            }],
        }],
    }


def test_end_to_end_synthetic_detection():
    """20 seeds: 3 healthy hours baseline then 3 infested hours; healthy
    windows assess Low, infested High, PAD positive in every infested hour."""
    started = time.monotonic()
    failures = []
    for seed in range(1, 21):
        config = sim_config_from_dict(_end_to_end_config(seed))
        run = run_simulation(config, 6 * 3600.0, detector_config=DetectorConfig())
        result = run.devices["palm-001"]
        if len(result.assessments) != 6:
            failures.append(f"seed {seed}: {len(result.assessments)} assessments")
            continue
        ordered = sorted(result.assessments, key=lambda a: a.window_start)
        for hour, assessment in enumerate(ordered):
            expected = Likelihood.LOW if hour < 3 else Likelihood.HIGH
            if assessment.likelihood != expected:
                failures.append(
                    f"seed {seed} hour {hour}: {assessment.likelihood.value}"
                    f" (fired {assessment.fired_count})"
                )
            if hour >= 3:
                pad = assessment.indicators["psd_pad"]
                if not (pad.evaluable and pad.value is not None and pad.value > 0):
                    failures.append(f"seed {seed} hour {hour}: PAD {pad.value}")
    elapsed = time.monotonic() - started
    report(
        "end-to-end detection: 20 seeds, healthy Low / infested High, PAD>0, <5 min",
        not failures and elapsed < 300.0,
        f"{elapsed:.0f}s" + (f"; first failure: {failures[0]}" if failures else ""),
    )


def test_cleaning_property():
    """1,000 random vectors: post-clean magnitudes within [6, 17], idempotent."""
    rng = np.random.default_rng(11)
    ok = True
    for _ in range(1000):
        n = int(rng.integers(0, 40))
        magnitudes = rng.uniform(0.0, 25.0, n)
        samples = make_samples(magnitudes)
        kept, first = clean_outliers(samples)
        if any(not 6.0 <= s.magnitude <= 17.0 for s in kept):
            ok = False
            break
        again, second = clean_outliers(kept)
        if again != kept or second.dropped_low or second.dropped_high:
            ok = False
            break
        if first.total_in != len(samples) or first.kept != len(kept):
            ok = False
            break
    report("cleaning: bounds [6,17] and idempotence over 1,000 random vectors", ok)


def _conservation_config() -> dict:
    devices = [
        {"device_id": f"palm-{i:03d}", "latitude": 24.7 + i * 0.001,
         "longitude": 46.6, "placement": "Inside"}
        for i in range(10)
    ]
    return {
        "seed": 1234,
        "loss_probability": 0.1,
        "digest_interval_seconds": 60.0,
        "start_time": "2024-03-01T00:00:00Z",
        "farms": [{
            "farm_id": "farm-1",
            "clusters": [
                {"cluster_id": "cl-1", "gateway_id": "gw-1", "devices": devices[:5]},
                {"cluster_id": "cl-2", "gateway_id": "gw-2", "devices": devices[5:]},
            ],
        }],
    }


def test_pipeline_conservation():
    """10 devices at loss 0.1: per-device conservation, digest-oracle
    equality, packet tracer within 10 +-0.5 points."""
    config = sim_config_from_dict(_conservation_config())
    detector = DetectorConfig(fft_abs_threshold=0.05)  # short windows
    run = run_simulation(config, 600.0, detector_config=detector, keep_cloud_samples=True)
    problems = []
    for device_id, result in run.devices.items():
        if result.generated != result.delivered_cloud + result.dropped:
            problems.append(f"{device_id}: conservation")
        if result.delivered_edge != result.delivered_cloud:
            problems.append(f"{device_id}: edge/cloud fan-out differs")
        delivered = StreamChunk.concat(result.cloud_chunks)
        if not np.all(np.diff(delivered.seqs) > 0):
            problems.append(f"{device_id}: order violated")
        for digest in result.digests:
            start = digest.window_start.timestamp()
            mask = (delivered.times >= start) & (delivered.times < start + 60.0)
            count, lo, mean, hi = oracle_digest(delivered.magnitudes[mask])
            if digest.count != count or digest.min != lo or digest.max != hi:
                problems.append(f"{device_id}: digest min/max/count mismatch")
                break
            if abs(digest.mean - mean) > 1e-9 * abs(mean):
                problems.append(f"{device_id}: digest mean off")
                break
        if abs(result.packet.lost_pct - 10.0) > 0.5:
            problems.append(f"{device_id}: lost_pct {result.packet.lost_pct:.2f}")
    report(
        "pipeline conservation: generated == stored + dropped; digests exact; loss 10 +-0.5",
        not problems,
        problems[0] if problems else f"{len(run.devices)} devices",
    )


def test_service_contract_suite(tmp_path):
    """Ingest idempotence, authorization boundary, audit completeness,
    stream/storage consistency; no dashboard involved."""
    config = make_config(tmp_path / "acceptance-data")
    problems = []
    with TestClient(build_app(config)) as client:
        # ingest idempotence
        rows = sample_rows(40)
        first = ingest(client, rows)["accepted"]
        second = ingest(client, rows)["accepted"]
        store = client.app.state.store
        if not (first == 40 and second == 0 and store.sample_count("palm-001") == 40):
            problems.append("ingest idempotence")
        # authorization boundary
        ingest(client, sample_rows(3, device_id="other-palm"), token="gw-secret-2")
        amal = login(client)
        denied = [
            client.get("/farms/farm-2/overview", headers=amal).status_code,
            client.get("/devices/other-palm/readings", headers=amal).status_code,
            client.get("/devices/other-palm", headers=amal).status_code,
        ]
        if denied != [403, 403, 403]:
            problems.append(f"authorization boundary: {denied}")
        if client.get("/farms").status_code != 401:
            problems.append("missing token accepted")
        # audit completeness: every mutating call above wrote one entry
        before = store.audit_count()
        client.post("/devices", json=DEVICE_CREATE, headers=amal)
        client.post("/auth/login", json={"user_id": "amal", "password": "bad"})
        client.post("/ingest/batch", json={"samples": [{"junk": True}]},
                    headers=gw_headers())
        if store.audit_count() - before != 3:
            problems.append("audit completeness")
        # stream/storage consistency
        token = client.post(
            "/auth/login", json={"user_id": "amal", "password": "palm-pass"}
        ).json()["token"]
        with client.websocket_connect("/stream") as ws:
            ws.send_json({"token": token, "device_ids": ["palm-001"]})
            if ws.receive_json()["type"] != "subscribed":
                problems.append("subscription failed")
            ingest(client, sample_rows(4, seq_start=500, start=T0_EPOCH + 500))
            streamed = [ws.receive_json()["sample"] for _ in range(4)]
        stored = client.get(
            "/devices/palm-001/readings",
            params={"max_points": 1000},
            headers={"Authorization": f"Bearer {token}"},
        ).json()["points"]
        if any(sample not in stored for sample in streamed):
            problems.append("stream/storage consistency")
    report(
        "service contracts: idempotent ingest, farm boundary, audit, stream consistency",
        not problems,
        problems[0] if problems else "",
    )


def test_simulate_determinism(tmp_path):
    """Identical config+seed twice: byte-identical output trees."""
    config = write_config(tmp_path, SIM_CONFIG)
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    for out in (out1, out2):
        code = main(["simulate", "--config", config, "--duration", "300",
                     "--output", str(out)])
        assert code == 0
    identical = tree_bytes(out1) == tree_bytes(out2)
    report("determinism: cmd_simulate byte-identical for identical config+seed", identical)
