"""Operator command line: simulate farms, analyze logs, run the service.

Exit codes: 0 success, 1 runtime/I-O failure, 2 invalid configuration or
arguments, 3 insufficient baseline data, 4 service port already in use.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

from .detector import DetectorConfig, build_baseline, assess_window
from .errors import ConfigurationError, CorruptInputError, InsufficientDataError, PalmwatchError
from .fieldsim import load_sim_config, run_simulation
from .ingest import clean_outliers, parse_log, windowize
from .model import format_timestamp
from .spectral import (
    band_slice,
    fft_spectrum,
    peaks_average_difference,
    psd_peaks,
    spectrum_peaks,
    welch_psd,
)
from .stats import compare_distributions, ecdf, histogram, summarize

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BAD_CONFIG = 2
EXIT_INSUFFICIENT_BASELINE = 3
EXIT_PORT_BUSY = 4

TIME_SERIES_MAX_POINTS = 5000


def _write_csv(path: Path, header: str, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=1) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# simulate

def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = load_sim_config(args.config)
        if args.seed is not None:
            from dataclasses import replace

            config = replace(config, seed=args.seed)
        detector_config = _load_detector_config(args.detector_config)
    except ConfigurationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    out = Path(args.output)
    streams_dir = out / "streams"
    streams_dir.mkdir(parents=True, exist_ok=True)
    handles: dict[str, object] = {}

    def write_stream(chunk) -> None:
        fh = handles.get(chunk.device_id)
        if fh is None:
            fh = (streams_dir / f"{chunk.device_id}.jsonl").open("w", encoding="utf-8")
            handles[chunk.device_id] = fh
        for sample in chunk.to_samples():
            fh.write(json.dumps(sample.to_dict()) + "\n")

    try:
        run = run_simulation(
            config,
            args.duration,
            detector_config=detector_config,
            on_generated=write_stream,
            pace=config.time_compression > 0,
        )
    finally:
        for fh in handles.values():
            fh.close()
    for device_id, result in sorted(run.devices.items()):
        if result.digests:
            _write_json(
                out / "digests" / f"{device_id}.json",
                [d.to_dict() for d in result.digests],
            )
        if result.assessments:
            _write_json(
                out / "assessments" / f"{device_id}.json",
                [a.to_dict() for a in result.assessments],
            )
    _write_json(out / "events.json", run.events)
    _write_json(out / "summary.json", run.summary_dict())
    print(f"simulated {run.config.device_count()} devices for {args.duration}s -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# analyze

def _load_detector_config(path: str | None) -> DetectorConfig:
    if not path:
        return DetectorConfig()
    try:
        return DetectorConfig.from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"detector config {path}: {exc}") from None


def _load_single_device_log(path: str, label: str):
    fmt = "csv" if str(path).endswith(".csv") else "jsonl"
    samples, parse_report = parse_log(path, format=fmt)
    samples, clean_report = clean_outliers(samples)
    devices = {s.device_id for s in samples}
    if len(devices) != 1:
        raise ConfigurationError(
            f"{label} log must contain exactly one device, found {sorted(devices) or 'none'}"
        )
    return samples, devices.pop(), parse_report, clean_report


def _spectral_artifacts(window, config: DetectorConfig, hour_dir: Path):
    spectrum = fft_spectrum(window)
    _write_csv(hour_dir / "fft.csv", "freq_hz,value", spectrum.csv_rows())
    fft_pk = spectrum_peaks(spectrum, config.peak_threshold_fraction)
    psd_pk = None
    if len(window) >= config.psd_segment_length:
        psd = band_slice(
            welch_psd(window, config.psd_segment_length, config.psd_overlap_fraction),
            config.band_low_hz,
            config.band_high_hz,
        )
        _write_csv(hour_dir / "psd.csv", "freq_hz,value", psd.csv_rows())
        psd_pk = psd_peaks(psd, config.peak_threshold_fraction)
    return fft_pk, psd_pk


def _window_artifacts(window, config: DetectorConfig, hour_dir: Path):
    """Write one window's plot-ready files; returns its peak sets."""
    stride = max(1, len(window) // TIME_SERIES_MAX_POINTS)
    t0 = window.times[0] if len(window) else 0.0
    _write_csv(
        hour_dir / "time_series.csv",
        "t_seconds,magnitude",
        zip(
            (window.times[::stride] - t0).tolist(),
            window.magnitudes[::stride].tolist(),
        ),
    )
    summary = summarize(window)
    _write_csv(hour_dir / "stats.csv", summary.CSV_HEADER, [summary.csv_row().split(",")])
    _write_csv(
        hour_dir / "histogram.csv", "bin_left,bin_right,count", histogram(window).csv_rows()
    )
    _write_csv(hour_dir / "ecdf.csv", "value,fraction", ecdf(window).csv_rows())
    fft_pk, psd_pk = _spectral_artifacts(window, config, hour_dir)
    return summary, fft_pk, psd_pk


def cmd_analyze(args: argparse.Namespace) -> int:
    try:
        detector_config = _load_detector_config(args.detector_config)
        if args.window_seconds <= 0:
            raise ConfigurationError("--window-seconds must be positive")
    except ConfigurationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    out = Path(args.output)
    try:
        input_samples, input_device, in_parse, in_clean = _load_single_device_log(
            args.input, "input"
        )
        base_samples, base_device, base_parse, base_clean = _load_single_device_log(
            args.baseline, "baseline"
        )
    except ConfigurationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except (OSError, CorruptInputError) as exc:
        print(f"cannot read logs: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    if input_device != base_device:
        print(
            f"input device {input_device} does not match baseline device {base_device}",
            file=sys.stderr,
        )
        return EXIT_BAD_CONFIG

    from .model import CreatedBy, DeviceRecord, HealthStatus, Likelihood, Placement

    base_windows = windowize(base_samples, args.window_seconds)
    if not base_windows:
        print("insufficient baseline: no parseable baseline windows", file=sys.stderr)
        return EXIT_INSUFFICIENT_BASELINE
    record = DeviceRecord(
        device_id=input_device,
        farm_id="analysis",
        cluster_id="analysis",
        latitude=None,
        longitude=None,
        sensor_placement=Placement(args.placement),
        sensors=("accelerometer",),
        status=HealthStatus.from_likelihood(Likelihood.LOW, base_windows[0].window_start),
        created_by=CreatedBy.MANUAL,
    )
    try:
        baseline = build_baseline(record, base_windows, detector_config)
    except InsufficientDataError as exc:
        print(f"insufficient baseline: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT_BASELINE

    import numpy as np

    base_values = np.concatenate([w.magnitudes for w in base_windows])
    base_dir = out / "baseline"
    _write_csv(
        base_dir / "stats.csv",
        baseline.stat.CSV_HEADER,
        [baseline.stat.csv_row().split(",")],
    )
    _write_csv(
        base_dir / "histogram.csv", "bin_left,bin_right,count", histogram(base_values).csv_rows()
    )
    base_ecdf = ecdf(base_values)
    _write_csv(base_dir / "ecdf.csv", "value,fraction", base_ecdf.csv_rows())
    rate = base_windows[0].sample_rate_hz
    _write_csv(
        base_dir / "fft.csv",
        "freq_hz,value",
        fft_spectrum(base_values, sample_rate_hz=rate).csv_rows(),
    )
    if len(base_values) >= detector_config.psd_segment_length:
        _write_csv(
            base_dir / "psd.csv",
            "freq_hz,value",
            band_slice(
                welch_psd(
                    base_values,
                    detector_config.psd_segment_length,
                    detector_config.psd_overlap_fraction,
                    sample_rate_hz=rate,
                ),
                detector_config.band_low_hz,
                detector_config.band_high_hz,
            ).csv_rows(),
        )

    windows = windowize(input_samples, args.window_seconds)
    pad_rows = []
    hour_rows = []
    assessments = []
    for index, window in enumerate(windows):
        hour_dir = out / f"hour_{index:02d}"
        summary, fft_pk, psd_pk = _window_artifacts(window, detector_config, hour_dir)
        assessment = assess_window(window, baseline, detector_config)
        assessments.append(assessment)
        _write_json(hour_dir / "assessment.json", assessment.to_dict())
        fft_pad = peaks_average_difference(fft_pk, baseline.fft_peaks)
        psd_pad = (
            peaks_average_difference(psd_pk, baseline.psd_peaks) if psd_pk is not None else None
        )
        comparison = compare_distributions(base_ecdf, ecdf(window))
        start = format_timestamp(window.window_start)
        pad_rows.append((index, start, "" if psd_pad is None else psd_pad, fft_pad))
        hour_rows.append((
            index, start, summary.n, summary.mean, summary.std, summary.whisker_span,
            "" if psd_pad is None else psd_pad, fft_pad,
            comparison.ks_statistic, comparison.mean_shift, comparison.spread_ratio,
            assessment.fired_count, assessment.likelihood.value,
        ))
    _write_csv(out / "pad_by_hour.csv", "hour,window_start,psd_pad,fft_pad", pad_rows)
    _write_csv(
        out / "analysis_by_hour.csv",
        "hour,window_start,n,mean,std,whisker_span,psd_pad,fft_pad,"
        "ks_statistic,mean_shift,spread_ratio,fired_count,likelihood",
        hour_rows,
    )
    _write_json(out / "summary.json", {
        "device_id": input_device,
        "window_seconds": args.window_seconds,
        "input": {"parse": in_parse.to_dict(), "clean": in_clean.to_dict(),
                  "windows": len(windows)},
        "baseline": {"parse": base_parse.to_dict(), "clean": base_clean.to_dict(),
                     "windows": len(base_windows),
                     "profile": baseline.to_dict()},
        "assessments": [a.to_dict() for a in assessments],
        "detector": detector_config.to_dict(),
    })
    print(f"analyzed {len(windows)} windows for {input_device} -> {out}")
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import build_app, load_service_config

    try:
        config = load_service_config(args.config)
    except ConfigurationError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((config.bind_host, config.bind_port))
    except OSError:
        print(
            f"port {config.bind_port} on {config.bind_host} is already in use",
            file=sys.stderr,
        )
        return EXIT_PORT_BUSY
    finally:
        probe.close()
    import uvicorn

    app = build_app(config)
    uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="palmwatch",
        description="Palm-farm telemetry simulation, analysis, and monitoring service",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the farm simulator and write its outputs")
    sim.add_argument("--config", required=True, help="simulation config JSON")
    sim.add_argument("--duration", type=float, required=True, help="simulated seconds")
    sim.add_argument("--output", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    sim.add_argument("--detector-config", default=None, help="detector settings JSON")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="analyze a telemetry log against a healthy baseline log")
    ana.add_argument("--input", required=True, help="telemetry log to analyze (csv or jsonl)")
    ana.add_argument("--baseline", required=True, help="healthy baseline log (csv or jsonl)")
    ana.add_argument("--output", required=True, help="output directory")
    ana.add_argument("--window-seconds", type=float, default=3600.0)
    ana.add_argument("--detector-config", default=None, help="detector settings JSON")
    ana.add_argument("--placement", choices=["Inside", "Outside"], default="Inside")
    ana.set_defaults(func=cmd_analyze)

    srv = sub.add_parser("serve", help="run the monitoring service")
    srv.add_argument("--config", required=True, help="service config JSON")
    srv.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PalmwatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
