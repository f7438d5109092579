"""Headless operation: live service, scripted scenarios, replay, export.

The live ``run`` command boots the FastAPI service (plus UDP ingest);
everything else drives the engine in process so results stay
deterministic and CI-friendly.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .biometric import estimate_heart_rate, parse_sensor_line
from .arousal import calibrate_baseline
from .canvas import export_ppm
from .config import SessionConfig, config_from_dict, config_hash, load_config
from .engine import replay_log, session_summary
from .errors import ConfigMismatch, CopaintError, ScenarioError, SeqGap
from .events import read_log
from .scenario import bundled_scenario_path, load_scenario, run_scenario

EXIT_VALIDATION = 2
EXIT_ENGINE = 3


def _load_cfg(config_path: str | None, seed: int | None) -> SessionConfig:
    cfg = load_config(config_path) if config_path else SessionConfig()
    if seed is not None:
        import dataclasses

        cfg = dataclasses.replace(cfg, seed=seed)
    return cfg


def _summary_table(summary: dict) -> str:
    lines = [
        f"scenario       : {summary.get('name', '-')}",
        f"final mode     : {summary['final_mode']}",
        f"canvas digest  : {summary['canvas_digest']}",
        f"events applied : {summary['events_applied']}",
        f"robot pixels   : {summary['robot_pixels_total']}",
        f"  by quadrant  : {summary['robot_pixels_by_quadrant']}",
        f"artist pixels  : {summary['artist_pixels_total']}",
        f"zone violations: {summary['zone_violations']}",
        f"paint refills  : {summary['paint_refills']}",
        "transitions    :",
    ]
    for t in summary["transitions"]:
        lines.append(f"  {t['at_ms']:>8} ms  {t['from']} -> {t['to']}")
    return "\n".join(lines)


@click.group()
def main() -> None:
    """Collaborative painting robot: live service and headless tools."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--host", default=None, help="Bind address for the HTTP API.")
@click.option("--port", type=int, default=None, help="HTTP port (default 8080).")
@click.option("--udp-port", type=int, default=None, help="Sensor UDP port (default 12345).")
@click.option("--seed", type=int, default=None)
@click.option("--no-autostart", is_flag=True, help="Do not start a session at boot.")
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="Serve a built studio UI directory at /ui.")
def run(config_path, host, port, udp_port, seed, no_autostart, ui_dir) -> None:
    """Run the live service: HTTP API + WebSocket + UDP sensor ingest."""
    import uvicorn

    from .service.app import create_app
    from .service.runtime import SessionRuntime
    from .service.udp import UdpIngest

    cfg = _load_cfg(config_path, seed)
    import dataclasses

    if host:
        cfg = dataclasses.replace(cfg, http_host=host)
    if port:
        cfg = dataclasses.replace(cfg, http_port=port)
    if udp_port:
        cfg = dataclasses.replace(cfg, udp_port=udp_port)

    runtime = SessionRuntime(cfg)
    if not no_autostart:
        runtime.start_session()
    runtime.start()
    ingest = UdpIngest(runtime, port=cfg.udp_port)
    ingest.start()
    app = create_app(runtime, static_dir=ui_dir)
    try:
        uvicorn.run(app, host=cfg.http_host, port=cfg.http_port, log_level="info")
    finally:
        ingest.stop()
        runtime.stop()


@main.command()
@click.argument("scenario_ref")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Artifact directory.")
@click.option("--fast/--realtime", default=True, show_default=True,
              help="Skip wall-clock pacing between ticks.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="Base config; scenario overrides still apply on top of defaults.")
@click.option("--seed", type=int, default=None)
def scenario(scenario_ref, out_dir, fast, config_path, seed) -> None:
    """Run a scripted scenario (path or bundled name, e.g. fig1_loop)."""
    path = Path(scenario_ref)
    if not path.exists():
        bundled = bundled_scenario_path(scenario_ref)
        if bundled is None:
            click.echo(f"scenario not found: {scenario_ref}", err=True)
            sys.exit(EXIT_VALIDATION)
        path = bundled
    try:
        scn = load_scenario(path)
        if seed is not None:
            import dataclasses

            scn.config = dataclasses.replace(scn.config, seed=seed)
        result = run_scenario(scn, out_dir=out_dir, fast=fast)
    except ScenarioError as exc:
        click.echo(f"scenario error: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except CopaintError as exc:
        click.echo(f"engine error: {exc}", err=True)
        sys.exit(EXIT_ENGINE)
    click.echo(_summary_table(result.summary))
    click.echo(json.dumps(result.summary, indent=2))


@main.command()
@click.argument("log_path", type=click.Path(exists=True))
def replay(log_path) -> None:
    """Replay a recorded session log and print its summary."""
    try:
        with open(log_path, "r", encoding="utf-8") as fh:
            header, events = read_log(fh)
        cfg = config_from_dict(header.get("config"))
        if header.get("config_hash") != config_hash(cfg):
            raise ConfigMismatch("log header hash does not match its embedded config")
        session = replay_log(events, cfg)
    except (ValueError, KeyError, ConfigMismatch) as exc:
        click.echo(f"invalid log: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except SeqGap as exc:
        click.echo(f"engine error: {exc}", err=True)
        sys.exit(EXIT_ENGINE)
    summary = session_summary(session)
    summary["name"] = Path(log_path).name
    click.echo(_summary_table(summary))
    click.echo(json.dumps(summary, indent=2))


@main.command()
@click.argument("log_path", type=click.Path(exists=True))
@click.option("--ppm", "ppm_path", type=click.Path(), required=True,
              help="Where to write the replayed canvas as binary PPM.")
def export(log_path, ppm_path) -> None:
    """Replay a log and export the final canvas as a PPM image."""
    try:
        with open(log_path, "r", encoding="utf-8") as fh:
            header, events = read_log(fh)
        cfg = config_from_dict(header.get("config"))
        session = replay_log(events, cfg)
    except (ValueError, KeyError) as exc:
        click.echo(f"invalid log: {exc}", err=True)
        sys.exit(EXIT_VALIDATION)
    except SeqGap as exc:
        click.echo(f"engine error: {exc}", err=True)
        sys.exit(EXIT_ENGINE)
    Path(ppm_path).write_bytes(export_ppm(session.canvas))
    click.echo(f"wrote {ppm_path} ({session.canvas.spec.width_px}x{session.canvas.spec.height_px})")


@main.command()
@click.option("--input", "input_path", type=click.Path(), default="-",
              help="Sensor line stream (TAG,ts,value per line); - for stdin.")
@click.option("--fs", type=float, default=25.0, show_default=True,
              help="PPG sample rate of the stream.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def calibrate(input_path, fs, config_path) -> None:
    """Estimate a resting baseline from a recorded sensor stream."""
    cfg = _load_cfg(config_path, None)
    raw = sys.stdin.read() if input_path == "-" else Path(input_path).read_text()
    pg, estimates = [], []
    for line in raw.splitlines():
        if not line.strip():
            continue
        try:
            sample = parse_sensor_line(line)
        except CopaintError as exc:
            click.echo(f"skipping line: {exc}", err=True)
            continue
        if sample.tag == "HR":
            from .biometric import HeartRateEstimate

            estimates.append(
                HeartRateEstimate(sample.timestamp_ms, sample.value,
                                  cfg.direct_hr_confidence, 0, cfg.estimator.window_s)
            )
        else:
            pg.append(sample)
    window_ms = cfg.estimator.window_s * 1000.0
    hop_ms = cfg.estimate_hop_s * 1000.0
    if pg:
        start = pg[0].timestamp_ms
        next_at = start + window_ms
        lo = 0
        for i, sample in enumerate(pg):
            if sample.timestamp_ms < next_at:
                continue
            while pg[lo].timestamp_ms < sample.timestamp_ms - window_ms:
                lo += 1
            try:
                estimates.append(estimate_heart_rate(pg[lo:i + 1], fs, cfg.estimator))
            except CopaintError:
                pass
            next_at = sample.timestamp_ms + hop_ms
    if not estimates:
        click.echo("no usable heart-rate estimates in stream", err=True)
        sys.exit(EXIT_VALIDATION)
    baseline = calibrate_baseline(estimates, cfg.arousal.min_baseline_estimates)
    click.echo(json.dumps({
        "mu_bpm": round(baseline.mu_bpm, 2),
        "sigma_bpm": round(baseline.sigma_bpm, 3),
        "n_samples": baseline.n_samples,
        "calibrated": baseline.calibrated,
    }, indent=2))


if __name__ == "__main__":
    main()
