"""Scripted sessions: a simulated artist feeding a fresh engine.

A scenario is JSON: config overrides plus a time-ordered list of
events (PPG profile segments, direct heart rates, commands, artist
strokes, robot moves). Scenario time is simulated, so a full session
runs in milliseconds unless real-time pacing is requested.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from .biometric import BiometricSample, synth_ppg
from .canvas import Author, Stroke, export_ppm
from .commands import parse_command
from .config import SessionConfig, config_from_dict
from .engine import Session, drive, log_header, new_session, session_summary
from .errors import ScenarioError
from .events import (
    ArtistStroke,
    CommandIssued,
    Payload,
    RobotMoved,
    SampleIn,
    SessionEvent,
    Tick,
    write_log,
)

EVENT_KINDS = ("ppg_profile", "hr", "command", "artist_stroke", "robot_move")

TAIL_MS = 5000  # simulated run-out after the last scripted event


@dataclass
class Scenario:
    name: str
    config: SessionConfig
    events: list[dict[str, Any]]
    duration_ms: int
    source: dict[str, Any] = field(default_factory=dict)


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ScenarioError(msg)


def load_scenario(data: dict[str, Any] | str | Path) -> Scenario:
    """Parse and validate a scenario dict or JSON file."""
    if not isinstance(data, dict):
        path = Path(data)
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"cannot read scenario {path}: {exc}") from None
    _require(isinstance(data, dict), "scenario must be a JSON object")
    name = data.get("name", "unnamed")
    try:
        cfg = config_from_dict(data.get("config"))
    except (ValueError, TypeError) as exc:
        raise ScenarioError(f"bad config overrides: {exc}") from None

    events = data.get("events", [])
    _require(isinstance(events, list), "events must be a list")
    last_t = -1
    for i, ev in enumerate(events):
        _require(isinstance(ev, dict), f"event {i} must be an object")
        _require("t_ms" in ev and "kind" in ev, f"event {i} needs t_ms and kind")
        t = ev["t_ms"]
        _require(isinstance(t, (int, float)) and t >= 0, f"event {i}: bad t_ms {t!r}")
        _require(t >= last_t, f"event {i}: t_ms decreases ({t} < {last_t})")
        last_t = t
        kind = ev["kind"]
        _require(kind in EVENT_KINDS, f"event {i}: unknown kind {kind!r}")
        if kind == "ppg_profile":
            for key in ("bpm", "duration_s"):
                _require(key in ev, f"event {i}: ppg_profile needs {key}")
        elif kind == "hr":
            _require("bpm" in ev, f"event {i}: hr needs bpm")
        elif kind == "command":
            _require(bool(str(ev.get("text", "")).strip()), f"event {i}: command needs text")
        elif kind == "artist_stroke":
            path_pts = ev.get("path")
            _require(
                isinstance(path_pts, list) and len(path_pts) >= 2,
                f"event {i}: artist_stroke needs a path of >= 2 points",
            )
        elif kind == "robot_move":
            _require(
                ev.get("outside") is True or ("x_mm" in ev and "y_mm" in ev),
                f"event {i}: robot_move needs x_mm/y_mm or outside:true",
            )

    end = int(last_t) + TAIL_MS if events else 0
    duration = int(data.get("duration_ms", end))
    _require(duration >= last_t, "duration_ms shorter than the last event")
    return Scenario(name=name, config=cfg, events=events, duration_ms=duration, source=data)


def _coalesce_ppg_runs(events: list[dict[str, Any]]) -> list[dict[str, Any]]:
    """Merge back-to-back ppg_profile entries sharing noise and seed
    into one piecewise profile, so the pulse train stays phase
    continuous across rate changes."""
    out: list[dict[str, Any]] = []
    for ev in events:
        if ev["kind"] != "ppg_profile":
            out.append(ev)
            continue
        seg = (float(ev["bpm"]), float(ev["duration_s"]))
        noise = float(ev.get("noise_std", 0.0))
        seed = ev.get("seed")
        prev = out[-1] if out else None
        if (
            prev is not None
            and prev["kind"] == "ppg_profile"
            and prev["noise_std"] == noise
            and prev["seed"] == seed
            and abs(prev["t_ms"] + prev["total_s"] * 1000.0 - ev["t_ms"]) < 1.0
        ):
            prev["profile"].append(seg)
            prev["total_s"] += seg[1]
        else:
            out.append(
                {
                    "kind": "ppg_profile",
                    "t_ms": int(ev["t_ms"]),
                    "profile": [seg],
                    "total_s": seg[1],
                    "noise_std": noise,
                    "seed": seed,
                }
            )
    return out


def _expand_inputs(scenario: Scenario) -> list[tuple[int, int, Payload]]:
    """Flatten scripted events into (t_ms, order, payload) inputs."""
    cfg = scenario.config
    out: list[tuple[int, int, Payload]] = []
    order = 0
    for ev in _coalesce_ppg_runs(scenario.events):
        t0 = int(ev["t_ms"])
        kind = ev["kind"]
        if kind == "ppg_profile":
            seed = ev["seed"]
            samples = synth_ppg(
                ev["profile"],
                cfg.ppg_fs,
                ev["noise_std"],
                int(seed if seed is not None else cfg.seed),
                ev["total_s"],
            )
            for s in samples:
                ts = t0 + s.timestamp_ms
                shifted = BiometricSample(s.tag, ts, s.value)
                out.append((int(ts), order, SampleIn(shifted)))
                order += 1
        elif kind == "hr":
            out.append((t0, order, SampleIn(BiometricSample("HR", float(t0), float(ev["bpm"])))))
            order += 1
        elif kind == "command":
            out.append((t0, order, CommandIssued(parse_command(str(ev["text"])))))
            order += 1
        elif kind == "artist_stroke":
            stroke = Stroke(
                id=-1,
                author=Author.ARTIST,
                color=tuple(ev.get("color", (20, 20, 20))),
                width_mm=float(ev.get("width_mm", 1.5)),
                path=tuple((float(x), float(y)) for x, y in ev["path"]),
            )
            stroke.validate(cfg.canvas)
            out.append((t0, order, ArtistStroke(stroke)))
            order += 1
        elif kind == "robot_move":
            if ev.get("outside") is True:
                payload = RobotMoved(x_mm=None, y_mm=None, outside=True)
            else:
                payload = RobotMoved(x_mm=float(ev["x_mm"]), y_mm=float(ev["y_mm"]), outside=False)
            out.append((t0, order, payload))
            order += 1
    return out


def build_schedule(scenario: Scenario) -> list[tuple[int, Payload]]:
    """Inputs merged with the tick clock; at equal times inputs precede
    the tick so reactions land in the same simulated instant."""
    inputs = _expand_inputs(scenario)
    tick_ms = scenario.config.robot.tick_ms
    schedule: list[tuple[int, int, int, Payload]] = [
        (t, 0, order, p) for (t, order, p) in inputs
    ]
    t = tick_ms
    while t <= scenario.duration_ms:
        schedule.append((t, 1, 0, Tick()))
        t += tick_ms
    schedule.sort(key=lambda item: (item[0], item[1], item[2]))
    return [(t, p) for (t, _, _, p) in schedule]


@dataclass
class ScenarioResult:
    session: Session
    summary: dict[str, Any]
    log_path: Path | None = None
    ppm_path: Path | None = None
    summary_path: Path | None = None


def run_scenario(
    scenario: Scenario | dict[str, Any] | str | Path,
    out_dir: str | Path | None = None,
    fast: bool = True,
) -> ScenarioResult:
    """Run a scenario on a fresh session; optionally write artifacts.

    fast=True skips wall-clock pacing; outputs are identical either
    way because all times are simulated.
    """
    if not isinstance(scenario, Scenario):
        scenario = load_scenario(scenario)
    schedule = build_schedule(scenario)
    session = new_session(scenario.config)

    started = time.monotonic()
    for t_ms, payload in schedule:
        if not fast:
            lag = t_ms / 1000.0 - (time.monotonic() - started)
            if lag > 0:
                time.sleep(lag)
        drive(session, payload, t_ms)

    summary = session_summary(session)
    summary["name"] = scenario.name
    result = ScenarioResult(session=session, summary=summary)

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        result.log_path = out / "events.jsonl"
        with open(result.log_path, "w", encoding="utf-8") as fh:
            write_log(fh, log_header(scenario.config), session.events)
        result.ppm_path = out / "final.ppm"
        result.ppm_path.write_bytes(export_ppm(session.canvas))
        result.summary_path = out / "summary.json"
        result.summary_path.write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
    return result


def bundled_scenario_path(name: str) -> Path | None:
    """Resolve a scenario shipped inside the package, if it exists."""
    candidate = resources.files("copaint").joinpath("scenarios", f"{name}.json")
    try:
        if candidate.is_file():
            with resources.as_file(candidate) as real:
                return Path(real)
    except (FileNotFoundError, ModuleNotFoundError):
        return None
    return None
