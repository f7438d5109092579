"""Session events: the single ordered currency of the engine.

Every input and every derived notification is a SessionEvent with a
strictly increasing seq and non-decreasing session time. The replay
log is one JSON object per line after a header line carrying the
config and its hash.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Any, Iterable, TextIO, Union

from .arousal import ArousalLevel, ArousalState
from .biometric import BiometricSample, HeartRateEstimate
from .canvas import Author, Stroke
from .commands import Command, Direct, DirectKind, PaintPrompt


class RobotMode(enum.Enum):
    IDLE = "idle"
    CALIBRATING = "calibrating"
    PAINTING = "painting"
    REFILL = "refill"
    WITHDRAWN = "withdrawn"
    PAUSED = "paused"
    STOPPED = "stopped"


@dataclass(frozen=True, slots=True)
class SampleIn:
    sample: BiometricSample


@dataclass(frozen=True, slots=True)
class HrUpdated:
    estimate: HeartRateEstimate


@dataclass(frozen=True, slots=True)
class ArousalChanged:
    state: ArousalState


@dataclass(frozen=True, slots=True)
class CommandIssued:
    command: Command


@dataclass(frozen=True, slots=True)
class ArtistStroke:
    stroke: Stroke


@dataclass(frozen=True, slots=True)
class RobotMoved:
    x_mm: float | None
    y_mm: float | None
    outside: bool


@dataclass(frozen=True, slots=True)
class Tick:
    pass


@dataclass(frozen=True, slots=True)
class StateChanged:
    from_mode: RobotMode
    to_mode: RobotMode


@dataclass(frozen=True, slots=True)
class PromptRejected:
    text: str


@dataclass(frozen=True, slots=True)
class PaintRefilled:
    pass


Payload = Union[
    SampleIn, HrUpdated, ArousalChanged, CommandIssued, ArtistStroke,
    RobotMoved, Tick, StateChanged, PromptRejected, PaintRefilled,
]

EVENT_TYPES = {
    SampleIn: "sample_in",
    HrUpdated: "hr_updated",
    ArousalChanged: "arousal_changed",
    CommandIssued: "command_issued",
    ArtistStroke: "artist_stroke",
    RobotMoved: "robot_moved",
    Tick: "tick",
    StateChanged: "state_changed",
    PromptRejected: "prompt_rejected",
    PaintRefilled: "paint_refilled",
}


@dataclass(frozen=True, slots=True)
class SessionEvent:
    seq: int
    at_ms: int
    payload: Payload

    @property
    def type(self) -> str:
        return EVENT_TYPES[type(self.payload)]


# -- wire codec ----------------------------------------------------------------

def _stroke_to_dict(s: Stroke) -> dict[str, Any]:
    return {
        "id": s.id,
        "author": s.author.name.lower(),
        "color": list(s.color),
        "width_mm": s.width_mm,
        "path": [list(p) for p in s.path],
    }


def _stroke_from_dict(d: dict[str, Any]) -> Stroke:
    return Stroke(
        id=int(d["id"]),
        author=Author[d["author"].upper()],
        color=tuple(d["color"]),
        width_mm=float(d["width_mm"]),
        path=tuple((float(x), float(y)) for x, y in d["path"]),
    )


def _command_to_dict(c: Command) -> dict[str, Any]:
    if isinstance(c, Direct):
        return {"kind": "direct", "name": c.kind.value}
    return {"kind": "prompt", "text": c.text}


def _command_from_dict(d: dict[str, Any]) -> Command:
    if d["kind"] == "direct":
        return Direct(DirectKind(d["name"]))
    return PaintPrompt(d["text"])


def payload_to_dict(p: Payload) -> dict[str, Any]:
    if isinstance(p, SampleIn):
        s = p.sample
        return {"tag": s.tag, "timestamp_ms": s.timestamp_ms, "value": s.value}
    if isinstance(p, HrUpdated):
        e = p.estimate
        return {
            "timestamp_ms": e.timestamp_ms,
            "bpm": e.bpm,
            "confidence": e.confidence,
            "n_peaks": e.n_peaks,
            "window_s": e.window_s,
        }
    if isinstance(p, ArousalChanged):
        a = p.state
        return {
            "level": a.level.name.lower(),
            "predicted_bpm": a.predicted_bpm,
            "threshold_bpm": a.threshold_bpm,
            "near_band_bpm": a.near_band_bpm,
            "at_ms": a.at_ms,
        }
    if isinstance(p, CommandIssued):
        return _command_to_dict(p.command)
    if isinstance(p, ArtistStroke):
        return _stroke_to_dict(p.stroke)
    if isinstance(p, RobotMoved):
        if p.outside:
            return {"outside": True}
        return {"x_mm": p.x_mm, "y_mm": p.y_mm}
    if isinstance(p, StateChanged):
        return {"from": p.from_mode.value, "to": p.to_mode.value}
    if isinstance(p, PromptRejected):
        return {"text": p.text}
    return {}  # Tick, PaintRefilled


def payload_from_dict(type_name: str, d: dict[str, Any]) -> Payload:
    if type_name == "sample_in":
        return SampleIn(BiometricSample(d["tag"], float(d["timestamp_ms"]), float(d["value"])))
    if type_name == "hr_updated":
        return HrUpdated(
            HeartRateEstimate(
                timestamp_ms=float(d["timestamp_ms"]),
                bpm=float(d["bpm"]),
                confidence=float(d["confidence"]),
                n_peaks=int(d["n_peaks"]),
                window_s=float(d["window_s"]),
            )
        )
    if type_name == "arousal_changed":
        return ArousalChanged(
            ArousalState(
                level=ArousalLevel[d["level"].upper()],
                predicted_bpm=float(d["predicted_bpm"]),
                threshold_bpm=float(d["threshold_bpm"]),
                near_band_bpm=float(d["near_band_bpm"]),
                at_ms=float(d["at_ms"]),
            )
        )
    if type_name == "command_issued":
        return CommandIssued(_command_from_dict(d))
    if type_name == "artist_stroke":
        return ArtistStroke(_stroke_from_dict(d))
    if type_name == "robot_moved":
        if d.get("outside"):
            return RobotMoved(x_mm=None, y_mm=None, outside=True)
        return RobotMoved(x_mm=float(d["x_mm"]), y_mm=float(d["y_mm"]), outside=False)
    if type_name == "tick":
        return Tick()
    if type_name == "state_changed":
        return StateChanged(RobotMode(d["from"]), RobotMode(d["to"]))
    if type_name == "prompt_rejected":
        return PromptRejected(d["text"])
    if type_name == "paint_refilled":
        return PaintRefilled()
    raise ValueError(f"unknown event type {type_name!r}")


def event_to_dict(ev: SessionEvent) -> dict[str, Any]:
    return {"seq": ev.seq, "at_ms": ev.at_ms, "type": ev.type, "payload": payload_to_dict(ev.payload)}


def event_from_dict(d: dict[str, Any]) -> SessionEvent:
    return SessionEvent(
        seq=int(d["seq"]),
        at_ms=int(d["at_ms"]),
        payload=payload_from_dict(d["type"], d["payload"]),
    )


LOG_VERSION = 1


def write_log(fh: TextIO, header: dict[str, Any], events: Iterable[SessionEvent]) -> None:
    fh.write(json.dumps({"log_version": LOG_VERSION, **header}, sort_keys=True) + "\n")
    for ev in events:
        fh.write(json.dumps(event_to_dict(ev), sort_keys=True) + "\n")


def read_log(fh: TextIO) -> tuple[dict[str, Any], list[SessionEvent]]:
    header_line = fh.readline()
    if not header_line.strip():
        raise ValueError("empty log file")
    header = json.loads(header_line)
    events = [event_from_dict(json.loads(line)) for line in fh if line.strip()]
    return header, events
