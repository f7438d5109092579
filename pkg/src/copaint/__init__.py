"""copaint: a biofeedback-gated collaborative painting robot simulator.

Biometric samples stream in over a small wire protocol, an arousal
classifier gates a quadrant-based proximity policy, and a tick-driven
robot state machine plans and paints strokes on a simulated canvas.
"""

__version__ = "0.1.0"

from .arousal import ArousalLevel, ArousalState, Baseline
from .biometric import BiometricSample, HeartRateEstimate, parse_sensor_line, synth_ppg
from .canvas import Canvas, CanvasSpec, Quadrant, Stroke, ZonePolicy
from .commands import parse_command
from .config import SessionConfig
from .engine import Session, apply_event, drive, new_session, replay_log, snapshot, tick
from .events import RobotMode, SessionEvent

__all__ = [
    "ArousalLevel",
    "ArousalState",
    "Baseline",
    "BiometricSample",
    "Canvas",
    "CanvasSpec",
    "HeartRateEstimate",
    "Quadrant",
    "RobotMode",
    "Session",
    "SessionConfig",
    "SessionEvent",
    "Stroke",
    "ZonePolicy",
    "apply_event",
    "drive",
    "new_session",
    "parse_command",
    "parse_sensor_line",
    "replay_log",
    "snapshot",
    "synth_ppg",
    "tick",
]
