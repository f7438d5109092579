"""Session configuration: every tunable the engine honors, with defaults.

Config files are JSON; any subset of keys overrides the defaults.
A stable hash of the effective config is embedded in session log
headers so replays can detect mismatched settings.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .arousal import ArousalConfig
from .biometric import EstimatorConfig
from .canvas import CanvasSpec, fnv1a64

DEFAULT_PALETTE: list[tuple[int, int, int]] = [
    (230, 57, 70),    # red
    (29, 53, 87),     # navy
    (42, 157, 143),   # teal
    (244, 162, 97),   # ochre
    (38, 70, 83),     # slate
]


@dataclass(frozen=True, slots=True)
class RobotConfig:
    paint_speed_mm_s: float = 50.0
    travel_speed_mm_s: float = 100.0
    tick_ms: int = 100
    paint_capacity_mm: float = 400.0
    refill_ticks: int = 20
    brush_width_mm: float = 2.0
    paint_station: tuple[float, float] = (10.0, 10.0)
    pattern_inset_mm: float = 6.0


@dataclass(frozen=True, slots=True)
class SessionConfig:
    canvas: CanvasSpec = field(default_factory=CanvasSpec)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    arousal: ArousalConfig = field(default_factory=ArousalConfig)
    robot: RobotConfig = field(default_factory=RobotConfig)
    workspace_window_s: float = 30.0
    estimate_hop_s: float = 1.0
    direct_hr_confidence: float = 0.9
    palette: tuple[tuple[int, int, int], ...] = tuple(DEFAULT_PALETTE)
    seed: int = 0
    ppg_fs: float = 25.0
    udp_port: int = 12345
    http_host: str = "127.0.0.1"
    http_port: int = 8080


def config_to_dict(cfg: SessionConfig) -> dict[str, Any]:
    def unwrap(obj: Any) -> Any:
        if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
            return {f.name: unwrap(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
        if isinstance(obj, (list, tuple)):
            return [unwrap(v) for v in obj]
        return obj

    return unwrap(cfg)


def _merge_section(cls, defaults, overrides: dict[str, Any]):
    known = {f.name for f in dataclasses.fields(cls)}
    bad = set(overrides) - known
    if bad:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(bad)}")
    coerced = {}
    for key, value in overrides.items():
        if isinstance(value, list):
            value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
        coerced[key] = value
    return dataclasses.replace(defaults, **coerced)


def config_from_dict(data: dict[str, Any] | None) -> SessionConfig:
    """Build a config from a (possibly partial) plain dict of overrides."""
    data = dict(data or {})
    base = SessionConfig()
    sections = {
        "canvas": (CanvasSpec, base.canvas),
        "estimator": (EstimatorConfig, base.estimator),
        "arousal": (ArousalConfig, base.arousal),
        "robot": (RobotConfig, base.robot),
    }
    kwargs: dict[str, Any] = {}
    for name, (cls, default) in sections.items():
        if name in data:
            kwargs[name] = _merge_section(cls, default, data.pop(name))
    top = {f.name for f in dataclasses.fields(SessionConfig)}
    bad = set(data) - top
    if bad:
        raise ValueError(f"unknown config keys: {sorted(bad)}")
    for key, value in data.items():
        if key == "palette":
            value = tuple(tuple(c) for c in value)
        elif isinstance(value, list):
            value = tuple(value)
        kwargs[key] = value
    return dataclasses.replace(base, **kwargs)


def load_config(path: str | Path) -> SessionConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_dict(json.load(fh))


def config_hash(cfg: SessionConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return f"{fnv1a64(canonical.encode('utf-8')):016x}"
