"""Pydantic request/response bodies for the HTTP API."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field, field_validator

MAX_STROKE_POINTS = 10_000


class CommandIn(BaseModel):
    text: str = Field(min_length=1)


class StrokeIn(BaseModel):
    color: tuple[int, int, int] = (20, 20, 20)
    width_mm: float = Field(default=1.5, gt=0)
    path: list[tuple[float, float]] = Field(min_length=2)

    @field_validator("color")
    @classmethod
    def _color_range(cls, v: tuple[int, int, int]) -> tuple[int, int, int]:
        if any(not (0 <= c <= 255) for c in v):
            raise ValueError("color components must be in [0, 255]")
        return v


class RobotMoveIn(BaseModel):
    x_mm: Optional[float] = None
    y_mm: Optional[float] = None
    outside: bool = False

    @field_validator("outside")
    @classmethod
    def _pos_or_outside(cls, v: bool, info) -> bool:
        return v

    def validated(self) -> "RobotMoveIn":
        if not self.outside and (self.x_mm is None or self.y_mm is None):
            raise ValueError("need x_mm and y_mm, or outside: true")
        return self


class SensorIn(BaseModel):
    lines: str | list[str]

    def as_lines(self) -> list[str]:
        if isinstance(self.lines, str):
            return [ln for ln in self.lines.splitlines() if ln.strip()]
        return [ln for ln in self.lines if ln.strip()]


class SessionStartIn(BaseModel):
    config: dict[str, Any] = Field(default_factory=dict)


class EnqueueAck(BaseModel):
    seq: int


class GrammarEntry(BaseModel):
    phrase: str
    command: str


class GrammarOut(BaseModel):
    direct: list[GrammarEntry]
    patterns: list[str]
