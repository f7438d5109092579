"""Classify artist text into direct commands versus painting prompts."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Union

from .errors import EmptyInput


class DirectKind(enum.Enum):
    STOP = "stop"
    PAUSE = "pause"
    RESUME = "resume"
    CHANGE_COLORS = "change_colors"
    MOVE_AWAY = "move_away"
    COME_BACK = "come_back"


@dataclass(frozen=True, slots=True)
class Direct:
    kind: DirectKind


@dataclass(frozen=True, slots=True)
class PaintPrompt:
    text: str


Command = Union[Direct, PaintPrompt]

# Exact-phrase grammar; anything else is a painting prompt.
DIRECT_GRAMMAR: dict[str, DirectKind] = {
    "stop": DirectKind.STOP,
    "stop painting": DirectKind.STOP,
    "pause": DirectKind.PAUSE,
    "resume": DirectKind.RESUME,
    "continue": DirectKind.RESUME,
    "change colors": DirectKind.CHANGE_COLORS,
    "change color": DirectKind.CHANGE_COLORS,
    "move away": DirectKind.MOVE_AWAY,
    "come back": DirectKind.COME_BACK,
}

_WS = re.compile(r"\s+")


def normalize_text(text: str) -> str:
    return _WS.sub(" ", text.strip().lower())


def parse_command(text: str) -> Command:
    """Total classification of non-empty text: direct command or prompt."""
    normalized = normalize_text(text)
    if not normalized:
        raise EmptyInput("empty command text")
    kind = DIRECT_GRAMMAR.get(normalized)
    if kind is not None:
        return Direct(kind)
    return PaintPrompt(normalized)
