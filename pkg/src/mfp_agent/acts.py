"""Typed dialog acts produced by the utterance parser."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

# Act kinds
INFORM = "Inform"
REQUEST_TASK = "RequestTask"
QUESTION = "Question"
CONFIRM = "Confirm"
DENY = "Deny"
CANCEL = "Cancel"
HELP = "Help"
HOW_TO = "HowTo"
WHERE_IS = "WhereIs"
DESCRIBE = "Describe"
SET_DEFAULT = "SetDefault"
TOUR = "Tour"
STATUS_QUERY = "StatusQuery"
STOP = "Stop"
GREETING = "Greeting"
UNKNOWN = "Unknown"

ALL_KINDS = (
    INFORM, REQUEST_TASK, QUESTION, CONFIRM, DENY, CANCEL, HELP, HOW_TO,
    WHERE_IS, DESCRIBE, SET_DEFAULT, TOUR, STATUS_QUERY, STOP, GREETING,
    UNKNOWN,
)

CLEAR = "clear"
AMBIGUOUS = "ambiguous"


@dataclass(frozen=True)
class DialogAct:
    kind: str
    slots: dict[str, Any] = field(default_factory=dict)
    confidence: str = CLEAR
    span: tuple[int, int] = (0, 0)  # character range in the normalized text
    rule_id: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind, "slots": dict(self.slots), "confidence": self.confidence}


@dataclass(frozen=True)
class Ambiguity:
    """Result of ambiguity classification over one turn's acts."""

    reason: str
    candidates: tuple[DialogAct, ...]


@dataclass(frozen=True)
class Utterance:
    text: str
    timestamp: int = 0
