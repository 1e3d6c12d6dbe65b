"""Response generation: turns agent actions into short, mirrorable text
segments with symbolic sound-cue tags.

Surface phrasing comes from a template file; every phrase that names a slot
value reuses the parser lexicon's display form, so rendered text parses back
into the acts that produced it.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from . import state as S
from .nlu import SlotRegistry
from .state import AgentAction

MAX_SEGMENT_CHARS = 220


@dataclass(frozen=True)
class Segment:
    text: str
    sound_cue: str | None = None

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"text": self.text}
        if self.sound_cue:
            d["cue"] = self.sound_cue
        return d


@dataclass(frozen=True)
class AgentResponse:
    segments: tuple[Segment, ...]
    expects: str | None = None  # "yes_no" | "slot:<id>" | "free"
    continuation: bool = False  # more chunks available
    action_kind: str = ""

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.segments)

    def to_dict(self) -> dict:
        return {
            "segments": [s.to_dict() for s in self.segments],
            "expects": self.expects,
            "continuation": self.continuation,
            "action": self.action_kind,
        }


@dataclass
class TemplateSet:
    cues: dict[str, dict]
    acks: list[str]
    templates: dict[str, list[dict]]
    slot_prompts: dict[str, str]
    by_id: dict[str, dict] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for kind, entries in self.templates.items():
            for entry in entries:
                entry["kind"] = kind
                self.by_id[entry["id"]] = entry

    def pick(self, template_id: str) -> dict:
        return self.by_id[template_id]


def load_templates(path: str | Path | None = None) -> TemplateSet:
    if path is None:
        text = resources.files("mfp_agent.data").joinpath("templates.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)
    ts = TemplateSet(
        cues=raw["cues"],
        acks=raw["acks"],
        templates=raw["templates"],
        slot_prompts=raw["slot_prompts"],
    )
    # every action kind must have a template; fail at load, never at runtime
    missing = [k for k in S.ACTION_KINDS if k not in ts.templates]
    if missing:
        raise AssertionError(f"no templates for action kinds: {missing}")
    for cue in ("ack", "error", "job_done", "listening"):
        if cue not in ts.cues:
            raise AssertionError(f"cue lexicon is missing '{cue}'")
    for entry in ts.by_id.values():
        for cue in ([entry["cue"]] if entry.get("cue") else []):
            if cue not in ts.cues:
                raise AssertionError(f"template '{entry['id']}' uses unknown cue '{cue}'")
    return ts


def chunk_options(options: list[str], chunk_size: int) -> list[list[str]]:
    """Stable-order chunks of at most chunk_size items each."""
    if chunk_size < 1:
        raise ValueError("chunk_size must be >= 1")
    return [options[i:i + chunk_size] for i in range(0, len(options), chunk_size)]


def _split_segments(text: str) -> list[str]:
    """Split prose on sentence boundaries so no segment exceeds the bound."""
    if len(text) <= MAX_SEGMENT_CHARS:
        return [text]
    sentences = re.split(r"(?<=[.?!]) +", text)
    segments: list[str] = []
    current = ""
    for sentence in sentences:
        if current and len(current) + 1 + len(sentence) > MAX_SEGMENT_CHARS:
            segments.append(current)
            current = sentence
        else:
            current = f"{current} {sentence}".strip()
    if current:
        segments.append(current)
    return segments


class Renderer:
    def __init__(self, templates: TemplateSet, registry: SlotRegistry,
                 chunk_size: int = 3, seed: int = 0):
        self.templates = templates
        self.registry = registry
        self.chunk_size = chunk_size
        self.rng = random.Random(seed)

    # ── phrasing helpers ─────────────────────────────────────────────

    def value_phrase(self, slot: str, value: Any) -> str:
        """A surface phrase for one slot value that parses back to it."""
        if slot == "quantity":
            return f"{value} {'copy' if value == 1 else 'copies'}"
        if slot == "reduce_enlarge":
            phrase = self.registry.display(slot, value)
            return phrase if phrase != str(value) else f"at {value} percent"
        if slot == "destination_number":
            return f"to {value}"
        if slot == "destination_address":
            return f"to {value}"
        if slot == "subject":
            return f"subject {value}"
        return self.registry.display(slot, value)

    def settings_summary(self, settings: dict[str, Any]) -> str:
        return ", ".join(self.value_phrase(s, v) for s, v in settings.items())

    def _ack(self, values: dict[str, Any] | None) -> str:
        word = self.rng.choice(self.templates.acks)
        if values:
            return f"{word[:-1]}, {self.settings_summary(values)}."
        return word

    # ── rendering ────────────────────────────────────────────────────

    def render(self, action: AgentAction, ack_values: dict[str, Any] | None = None) -> AgentResponse:
        template_id, fields = self._select(action)
        entry = self.templates.pick(template_id)
        text = entry["text"].format(**fields)
        prefix = ""
        if ack_values:
            prefix = self._ack(ack_values) + " "
        full = (prefix + text).strip()

        segments = []
        for i, piece in enumerate(_split_segments(full)):
            cue = entry.get("cue") if i == 0 else None
            assert len(piece) <= MAX_SEGMENT_CHARS
            segments.append(Segment(piece, cue))

        expects = entry.get("expects")
        if expects == "slot":
            expects = f"slot:{action.payload['slot']}"
        return AgentResponse(
            segments=tuple(segments),
            expects=expects,
            continuation=bool(action.payload.get("has_more")),
            action_kind=action.kind,
        )

    def _select(self, action: AgentAction) -> tuple[str, dict]:
        p = action.payload
        kind = action.kind

        if kind == S.GREETING_ACTION:
            if p.get("reopened"):
                return "greeting_reopen", {}
            if p.get("defaults"):
                return "greeting_defaults", {"defaults": self.settings_summary(p["defaults"])}
            return "greeting_fresh", {}

        if kind == S.OFFER_OPTIONS:
            style = p.get("style", "top_level")
            if style == "top_level":
                return "offer_top_level", {}
            if style == "anything_else":
                return "offer_anything_else", {"examples": p.get("examples", "stapled, or collated")}
            items = p.get("items", [])
            if not items:
                return "offer_none", {}
            joined = ", ".join(items)
            if p.get("has_more"):
                return "offer_option_chunk_more", {"items": joined}
            return "offer_option_chunk", {"items": joined}

        if kind == S.ASK_SLOT:
            return "ask_slot", {"prompt": p.get("prompt") or self.templates.slot_prompts[p["slot"]]}

        if kind == S.IMPLICIT_CONFIRM:
            if p.get("note") == "defaults_cleared":
                return "implicit_confirm_defaults_cleared", {}
            if p.get("note") == "defaults_saved":
                return "implicit_confirm_defaults", {"values": self.settings_summary(p["values"])}
            return "implicit_confirm", {"values": self.settings_summary(p["values"])}

        if kind == S.EXPLICIT_CONFIRM:
            if p.get("style") == "clarify":
                return "explicit_clarify", {"candidate": p["candidate"], "detail": p.get("detail", "")}
            return "explicit_confirm", {"candidate": p["candidate"]}

        if kind == S.FINAL_CONFIRM:
            fields = {
                "function": p["function"],
                "summary": self.settings_summary(p["settings"]),
                "sheets": p.get("sheets", 0),
            }
            if p.get("unusual"):
                return "final_confirm_unusual", fields
            return "final_confirm", fields

        if kind == S.EXECUTE:
            return "execute", {"function": p["function"]}

        if kind == S.PREVIEW_OUTPUT:
            return "preview_output", {"summary": p["summary"]}

        if kind == S.REPORT_STATUS:
            if p.get("location"):
                return "report_status_location", {"detail": p["detail"]}
            return "report_status", {"detail": p["detail"]}

        if kind == S.ANSWER_QUESTION:
            style = p.get("style", "status")
            if style == "where":
                return "answer_where", {"part": p["part"].replace("_", " "), "location": p["location"]}
            if style == "where_miss":
                return "answer_where_miss", {
                    "part": p["part"],
                    "known": ", ".join(k.replace("_", " ") for k in p["known"]),
                }
            return "answer_status", {"detail": p["detail"]}

        if kind == S.GIVE_HELP:
            if p.get("style") == "miss":
                return "give_help_miss", {"suggestions": ", ".join(p["suggestions"])}
            related = p.get("related") or []
            if related:
                return "give_help_related", {
                    "body": p["body"],
                    "related": ", ".join(r.replace("_", " ") for r in related),
                }
            return "give_help", {"body": p["body"]}

        if kind == S.WALKTHROUGH_STEP:
            if p.get("finished"):
                return "walkthrough_finished", {}
            return "walkthrough_step", {"text": p["text"]}

        if kind == S.DIAGNOSE_STEP:
            if p.get("style") == "fixed":
                return "diagnose_fixed", {}
            if p.get("style") == "exhausted":
                return "diagnose_exhausted", {}
            return "diagnose_step", {"action": p["action"], "check": p["check"]}

        if kind == S.ANNOUNCE_EVENT:
            if p.get("offer_diagnosis"):
                return "announce_fault", {"detail": p["detail"], "meaning": p.get("meaning", "")}
            if p.get("progress"):
                return "announce_progress", {"detail": p["detail"]}
            return "announce_done", {"detail": p["detail"]}

        if kind == S.FALLBACK:
            if p.get("offer_walkthrough"):
                return "fallback_walkthrough", {}
            return "fallback_context", {"context_help": p.get("context_help", "")}

        if kind == S.INVITE_DEFAULTS:
            return "invite_defaults", {}

        if kind == S.TOUR_STEP:
            if p.get("offer"):
                return "tour_offer", {}
            if p.get("finished"):
                return "tour_finished", {}
            return "tour_step", {"text": p["text"]}

        if kind == S.FAREWELL:
            return "farewell", {}

        raise AssertionError(f"unrenderable action kind: {kind}")
