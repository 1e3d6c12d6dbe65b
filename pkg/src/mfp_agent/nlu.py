"""Rule/pattern utterance parser.

A grammar file supplies intent patterns and a synonym lexicon per slot;
lexicon entries are compiled into word-boundary regex rules over the
normalized utterance. Parsing is pure: the only context is a small
read-only summary of the dialog (pending question, active function),
so the same text and summary always produce the same act list.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from . import acts as A
from .acts import Ambiguity, DialogAct

_WORD_UNITS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11,
    "twelve": 12, "thirteen": 13, "fourteen": 14, "fifteen": 15,
    "sixteen": 16, "seventeen": 17, "eighteen": 18, "nineteen": 19,
}
_WORD_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}

_TOKEN_RE = re.compile(r"[a-z0-9@._+-]+")
_PHONE_RE = re.compile(r"^\d[\d-]{5,}\d$")


def _fold_number_words(tokens: list[str]) -> list[str]:
    """Collapse number-word runs ('five hundred', 'twenty one') to digits."""
    out: list[str] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok in _WORD_UNITS or tok in _WORD_TENS:
            value = 0
            while i < len(tokens):
                tok = tokens[i]
                if tok in _WORD_TENS:
                    value += _WORD_TENS[tok]
                    i += 1
                elif tok in _WORD_UNITS:
                    value += _WORD_UNITS[tok]
                    i += 1
                elif tok == "hundred" and value:
                    value *= 100
                    i += 1
                elif tok == "and" and value and i + 1 < len(tokens) and (
                    tokens[i + 1] in _WORD_UNITS or tokens[i + 1] in _WORD_TENS
                ):
                    i += 1
                else:
                    break
            out.append(str(value))
        else:
            out.append(tok)
            i += 1
    return out


def normalize(text: str) -> list[str]:
    """Lowercase, punctuation-stripped tokens with number words as digits."""
    tokens: list[str] = []
    for raw in text.lower().split():
        if "@" in raw:
            tokens.append(raw.strip(".,;:!?"))
            continue
        stripped = raw.strip(".,;:!?\"'()")
        if _PHONE_RE.match(stripped):
            tokens.append(stripped.replace("-", ""))
            continue
        for piece in stripped.replace("-", " ").replace("/", " ").split():
            m = _TOKEN_RE.findall(piece.replace("'", " "))
            tokens.extend(m)
    return _fold_number_words(tokens)


@dataclass(frozen=True)
class GrammarRule:
    id: str
    act: str
    priority: int
    pattern: re.Pattern
    slot: str | None = None  # slot to fill ("$pending" binds the prompted slot)
    value: Any = None  # fixed canonical value
    context: str | None = None  # predicate name on the context summary
    weak: bool = False  # match needs context to be attributable


@dataclass(frozen=True)
class ContextSummary:
    """Read-only dialog summary the parser is allowed to see."""

    pending_kind: str | None = None  # yes_no | slot | free | walkthrough | more
    pending_slot: str | None = None
    pending_subject: str | None = None  # what the open question is about
    active_function: str | None = None


@dataclass
class SlotRegistry:
    """slot-id -> type, applicable functions, synonym -> canonical value."""

    slots: dict[str, dict] = field(default_factory=dict)

    def slot_type(self, slot_id: str) -> str | None:
        info = self.slots.get(slot_id)
        return info["type"] if info else None

    def functions_for(self, slot_id: str) -> tuple[str, ...]:
        return tuple(self.slots.get(slot_id, {}).get("functions", ()))

    def display(self, slot_id: str, value: Any) -> str:
        """Canonical surface phrase for a value, reused by the generator."""
        info = self.slots.get(slot_id)
        if info and "lexicon" in info and str(value) in info["lexicon"]:
            return info["lexicon"][str(value)]["display"]
        return str(value)

    def int_bounds(self, slot_id: str) -> tuple[int, int] | None:
        info = self.slots.get(slot_id, {})
        if info.get("type") == "int":
            return info.get("min", 0), info.get("max", 999)
        return None


@dataclass(frozen=True)
class _Match:
    rule: GrammarRule
    start: int
    end: int
    act: DialogAct


class Grammar:
    def __init__(self, registry: SlotRegistry, rules: list[GrammarRule], parts: dict[str, str]):
        self.registry = registry
        self.rules = rules
        self.parts = parts  # surface phrase -> canonical part name

    # ── context filters ──────────────────────────────────────────────

    def _context_ok(self, rule: GrammarRule, ctx: ContextSummary) -> bool:
        if rule.context is None:
            return True
        if rule.context == "pending_yes_no":
            return ctx.pending_kind in ("yes_no", "more")
        if rule.context == "pending_question":
            return ctx.pending_kind is not None
        if rule.context == "pending_walkthrough":
            return ctx.pending_kind == "walkthrough"
        if rule.context == "pending_int_slot":
            return (
                ctx.pending_kind == "slot"
                and ctx.pending_slot is not None
                and self.registry.slot_type(ctx.pending_slot) == "int"
            )
        if rule.context.startswith("pending_slot:"):
            return ctx.pending_slot == rule.context.split(":", 1)[1]
        if rule.context.startswith("pending_subject:"):
            return ctx.pending_subject == rule.context.split(":", 1)[1]
        return False

    def _build_act(self, rule: GrammarRule, m: re.Match, ctx: ContextSummary) -> DialogAct | None:
        slots: dict[str, Any] = {}
        groups = m.groupdict()
        slot = rule.slot
        if slot == "$pending":
            slot = ctx.pending_slot
            if slot is None:
                return None
        if rule.act == A.REQUEST_TASK:
            slots["function"] = rule.value
        elif rule.act == A.INFORM and slot:
            if "n" in groups and groups["n"] is not None:
                # out-of-range values surface through ambiguity classification
                if self.registry.slot_type(slot) == "int":
                    slots[slot] = int(groups["n"])
                else:
                    slots[slot] = groups["n"]
            elif "a" in groups and groups["a"] is not None:
                slots[slot] = groups["a"]
            elif "rest" in groups and groups["rest"] is not None:
                slots[slot] = groups["rest"].strip()
            else:
                slots[slot] = rule.value
        elif rule.act == A.SET_DEFAULT and rule.value:
            slots["mode"] = rule.value
        elif rule.act == A.WHERE_IS and "part" in groups and groups["part"]:
            slots["part"] = self.parts.get(groups["part"], groups["part"])
        elif rule.act in (A.HOW_TO, A.DESCRIBE, A.QUESTION):
            for key in ("proc", "topic"):
                if groups.get(key):
                    slots["topic"] = groups[key].strip()
        if rule.act == A.INFORM and not slots:
            return None
        return DialogAct(
            kind=rule.act, slots=slots, span=(m.start(), m.end()), rule_id=rule.id,
        )

    # ── parsing ──────────────────────────────────────────────────────

    def parse(self, text: str, ctx: ContextSummary | None = None) -> list[DialogAct]:
        ctx = ctx or ContextSummary()
        tokens = normalize(text)
        norm = " ".join(tokens)
        if not norm:
            return [DialogAct(A.UNKNOWN)]

        candidates: list[_Match] = []
        for rule in self.rules:
            if not self._context_ok(rule, ctx):
                continue
            for m in rule.pattern.finditer(norm):
                act = self._build_act(rule, m, ctx)
                if act is not None:
                    candidates.append(_Match(rule, m.start(), m.end(), act))

        # highest priority first; longer spans, then earlier, then rule id
        candidates.sort(key=lambda c: (-c.rule.priority, -(c.end - c.start), c.start, c.rule.id))
        chosen: list[_Match] = []
        ties: list[tuple[_Match, _Match]] = []
        for cand in candidates:
            overlapping = [c for c in chosen if not (cand.end <= c.start or cand.start >= c.end)]
            if not overlapping:
                chosen.append(cand)
                continue
            for other in overlapping:
                same_span = (other.start, other.end) == (cand.start, cand.end)
                if same_span and other.rule.priority == cand.rule.priority and other.rule.id != cand.rule.id:
                    ties.append((other, cand))

        chosen.sort(key=lambda c: c.start)
        result = [c.act for c in chosen]

        # mark equal-priority same-span competitors as ambiguous
        if ties:
            marked = []
            tie_spans = {(t[0].start, t[0].end) for t in ties}
            for act in result:
                if act.span in tie_spans:
                    marked.append(DialogAct(act.kind, act.slots, A.AMBIGUOUS, act.span, act.rule_id))
                else:
                    marked.append(act)
            result = marked
            self._last_ties = ties
        else:
            self._last_ties = []

        if not result:
            if ctx.pending_kind == "free" and ctx.pending_slot:
                return [DialogAct(A.INFORM, {ctx.pending_slot: text.strip()}, rule_id="free_answer")]
            return [DialogAct(A.UNKNOWN)]
        return result

    def classify_ambiguity(self, parsed: list[DialogAct], ctx: ContextSummary | None = None) -> Ambiguity | None:
        """Ambiguous iff equal-priority same-span ties, out-of-domain values,
        or a number with no attributable slot; None means clear."""
        ctx = ctx or ContextSummary()
        for loser, winner in getattr(self, "_last_ties", []):
            return Ambiguity(
                reason="competing interpretations",
                candidates=(loser.act, winner.act),
            )
        for act in parsed:
            if act.kind != A.INFORM:
                continue
            for slot, value in act.slots.items():
                bounds = self.registry.int_bounds(slot)
                if bounds and isinstance(value, int):
                    lo, hi = bounds
                    if not lo <= value <= hi:
                        return Ambiguity(
                            reason=f"{slot} must be {lo}..{hi}",
                            candidates=(act,),
                        )
            if act.rule_id == "bare_number" and ctx.pending_slot is None:
                value = next(iter(act.slots.values()))
                return Ambiguity(
                    reason="number has no attributable slot",
                    candidates=(act,),
                )
        return None


def _compile_lexicon_rules(slot_id: str, info: dict, base_priority: int = 55) -> list[GrammarRule]:
    rules = []
    for canonical, entry in info.get("lexicon", {}).items():
        value: Any = canonical
        if info.get("type") == "int":
            value = int(canonical)
        phrases = [entry["display"], *entry.get("synonyms", ())]
        seen = set()
        for phrase in phrases:
            norm_phrase = " ".join(normalize(phrase))
            if not norm_phrase or norm_phrase in seen:
                continue
            seen.add(norm_phrase)
            pattern = re.compile(rf"\b{re.escape(norm_phrase)}\b")
            guard = entry.get("not_followed_by")
            if guard:
                pattern = re.compile(rf"\b{re.escape(norm_phrase)}\b(?! (?:{guard}))")
            rules.append(GrammarRule(
                id=f"lex_{slot_id}_{canonical}_{len(rules)}",
                act=A.INFORM,
                priority=base_priority + len(norm_phrase.split()),
                pattern=pattern,
                slot=slot_id,
                value=value,
            ))
    return rules


def load_grammar(path: str | Path | None = None) -> Grammar:
    if path is None:
        text = resources.files("mfp_agent.data").joinpath("grammar.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)

    registry = SlotRegistry(slots=raw["slots"])
    rules: list[GrammarRule] = []
    for slot_id, info in raw["slots"].items():
        rules.extend(_compile_lexicon_rules(slot_id, info))

    parts: dict[str, str] = {}
    for canonical, phrases in raw.get("parts", {}).items():
        for phrase in phrases:
            parts[" ".join(normalize(phrase))] = canonical
    part_alternation = "|".join(
        sorted((re.escape(p) for p in parts), key=len, reverse=True)
    )

    for r in raw["rules"]:
        pattern = r["pattern"].replace("{PARTS}", part_alternation)
        rules.append(GrammarRule(
            id=r["id"],
            act=r["act"],
            priority=r["priority"],
            pattern=re.compile(pattern),
            slot=r.get("slot"),
            value=r.get("value"),
            context=r.get("context"),
            weak=bool(r.get("weak", False)),
        ))

    _check_rule_sanity(rules)
    return Grammar(registry, rules, parts)


def _check_rule_sanity(rules: list[GrammarRule]) -> None:
    seen_ids = set()
    for rule in rules:
        if rule.id in seen_ids:
            raise ValueError(f"duplicate grammar rule id '{rule.id}'")
        seen_ids.add(rule.id)
