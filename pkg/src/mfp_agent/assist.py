"""Knowledge-driven helpers: descriptions, how-to walkthroughs, the device
tour, and the troubleshooting recommendation loop.

All content lives in an authored knowledge file plus topics derived from the
catalog's option descriptions, so prose can change without code changes.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .catalog import OptionCatalog


@dataclass(frozen=True)
class HelpTopic:
    id: str
    title: str
    body: str
    related: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProcedureStep:
    instruction: str
    verify: str
    part: str | None = None


@dataclass(frozen=True)
class Procedure:
    id: str
    goal: str
    steps: tuple[ProcedureStep, ...]
    keywords: tuple[str, ...] = ()


@dataclass(frozen=True)
class Recommendation:
    id: str
    action: str
    check: str


@dataclass(frozen=True)
class DiagnosticCase:
    fault: str
    recommendations: tuple[Recommendation, ...]


EXHAUSTED = "exhausted"

GENERIC_RECOMMENDATION = Recommendation(
    id="generic_check_display",
    action="Check the machine for anything out of place: open covers, loose trays, or paper sticking out.",
    check="Check whether the machine sounds and feels like it is sitting normally.",
)


@dataclass
class KnowledgeBase:
    topics: dict[str, HelpTopic]
    procedures: dict[str, Procedure]
    diagnostics: dict[str, DiagnosticCase]
    layout: dict[str, str] = field(default_factory=dict)

    # ── descriptions ─────────────────────────────────────────────────

    def describe(self, query: str) -> tuple[HelpTopic | None, list[str]]:
        """Return (topic, related) on a hit; (None, suggestions) on a miss."""
        key = query.strip().lower().replace(" ", "_")
        aliases = {
            "collating": "collate", "stapling": "staple", "stapler": "staple",
            "staples": "staple", "copying": "copy",
            "scanning": "scan", "faxing": "fax", "emailing": "email",
            "double_sided": "sides", "single_sided": "sides",
        }
        key = aliases.get(key, key)
        topic = self.topics.get(key)
        if topic is None:
            # try the last word ("the stapler" -> stapler -> staple)
            tail = key.rsplit("_", 1)[-1]
            topic = self.topics.get(tail) or self.topics.get(aliases.get(tail, ""))
        if topic is not None:
            return topic, [r for r in topic.related if r in self.topics][:3]
        suggestions = difflib.get_close_matches(key, self.topics.keys(), n=3, cutoff=0.5)
        if not suggestions:
            suggestions = sorted(self.topics)[:3]
        return None, suggestions

    # ── walkthroughs ─────────────────────────────────────────────────

    def find_procedure(self, query: str) -> Procedure | None:
        q = query.strip().lower()
        best, best_score = None, 0.0
        for proc in self.procedures.values():
            for phrase in (*proc.keywords, proc.goal):
                score = difflib.SequenceMatcher(None, q, phrase.lower()).ratio()
                if phrase.lower() in q or q in phrase.lower():
                    score = max(score, 0.95)
                if score > best_score:
                    best, best_score = proc, score
        return best if best_score >= 0.55 else None

    def step_prose(self, proc: Procedure, index: int, stuck: bool = False) -> str:
        """One walkthrough step; when stuck, weave in the part's location."""
        step = proc.steps[index]
        if index == 0:
            stage = "First, "
        elif index == len(proc.steps) - 1:
            stage = "Finally, "
        else:
            stage = "Then, "
        text = f"{stage}{step.instruction[0].lower()}{step.instruction[1:]} {step.verify}"
        if stuck and step.part and step.part in self.layout:
            text = (
                f"Let's try that again. The {step.part.replace('_', ' ')} is "
                f"{self.layout[step.part]}. {step.instruction} {step.verify}"
            )
        return text

    # ── diagnosis ────────────────────────────────────────────────────

    def diagnose_next(self, fault: str, tried: set[str]) -> Recommendation | str:
        """First untried recommendation in case order, or EXHAUSTED."""
        case = self.diagnostics.get(fault)
        if case is None:
            return GENERIC_RECOMMENDATION if GENERIC_RECOMMENDATION.id not in tried else EXHAUSTED
        for rec in case.recommendations:
            if rec.id not in tried:
                return rec
        return EXHAUSTED

    # ── tour ─────────────────────────────────────────────────────────

    def tour_segments(self) -> list[str]:
        """Fixed-order tour: every layout part, then the interaction basics."""
        segments = [
            f"The {part.replace('_', ' ')} is {where}."
            for part, where in self.layout.items()
        ]
        segments.append(
            "To work with me, just talk. You can ask for help at any time, ask what something is, or how to do something."
        )
        segments.append(
            "When a job finishes I tell you and say where the output is. Say stop or cancel whenever you want to end something."
        )
        return segments


def load_knowledge(path: str | Path | None = None, catalog: OptionCatalog | None = None) -> KnowledgeBase:
    if path is None:
        text = resources.files("mfp_agent.data").joinpath("knowledge.json").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    raw = json.loads(text)

    topics = {
        t["id"]: HelpTopic(t["id"], t["title"], t["body"], tuple(t.get("related", ())))
        for t in raw.get("topics", ())
    }
    procedures = {
        p["id"]: Procedure(
            p["id"], p["goal"],
            tuple(ProcedureStep(s["instruction"], s["verify"], s.get("part")) for s in p["steps"]),
            tuple(p.get("keywords", ())),
        )
        for p in raw.get("procedures", ())
    }
    diagnostics = {
        d["fault"]: DiagnosticCase(
            d["fault"],
            tuple(Recommendation(r["id"], r["action"], r["check"]) for r in d["recommendations"]),
        )
        for d in raw.get("diagnostics", ())
    }

    layout: dict[str, str] = {}
    if catalog is not None:
        layout = dict(catalog.layout)
        # every conversational option gets a topic from its catalog description
        for spec in catalog.conversational_slots():
            if spec.id not in topics:
                topics[spec.id] = HelpTopic(
                    id=spec.id,
                    title=spec.id.replace("_", " ").capitalize(),
                    body=spec.description,
                    related=tuple(f for f in spec.functions if f in topics)[:3],
                )

    return KnowledgeBase(topics=topics, procedures=procedures, diagnostics=diagnostics, layout=layout)


def validate_knowledge(kb: KnowledgeBase, catalog: OptionCatalog) -> list[str]:
    """Closure checks used by validate-manifests."""
    problems = []
    for topic in kb.topics.values():
        for rel in topic.related:
            if rel not in kb.topics:
                problems.append(f"topic '{topic.id}' links to unknown topic '{rel}'")
    for fn in catalog.functions:
        if fn not in kb.topics:
            problems.append(f"function '{fn}' has no help topic")
    for spec in catalog.conversational_slots():
        if spec.id not in kb.topics:
            problems.append(f"conversational option '{spec.id}' has no help topic")
    for proc in kb.procedures.values():
        if not proc.steps:
            problems.append(f"procedure '{proc.id}' has no steps")
        for step in proc.steps:
            if step.part and step.part not in catalog.layout:
                problems.append(f"procedure '{proc.id}' references unknown part '{step.part}'")
    for code in catalog.faults:
        if code not in kb.diagnostics:
            problems.append(f"fault '{code}' has no diagnostic case")
    for case in kb.diagnostics.values():
        ids = [r.id for r in case.recommendations]
        if len(ids) != len(set(ids)):
            problems.append(f"diagnostic case '{case.fault}' repeats a recommendation id")
    return problems
