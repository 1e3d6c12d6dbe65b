"""Dialog state: turn history, the task stack, pending questions, defaults,
and the agent-action vocabulary shared by the engine and the generator."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from .acts import DialogAct
from .simulator import DeviceEvent

# Slot fill status
UNSET = "unset"
FILLED = "filled"
IMPLICITLY_CONFIRMED = "implicitly_confirmed"
EXPLICITLY_CONFIRMED = "explicitly_confirmed"

# Task frame phases
ELICITING = "eliciting"
FINALIZING = "finalizing"
EXECUTING = "executing"
REPORTING = "reporting"
DONE = "done"
ABANDONED = "abandoned"

# Agent action kinds
ASK_SLOT = "AskSlot"
OFFER_OPTIONS = "OfferOptions"
IMPLICIT_CONFIRM = "ImplicitConfirm"
EXPLICIT_CONFIRM = "ExplicitConfirm"
FINAL_CONFIRM = "FinalConfirm"
EXECUTE = "Execute"
REPORT_STATUS = "ReportStatus"
ANSWER_QUESTION = "AnswerQuestion"
GIVE_HELP = "GiveHelp"
WALKTHROUGH_STEP = "WalkthroughStep"
DIAGNOSE_STEP = "DiagnoseStep"
ANNOUNCE_EVENT = "AnnounceEvent"
FALLBACK = "Fallback"
INVITE_DEFAULTS = "InviteDefaults"
TOUR_STEP = "TourStep"
PREVIEW_OUTPUT = "PreviewOutput"
FAREWELL = "Farewell"
GREETING_ACTION = "Greeting"

ACTION_KINDS = (
    ASK_SLOT, OFFER_OPTIONS, IMPLICIT_CONFIRM, EXPLICIT_CONFIRM, FINAL_CONFIRM,
    EXECUTE, REPORT_STATUS, ANSWER_QUESTION, GIVE_HELP, WALKTHROUGH_STEP,
    DIAGNOSE_STEP, ANNOUNCE_EVENT, FALLBACK, INVITE_DEFAULTS, TOUR_STEP,
    PREVIEW_OUTPUT, FAREWELL, GREETING_ACTION,
)


@dataclass(frozen=True)
class AgentAction:
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)


@dataclass
class SlotValue:
    value: Any
    status: str = FILLED


@dataclass
class TaskFrame:
    function: str
    slots: dict[str, SlotValue] = field(default_factory=dict)
    phase: str = ELICITING
    created_at: int = 0
    asked_anything_else: bool = False
    previewed: bool = False
    job_id: str | None = None
    inapplicable: list[tuple[str, Any]] = field(default_factory=list)

    def fill(self, slot: str, value: Any, status: str = FILLED) -> None:
        self.slots[slot] = SlotValue(value, status)

    def value(self, slot: str) -> Any:
        sv = self.slots.get(slot)
        return sv.value if sv else None

    def filled(self, slot: str) -> bool:
        sv = self.slots.get(slot)
        return sv is not None and sv.status != UNSET

    def settings(self) -> dict[str, Any]:
        return {s: sv.value for s, sv in self.slots.items() if sv.status != UNSET}


@dataclass
class PendingQuestion:
    kind: str  # yes_no | slot | free | walkthrough | more
    subject: str  # what the question is about (slot id, "final_confirm", ...)
    candidates: list[DialogAct] = field(default_factory=list)
    asked_count: int = 1
    data: dict[str, Any] = field(default_factory=dict)


@dataclass
class Turn:
    speaker: str  # user | agent | device
    text: str
    index: int
    acts: list[DialogAct] = field(default_factory=list)
    action_kind: str | None = None
    awaited: bool = False  # the action asked the user something


@dataclass
class Diagnosis:
    fault: str
    tried: set[str] = field(default_factory=set)
    job_id: str | None = None
    current: str | None = None  # recommendation id on the table


@dataclass
class DialogState:
    history: list[Turn] = field(default_factory=list)
    task_stack: list[TaskFrame] = field(default_factory=list)
    pending_question: PendingQuestion | None = None
    resumed_question: PendingQuestion | None = None  # stashed during interruptions
    defaults: dict[str, Any] = field(default_factory=dict)
    diagnosis: Diagnosis | None = None
    walkthrough_cursor: tuple[str, int] | None = None
    tour_cursor: int | None = None
    session_open: bool = False
    first_session: bool = True
    undelivered_events: list[DeviceEvent] = field(default_factory=list)
    queries: list[DialogAct] = field(default_factory=list)  # info questions from the last turn
    new_slots: list[tuple[str, Any]] = field(default_factory=list)  # filled this turn
    ambiguity_reason: str | None = None
    ambiguity_candidates: list[DialogAct] = field(default_factory=list)
    option_chunks: list[list[str]] = field(default_factory=list)  # remaining chunks to offer

    @property
    def top(self) -> TaskFrame | None:
        return self.task_stack[-1] if self.task_stack else None

    def append_turn(self, speaker: str, text: str, acts: list[DialogAct] | None = None,
                    action_kind: str | None = None) -> Turn:
        turn = Turn(speaker, text, index=len(self.history), acts=acts or [], action_kind=action_kind)
        self.history.append(turn)
        return turn
