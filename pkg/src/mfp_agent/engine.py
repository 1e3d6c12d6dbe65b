"""The dialog manager.

Applies parsed acts to the dialog state, then selects agent actions with a
fixed production-rule priority: announce device events, answer side
questions, repair ambiguity, elicit missing slots, confirm, execute,
report. New tasks started mid-task are pushed on a stack and the suspended
task resumes, slots intact, when the new one ends.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from . import acts as A
from . import state as S
from .assist import EXHAUSTED, KnowledgeBase
from .catalog import OptionCatalog
from .nlu import ContextSummary, Grammar
from .simulator import (
    DeviceEvent, DeviceSimulator, JobStatus, PartNotFound, validate_job,
)
from .state import AgentAction, DialogState, Diagnosis, PendingQuestion, TaskFrame

REQUIRED_SLOTS: dict[str, tuple[str, ...]] = {
    "copy": ("quantity", "sides"),
    "scan": ("destination", "color_mode"),
    "fax": ("destination_number",),
    "email": ("destination_address",),
}

_MAX_ACTIONS_PER_TURN = 24


@dataclass
class EngineConfig:
    resource_threshold: int = 100  # quantity at/above this is an unusual request
    sheet_threshold: int = 200  # estimated sheets at/above this, likewise
    chunk_size: int = 3
    auto_advance: bool = True  # run submitted jobs to completion in-turn


class DialogEngine:
    def __init__(self, catalog: OptionCatalog, grammar: Grammar,
                 knowledge: KnowledgeBase, device: DeviceSimulator,
                 config: EngineConfig | None = None):
        self.catalog = catalog
        self.grammar = grammar
        self.knowledge = knowledge
        self.device = device
        self.config = config or EngineConfig()
        self.state = DialogState()
        self._farewell = False

    # ── session lifecycle ────────────────────────────────────────────

    def start_session(self, defaults: dict[str, Any] | None = None,
                      first_session: bool = True) -> list[AgentAction]:
        st = self.state
        if st.session_open:
            return [AgentAction(S.GREETING_ACTION, {"reopened": True})]
        st.session_open = True
        st.first_session = first_session
        if defaults:
            st.defaults.update(defaults)
        actions = [AgentAction(S.GREETING_ACTION, {
            "defaults": dict(st.defaults) if st.defaults else None,
        })]
        if first_session:
            actions.append(AgentAction(S.TOUR_STEP, {"offer": True}))
            st.pending_question = PendingQuestion("yes_no", "tour_offer")
        elif not st.defaults:
            actions.append(AgentAction(S.INVITE_DEFAULTS, {}))
        return actions

    def end_session(self) -> None:
        """Close the session; non-executing frames are discarded, the
        device keeps running whatever was already submitted."""
        st = self.state
        st.task_stack = [f for f in st.task_stack if f.phase == S.EXECUTING]
        st.pending_question = None
        st.session_open = False

    # ── turn handling ────────────────────────────────────────────────

    def context_summary(self) -> ContextSummary:
        st = self.state
        pending_kind = pending_slot = None
        if st.pending_question:
            pending_kind = st.pending_question.kind
            if pending_kind in ("slot", "free"):
                pending_slot = st.pending_question.subject
        return ContextSummary(
            pending_kind=pending_kind,
            pending_slot=pending_slot,
            pending_subject=st.pending_question.subject if st.pending_question else None,
            active_function=st.top.function if st.top else None,
        )

    def handle_utterance(self, text: str) -> list[AgentAction]:
        ctx = self.context_summary()
        acts = self.grammar.parse(text, ctx)
        ambiguity = self.grammar.classify_ambiguity(acts, ctx)
        self.state.append_turn("user", text, acts)
        self._update_state(acts, ambiguity)
        return self._act_loop()

    def handle_device_event(self, event: DeviceEvent) -> list[AgentAction]:
        self.state.undelivered_events.append(event)
        self.state.append_turn("device", event.human_detail)
        if not self.state.session_open:
            return []  # retained; announced on the next session's status query
        return self._act_loop()

    # ── state update ─────────────────────────────────────────────────

    def _update_state(self, acts: list[A.DialogAct], ambiguity: A.Ambiguity | None) -> None:
        st = self.state
        st.new_slots = []
        st.queries = []
        st.ambiguity_reason = None
        st.ambiguity_candidates = []
        self._unknown_turn = all(a.kind == A.UNKNOWN for a in acts)
        self._homeless = []  # informs that arrived before their task was named

        if ambiguity is not None:
            st.ambiguity_reason = ambiguity.reason
            st.ambiguity_candidates = list(ambiguity.candidates)
            # drop the acts under dispute; they get confirmed explicitly
            disputed = {c.span for c in ambiguity.candidates}
            acts = [a for a in acts if a.span not in disputed or a.kind != A.INFORM]

        defaults_mode = any(a.kind == A.SET_DEFAULT for a in acts)
        clear_defaults = any(
            a.kind == A.SET_DEFAULT and a.slots.get("mode") == "clear" for a in acts
        )
        if clear_defaults:
            st.defaults.clear()
            st.queries.append(A.DialogAct(A.SET_DEFAULT, {"mode": "cleared"}))

        self._resolve_pending(acts)

        cancelling = any(a.kind == A.CANCEL for a in acts)
        informed_any = False
        for act in acts:
            if act.kind == A.REQUEST_TASK:
                # "always copy double sided" and "cancel the fax" mention a
                # function without asking for a new task
                if not defaults_mode and not cancelling:
                    self._handle_request_task(act.slots["function"])
            elif act.kind == A.INFORM:
                informed_any = True
                self._handle_inform(act, defaults_mode)
            elif act.kind == A.CANCEL:
                self._handle_cancel()
            elif act.kind == A.STOP:
                self._handle_stop()
            elif act.kind == A.HELP and getattr(self, "_walkthrough_stuck", False):
                pass  # "stuck" already rewinds the walkthrough step
            elif act.kind in (A.HELP, A.HOW_TO, A.WHERE_IS, A.DESCRIBE,
                              A.QUESTION, A.STATUS_QUERY, A.GREETING):
                st.queries.append(act)
            elif act.kind == A.TOUR:
                st.tour_cursor = st.tour_cursor or 0
                st.pending_question = None
            elif act.kind == A.SET_DEFAULT and not clear_defaults:
                pass  # mode flag consumed above; informs carry the values

        # "double sided, two copies": the task named late in the utterance
        # adopts settings mentioned before it
        if self._homeless and st.top is not None:
            registry = self.grammar.registry
            for slot, value in self._homeless:
                if st.top.function in registry.functions_for(slot):
                    st.top.fill(slot, value)
                    st.top.asked_anything_else = False
                    st.new_slots.append((slot, value))
                else:
                    st.top.inapplicable.append((slot, value))
            self._homeless = []
        for slot, _ in self._homeless:
            st.queries.append(A.DialogAct(A.QUESTION, {"topic": "_no_task", "slot": slot}))
        self._homeless = []

        if defaults_mode and not clear_defaults:
            if informed_any:
                st.queries.append(A.DialogAct(A.SET_DEFAULT, {"mode": "saved"}))
            else:
                st.queries.append(A.DialogAct(A.SET_DEFAULT, {"mode": "explain"}))

    def _resolve_pending(self, acts: list[A.DialogAct]) -> None:
        st = self.state
        self._stop_consumed = False
        pending = st.pending_question
        if pending is None:
            return
        confirmed = any(a.kind == A.CONFIRM for a in acts)
        denied = any(a.kind == A.DENY for a in acts)
        stopped = any(a.kind in (A.STOP, A.CANCEL) for a in acts)
        # a cancel aimed at a task is not a "no more, thanks"
        wrapped_up = denied or any(a.kind == A.STOP for a in acts)
        helped = any(a.kind == A.HELP for a in acts)

        if pending.kind in ("yes_no", "more"):
            subject = pending.subject
            if subject == "final_confirm":
                if confirmed and st.top:
                    st.top.phase = S.EXECUTING
                    st.pending_question = None
                elif denied and st.top:
                    st.top.phase = S.ELICITING
                    st.top.asked_anything_else = True
                    st.pending_question = PendingQuestion("free", "change_request")
                    st.queries.append(A.DialogAct(A.QUESTION, {"topic": "_change"}))
            elif subject == "anything_else":
                if wrapped_up:
                    if st.top:
                        st.top.phase = S.FINALIZING
                    st.pending_question = None
                    self._stop_consumed = True
                elif any(a.kind == A.INFORM for a in acts):
                    st.pending_question = None
                elif confirmed:
                    pass  # bare yes: keep the question, they will add something
            elif subject == "tour_offer":
                st.pending_question = None
                if confirmed:
                    st.tour_cursor = 0
            elif subject == "tour_step":
                st.pending_question = None
                if confirmed and st.tour_cursor is not None:
                    st.tour_cursor += 1
                elif denied or stopped:
                    st.tour_cursor = None
                    self._stop_consumed = True
            elif subject == "diagnosis_offer":
                st.pending_question = None
                if confirmed:
                    st.diagnosis = Diagnosis(
                        fault=pending.data["fault"], job_id=pending.data.get("job_id"),
                    )
                else:
                    st.pending_question, st.resumed_question = st.resumed_question, None
            elif subject == "diagnose_try":
                if confirmed or denied:
                    if st.diagnosis and pending.data.get("rec_id"):
                        st.diagnosis.tried.add(pending.data["rec_id"])
                    st.pending_question = None
                elif stopped:
                    st.diagnosis = None
                    st.pending_question, st.resumed_question = st.resumed_question, None
                    self._stop_consumed = True
            elif subject == "walkthrough_offer":
                st.pending_question = None
                if confirmed and st.top:
                    proc = self.knowledge.find_procedure(st.top.function)
                    if proc:
                        st.walkthrough_cursor = (proc.id, 0)
            elif subject == "more_options":
                st.pending_question = None
                if not confirmed:
                    st.option_chunks = []
                    if stopped:
                        self._stop_consumed = True
            elif subject == "ambiguity_confirm":
                st.pending_question = None
                if confirmed and pending.candidates:
                    self._handle_inform(pending.candidates[0], False)
                elif denied and len(pending.candidates) > 1:
                    st.ambiguity_reason = "competing interpretations"
                    st.ambiguity_candidates = pending.candidates[1:]
            elif confirmed or denied:
                st.pending_question = None

        elif pending.kind == "walkthrough":
            if stopped:
                st.walkthrough_cursor = None
                st.pending_question = None
                self._stop_consumed = True
            elif confirmed:
                proc_id, idx = st.walkthrough_cursor or (pending.subject, 0)
                st.walkthrough_cursor = (proc_id, idx + 1)
                st.pending_question = None
            elif helped:
                st.pending_question = None
                self._walkthrough_stuck = True
        elif pending.kind in ("slot", "free"):
            if stopped:
                st.pending_question = None
            # otherwise an Inform for the slot clears it in _handle_inform

    def _handle_request_task(self, function: str) -> None:
        st = self.state
        top = st.top
        if top and top.function == function and top.phase in (S.ELICITING, S.FINALIZING):
            return  # same task restated, not a new one
        frame = TaskFrame(function=function, created_at=len(st.history))
        for slot, value in st.defaults.items():
            if function in self.grammar.registry.functions_for(slot):
                frame.fill(slot, value)
        st.task_stack.append(frame)
        st.pending_question = None

    def _handle_inform(self, act: A.DialogAct, defaults_mode: bool) -> None:
        st = self.state
        registry = self.grammar.registry
        for slot, value in act.slots.items():
            if slot == "change_request":
                continue
            if defaults_mode:
                if slot in registry.slots:
                    st.defaults[slot] = value
                    st.new_slots.append((slot, value))
                continue
            frame = st.top
            if frame is None or frame.phase in (S.DONE, S.ABANDONED):
                owners = registry.functions_for(slot)
                if len(owners) == 1:
                    self._handle_request_task(owners[0])
                    frame = st.top
                else:
                    self._homeless.append((slot, value))
                    continue
            if frame.function in registry.functions_for(slot):
                frame.fill(slot, value)
                frame.asked_anything_else = False
                st.new_slots.append((slot, value))
                pending = st.pending_question
                if pending and pending.kind in ("slot", "free") and pending.subject == slot:
                    st.pending_question = None
                if pending and pending.subject in ("anything_else", "change_request"):
                    st.pending_question = None
                if frame.phase == S.FINALIZING:
                    # changed their mind during confirmation: re-confirm
                    if st.pending_question and st.pending_question.subject == "final_confirm":
                        st.pending_question = None
            else:
                frame.inapplicable.append((slot, value))

    def _handle_cancel(self) -> None:
        st = self.state
        if getattr(self, "_stop_consumed", False):
            return
        if st.diagnosis is not None:
            st.diagnosis = None
            st.pending_question, st.resumed_question = st.resumed_question, None
            return
        if st.walkthrough_cursor is not None:
            st.walkthrough_cursor = None
            st.pending_question = None
            return
        if st.tour_cursor is not None:
            st.tour_cursor = None
            st.pending_question = None
            return
        if st.top is not None:
            frame = st.task_stack.pop()
            frame.phase = S.ABANDONED
        st.pending_question = None

    def _handle_stop(self) -> None:
        st = self.state
        if getattr(self, "_stop_consumed", False):
            return  # "no, that's all" already answered the open question
        if (st.walkthrough_cursor is not None or st.tour_cursor is not None
                or st.diagnosis is not None):
            st.walkthrough_cursor = None
            st.tour_cursor = None
            st.diagnosis = None
            st.pending_question, st.resumed_question = st.resumed_question, None
            return
        if st.pending_question and st.pending_question.subject == "anything_else":
            return  # already resolved as a deny in _resolve_pending
        if st.top is not None:
            self._handle_cancel()
            return
        self._farewell = True

    # ── action selection ─────────────────────────────────────────────

    def _act_loop(self) -> list[AgentAction]:
        actions: list[AgentAction] = []
        for _ in range(_MAX_ACTIONS_PER_TURN):
            action = self._next_action()
            if action is None:
                break
            self._apply(action)
            actions.append(action)
            turn = self.state.append_turn("agent", "", action_kind=action.kind)
            turn.awaited = self._awaits_user(action)
            if turn.awaited or action.kind == S.FAREWELL:
                break
        return actions

    def next_action(self) -> AgentAction | None:
        """Selection only; callers that want state effects use the loop."""
        return self._next_action()

    def _next_action(self) -> AgentAction | None:
        st = self.state

        # 1. undelivered device events always come first
        if st.undelivered_events:
            return self._announce(st.undelivered_events[0])

        # 2. side questions asked this turn
        if st.queries:
            return self._answer_query(st.queries[0])

        # 3. ambiguity repair before anything advances
        if st.ambiguity_reason:
            return self._confirm_ambiguity()

        # 4. continue a paged option list the user asked to hear out
        if st.option_chunks and self._no_open_question():
            return self._next_chunk_action()

        # 5. guided activities
        if st.walkthrough_cursor is not None and self._no_open_question():
            return self._walkthrough_action()
        if st.diagnosis is not None and self._no_open_question():
            return self._diagnosis_action()
        if st.tour_cursor is not None and self._no_open_question():
            return self._tour_action()

        # 5. an unresolved question gets re-asked, then fallbacks
        if st.pending_question is not None:
            return self._reask_or_fallback()

        # 6. drive the top task frame
        if st.top is not None:
            return self._task_action(st.top)

        # 7. idle
        if self._farewell:
            return AgentAction(S.FAREWELL, {})
        if self._just_responded():
            return None
        return AgentAction(S.OFFER_OPTIONS, {"style": "top_level"})

    def _no_open_question(self) -> bool:
        return self.state.pending_question is None

    def _just_responded(self) -> bool:
        # suppress the idle offer when this turn already produced output
        for turn in reversed(self.state.history):
            if turn.speaker == "user":
                return False
            if turn.speaker == "agent":
                return True
        return False

    # ── rule bodies ──────────────────────────────────────────────────

    def _announce(self, event: DeviceEvent) -> AgentAction:
        fault_spec = self.catalog.faults.get(event.fault) if event.fault else None
        payload: dict[str, Any] = {"detail": event.human_detail, "event_kind": event.kind}
        if event.kind in ("JobFailed", "FaultRaised") and event.fault and event.fault != "toner_low":
            payload["offer_diagnosis"] = True
            payload["fault"] = event.fault
            payload["job_id"] = event.job_id
            if fault_spec:
                payload["meaning"] = fault_spec.meaning
        return AgentAction(S.ANNOUNCE_EVENT, payload)

    def _answer_query(self, act: A.DialogAct) -> AgentAction:
        if act.kind == A.WHERE_IS:
            part = act.slots.get("part", "")
            try:
                location = self.device.locate(part)
                return AgentAction(S.ANSWER_QUESTION, {"style": "where", "part": part, "location": location})
            except PartNotFound as miss:
                return AgentAction(S.ANSWER_QUESTION, {"style": "where_miss", "part": miss.part, "known": miss.known})
        if act.kind == A.STATUS_QUERY:
            return AgentAction(S.ANSWER_QUESTION, {"style": "status", "detail": self._status_text()})
        if act.kind in (A.DESCRIBE, A.QUESTION):
            topic = act.slots.get("topic", "")
            if topic == "_change":
                return AgentAction(S.OFFER_OPTIONS, {"style": "change"})
            if topic == "_no_task":
                return AgentAction(S.EXPLICIT_CONFIRM, {
                    "style": "clarify",
                    "candidate": act.slots.get("slot", "that"),
                    "detail": "Which job is that for? Say copy, scan, fax, or email first.",
                })
            found, related = self.knowledge.describe(topic)
            if found:
                return AgentAction(S.GIVE_HELP, {"body": found.body, "related": related})
            return AgentAction(S.GIVE_HELP, {"style": "miss", "suggestions": related})
        if act.kind == A.HELP:
            return self._help_action()
        if act.kind == A.HOW_TO:
            proc = self.knowledge.find_procedure(act.slots.get("topic", ""))
            if proc is None:
                _, suggestions = self.knowledge.describe(act.slots.get("topic", ""))
                return AgentAction(S.GIVE_HELP, {"style": "miss", "suggestions": suggestions})
            self.state.walkthrough_cursor = (proc.id, 0)
            return self._walkthrough_action()
        if act.kind == A.GREETING:
            return AgentAction(S.GREETING_ACTION, {"reopened": True})
        if act.kind == A.SET_DEFAULT:
            if act.slots.get("mode") == "cleared":
                return AgentAction(S.IMPLICIT_CONFIRM, {"values": {}, "note": "defaults_cleared"})
            if act.slots.get("mode") == "saved":
                saved = {s: v for s, v in self.state.new_slots if s in self.state.defaults}
                self.state.new_slots = []
                return AgentAction(S.IMPLICIT_CONFIRM, {"values": saved, "note": "defaults_saved"})
            return AgentAction(S.INVITE_DEFAULTS, {})
        return AgentAction(S.FALLBACK, {"context_help": ""})

    def _help_action(self) -> AgentAction:
        st = self.state
        frame = st.top
        if frame is not None:
            names = [o.id.replace("_", " ") for o in self.catalog.options_for(frame.function)
                     if o.conversational]
            from .nlg import chunk_options
            st.option_chunks = chunk_options(names, self.config.chunk_size)
            return self._next_chunk_action()
        topic, _ = self.knowledge.describe("asking_for_help")
        return AgentAction(S.GIVE_HELP, {"body": topic.body, "related": list(topic.related)})

    def _next_chunk_action(self) -> AgentAction:
        st = self.state
        if not st.option_chunks:
            return AgentAction(S.OFFER_OPTIONS, {"style": "chunk", "items": []})
        chunk = st.option_chunks.pop(0)
        return AgentAction(S.OFFER_OPTIONS, {
            "style": "chunk", "items": chunk, "has_more": bool(st.option_chunks),
        })

    def _confirm_ambiguity(self) -> AgentAction:
        st = self.state
        reason = st.ambiguity_reason
        candidates = st.ambiguity_candidates
        st.ambiguity_reason = None
        st.ambiguity_candidates = []
        if reason and ".." in reason:
            # out-of-domain value: explain the domain and re-ask the slot
            slot = next(iter(candidates[0].slots)) if candidates else "quantity"
            return AgentAction(S.ASK_SLOT, {
                "slot": slot,
                "prompt": f"Sorry, {reason.replace('..', ' to ')}. What should it be?",
                "repair": True,
            })
        phrases = [self._candidate_phrase(c) for c in candidates]
        return AgentAction(S.EXPLICIT_CONFIRM, {
            "candidate": phrases[0] if phrases else "that",
            "candidates": candidates,
        })

    def _candidate_phrase(self, act: A.DialogAct) -> str:
        parts = []
        for slot, value in act.slots.items():
            display = self.grammar.registry.display(slot, value)
            if slot == "quantity":
                display = f"{value} copies"
            elif display == str(value):
                display = f"{slot.replace('_', ' ')} {value}"
            parts.append(display)
        return " and ".join(parts) or act.kind.lower()

    def _walkthrough_action(self) -> AgentAction:
        st = self.state
        proc_id, idx = st.walkthrough_cursor
        proc = self.knowledge.procedures[proc_id]
        stuck = getattr(self, "_walkthrough_stuck", False)
        self._walkthrough_stuck = False
        if idx >= len(proc.steps):
            st.walkthrough_cursor = None
            return AgentAction(S.WALKTHROUGH_STEP, {"finished": True})
        text = self.knowledge.step_prose(proc, idx, stuck=stuck)
        return AgentAction(S.WALKTHROUGH_STEP, {
            "text": text, "step_index": idx, "total": len(proc.steps), "procedure": proc_id,
        })

    def _diagnosis_action(self) -> AgentAction:
        st = self.state
        diag = st.diagnosis
        if diag.fault not in self.device.faults:
            st.diagnosis = None
            st.pending_question, st.resumed_question = st.resumed_question, None
            frame = st.top
            if frame is not None and frame.phase == S.EXECUTING:
                frame.job_id = None  # resubmit the repaired job
            return AgentAction(S.DIAGNOSE_STEP, {"style": "fixed", "fault": diag.fault})
        rec = self.knowledge.diagnose_next(diag.fault, diag.tried)
        if rec == EXHAUSTED:
            st.diagnosis = None
            st.pending_question, st.resumed_question = st.resumed_question, None
            return AgentAction(S.DIAGNOSE_STEP, {"style": "exhausted", "fault": diag.fault})
        diag.current = rec.id
        return AgentAction(S.DIAGNOSE_STEP, {
            "action": rec.action, "check": rec.check, "rec_id": rec.id, "fault": diag.fault,
        })

    def _tour_action(self) -> AgentAction:
        st = self.state
        segments = self.knowledge.tour_segments()
        idx = st.tour_cursor
        if idx >= len(segments):
            st.tour_cursor = None
            return AgentAction(S.TOUR_STEP, {"finished": True})
        return AgentAction(S.TOUR_STEP, {"text": segments[idx], "index": idx, "total": len(segments)})

    def _reask_or_fallback(self) -> AgentAction | None:
        st = self.state
        pending = st.pending_question
        if not self._unknown_turn_pending_miss():
            # repeat the question verbatim after an interruption or side answer
            if self._question_just_asked():
                return None
            return self._question_action(pending)
        pending.asked_count += 1
        if pending.asked_count == 2:
            return self._question_action(pending)
        if pending.asked_count == 3:
            return AgentAction(S.FALLBACK, {"context_help": self._context_help(pending)})
        return AgentAction(S.FALLBACK, {"offer_walkthrough": True})

    def _unknown_turn_pending_miss(self) -> bool:
        return getattr(self, "_unknown_turn", False)

    def _question_just_asked(self) -> bool:
        for turn in reversed(self.state.history):
            if turn.speaker == "agent":
                return turn.awaited
            if turn.speaker in ("user", "device"):
                return False
        return False

    def _question_action(self, pending: PendingQuestion) -> AgentAction:
        st = self.state
        if pending.kind in ("slot", "free") and pending.subject != "change_request":
            return AgentAction(S.ASK_SLOT, {"slot": pending.subject, "reask": True})
        subject = pending.subject
        if subject == "final_confirm":
            return self._final_confirm_action(st.top, reask=True)
        if subject == "anything_else":
            return AgentAction(S.OFFER_OPTIONS, {
                "style": "anything_else", "examples": self._optional_examples(st.top), "reask": True,
            })
        if subject == "tour_offer":
            return AgentAction(S.TOUR_STEP, {"offer": True, "reask": True})
        if subject == "diagnosis_offer":
            return AgentAction(S.ANNOUNCE_EVENT, {
                "detail": "", "offer_diagnosis": True, "reask": True,
                "fault": pending.data.get("fault"), "job_id": pending.data.get("job_id"),
                "meaning": "",
            })
        if subject == "diagnose_try" and st.diagnosis is not None:
            rec = self.knowledge.diagnose_next(st.diagnosis.fault, st.diagnosis.tried - {st.diagnosis.current})
            if rec != EXHAUSTED and rec.id == st.diagnosis.current:
                return AgentAction(S.DIAGNOSE_STEP, {
                    "action": rec.action, "check": rec.check, "rec_id": rec.id,
                    "fault": st.diagnosis.fault, "reask": True,
                })
        if subject == "change_request":
            return AgentAction(S.OFFER_OPTIONS, {"style": "change", "reask": True})
        return AgentAction(S.FALLBACK, {"context_help": self._context_help(pending)})

    def _context_help(self, pending: PendingQuestion) -> str:
        if pending.kind in ("slot", "free"):
            spec = self.catalog.option(pending.subject)
            if spec is not None:
                return spec.description
        if pending.subject == "final_confirm":
            return "Say yes to run the job, or no to change something."
        return "You can say help at any time, or cancel to start over."

    def _optional_examples(self, frame: TaskFrame | None) -> str:
        if frame is None:
            return "stapled, or collated"
        required = set(REQUIRED_SLOTS.get(frame.function, ()))
        extras = [
            o.id.replace("_", " ") for o in self.catalog.options_for(frame.function)
            if o.conversational and o.id not in required and not frame.filled(o.id)
        ]
        return ", or ".join(extras[:2]) if extras else "nothing"

    # ── task frame driving ───────────────────────────────────────────

    def _task_action(self, frame: TaskFrame) -> AgentAction | None:
        if frame.phase in (S.DONE, S.ABANDONED):
            self.state.task_stack.remove(frame)
            return self._next_action()

        if frame.inapplicable:
            slot, value = frame.inapplicable.pop(0)
            return AgentAction(S.EXPLICIT_CONFIRM, {
                "style": "clarify",
                "candidate": self.grammar.registry.display(slot, value),
                "detail": f"{slot.replace('_', ' ')} doesn't apply to {frame.function}.",
            })

        if frame.phase == S.ELICITING:
            for slot in REQUIRED_SLOTS.get(frame.function, ()):
                if not frame.filled(slot):
                    return AgentAction(S.ASK_SLOT, {
                        "slot": slot, "function": frame.function,
                        "ack_values": self._take_ack(),
                    })
            if not frame.asked_anything_else:
                frame.asked_anything_else = True
                return AgentAction(S.OFFER_OPTIONS, {
                    "style": "anything_else",
                    "examples": self._optional_examples(frame),
                    "ack_values": self._take_ack(),
                })
            frame.phase = S.FINALIZING

        if frame.phase == S.FINALIZING:
            return self._final_confirm_action(frame)

        if frame.phase == S.EXECUTING:
            return self._execute_step(frame)

        if frame.phase == S.REPORTING:
            return self._report_step(frame)
        return None

    def _take_ack(self) -> dict[str, Any] | None:
        values = dict(self.state.new_slots)
        self.state.new_slots = []
        return values or None

    def _estimated_sheets(self, frame: TaskFrame) -> int:
        if frame.function != "copy":
            return 0
        quantity = frame.value("quantity") or 1
        pages = max(self.device.feeder_pages, 1)
        per_sheet = 2 if frame.value("sides") in ("double", "double_flip") else 1
        return -(-quantity * pages // per_sheet)

    def _final_confirm_action(self, frame: TaskFrame, reask: bool = False) -> AgentAction:
        quantity = frame.value("quantity") or 0
        sheets = self._estimated_sheets(frame)
        unusual = (
            quantity >= self.config.resource_threshold
            or sheets >= self.config.sheet_threshold
        )
        return AgentAction(S.FINAL_CONFIRM, {
            "function": frame.function,
            "settings": frame.settings(),
            "unusual": unusual,
            "sheets": sheets,
            "reask": reask,
            "ack_values": self._take_ack(),
        })

    def _job_settings(self, frame: TaskFrame) -> dict[str, Any]:
        settings = self.catalog.defaults_for(frame.function)
        settings.update(frame.settings())
        return settings

    def _execute_step(self, frame: TaskFrame) -> AgentAction:
        settings = self._job_settings(frame)
        job = self.device.make_job(frame.function, settings)
        result = validate_job(job, self.catalog)
        if not result.ok:
            frame.phase = S.FINALIZING
            violation = result.violations[0]
            slot = violation.split(" ", 1)[0]
            return AgentAction(S.ASK_SLOT, {
                "slot": slot if self.catalog.option(slot) else "quantity",
                "prompt": f"One problem: {violation}. What should it be?",
                "repair": True,
            })

        if not frame.previewed:
            frame.previewed = True
            return AgentAction(S.PREVIEW_OUTPUT, {
                "summary": self._preview_summary(frame, settings),
            })

        job_id = self.device.submit_job(job)
        frame.job_id = job_id
        if self.config.auto_advance:
            self.device.run_to_completion()
        status = self.device.jobs[job_id].status
        if status is JobStatus.FAILED:
            event = next(
                e for e in reversed(self.device.events)
                if e.kind == "JobFailed" and e.job_id == job_id
            )
            self.state.undelivered_events.append(event)
        frame.phase = S.REPORTING
        return AgentAction(S.EXECUTE, {"function": frame.function, "job_id": job_id})

    def _preview_summary(self, frame: TaskFrame, settings: dict[str, Any]) -> str:
        if frame.function == "copy":
            quantity = settings.get("quantity", 1)
            sides = "double sided" if settings.get("sides") in ("double", "double_flip") else "single sided"
            extras = []
            if settings.get("staple") not in (None, "none"):
                extras.append("stapled")
            if settings.get("collate") == "collated":
                extras.append("collated")
            tail = f", {' and '.join(extras)}" if extras else ""
            pages = max(self.device.feeder_pages, 1)
            return (
                f"{quantity} {sides} {'set' if quantity == 1 else 'sets'} of your "
                f"{pages}-page document{tail}"
            )
        if frame.function == "scan":
            return f"one scanned file, {settings.get('file_format', 'pdf')}, going {self.grammar.registry.display('destination', settings.get('destination', 'email'))}"
        if frame.function == "fax":
            return f"one fax to {settings.get('destination_number', '')}"
        return f"one email to {settings.get('destination_address', '')}"

    def _report_step(self, frame: TaskFrame) -> AgentAction | None:
        job = self.device.jobs.get(frame.job_id) if frame.job_id else None
        if job is None:
            frame.phase = S.DONE
            self.state.task_stack.remove(frame)
            return self._next_action()
        if job.status is JobStatus.COMPLETED:
            frame.phase = S.DONE
            self.state.task_stack.remove(frame)
            detail = next(
                (e.human_detail for e in reversed(self.device.events)
                 if e.kind == "JobCompleted" and e.job_id == job.id),
                f"Your {job.function} job is finished.",
            )
            return AgentAction(S.REPORT_STATUS, {
                "detail": detail, "location": job.function == "copy", "job_id": job.id,
            })
        if job.status is JobStatus.FAILED:
            frame.phase = S.EXECUTING  # wait for repair, then resubmit
            return self._next_action()  # failure announcement is queued
        # still running (manual advance mode): report progress and wait
        frame.phase = S.EXECUTING
        return AgentAction(S.REPORT_STATUS, {
            "detail": f"Your {job.function} job is running: page {job.progress} of {job.total_pages}.",
            "job_id": job.id,
        })

    def _status_text(self) -> str:
        snap = self.device.snapshot()
        running = [j for j in snap["jobs"] if j["status"] == "running"]
        queued = [j for j in snap["jobs"] if j["status"] == "queued"]
        pieces = []
        if running:
            j = running[0]
            pieces.append(f"A {j['function']} job is running, page {j['progress']} of {j['total_pages']}.")
        if queued:
            pieces.append(f"{len(queued)} job{'s' if len(queued) > 1 else ''} waiting in the queue.")
        if snap["faults"]:
            pieces.append("Current problems: " + ", ".join(f.replace("_", " ") for f in snap["faults"]) + ".")
        if not pieces:
            done = len(snap["output_tray"])
            if done:
                pieces.append(f"Nothing is running. {done} finished job{'s are' if done > 1 else ' is'} in the output tray.")
            else:
                pieces.append("Nothing is running and there are no problems.")
        return " ".join(pieces)

    # ── action effects ───────────────────────────────────────────────

    def _apply(self, action: AgentAction) -> None:
        st = self.state
        kind = action.kind
        p = action.payload

        if kind == S.ANNOUNCE_EVENT and not p.get("reask"):
            if st.undelivered_events:
                st.undelivered_events.pop(0)
            if p.get("offer_diagnosis"):
                if st.pending_question is not None and st.resumed_question is None:
                    st.resumed_question = st.pending_question
                st.pending_question = PendingQuestion(
                    "yes_no", "diagnosis_offer",
                    data={"fault": p.get("fault"), "job_id": p.get("job_id")},
                )
        elif kind == S.ANNOUNCE_EVENT and p.get("reask"):
            st.pending_question = PendingQuestion(
                "yes_no", "diagnosis_offer",
                data={"fault": p.get("fault"), "job_id": p.get("job_id")},
            )
        elif kind in (S.ANSWER_QUESTION, S.GIVE_HELP, S.INVITE_DEFAULTS, S.IMPLICIT_CONFIRM):
            if st.queries:
                st.queries.pop(0)
        elif kind == S.GREETING_ACTION:
            if st.queries and st.queries[0].kind == A.GREETING:
                st.queries.pop(0)
        elif kind == S.ASK_SLOT:
            slot = p["slot"]
            free = self.grammar.registry.slots.get(slot, {}).get("free_form", False)
            if not (p.get("reask") and st.pending_question
                    and st.pending_question.subject == slot):
                st.pending_question = PendingQuestion("free" if free else "slot", slot)
        elif kind == S.OFFER_OPTIONS:
            style = p.get("style")
            if style == "anything_else" and not p.get("reask"):
                st.pending_question = PendingQuestion("yes_no", "anything_else")
            elif style == "chunk":
                if p.get("has_more"):
                    st.pending_question = PendingQuestion("more", "more_options")
                else:
                    st.pending_question = None
                if st.queries and st.queries[0].kind == A.HELP:
                    st.queries.pop(0)
            elif style == "change":
                if st.queries:
                    st.queries.pop(0)
                st.pending_question = PendingQuestion("free", "change_request")
            elif style == "top_level":
                st.pending_question = None
        elif kind == S.EXPLICIT_CONFIRM:
            if p.get("style") == "clarify":
                if st.queries and st.queries[0].kind == A.QUESTION:
                    st.queries.pop(0)
            else:
                st.pending_question = PendingQuestion(
                    "yes_no", "ambiguity_confirm", candidates=p.get("candidates", []),
                )
        elif kind == S.FINAL_CONFIRM:
            if not (p.get("reask") and st.pending_question
                    and st.pending_question.subject == "final_confirm"):
                st.pending_question = PendingQuestion("yes_no", "final_confirm")
        elif kind == S.WALKTHROUGH_STEP:
            if p.get("finished"):
                st.pending_question = None
            else:
                st.pending_question = PendingQuestion("walkthrough", p.get("procedure", ""))
        elif kind == S.DIAGNOSE_STEP:
            if p.get("style") in ("fixed", "exhausted"):
                pass  # pending already restored by the selector
            else:
                if (st.pending_question is not None and st.resumed_question is None
                        and st.pending_question.subject != "diagnose_try"):
                    st.resumed_question = st.pending_question
                st.pending_question = PendingQuestion(
                    "yes_no", "diagnose_try", data={"rec_id": p.get("rec_id")},
                )
                if st.diagnosis is None:
                    st.diagnosis = Diagnosis(fault=p.get("fault", ""))
        elif kind == S.TOUR_STEP:
            if p.get("offer"):
                st.pending_question = PendingQuestion("yes_no", "tour_offer")
            elif p.get("finished"):
                st.pending_question = None
            else:
                st.pending_question = PendingQuestion("yes_no", "tour_step")
        elif kind == S.FALLBACK:
            if p.get("offer_walkthrough"):
                st.pending_question = PendingQuestion("yes_no", "walkthrough_offer")
        elif kind == S.FAREWELL:
            self._farewell = False
            self.end_session()

    def _awaits_user(self, action: AgentAction) -> bool:
        kind = action.kind
        p = action.payload
        if kind in (S.ASK_SLOT, S.EXPLICIT_CONFIRM, S.FINAL_CONFIRM):
            return kind != S.EXPLICIT_CONFIRM or p.get("style") != "clarify"
        if kind == S.OFFER_OPTIONS:
            if p.get("style") == "chunk":
                return bool(p.get("has_more"))
            return True
        if kind == S.ANNOUNCE_EVENT:
            return bool(p.get("offer_diagnosis"))
        if kind == S.WALKTHROUGH_STEP:
            return not p.get("finished")
        if kind == S.DIAGNOSE_STEP:
            return p.get("style") not in ("fixed", "exhausted")
        if kind == S.TOUR_STEP:
            return bool(p.get("offer")) or not p.get("finished")
        if kind == S.FALLBACK:
            return True
        if kind == S.GREETING_ACTION:
            return False
        return False
