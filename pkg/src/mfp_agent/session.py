"""A conversation session and its wire protocol.

Every message in or out of a session is a SessionEnvelope. The session side
stamps each envelope — including the echo of what the user said — with one
gapless per-session sequence counter, so a client can replay the stream in
order and detect drops.
"""

from __future__ import annotations

import json
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .acts import DialogAct
from .assist import load_knowledge
from .catalog import load_catalog
from .config import AppConfig, ProfileStore
from .engine import DialogEngine, EngineConfig
from .nlg import AgentResponse, Renderer, load_templates
from .nlu import load_grammar
from .simulator import DeviceSimulator
from .state import AgentAction

# Envelope types
USER_UTTERANCE = "user.utterance"
AGENT_RESPONSE = "agent.response"
DEVICE_EVENT = "device.event"
SESSION_STARTED = "session.started"
SESSION_ENDED = "session.ended"
SESSION_ERROR = "session.error"

_SLOW_KINDS = {"WalkthroughStep", "DiagnoseStep", "TourStep"}

# device.command operations a client may invoke
_DEVICE_OPS = ("inject_fault", "clear_fault", "advance", "load_paper", "load_feeder", "snapshot")


@dataclass(frozen=True)
class SessionEnvelope:
    type: str
    session_id: str
    seq: int
    payload: dict[str, Any]
    rate_hint: str = "normal"  # suggested speech rate: normal | slow

    def to_dict(self) -> dict:
        return {
            "type": self.type,
            "session_id": self.session_id,
            "seq": self.seq,
            "payload": self.payload,
            "rate_hint": self.rate_hint,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, DialogAct):
        return value.to_dict()
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


@dataclass
class SessionBundle:
    """Shared immutable resources so many sessions can reuse one load."""

    config: AppConfig
    catalog: Any
    grammar: Any
    knowledge: Any
    templates: Any


def build_bundle(config: AppConfig | None = None) -> SessionBundle:
    config = config or AppConfig()
    catalog = load_catalog(config.manifest_path)
    return SessionBundle(
        config=config,
        catalog=catalog,
        grammar=load_grammar(config.grammar_path),
        knowledge=load_knowledge(config.knowledge_path, catalog),
        templates=load_templates(config.templates_path),
    )


class Session:
    """One conversation bound to one simulated device."""

    def __init__(self, bundle: SessionBundle | None = None,
                 profile: str = "default",
                 session_id: str | None = None,
                 device: DeviceSimulator | None = None,
                 transcript_path: str | Path | None = None):
        self.bundle = bundle or build_bundle()
        cfg = self.bundle.config
        self.profile = profile
        self.session_id = session_id or uuid.uuid4().hex[:12]
        self.device = device or DeviceSimulator(self.bundle.catalog)
        self.engine = DialogEngine(
            self.bundle.catalog, self.bundle.grammar, self.bundle.knowledge,
            self.device,
            EngineConfig(
                resource_threshold=cfg.resource_threshold,
                sheet_threshold=cfg.sheet_threshold,
                chunk_size=cfg.chunk_size,
                auto_advance=cfg.auto_advance,
            ),
        )
        self.renderer = Renderer(
            self.bundle.templates, self.bundle.grammar.registry,
            chunk_size=cfg.chunk_size, seed=cfg.seed,
        )
        self.profiles = ProfileStore(cfg.profile_dir)
        self._seq = 0
        self._event_cursor = len(self.device.events)
        self._transcript_path = Path(transcript_path) if transcript_path else None
        self._turn_index = 0

    # ── envelope plumbing ────────────────────────────────────────────

    def _stamp(self, type_: str, payload: dict[str, Any], rate_hint: str = "normal") -> SessionEnvelope:
        self._seq += 1
        return SessionEnvelope(type_, self.session_id, self._seq, _json_safe(payload), rate_hint)

    def _action_envelope(self, action: AgentAction) -> SessionEnvelope:
        response: AgentResponse = self.renderer.render(action, action.payload.get("ack_values"))
        payload = response.to_dict()
        payload["action_payload"] = _json_safe(
            {k: v for k, v in action.payload.items() if k != "ack_values"}
        )
        env = self._stamp(
            AGENT_RESPONSE, payload,
            rate_hint="slow" if action.kind in _SLOW_KINDS else "normal",
        )
        self._log({"speaker": "agent", "text": response.text, "action": action.kind})
        return env

    def _log(self, record: dict[str, Any]) -> None:
        if self._transcript_path is None:
            return
        record = {"turn": self._turn_index, **record}
        self._turn_index += 1
        with self._transcript_path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    # ── lifecycle ────────────────────────────────────────────────────

    def start(self) -> list[SessionEnvelope]:
        defaults, seen = self.profiles.load(self.profile)
        envelopes = [self._stamp(SESSION_STARTED, {"profile": self.profile})]
        for action in self.engine.start_session(defaults=defaults, first_session=not seen):
            envelopes.append(self._action_envelope(action))
        return envelopes

    def close(self) -> list[SessionEnvelope]:
        self.engine.end_session()
        self.profiles.save(self.profile, self.engine.state.defaults)
        return [self._stamp(SESSION_ENDED, {})]

    @property
    def open(self) -> bool:
        return self.engine.state.session_open

    # ── input paths ──────────────────────────────────────────────────

    def handle_utterance(self, text: str) -> list[SessionEnvelope]:
        envelopes = [self._stamp(USER_UTTERANCE, {"text": text})]
        self._log({"speaker": "user", "text": text})
        actions = self.engine.handle_utterance(text)
        envelopes.extend(self._action_envelope(a) for a in actions)
        # events raised while the engine ran the job were reacted to in-turn
        envelopes.extend(self._drain_device_events(feed=False))
        self.profiles.save(self.profile, self.engine.state.defaults)
        if not self.engine.state.session_open:
            envelopes.append(self._stamp(SESSION_ENDED, {}))
        return envelopes

    def handle_device_command(self, op: str, **kwargs: Any) -> list[SessionEnvelope]:
        if op not in _DEVICE_OPS:
            return [self._stamp(SESSION_ERROR, {"error": f"unknown device op '{op}'"})]
        if op == "snapshot":
            return [self._stamp(DEVICE_EVENT, {"snapshot": self.device.snapshot()})]
        if op == "inject_fault":
            self.device.inject_fault(kwargs["code"])
        elif op == "clear_fault":
            self.device.clear_fault(kwargs["code"])
        elif op == "advance":
            self.device.advance(int(kwargs.get("steps", 1)))
        elif op == "load_paper":
            self.device.load_paper(kwargs.get("tray", "tray_1"), int(kwargs.get("sheets", 100)))
        elif op == "load_feeder":
            self.device.load_feeder(int(kwargs.get("pages", 1)))
        return self._drain_device_events()

    def process_client_line(self, line: str) -> list[SessionEnvelope]:
        """One raw line from a client: a JSON envelope or bare utterance text."""
        line = line.strip()
        if not line:
            return []
        if line.startswith("{"):
            try:
                msg = json.loads(line)
            except json.JSONDecodeError as err:
                return [self._stamp(SESSION_ERROR, {"error": f"bad json: {err}"})]
            mtype = msg.get("type")
            payload = msg.get("payload", {})
            if mtype == USER_UTTERANCE:
                return self.handle_utterance(str(payload.get("text", "")))
            if mtype == "device.command":
                kwargs = {k: v for k, v in payload.items() if k != "op"}
                return self.handle_device_command(str(payload.get("op", "")), **kwargs)
            if mtype == "session.close":
                return self.close()
            return [self._stamp(SESSION_ERROR, {"error": f"unknown message type '{mtype}'"})]
        return self.handle_utterance(line)

    # ── device event forwarding ──────────────────────────────────────

    def _drain_device_events(self, feed: bool = True) -> list[SessionEnvelope]:
        """Forward new device events; when feed is set, let the engine react.

        Events emitted while the engine itself drove the device are already
        reflected in that turn's actions, so those drain with feed=False.
        """
        envelopes: list[SessionEnvelope] = []
        notable = ("JobCompleted", "JobFailed", "FaultRaised", "FaultCleared")
        while self._event_cursor < len(self.device.events):
            event = self.device.events[self._event_cursor]
            self._event_cursor += 1
            envelopes.append(self._stamp(DEVICE_EVENT, event.to_dict()))
            if feed and event.kind in notable:
                for action in self.engine.handle_device_event(event):
                    envelopes.append(self._action_envelope(action))
        return envelopes
