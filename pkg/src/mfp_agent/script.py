"""Scripted conversation runner for regression scenarios.

A scenario file is JSON: a name plus a list of steps. Steps either drive
the session ("say", "device") or assert on what came back since the last
drive step ("expect_action", "expect_contains", "expect_job"). Runs are
fully deterministic, so the produced envelope log can be compared
byte-for-byte between runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from importlib import resources

from .session import Session, SessionBundle, SessionEnvelope

DIRECTIVES = ("say", "device", "expect_action", "expect_contains", "expect_job")


@dataclass
class ScriptResult:
    name: str
    failures: list[str] = field(default_factory=list)
    log: list[str] = field(default_factory=list)  # envelope JSON lines, in order

    @property
    def ok(self) -> bool:
        return not self.failures


def load_script(source: str | Path | dict) -> dict:
    if isinstance(source, dict):
        return source
    return json.loads(Path(source).read_text("utf-8"))


def bundled_scenarios() -> list[Path]:
    root = resources.files("mfp_agent.data").joinpath("scenarios")
    return sorted(Path(str(root)).glob("*.json"))


def _spoken_text(env: SessionEnvelope) -> str:
    if env.type != "agent.response":
        return ""
    return " ".join(s.get("text", "") for s in env.payload.get("segments", []))


def _job_matches(job: dict, want: dict) -> bool:
    for key, expected in want.items():
        if key == "settings":
            for s, v in expected.items():
                if job.get("settings", {}).get(s) != v:
                    return False
        elif job.get(key) != expected:
            return False
    return True


def run_script(source: str | Path | dict, bundle: SessionBundle | None = None,
               session_id: str = "script") -> ScriptResult:
    script = load_script(source)
    result = ScriptResult(name=script.get("name", "unnamed"))
    session = Session(bundle=bundle, session_id=session_id)

    window: list[SessionEnvelope] = []  # responses since the last drive step

    def record(envelopes: list[SessionEnvelope]) -> None:
        window.extend(envelopes)
        result.log.extend(e.to_json() for e in envelopes)

    record(session.start())

    for i, step in enumerate(script.get("steps", [])):
        keys = [k for k in step if k in DIRECTIVES]
        if len(keys) != 1:
            result.failures.append(f"step {i}: expected exactly one directive, got {sorted(step)}")
            continue
        directive = keys[0]
        value = step[directive]

        if directive == "say":
            window.clear()
            record(session.handle_utterance(value))
        elif directive == "device":
            window.clear()
            kwargs = {k: v for k, v in value.items() if k != "op"}
            record(session.handle_device_command(value["op"], **kwargs))
        elif directive == "expect_action":
            seen = [e.payload.get("action") for e in window if e.type == "agent.response"]
            if value not in seen:
                result.failures.append(
                    f"step {i}: expected action '{value}', saw {seen}"
                )
        elif directive == "expect_contains":
            spoken = " ".join(_spoken_text(e) for e in window).lower()
            if value.lower() not in spoken:
                result.failures.append(
                    f"step {i}: expected text containing '{value}', got: {spoken!r}"
                )
        elif directive == "expect_job":
            jobs = session.device.snapshot()["jobs"]
            if not any(_job_matches(j, value) for j in jobs):
                result.failures.append(
                    f"step {i}: no job matching {value}; jobs: "
                    + str([(j['function'], j['status'], j['settings']) for j in jobs])
                )

    return result
