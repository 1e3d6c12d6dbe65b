import json

import pytest

from mfp_agent.config import AppConfig
from mfp_agent.session import (
    AGENT_RESPONSE, DEVICE_EVENT, SESSION_ENDED, SESSION_STARTED, USER_UTTERANCE,
    Session, build_bundle,
)


@pytest.fixture(scope="module")
def bundle():
    return build_bundle()


def all_envelopes(session, turns):
    envelopes = list(session.start())
    for text in turns:
        envelopes.extend(session.handle_utterance(text))
    return envelopes


def test_seq_is_gapless_and_starts_at_one(bundle):
    session = Session(bundle=bundle)
    envelopes = all_envelopes(session, ["2 copies single sided", "no", "yes"])
    assert [e.seq for e in envelopes] == list(range(1, len(envelopes) + 1))


def test_every_envelope_carries_the_session_id(bundle):
    session = Session(bundle=bundle, session_id="abc123")
    for env in all_envelopes(session, ["copy this"]):
        assert env.session_id == "abc123"


def test_user_utterance_is_echoed_first(bundle):
    session = Session(bundle=bundle)
    session.start()
    envelopes = session.handle_utterance("copy this")
    assert envelopes[0].type == USER_UTTERANCE
    assert envelopes[0].payload == {"text": "copy this"}
    assert all(e.type == AGENT_RESPONSE for e in envelopes[1:])


def test_start_emits_started_then_greeting(bundle):
    session = Session(bundle=bundle)
    envelopes = session.start()
    assert envelopes[0].type == SESSION_STARTED
    assert envelopes[1].payload["action"] == "Greeting"


def test_envelopes_round_trip_as_json(bundle):
    session = Session(bundle=bundle)
    for env in all_envelopes(session, ["3 copies", "where is the stapler"]):
        parsed = json.loads(env.to_json())
        assert parsed["seq"] == env.seq
        assert parsed["rate_hint"] in ("normal", "slow")


def test_device_commands_emit_events_and_reactions(bundle):
    session = Session(bundle=bundle)
    session.start()
    session.handle_utterance("copy this")
    envelopes = session.handle_device_command("inject_fault", code="paper_jam")
    types = [e.type for e in envelopes]
    assert types[0] == DEVICE_EVENT
    assert AGENT_RESPONSE in types
    announce = next(e for e in envelopes if e.type == AGENT_RESPONSE)
    assert announce.payload["action"] == "AnnounceEvent"


def test_guided_steps_get_the_slow_rate_hint(bundle):
    session = Session(bundle=bundle)
    session.start()
    envelopes = session.handle_utterance("how do I load the feeder")
    steps = [e for e in envelopes if e.payload.get("action") == "WalkthroughStep"]
    assert steps and all(e.rate_hint == "slow" for e in steps)


def test_close_persists_defaults(tmp_path):
    cfg = AppConfig(profile_dir=str(tmp_path))
    bundle = build_bundle(cfg)
    session = Session(bundle=bundle, profile="casey")
    session.start()
    session.handle_utterance("always double sided")
    session.close()
    returning = Session(bundle=bundle, profile="casey")
    envelopes = returning.start()
    assert returning.engine.state.defaults == {"sides": "double"}
    greeting = envelopes[1]
    assert "double sided" in " ".join(s["text"] for s in greeting.payload["segments"])


def test_first_visit_offers_tour_later_visits_do_not(tmp_path):
    cfg = AppConfig(profile_dir=str(tmp_path))
    bundle = build_bundle(cfg)
    first = Session(bundle=bundle, profile="jo")
    actions = [e.payload.get("action") for e in first.start()]
    assert "TourStep" in actions
    first.close()
    second = Session(bundle=bundle, profile="jo")
    actions = [e.payload.get("action") for e in second.start()]
    assert "TourStep" not in actions


def test_process_client_line_accepts_bare_text_and_envelopes(bundle):
    session = Session(bundle=bundle)
    session.start()
    bare = session.process_client_line("copy this")
    assert bare[0].type == USER_UTTERANCE
    wrapped = session.process_client_line(
        json.dumps({"type": "user.utterance", "payload": {"text": "3"}})
    )
    assert wrapped[0].payload == {"text": "3"}
    closed = session.process_client_line(json.dumps({"type": "session.close"}))
    assert closed[-1].type == SESSION_ENDED
    assert not session.open


def test_bad_client_input_yields_error_envelope(bundle):
    session = Session(bundle=bundle)
    session.start()
    assert session.process_client_line("{oops")[0].type == "session.error"
    bad_op = session.handle_device_command("explode")
    assert bad_op[0].type == "session.error"


def test_transcript_log_records_both_speakers(bundle, tmp_path):
    path = tmp_path / "log.jsonl"
    session = Session(bundle=bundle, transcript_path=path)
    all_envelopes(session, ["2 copies single sided"])
    records = [json.loads(line) for line in path.read_text().splitlines()]
    speakers = {r["speaker"] for r in records}
    assert speakers == {"user", "agent"}
    assert [r["turn"] for r in records] == list(range(len(records)))
