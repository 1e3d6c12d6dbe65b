import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfp_agent import state as S
from mfp_agent.nlg import (
    MAX_SEGMENT_CHARS, Renderer, _split_segments, chunk_options, load_templates,
)
from mfp_agent.nlu import load_grammar
from mfp_agent.state import AgentAction


@pytest.fixture(scope="module")
def templates():
    return load_templates()


@pytest.fixture(scope="module")
def renderer(templates):
    return Renderer(templates, load_grammar().registry, seed=0)


def test_every_action_kind_has_a_template(templates):
    assert set(S.ACTION_KINDS) <= set(templates.templates)


def test_cue_lexicon_has_the_required_entries(templates):
    assert {"ack", "error", "job_done", "listening"} <= set(templates.cues)
    for cue in templates.cues.values():
        assert cue["meaning"]


def test_chunk_arithmetic():
    for length in (0, 1, 3, 4, 7, 10):
        chunks = chunk_options([f"o{i}" for i in range(length)], 3)
        assert len(chunks) == math.ceil(length / 3)
        assert all(len(c) <= 3 for c in chunks)


def test_chunk_size_must_be_positive():
    with pytest.raises(ValueError):
        chunk_options(["a"], 0)


@settings(max_examples=60, deadline=None)
@given(
    items=st.lists(st.text(alphabet="abc", min_size=1, max_size=5), max_size=25),
    size=st.integers(min_value=1, max_value=6),
)
def test_chunks_preserve_order_and_content(items, size):
    chunks = chunk_options(items, size)
    flat = [x for chunk in chunks for x in chunk]
    assert flat == items
    assert all(len(c) == size for c in chunks[:-1])


def test_segments_respect_length_bound():
    long = " ".join(f"Sentence number {i} is here." for i in range(40))
    pieces = _split_segments(long)
    assert all(len(p) <= MAX_SEGMENT_CHARS for p in pieces)
    assert " ".join(pieces) == long


def test_ask_slot_expects_names_the_slot(renderer):
    resp = renderer.render(AgentAction(S.ASK_SLOT, {"slot": "sides"}))
    assert resp.expects == "slot:sides"
    assert "sided" in resp.text


def test_ack_prefix_mirrors_new_values(renderer):
    resp = renderer.render(
        AgentAction(S.ASK_SLOT, {"slot": "sides"}), ack_values={"quantity": 3}
    )
    assert "3 copies" in resp.text
    assert resp.segments[0].text.index("3 copies") < resp.segments[0].text.index("sided")


def test_final_confirm_summarizes_every_setting(renderer):
    resp = renderer.render(AgentAction(S.FINAL_CONFIRM, {
        "function": "copy",
        "settings": {"quantity": 4, "sides": "double", "staple": "top_left"},
        "unusual": False, "sheets": 4,
    }))
    for phrase in ("4 copies", "double sided", "stapled"):
        assert phrase in resp.text
    assert resp.expects == "yes_no"


def test_unusual_final_confirm_mentions_sheets(renderer):
    resp = renderer.render(AgentAction(S.FINAL_CONFIRM, {
        "function": "copy", "settings": {"quantity": 500}, "unusual": True, "sheets": 500,
    }))
    assert "500 sheets" in resp.text


def test_first_segment_carries_the_cue(renderer, templates):
    resp = renderer.render(AgentAction(S.REPORT_STATUS, {"detail": "All done."}))
    assert resp.segments[0].sound_cue == "job_done"


def test_chunk_rendering_flags_continuation(renderer):
    more = renderer.render(AgentAction(S.OFFER_OPTIONS, {
        "style": "chunk", "items": ["a", "b", "c"], "has_more": True,
    }))
    assert more.continuation and more.expects == "yes_no"
    last = renderer.render(AgentAction(S.OFFER_OPTIONS, {
        "style": "chunk", "items": ["d"], "has_more": False,
    }))
    assert not last.continuation


def test_phrasing_variation_is_seeded(templates):
    registry = load_grammar().registry
    a = Renderer(templates, registry, seed=7)
    b = Renderer(templates, registry, seed=7)
    action = AgentAction(S.ASK_SLOT, {"slot": "sides"})
    outs_a = [a.render(action, {"quantity": 2}).text for _ in range(5)]
    outs_b = [b.render(action, {"quantity": 2}).text for _ in range(5)]
    assert outs_a == outs_b


def test_missing_template_fails_at_load(tmp_path, templates):
    import json
    from importlib import resources
    raw = json.loads(
        resources.files("mfp_agent.data").joinpath("templates.json").read_text()
    )
    del raw["templates"]["Farewell"]
    path = tmp_path / "t.json"
    path.write_text(json.dumps(raw))
    with pytest.raises(AssertionError):
        load_templates(path)
