import pytest

from mfp_agent.assist import EXHAUSTED, load_knowledge, validate_knowledge
from mfp_agent.catalog import load_catalog


@pytest.fixture(scope="module")
def catalog():
    return load_catalog()


@pytest.fixture(scope="module")
def kb(catalog):
    return load_knowledge(catalog=catalog)


def test_knowledge_is_closed_over_catalog(kb, catalog):
    assert validate_knowledge(kb, catalog) == []


def test_every_conversational_option_is_describable(kb, catalog):
    for spec in catalog.conversational_slots():
        topic, _ = kb.describe(spec.id.replace("_", " "))
        assert topic is not None, spec.id


def test_describe_aliases_and_tail_words(kb):
    direct, _ = kb.describe("collate")
    aliased, _ = kb.describe("collating")
    assert direct is aliased
    tail, _ = kb.describe("the stapler")
    assert tail is not None


def test_describe_miss_offers_suggestions(kb):
    topic, suggestions = kb.describe("collatte")
    assert topic is None
    assert "collate" in suggestions


def test_find_procedure_fuzzy(kb):
    assert kb.find_procedure("load the document feeder").id == "load_feeder"
    assert kb.find_procedure("put paper in") is not None
    assert kb.find_procedure("juggle flaming torches") is None


def test_step_prose_stage_cues(kb):
    proc = kb.procedures["load_feeder"]
    assert kb.step_prose(proc, 0).startswith("First, ")
    assert kb.step_prose(proc, len(proc.steps) - 1).startswith("Finally, ")
    if len(proc.steps) > 2:
        assert kb.step_prose(proc, 1).startswith("Then, ")


def test_step_prose_stuck_weaves_location(kb):
    proc = kb.procedures["load_feeder"]
    text = kb.step_prose(proc, 0, stuck=True)
    assert "Let's try that again" in text
    assert kb.layout[proc.steps[0].part] in text


def test_diagnose_order_and_elimination(kb):
    case = kb.diagnostics["paper_jam"]
    tried: set[str] = set()
    seen = []
    while True:
        rec = kb.diagnose_next("paper_jam", tried)
        if rec == EXHAUSTED:
            break
        seen.append(rec.id)
        tried.add(rec.id)
    assert seen == [r.id for r in case.recommendations]
    assert len(seen) == 3


def test_every_fault_exhausts_after_its_recommendations(kb, catalog):
    for code in catalog.faults:
        count = len(kb.diagnostics[code].recommendations)
        tried = {r.id for r in kb.diagnostics[code].recommendations}
        assert kb.diagnose_next(code, tried) == EXHAUSTED
        assert kb.diagnose_next(code, set()) != EXHAUSTED
        assert count >= 2


def test_unknown_fault_gets_generic_then_exhausted(kb):
    rec = kb.diagnose_next("gremlins", set())
    assert rec != EXHAUSTED
    assert kb.diagnose_next("gremlins", {rec.id}) == EXHAUSTED


def test_tour_covers_layout_then_interaction(kb, catalog):
    segments = kb.tour_segments()
    assert len(segments) == len(catalog.layout) + 2
    for part in catalog.layout:
        assert any(part.replace("_", " ") in s for s in segments)
    assert "ask for help" in segments[-2]


def test_recommendations_pair_action_with_check(kb):
    for case in kb.diagnostics.values():
        for rec in case.recommendations:
            assert rec.action and rec.check
