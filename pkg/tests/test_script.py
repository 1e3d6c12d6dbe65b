import json

import pytest

from mfp_agent.script import bundled_scenarios, load_script, run_script
from mfp_agent.session import build_bundle


@pytest.fixture(scope="module")
def bundle():
    return build_bundle()


def test_seven_scenarios_are_bundled():
    paths = bundled_scenarios()
    assert len(paths) == 7
    names = [load_script(p)["name"] for p in paths]
    assert len(set(names)) == 7


@pytest.mark.parametrize("path", bundled_scenarios(), ids=lambda p: p.stem)
def test_bundled_scenario_passes(path, bundle):
    result = run_script(path, bundle)
    assert result.ok, result.failures


def test_failed_expectation_is_reported(bundle):
    script = {
        "name": "wrong",
        "steps": [
            {"say": "copy this"},
            {"expect_action": "Farewell"},
            {"expect_contains": "nonexistent phrase xyzzy"},
            {"expect_job": {"function": "fax"}},
        ],
    }
    result = run_script(script, bundle)
    assert len(result.failures) == 3
    assert all(f.startswith("step ") for f in result.failures)


def test_malformed_step_is_reported_not_raised(bundle):
    script = {"name": "bad", "steps": [{"shout": "hi"}, {"say": "x", "device": {}}]}
    result = run_script(script, bundle)
    assert len(result.failures) == 2
    assert "exactly one directive" in result.failures[0]


def test_expectations_only_see_the_latest_drive_step(bundle):
    script = {
        "name": "window",
        "steps": [
            {"say": "copy this"},
            {"say": "3"},
            # the quantity prompt belongs to the previous window
            {"expect_contains": "how many"},
        ],
    }
    result = run_script(script, bundle)
    assert not result.ok


def test_log_is_valid_envelope_json(bundle):
    result = run_script(bundled_scenarios()[0], bundle)
    for line in result.log:
        env = json.loads(line)
        assert env["session_id"] == "script"
        assert {"type", "seq", "payload", "rate_hint"} <= set(env)


def test_replay_is_byte_identical(bundle):
    path = bundled_scenarios()[0]
    first = run_script(path, bundle)
    second = run_script(path, bundle)
    assert first.log == second.log
