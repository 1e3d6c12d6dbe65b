import json

import pytest

from mfp_agent.cli import main


def test_validate_manifests_reports_each_data_file(capsys):
    assert main(["validate-manifests"]) == 0
    out = capsys.readouterr().out
    for name in ("manifest ok", "grammar ok", "knowledge ok", "templates ok"):
        assert name in out


def test_validate_manifests_flags_a_broken_manifest(tmp_path, capsys):
    bad = {"device": {"name": "x", "layout": {}}, "functions": [], "options": [], "faults": []}
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(bad))
    assert main(["validate-manifests", "--manifest", str(path)]) == 1


def test_check_runs_bundled_scenarios(capsys):
    assert main(["check"]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l]
    assert len(lines) == 7
    assert all(line.startswith("PASS ") for line in lines)


def test_check_reports_a_failing_script(tmp_path, capsys):
    script = {"name": "doomed", "steps": [{"say": "copy"}, {"expect_action": "Farewell"}]}
    path = tmp_path / "doomed.json"
    path.write_text(json.dumps(script))
    assert main(["check", str(path)]) == 1
    out = capsys.readouterr().out
    assert out.startswith("FAIL doomed")


def test_unknown_config_key_is_rejected(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"chunk_sise": 4}))
    with pytest.raises(Exception):
        main(["check", "--config", str(path)])
