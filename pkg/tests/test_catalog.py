import json

import pytest

from mfp_agent.catalog import ManifestError, OptionSpec, load_catalog


@pytest.fixture(scope="module")
def catalog():
    return load_catalog()


def test_functions_offered(catalog):
    assert catalog.functions == ("copy", "scan", "fax", "email")
    assert "print" not in catalog.functions


def test_value_counts_meet_floor(catalog):
    # independent recount straight from the manifest dict
    from importlib import resources
    raw = json.loads(
        resources.files("mfp_agent.data").joinpath("device_manifest.json").read_text()
    )
    expected_total = 0
    expected_conv = 0
    for o in raw["options"]:
        per_function = len(o["values"]) if o["type"] == "enum" else 1
        expected_total += per_function * len(o["functions"])
        if o.get("conversational"):
            expected_conv += per_function * len(o["functions"])
    assert catalog.total_value_count() == expected_total == 99
    assert catalog.conversational_value_count() == expected_conv == 63
    assert catalog.total_value_count() >= 90
    assert catalog.conversational_value_count() >= 45


def test_option_lookup_and_domains(catalog):
    quantity = catalog.option("quantity")
    assert quantity.type == "int" and quantity.min == 1 and quantity.max == 999
    assert quantity.allows(1) and quantity.allows(999)
    assert not quantity.allows(0) and not quantity.allows(1000)
    assert not quantity.allows(True)  # bools are not counts
    sides = catalog.option("sides")
    assert sides.allows("double") and not sides.allows("both")
    assert catalog.option("nope") is None


def test_defaults_skip_unset_strings(catalog):
    for function in catalog.functions:
        defaults = catalog.defaults_for(function)
        for slot, value in defaults.items():
            assert catalog.option(slot).allows(value), (slot, value)
    assert "delayed_send" not in catalog.defaults_for("fax")


def test_options_for_function(catalog):
    copy_ids = {o.id for o in catalog.options_for("copy")}
    assert "quantity" in copy_ids and "destination_number" not in copy_ids
    assert len(catalog.options_for()) == len(catalog.options)


def test_fault_table(catalog):
    assert set(catalog.faults) == {
        "paper_jam", "out_of_paper", "toner_low", "feeder_misfeed", "stapler_empty",
    }
    assert catalog.faults["toner_low"].blocks == ()
    assert set(catalog.faults["feeder_misfeed"].blocks) == set(catalog.functions)
    assert catalog.faults["stapler_empty"].blocks_when_stapling


def test_bad_manifest_reports_every_problem(tmp_path):
    bad = {
        "functions": ["copy", "print"],
        "options": [
            {"id": "a", "functions": ["copy"], "type": "enum", "values": [],
             "description": "x"},
            {"id": "a", "functions": ["copy"], "type": "int",
             "description": "y"},
        ],
        "layout": {},
        "faults": [{"code": "z"}],
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(ManifestError) as err:
        load_catalog(path)
    message = str(err.value)
    for expected in ("'print'", "no values", "min/max", "duplicate option id",
                     "no detail prose", "selectable values"):
        assert expected in message


def test_value_count_rule():
    enum = OptionSpec(id="e", functions=("copy",), type="enum", default="x",
                      conversational=True, description="d", values=("x", "y", "z"))
    keyed = OptionSpec(id="k", functions=("copy",), type="int", default=1,
                       conversational=True, description="d", min=1, max=9)
    assert enum.value_count() == 3
    assert keyed.value_count() == 1
