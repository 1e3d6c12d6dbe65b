import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfp_agent.catalog import load_catalog
from mfp_agent.simulator import (
    DeviceSimulator, JobStatus, PartNotFound, replay_statuses, validate_job,
)


@pytest.fixture(scope="module")
def catalog():
    return load_catalog()


@pytest.fixture
def device(catalog):
    return DeviceSimulator(catalog)


def _copy_job(device, quantity=2, sides="single", staple="none"):
    return device.make_job("copy", {"quantity": quantity, "sides": sides, "staple": staple})


def test_copy_job_runs_to_completion(device):
    job_id = device.submit_job(_copy_job(device, quantity=3))
    events = device.run_to_completion()
    job = device.jobs[job_id]
    assert job.status is JobStatus.COMPLETED
    assert job.progress == 3  # 3 copies of a 1-page original
    assert device.output_tray == [job_id]
    kinds = [e.kind for e in events]
    assert kinds[0] == "JobProgress" and kinds[-1] == "JobCompleted"


def test_double_sided_halves_sheet_use(device):
    device.load_feeder(4)
    before = device.total_sheets
    device.submit_job(_copy_job(device, quantity=1, sides="double"))
    device.run_to_completion()
    assert before - device.total_sheets == 2  # 4 pages on 2 sheets


def test_scan_consumes_no_paper(device):
    before = device.total_sheets
    device.submit_job(device.make_job("scan", {"destination": "email"}))
    device.run_to_completion()
    assert device.total_sheets == before
    assert device.output_tray == []  # nothing physical comes out


def test_blocking_fault_fails_submitted_job(device):
    device.inject_fault("paper_jam")
    job_id = device.submit_job(_copy_job(device))
    assert device.jobs[job_id].status is JobStatus.FAILED
    assert device.jobs[job_id].failure == "paper_jam"


def test_fault_mid_run_fails_running_job(device):
    job_id = device.submit_job(_copy_job(device, quantity=5))
    device.advance(2)
    device.inject_fault("feeder_misfeed")
    assert device.jobs[job_id].status is JobStatus.FAILED


def test_toner_low_blocks_nothing(device):
    device.inject_fault("toner_low")
    job_id = device.submit_job(_copy_job(device))
    device.run_to_completion()
    assert device.jobs[job_id].status is JobStatus.COMPLETED


def test_stapler_empty_blocks_only_stapled_jobs(device):
    device.inject_fault("stapler_empty")
    plain = device.submit_job(_copy_job(device, staple="none"))
    device.run_to_completion()
    assert device.jobs[plain].status is JobStatus.COMPLETED
    stapled = device.submit_job(_copy_job(device, staple="top_left"))
    assert device.jobs[stapled].status is JobStatus.FAILED


def test_fax_unaffected_by_paper_faults(device):
    device.inject_fault("out_of_paper")
    job_id = device.submit_job(device.make_job("fax", {"destination_number": "5551234"}))
    device.run_to_completion()
    assert device.jobs[job_id].status is JobStatus.COMPLETED


def test_out_of_paper_tracks_trays(device):
    device.inject_fault("out_of_paper")
    assert device.total_sheets == 0
    device.load_paper("tray_1", 50)
    assert "out_of_paper" not in device.faults
    device.trays["tray_1"] = 0
    device._sync_paper_fault()
    assert "out_of_paper" in device.faults


def test_running_dry_mid_job_raises_fault(device):
    for tray in device.trays:
        device.trays[tray] = 0
    device.trays["tray_1"] = 2
    job_id = device.submit_job(_copy_job(device, quantity=5))
    device.run_to_completion()
    assert device.jobs[job_id].status is JobStatus.FAILED
    assert "out_of_paper" in device.faults


def test_clear_absent_fault_is_silent(device):
    before = len(device.events)
    assert device.clear_fault("paper_jam") is None
    assert len(device.events) == before


def test_queue_runs_in_order(device):
    first = device.submit_job(_copy_job(device, quantity=1))
    second = device.submit_job(_copy_job(device, quantity=1))
    assert device.jobs[first].status is JobStatus.RUNNING
    assert device.jobs[second].status is JobStatus.QUEUED
    device.run_to_completion()
    assert device.output_tray == [first, second]


def test_locate_known_parts_and_misses(device):
    assert "front" in device.locate("output tray")
    assert device.locate("glass") == device.locate("platen")
    with pytest.raises(PartNotFound) as err:
        device.locate("flux capacitor")
    assert "feeder" in err.value.known


def test_validate_job_flags_every_violation(device, catalog):
    job = device.make_job("copy", {"quantity": 0, "destination_number": "x", "sides": "triple"})
    result = validate_job(job, catalog)
    assert len(result.violations) == 3


def test_replay_statuses_matches_live_state(device):
    done = device.submit_job(_copy_job(device, quantity=1))
    device.run_to_completion()
    device.inject_fault("paper_jam")
    failed = device.submit_job(_copy_job(device))
    replayed = replay_statuses(device.events)
    assert replayed[done] is JobStatus.COMPLETED
    assert replayed[failed] is JobStatus.FAILED


_OPS = st.lists(
    st.one_of(
        st.tuples(st.just("inject"), st.sampled_from(
            ["paper_jam", "out_of_paper", "toner_low", "feeder_misfeed", "stapler_empty"])),
        st.tuples(st.just("clear"), st.sampled_from(
            ["paper_jam", "out_of_paper", "toner_low", "feeder_misfeed", "stapler_empty"])),
        st.tuples(st.just("load"), st.integers(min_value=0, max_value=300)),
        st.tuples(st.just("submit"), st.integers(min_value=1, max_value=5)),
        st.tuples(st.just("advance"), st.integers(min_value=1, max_value=10)),
    ),
    max_size=30,
)


@settings(max_examples=60, deadline=None)
@given(ops=_OPS)
def test_paper_fault_invariant_holds_under_any_op_sequence(ops):
    device = DeviceSimulator(load_catalog())
    for op, arg in ops:
        if op == "inject":
            device.inject_fault(arg)
        elif op == "clear":
            device.clear_fault(arg)
        elif op == "load":
            device.load_paper("tray_1", arg)
        elif op == "submit":
            device.submit_job(device.make_job("copy", {"quantity": arg, "sides": "single"}))
        else:
            device.advance(arg)
        # the invariant must hold after every single mutation
        assert ("out_of_paper" in device.faults) == (device.total_sheets == 0)
    # and the event log alone must reproduce the same job statuses
    assert replay_statuses(device.events) == {
        j.id: j.status for j in device.jobs.values()
        if j.status in (JobStatus.RUNNING, JobStatus.COMPLETED, JobStatus.FAILED)
    }
