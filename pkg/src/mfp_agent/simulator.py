"""Deterministic multifunction-printer simulator.

Stands in for the real device API: validates and runs jobs, raises and
clears faults, answers physical-layout questions, and emits an append-only
event log. Time is modeled as explicit logical ticks via advance(); there
are no wall-clock timers, so every test is reproducible.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

from .catalog import OptionCatalog


class JobStatus(Enum):
    QUEUED = "queued"
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


# DeviceEvent kinds
JOB_STARTED = "JobStarted"
JOB_PROGRESS = "JobProgress"
JOB_COMPLETED = "JobCompleted"
JOB_FAILED = "JobFailed"
FAULT_RAISED = "FaultRaised"
FAULT_CLEARED = "FaultCleared"


class PartNotFound(KeyError):
    """Asked for a machine part that is not in the layout map."""

    def __init__(self, part: str, known: list[str]):
        super().__init__(part)
        self.part = part
        self.known = known


@dataclass(frozen=True)
class DeviceEvent:
    kind: str
    human_detail: str
    job_id: str | None = None
    fault: str | None = None

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"kind": self.kind, "detail": self.human_detail}
        if self.job_id:
            d["job_id"] = self.job_id
        if self.fault:
            d["fault"] = self.fault
        return d


@dataclass
class Job:
    id: str
    function: str
    settings: dict[str, Any]
    source_pages: int = 1
    status: JobStatus = JobStatus.QUEUED
    progress: int = 0  # output pages done
    failure: str | None = None

    @property
    def total_pages(self) -> int:
        if self.function == "copy":
            return int(self.settings.get("quantity", 1)) * self.source_pages
        return self.source_pages

    @property
    def pages_per_sheet(self) -> int:
        return 2 if self.settings.get("sides") in ("double", "double_flip") else 1

    def sheets_for_progress(self) -> int:
        """Physical sheets consumed so far (copy only; scans use no paper)."""
        if self.function != "copy":
            return 0
        return math.ceil(self.progress / self.pages_per_sheet)


@dataclass
class ValidationResult:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_job(job: Job, catalog: OptionCatalog) -> ValidationResult:
    """Check function support and every setting against its value domain."""
    result = ValidationResult()
    if job.function not in catalog.functions:
        result.violations.append(f"function not supported: {job.function}")
        return result
    for key, value in job.settings.items():
        spec = catalog.option(key)
        if spec is None or job.function not in spec.functions:
            result.violations.append(f"option '{key}' does not apply to {job.function}")
        elif not spec.allows(value):
            result.violations.append(f"{key} must be {spec.domain_text()}")
    if job.source_pages < 1:
        result.violations.append("source_pages must be positive")
    return result


class DeviceSimulator:
    """Single device with serialized mutations and an append-only event log.

    All public mutators take one internal lock, so the simulator can be
    handed between threads; observers read the event log by index.
    """

    def __init__(self, catalog: OptionCatalog, trays: dict[str, int] | None = None):
        self.catalog = catalog
        self.trays: dict[str, int] = dict(trays) if trays else {"tray_1": 250, "tray_2": 250, "bypass": 0}
        self.toner_level = 100
        self.faults: set[str] = set()
        self.output_tray: list[str] = []
        self.feeder_loaded = True
        self.feeder_pages = 1
        self.jobs: dict[str, Job] = {}
        self.queue: list[str] = []  # queued + running, in order
        self.events: list[DeviceEvent] = []
        self._next_id = 1
        self._lock = threading.RLock()
        self._sync_paper_fault(emit=False)

    # ── paper and faults ─────────────────────────────────────────────

    @property
    def total_sheets(self) -> int:
        return sum(self.trays.values())

    def _sync_paper_fault(self, emit: bool = True) -> DeviceEvent | None:
        """Keep the out_of_paper fault in lockstep with tray contents."""
        if self.total_sheets == 0 and "out_of_paper" not in self.faults:
            return self._raise_fault("out_of_paper", emit=emit)
        if self.total_sheets > 0 and "out_of_paper" in self.faults:
            return self._drop_fault("out_of_paper", emit=emit)
        return None

    def _fault_detail(self, code: str) -> str:
        spec = self.catalog.faults.get(code)
        return spec.detail if spec else f"Fault reported: {code}."

    def _blocking_fault_for(self, job: Job) -> str | None:
        for code in sorted(self.faults):
            spec = self.catalog.faults.get(code)
            if spec is None:
                continue
            if job.function in spec.blocks:
                return code
            if spec.blocks_when_stapling and job.settings.get("staple") not in (None, "none"):
                return code
        return None

    def _emit(self, event: DeviceEvent) -> DeviceEvent:
        self.events.append(event)
        return event

    def _raise_fault(self, code: str, emit: bool = True) -> DeviceEvent | None:
        self.faults.add(code)
        event = DeviceEvent(FAULT_RAISED, self._fault_detail(code), fault=code)
        if emit:
            self._emit(event)
        # a newly raised blocking fault takes down the running job
        running = self._running_job()
        if running is not None and self._blocking_fault_for(running) == code:
            self._fail_job(running, code)
        return event if emit else None

    def _drop_fault(self, code: str, emit: bool = True) -> DeviceEvent | None:
        self.faults.discard(code)
        event = DeviceEvent(FAULT_CLEARED, f"Cleared: {self._fault_detail(code)}", fault=code)
        return self._emit(event) if emit else None

    def inject_fault(self, code: str) -> DeviceEvent | None:
        with self._lock:
            if code in self.faults:
                return None
            if code == "out_of_paper":
                for tray in self.trays:
                    self.trays[tray] = 0
            return self._raise_fault(code)

    def clear_fault(self, code: str) -> DeviceEvent | None:
        """Remove a fault; clearing an absent fault is a silent no-op."""
        with self._lock:
            if code not in self.faults:
                return None
            if code == "out_of_paper":
                # paper must exist again for the fault to be gone
                self.trays["tray_1"] = max(self.trays["tray_1"], 100)
            return self._drop_fault(code)

    def load_paper(self, tray: str = "tray_1", sheets: int = 100) -> DeviceEvent | None:
        with self._lock:
            if tray not in self.trays:
                raise KeyError(tray)
            self.trays[tray] += sheets
            return self._sync_paper_fault()

    def load_feeder(self, pages: int) -> None:
        with self._lock:
            self.feeder_loaded = pages > 0
            self.feeder_pages = max(pages, 0)

    # ── jobs ─────────────────────────────────────────────────────────

    def _running_job(self) -> Job | None:
        for job_id in self.queue:
            if self.jobs[job_id].status is JobStatus.RUNNING:
                return self.jobs[job_id]
        return None

    def _fail_job(self, job: Job, fault: str) -> DeviceEvent:
        job.status = JobStatus.FAILED
        job.failure = fault
        if job.id in self.queue:
            self.queue.remove(job.id)
        detail = f"Your {job.function} job stopped: {self._fault_detail(fault)}"
        return self._emit(DeviceEvent(JOB_FAILED, detail, job_id=job.id, fault=fault))

    def _start_job(self, job: Job) -> None:
        blocking = self._blocking_fault_for(job)
        if blocking:
            self._fail_job(job, blocking)
            return
        job.status = JobStatus.RUNNING
        self._emit(DeviceEvent(JOB_STARTED, f"Your {job.function} job has started.", job_id=job.id))

    def submit_job(self, job: Job) -> str:
        with self._lock:
            if not job.id:
                job.id = f"job-{self._next_id}"
            self._next_id += 1
            job.source_pages = max(self.feeder_pages, 1)
            self.jobs[job.id] = job
            self.queue.append(job.id)
            if self._running_job() is None:
                self._start_job(job)
            return job.id

    def make_job(self, function: str, settings: dict[str, Any]) -> Job:
        return Job(id="", function=function, settings=dict(settings))

    def _consume_sheet(self, job: Job) -> bool:
        """Deduct one sheet for a copy job; False when the machine is dry."""
        for tray in ("tray_1", "tray_2", "bypass"):
            if self.trays.get(tray, 0) > 0:
                self.trays[tray] -= 1
                return True
        return False

    def advance(self, steps: int = 1) -> list[DeviceEvent]:
        """Progress the running job by one output page per step."""
        with self._lock:
            start = len(self.events)
            for _ in range(steps):
                job = self._running_job()
                if job is None:
                    # promote the next queued job, if any
                    for job_id in list(self.queue):
                        candidate = self.jobs[job_id]
                        if candidate.status is JobStatus.QUEUED:
                            self._start_job(candidate)
                            break
                    job = self._running_job()
                    if job is None:
                        break
                if self._blocking_fault_for(job):
                    break  # blocked jobs make no progress
                if job.function == "copy" and job.progress % job.pages_per_sheet == 0:
                    if not self._consume_sheet(job):
                        self._sync_paper_fault()  # raises out_of_paper, fails job
                        continue
                job.progress += 1
                self._emit(DeviceEvent(
                    JOB_PROGRESS,
                    f"Page {job.progress} of {job.total_pages}.",
                    job_id=job.id,
                ))
                if job.progress >= job.total_pages:
                    job.status = JobStatus.COMPLETED
                    self.queue.remove(job.id)
                    if job.function == "copy":
                        self.output_tray.append(job.id)
                    self._emit(DeviceEvent(
                        JOB_COMPLETED,
                        self._completion_detail(job),
                        job_id=job.id,
                    ))
            return self.events[start:]

    def run_to_completion(self, limit: int = 10000) -> list[DeviceEvent]:
        """Advance until nothing is running or a blocking fault stalls it."""
        with self._lock:
            start = len(self.events)
            for _ in range(limit):
                job = self._running_job()
                if job is None and not any(
                    self.jobs[j].status is JobStatus.QUEUED for j in self.queue
                ):
                    break
                if job is not None and self._blocking_fault_for(job):
                    break
                self.advance(1)
            return self.events[start:]

    def _completion_detail(self, job: Job) -> str:
        if job.function == "copy":
            quantity = job.settings.get("quantity", 1)
            return (
                f"Your copy job is finished: {quantity} "
                f"{'set is' if quantity == 1 else 'sets are'} in the output tray."
            )
        if job.function == "scan":
            return f"Your scan is finished and saved to {job.settings.get('destination', 'email')}."
        if job.function == "fax":
            return f"Your fax to {job.settings.get('destination_number', 'the number you gave')} went through."
        return f"Your email to {job.settings.get('destination_address', 'the address you gave')} was sent."

    # ── queries ──────────────────────────────────────────────────────

    def locate(self, part: str) -> str:
        key = part.strip().lower().replace(" ", "_")
        aliases = {"tray": "paper_trays", "paper_tray": "paper_trays", "glass": "platen", "button": "agent_button"}
        key = aliases.get(key, key)
        layout = self.catalog.layout
        if key not in layout:
            raise PartNotFound(part, sorted(layout))
        return layout[key]

    def snapshot(self) -> dict:
        with self._lock:
            return {
                "trays": dict(self.trays),
                "toner_level": self.toner_level,
                "faults": sorted(self.faults),
                "feeder_pages": self.feeder_pages,
                "output_tray": list(self.output_tray),
                "jobs": [
                    {
                        "id": j.id,
                        "function": j.function,
                        "status": j.status.value,
                        "progress": j.progress,
                        "total_pages": j.total_pages,
                        "settings": dict(j.settings),
                        "failure": j.failure,
                    }
                    for j in self.jobs.values()
                ],
            }


def replay_statuses(events: list[DeviceEvent]) -> dict[str, JobStatus]:
    """Reconstruct job statuses from an event list alone."""
    statuses: dict[str, JobStatus] = {}
    for event in events:
        if event.job_id is None:
            continue
        if event.kind == JOB_STARTED:
            statuses[event.job_id] = JobStatus.RUNNING
        elif event.kind == JOB_COMPLETED:
            statuses[event.job_id] = JobStatus.COMPLETED
        elif event.kind == JOB_FAILED:
            statuses[event.job_id] = JobStatus.FAILED
    return statuses
