"""Workflow rules on top of the event log: leases, labels, adjudication.

All mutations take one lock, validate against the folded state, append a
single event, and apply it; readers see the state between appends.  The
clock is injectable so lease expiry is testable without waiting.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence, TextIO

from ..corpus import CandidateInstance, candidate_to_dict
from ..dataset import LabeledInstance, write_labeled
from ..stats import cohens_kappa
from . import events as ev
from . import state as st

DEFAULT_LEASE_TIMEOUT = 1800.0


class WorkflowError(Exception):
    """A request the current state refuses; maps onto an HTTP status."""

    def __init__(self, message: str, status: int = 409):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class TaskView:
    task_id: str
    text: str
    span_start: int
    span_end: int
    pilot: bool
    state: str
    labels: tuple[dict, ...]
    gold_label: Optional[int]


@dataclass(frozen=True)
class AgreementStats:
    n: int
    p_o: Optional[float]
    kappa: Optional[float]


@dataclass(frozen=True)
class ExportSummary:
    written: int
    skipped: int
    warning: Optional[str]


def load_guidelines() -> str:
    return resources.files("ditrans.resources").joinpath("guidelines.txt").read_text("utf-8")


class AnnotationService:
    def __init__(self, log_stream: TextIO,
                 prior_events: Sequence[ev.AnnotationEvent] = (),
                 lease_timeout: float = DEFAULT_LEASE_TIMEOUT,
                 clock: Callable[[], float] = time.time,
                 snapshot_path: Optional[Path] = None,
                 snapshot_every: int = 500):
        if lease_timeout <= 0:
            raise ValueError("lease timeout must be positive")
        if snapshot_every < 1:
            raise ValueError("snapshot interval must be positive")
        self._state = st.replay(prior_events)
        last_seq = prior_events[-1].seq if prior_events else 0
        self._log = ev.EventLog(log_stream, last_seq=last_seq)
        self._lock = threading.Lock()
        self._clock = clock
        self._timeout = lease_timeout
        self._snapshot_path = snapshot_path
        self._snapshot_every = snapshot_every

    @classmethod
    def resume(cls, log_path: Path, **kwargs) -> "AnnotationService":
        """Rebuild state from an existing log file and keep appending to it."""
        prior: list[ev.AnnotationEvent] = []
        if log_path.exists():
            with log_path.open("r", encoding="utf-8") as f:
                prior = ev.read_events(f)
        stream = log_path.open("a", encoding="utf-8")
        return cls(stream, prior_events=prior, **kwargs)

    # -- internals -----------------------------------------------------

    def _append(self, action: str, annotator: str = "", task_id: str = "",
                value: Optional[int] = None, case_tag: Optional[str] = None,
                payload: Optional[dict] = None) -> ev.AnnotationEvent:
        event = ev.AnnotationEvent(seq=self._log.last_seq + 1, ts=self._clock(),
                                   action=action, annotator=annotator, task_id=task_id,
                                   value=value, case_tag=case_tag, payload=payload)
        self._log.append(event)
        self._state.apply(event)
        if self._snapshot_path is not None and event.seq % self._snapshot_every == 0:
            self.write_snapshot(self._snapshot_path)
        return event

    def _task(self, task_id: str) -> st.TaskRecord:
        task = self._state.tasks.get(task_id)
        if task is None:
            raise WorkflowError(f"unknown task {task_id}", status=404)
        return task

    def _annotator(self, annotator_id: str) -> st.AnnotatorRecord:
        record = self._state.annotators.get(annotator_id)
        if record is None:
            raise WorkflowError(f"unknown annotator {annotator_id}", status=404)
        return record

    def _view(self, task: st.TaskRecord, now: float) -> TaskView:
        return TaskView(
            task_id=task.task_id,
            text=task.candidate.sentence.raw_text,
            span_start=task.candidate.match.start,
            span_end=task.candidate.match.end,
            pilot=task.pilot,
            state=task.derived_state(now, self._timeout),
            labels=tuple({"annotator": e.annotator, "value": e.value,
                          "case_tag": e.case_tag} for e in task.labels),
            gold_label=task.gold_label(),
        )

    def _eligible(self, task: st.TaskRecord, annotator_id: str, now: float) -> bool:
        if task.adjudication is not None or task.is_complete():
            return False
        labelers = task.labelers()
        if annotator_id in labelers:
            return False
        active = task.active_leases(now, self._timeout)
        if annotator_id in active:
            return True
        assigned = set(labelers) | set(active)
        return len(assigned) < task.required_labels

    # -- operations ----------------------------------------------------

    def register_annotator(self, name: str, role: str = "annotator") -> str:
        if not name.strip():
            raise WorkflowError("annotator name must be non-empty", status=400)
        if role not in ev.ROLES:
            raise WorkflowError(f"unknown role {role!r}", status=400)
        with self._lock:
            annotator_id = f"ann-{len(self._state.annotators) + 1:03d}"
            self._append(ev.REGISTER, annotator=annotator_id,
                         payload={"name": name, "role": role})
            return annotator_id

    def load_candidates(self, candidates: Iterable[CandidateInstance],
                        pilot_count: int = 0) -> list[str]:
        """Create one task per candidate; the first pilot_count are pilot
        tasks needing two independent labels."""
        if pilot_count < 0:
            raise ValueError("pilot count must be non-negative")
        created: list[str] = []
        with self._lock:
            for candidate in candidates:
                task_id = f"t{len(self._state.tasks) + 1:05d}"
                pilot = (sum(1 for t in self._state.tasks.values() if t.pilot)
                         < pilot_count)
                self._append(ev.CREATE, task_id=task_id,
                             payload={"candidate": candidate_to_dict(candidate),
                                      "pilot": pilot})
                created.append(task_id)
        return created

    def next_task(self, annotator_id: str) -> Optional[TaskView]:
        with self._lock:
            self._annotator(annotator_id)
            now = self._clock()
            for task_id in sorted(self._state.tasks):
                task = self._state.tasks[task_id]
                if annotator_id in task.active_leases(now, self._timeout) and \
                        not task.is_complete() and task.adjudication is None:
                    return self._view(task, now)
            for task_id in sorted(self._state.tasks):
                task = self._state.tasks[task_id]
                if self._eligible(task, annotator_id, now):
                    self._append(ev.LEASE, annotator=annotator_id, task_id=task_id)
                    return self._view(task, now)
            return None

    def submit_label(self, annotator_id: str, task_id: str, label: int,
                     case_tag: Optional[str] = None) -> TaskView:
        if label not in (0, 1):
            raise WorkflowError(f"label must be 0 or 1, got {label!r}", status=400)
        if case_tag is not None and case_tag not in ev.CASE_TAGS:
            raise WorkflowError(f"unknown case tag {case_tag!r}", status=400)
        with self._lock:
            self._annotator(annotator_id)
            task = self._task(task_id)
            now = self._clock()
            if annotator_id in task.labelers():
                raise WorkflowError(f"{annotator_id} already labeled {task_id}")
            if task.adjudication is not None or task.is_complete():
                raise WorkflowError(f"task {task_id} is already fully labeled")
            if not task.pilot and annotator_id not in task.active_leases(now, self._timeout):
                raise WorkflowError(f"stale lease: {annotator_id} does not hold {task_id}")
            self._append(ev.LABEL, annotator=annotator_id, task_id=task_id,
                         value=label, case_tag=case_tag)
            return self._view(task, now)

    def release(self, annotator_id: str, task_id: str) -> None:
        with self._lock:
            self._annotator(annotator_id)
            task = self._task(task_id)
            now = self._clock()
            if annotator_id not in task.active_leases(now, self._timeout):
                raise WorkflowError(f"{annotator_id} holds no active lease on {task_id}")
            self._append(ev.RELEASE, annotator=annotator_id, task_id=task_id)

    def adjudicate(self, annotator_id: str, task_id: str, label: int) -> TaskView:
        if label not in (0, 1):
            raise WorkflowError(f"label must be 0 or 1, got {label!r}", status=400)
        with self._lock:
            record = self._annotator(annotator_id)
            if record.role != "adjudicator":
                raise WorkflowError(f"{annotator_id} is not an adjudicator", status=403)
            task = self._task(task_id)
            now = self._clock()
            if task.adjudication is not None:
                raise WorkflowError(f"task {task_id} is already adjudicated")
            if task.derived_state(now, self._timeout) != st.ADJUDICATING:
                raise WorkflowError(f"task {task_id} is not awaiting adjudication")
            self._append(ev.ADJUDICATE, annotator=annotator_id, task_id=task_id,
                         value=label)
            return self._view(task, now)

    def agreement(self) -> AgreementStats:
        """Kappa over doubly-labeled pilot tasks, from the labels as first
        submitted; adjudication never rewrites them."""
        with self._lock:
            first_a: list[int] = []
            first_b: list[int] = []
            for task_id in sorted(self._state.tasks):
                task = self._state.tasks[task_id]
                if not task.pilot:
                    continue
                first = task.first_labels()
                if len(first) < 2:
                    continue
                pair = sorted(first)[:2]
                first_a.append(first[pair[0]].value)
                first_b.append(first[pair[1]].value)
            n = len(first_a)
            if n == 0:
                return AgreementStats(n=0, p_o=None, kappa=None)
            p_o = sum(a == b for a, b in zip(first_a, first_b)) / n
            return AgreementStats(n=n, p_o=p_o, kappa=cohens_kappa(first_a, first_b))

    def list_tasks(self, state_filter: Optional[str] = None, offset: int = 0,
                   limit: int = 50) -> tuple[list[TaskView], int]:
        if state_filter is not None and state_filter not in st.TASK_STATES:
            raise WorkflowError(f"unknown state {state_filter!r}", status=400)
        if offset < 0 or limit < 1:
            raise WorkflowError("offset must be >= 0 and limit >= 1", status=400)
        with self._lock:
            now = self._clock()
            views = [self._view(self._state.tasks[tid], now)
                     for tid in sorted(self._state.tasks)]
            if state_filter is not None:
                views = [v for v in views if v.state == state_filter]
            return views[offset:offset + limit], len(views)

    def export_gold(self, path: Path, force: bool = False) -> ExportSummary:
        with self._lock:
            now = self._clock()
            final: list[st.TaskRecord] = []
            unfinished = 0
            for task_id in sorted(self._state.tasks):
                task = self._state.tasks[task_id]
                if task.derived_state(now, self._timeout) == st.FINAL:
                    final.append(task)
                else:
                    unfinished += 1
            if unfinished and not force:
                raise WorkflowError(
                    f"{unfinished} tasks are not final; pass force to export "
                    f"finals only")
            instances = [LabeledInstance(candidate=task.candidate,
                                         gold_label=task.gold_label(),
                                         source="human-adjudicated")
                         for task in final]
            with Path(path).open("w", encoding="utf-8") as f:
                written = write_labeled(instances, f)
            warning = (f"skipped {unfinished} unfinished tasks"
                       if unfinished else None)
            return ExportSummary(written=written, skipped=unfinished, warning=warning)

    # -- persistence ---------------------------------------------------

    def write_snapshot(self, path: Path) -> None:
        payload = {"last_seq": self._log.last_seq,
                   "state": st.state_to_dict(self._state)}
        Path(path).write_text(json.dumps(payload, ensure_ascii=False, sort_keys=True,
                                         indent=2) + "\n", encoding="utf-8")

    def state_dict(self) -> dict:
        with self._lock:
            return st.state_to_dict(self._state)

    @property
    def last_seq(self) -> int:
        return self._log.last_seq
