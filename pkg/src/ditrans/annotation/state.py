"""Annotation state as a pure fold over the event log.

Events are facts already validated at append time, so applying one never
consults the clock or raises on workflow grounds; anything invalid here
is a corrupted log.  Task states are derived, not stored: a task's
position in open -> leased -> labeled -> (adjudicating ->) final follows
from its labels, leases, and adjudication alone.  The one sanctioned
backward move is lease expiry, which returns a leased task to open.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..corpus import CandidateInstance, candidate_from_dict, candidate_to_dict
from . import events as ev

OPEN = "open"
LEASED = "leased"
LABELED = "labeled"
ADJUDICATING = "adjudicating"
FINAL = "final"

TASK_STATES = (OPEN, LEASED, LABELED, ADJUDICATING, FINAL)


@dataclass(frozen=True)
class LabelEntry:
    annotator: str
    value: int
    case_tag: Optional[str]
    seq: int


@dataclass(frozen=True)
class Adjudication:
    annotator: str
    value: int
    seq: int


@dataclass
class AnnotatorRecord:
    annotator_id: str
    name: str
    role: str


@dataclass
class TaskRecord:
    task_id: str
    candidate: CandidateInstance
    pilot: bool
    labels: list[LabelEntry] = field(default_factory=list)
    leases: dict[str, float] = field(default_factory=dict)
    adjudication: Optional[Adjudication] = None

    @property
    def required_labels(self) -> int:
        return 2 if self.pilot else 1

    def labelers(self) -> list[str]:
        seen: list[str] = []
        for entry in self.labels:
            if entry.annotator not in seen:
                seen.append(entry.annotator)
        return seen

    def first_labels(self) -> dict[str, LabelEntry]:
        """Each annotator's first-submitted label; later ones never exist
        on a healthy log but a corrupted one must not corrupt statistics."""
        first: dict[str, LabelEntry] = {}
        for entry in self.labels:
            first.setdefault(entry.annotator, entry)
        return first

    def is_complete(self) -> bool:
        return len(self.labelers()) >= self.required_labels

    def active_leases(self, now: float, timeout: float) -> dict[str, float]:
        return {a: ts for a, ts in self.leases.items() if ts + timeout > now}

    def derived_state(self, now: float, timeout: float) -> str:
        if self.adjudication is not None:
            return FINAL
        if self.is_complete():
            values = {entry.value for entry in self.first_labels().values()}
            if self.pilot and len(values) > 1:
                return ADJUDICATING
            return FINAL
        if self.labels:
            return LABELED
        if self.active_leases(now, timeout):
            return LEASED
        return OPEN

    def gold_label(self) -> Optional[int]:
        """The settled label, defined exactly when the task is final."""
        if self.adjudication is not None:
            return self.adjudication.value
        if not self.is_complete():
            return None
        values = {entry.value for entry in self.first_labels().values()}
        if len(values) > 1:
            return None
        return values.pop()


@dataclass
class ServiceState:
    annotators: dict[str, AnnotatorRecord] = field(default_factory=dict)
    tasks: dict[str, TaskRecord] = field(default_factory=dict)

    def apply(self, event: ev.AnnotationEvent) -> None:
        if event.action == ev.REGISTER:
            payload = event.payload or {}
            self.annotators[event.annotator] = AnnotatorRecord(
                annotator_id=event.annotator,
                name=payload.get("name", ""),
                role=payload.get("role", "annotator"),
            )
        elif event.action == ev.CREATE:
            payload = event.payload or {}
            self.tasks[event.task_id] = TaskRecord(
                task_id=event.task_id,
                candidate=candidate_from_dict(payload["candidate"]),
                pilot=bool(payload.get("pilot", False)),
            )
        elif event.action == ev.LEASE:
            self.tasks[event.task_id].leases[event.annotator] = event.ts
        elif event.action == ev.RELEASE:
            self.tasks[event.task_id].leases.pop(event.annotator, None)
        elif event.action == ev.LABEL:
            task = self.tasks[event.task_id]
            task.labels.append(LabelEntry(annotator=event.annotator, value=event.value,
                                          case_tag=event.case_tag, seq=event.seq))
            task.leases.pop(event.annotator, None)
        elif event.action == ev.ADJUDICATE:
            self.tasks[event.task_id].adjudication = Adjudication(
                annotator=event.annotator, value=event.value, seq=event.seq)
        else:  # pragma: no cover - AnnotationEvent already rejects these
            raise ValueError(f"unknown action {event.action!r}")


def replay(all_events: Iterable[ev.AnnotationEvent]) -> ServiceState:
    state = ServiceState()
    for event in all_events:
        state.apply(event)
    return state


def state_to_dict(state: ServiceState) -> dict:
    return {
        "annotators": {
            aid: {"name": rec.name, "role": rec.role}
            for aid, rec in sorted(state.annotators.items())
        },
        "tasks": {
            tid: {
                "candidate": candidate_to_dict(task.candidate),
                "pilot": task.pilot,
                "labels": [
                    {"annotator": e.annotator, "value": e.value,
                     "case_tag": e.case_tag, "seq": e.seq}
                    for e in task.labels
                ],
                "leases": {a: ts for a, ts in sorted(task.leases.items())},
                "adjudication": None if task.adjudication is None else {
                    "annotator": task.adjudication.annotator,
                    "value": task.adjudication.value,
                    "seq": task.adjudication.seq,
                },
            }
            for tid, task in sorted(state.tasks.items())
        },
    }


def state_from_dict(payload: dict) -> ServiceState:
    state = ServiceState()
    for aid, rec in payload["annotators"].items():
        state.annotators[aid] = AnnotatorRecord(annotator_id=aid, name=rec["name"],
                                                role=rec["role"])
    for tid, row in payload["tasks"].items():
        task = TaskRecord(task_id=tid, candidate=candidate_from_dict(row["candidate"]),
                          pilot=row["pilot"])
        task.labels = [LabelEntry(annotator=e["annotator"], value=e["value"],
                                  case_tag=e["case_tag"], seq=e["seq"])
                       for e in row["labels"]]
        task.leases = dict(row["leases"])
        if row["adjudication"] is not None:
            adj = row["adjudication"]
            task.adjudication = Adjudication(annotator=adj["annotator"],
                                             value=adj["value"], seq=adj["seq"])
        state.tasks[tid] = task
    return state
