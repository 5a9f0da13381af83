"""Append-only event log backing the annotation workflow.

Every state change is one JSON line; the current state is a pure fold
over the lines (see state.py), so the log is the whole database and a
replay is the recovery procedure.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Optional, TextIO

REGISTER = "register"
CREATE = "create"
LEASE = "lease"
LABEL = "label"
RELEASE = "release"
ADJUDICATE = "adjudicate"

ACTIONS = frozenset({REGISTER, CREATE, LEASE, LABEL, RELEASE, ADJUDICATE})

CASE_TAGS = frozenset({"prep-dative", "animacy", "no-transfer", "idiom"})

ROLES = frozenset({"annotator", "adjudicator"})


@dataclass(frozen=True)
class AnnotationEvent:
    seq: int
    ts: float
    action: str
    annotator: str = ""
    task_id: str = ""
    value: Optional[int] = None
    case_tag: Optional[str] = None
    payload: Optional[dict] = None

    def __post_init__(self) -> None:
        if self.seq < 1:
            raise ValueError(f"sequence numbers start at 1, got {self.seq}")
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")
        if self.value not in (None, 0, 1):
            raise ValueError(f"label value must be 0 or 1, got {self.value!r}")
        if self.case_tag is not None and self.case_tag not in CASE_TAGS:
            raise ValueError(f"unknown case tag {self.case_tag!r}")
        if self.action in (LABEL, ADJUDICATE) and self.value is None:
            raise ValueError(f"{self.action} event needs a value")


def event_to_dict(event: AnnotationEvent) -> dict:
    return {
        "seq": event.seq,
        "ts": event.ts,
        "action": event.action,
        "annotator": event.annotator,
        "task_id": event.task_id,
        "value": event.value,
        "case_tag": event.case_tag,
        "payload": event.payload,
    }


def event_from_dict(row: dict) -> AnnotationEvent:
    return AnnotationEvent(
        seq=row["seq"], ts=row["ts"], action=row["action"],
        annotator=row.get("annotator", ""), task_id=row.get("task_id", ""),
        value=row.get("value"), case_tag=row.get("case_tag"),
        payload=row.get("payload"),
    )


class EventLog:
    """Writer enforcing strictly increasing sequence numbers."""

    def __init__(self, stream: TextIO, last_seq: int = 0):
        self._stream = stream
        self.last_seq = last_seq

    def append(self, event: AnnotationEvent) -> None:
        if event.seq <= self.last_seq:
            raise ValueError(f"sequence {event.seq} does not follow {self.last_seq}")
        self._stream.write(json.dumps(event_to_dict(event), ensure_ascii=False) + "\n")
        self._stream.flush()
        self.last_seq = event.seq


def read_events(stream: TextIO) -> list[AnnotationEvent]:
    events: list[AnnotationEvent] = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            event = event_from_dict(json.loads(line))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad event on line {lineno}: {exc}") from exc
        if events and event.seq <= events[-1].seq:
            raise ValueError(f"line {lineno}: sequence {event.seq} does not "
                             f"follow {events[-1].seq}")
        events.append(event)
    return events


def write_events(events: Iterable[AnnotationEvent], stream: TextIO) -> int:
    log = EventLog(stream)
    count = 0
    for event in events:
        log.append(event)
        count += 1
    return count
