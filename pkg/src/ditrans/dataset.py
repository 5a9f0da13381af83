"""Fine-tune record and batched-prompt construction.

The system prompt lives in resources/system_prompt.txt and is used
verbatim for both record building and batch classification prompts.  The
emitted JSONL schema is one object per line: {"messages": [{"role", and
"content"} x 3]} with roles system/user/assistant in that order.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from importlib import resources
from typing import Iterable, Sequence, TextIO

from .corpus import CandidateInstance, candidate_from_dict, candidate_to_dict

POSITIVE_ANSWER = "Double-object construction"
NEGATIVE_ANSWER = "Non-double-object construction"
USER_PREFIX = "Judge sentence: "
DEFAULT_BATCH_SIZE = 10

BATCH_FORMAT_INSTRUCTION = (
    "Answer with exactly one line per sentence, in the form \"<index>: 1\" "
    "if that sentence is a double-object construction and \"<index>: 0\" if it is not."
)


def system_prompt() -> str:
    return resources.files("ditrans.resources").joinpath("system_prompt.txt").read_text("utf-8")


@dataclass(frozen=True)
class LabeledInstance:
    candidate: CandidateInstance
    gold_label: int
    source: str = "imported"

    def __post_init__(self) -> None:
        if self.gold_label not in (0, 1):
            raise ValueError(f"gold_label must be 0 or 1, got {self.gold_label!r}")
        if self.source not in ("human-adjudicated", "imported"):
            raise ValueError(f"unknown label source {self.source!r}")


def labeled_to_dict(instance: LabeledInstance) -> dict:
    return {
        "candidate": candidate_to_dict(instance.candidate),
        "gold_label": instance.gold_label,
        "source": instance.source,
    }


def labeled_from_dict(row: dict) -> LabeledInstance:
    return LabeledInstance(candidate=candidate_from_dict(row["candidate"]),
                           gold_label=row["gold_label"], source=row["source"])


def write_labeled(instances: Iterable[LabeledInstance], stream: TextIO) -> int:
    count = 0
    for instance in instances:
        stream.write(json.dumps(labeled_to_dict(instance), ensure_ascii=False) + "\n")
        count += 1
    return count


def read_labeled(stream: TextIO) -> list[LabeledInstance]:
    out = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            out.append(labeled_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"bad labeled record on line {lineno}: {exc}") from exc
    return out


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass(frozen=True)
class FinetuneRecord:
    messages: tuple[Message, Message, Message]

    def __post_init__(self) -> None:
        roles = tuple(m.role for m in self.messages)
        if roles != ("system", "user", "assistant"):
            raise ValueError(f"roles must be system/user/assistant, got {roles}")
        if self.messages[0].content != system_prompt():
            raise ValueError("system message deviates from the canonical prompt")
        if not self.messages[1].content.startswith(USER_PREFIX):
            raise ValueError(f"user message must start with {USER_PREFIX!r}")
        if self.messages[2].content not in (POSITIVE_ANSWER, NEGATIVE_ANSWER):
            raise ValueError(f"bad assistant answer {self.messages[2].content!r}")


def build_finetune_record(instance: LabeledInstance) -> FinetuneRecord:
    answer = POSITIVE_ANSWER if instance.gold_label == 1 else NEGATIVE_ANSWER
    return FinetuneRecord(messages=(
        Message("system", system_prompt()),
        Message("user", USER_PREFIX + instance.candidate.sentence.raw_text),
        Message("assistant", answer),
    ))


def record_to_json_line(record: FinetuneRecord) -> str:
    payload = {"messages": [{"role": m.role, "content": m.content} for m in record.messages]}
    return json.dumps(payload, ensure_ascii=False)


def parse_finetune_line(line: str) -> FinetuneRecord:
    payload = json.loads(line)
    messages = tuple(Message(m["role"], m["content"]) for m in payload["messages"])
    if len(messages) != 3:
        raise ValueError(f"expected 3 messages, got {len(messages)}")
    return FinetuneRecord(messages=messages)


def write_finetune_records(instances: Iterable[LabeledInstance], stream: TextIO) -> int:
    count = 0
    for instance in instances:
        stream.write(record_to_json_line(build_finetune_record(instance)) + "\n")
        count += 1
    return count


def build_batch_prompt(instances: Sequence[CandidateInstance],
                       batch_size: int = DEFAULT_BATCH_SIZE) -> tuple[str, str]:
    """System and user texts for one classification batch of sentences."""
    if not instances:
        raise ValueError("empty batch")
    if len(instances) > batch_size:
        raise ValueError(f"batch of {len(instances)} exceeds the limit of {batch_size}")
    lines = [f"{i}. {inst.sentence.raw_text}" for i, inst in enumerate(instances, start=1)]
    user = "\n".join(lines) + "\n\n" + BATCH_FORMAT_INSTRUCTION
    return system_prompt(), user


def batched(instances: Sequence[CandidateInstance],
            batch_size: int = DEFAULT_BATCH_SIZE) -> list[Sequence[CandidateInstance]]:
    if batch_size < 1:
        raise ValueError("batch size must be positive")
    return [instances[i:i + batch_size] for i in range(0, len(instances), batch_size)]


@dataclass(frozen=True)
class FinetuneJobSpec:
    """Adapter-training configuration for submission to a training platform.

    Defaults are the tuned recipe this toolkit's classifier was trained
    with; emitting the document is this module's whole job, running the
    training is not.
    """

    base_model: str = "Qwen3-8B"
    r: int = 8
    alpha: int = 32
    dropout: float = 0.1
    learning_rate: float = 2e-4
    batch_size: int = 16
    eval_steps: int = 50
    lr_scheduler: str = "linear"
    max_sequence_length: int = 32768
    epochs: int = 5
    early_stop_epoch: int = 4
    warmup_ratio: float = 0.05
    weight_decay: float = 0.01

    def violations(self) -> list[str]:
        bad = []
        if not self.base_model:
            bad.append("base_model must be non-empty")
        for name in ("r", "alpha", "learning_rate", "batch_size", "eval_steps",
                     "max_sequence_length", "epochs", "early_stop_epoch", "weight_decay"):
            if getattr(self, name) <= 0:
                bad.append(f"{name} must be positive")
        if not 0 <= self.dropout < 1:
            bad.append("dropout must lie in [0, 1)")
        if not 0 <= self.warmup_ratio < 1:
            bad.append("warmup_ratio must lie in [0, 1)")
        if not self.lr_scheduler:
            bad.append("lr_scheduler must be non-empty")
        return bad


def emit_job_spec(spec: FinetuneJobSpec) -> str:
    problems = spec.violations()
    if problems:
        raise ValueError("invalid job spec: " + "; ".join(problems))
    return json.dumps(asdict(spec), indent=2) + "\n"


def load_job_spec(text: str) -> FinetuneJobSpec:
    payload = json.loads(text)
    known = {f.name for f in fields(FinetuneJobSpec)}
    unknown = set(payload) - known
    if unknown:
        raise ValueError(f"unknown job spec fields: {sorted(unknown)}")
    return FinetuneJobSpec(**payload)
