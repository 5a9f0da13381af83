"""Chat-endpoint client for batched verdict requests, plus an offline mock.

Requests are plain chat-completion JSON ({model, messages, temperature});
the verdict text is read from the first choice's message content.  Every
request gets a transcript line (JSON Lines, append-only) written before
any parsing happens, so failed parses remain auditable.  The credential
is read from an environment variable and never written anywhere.
"""

from __future__ import annotations

import json
import math
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, TextIO

import httpx

from .dataset import NEGATIVE_ANSWER, POSITIVE_ANSWER
from .sampling import shuffled


class AuthenticationError(RuntimeError):
    """Credential missing or rejected; the whole run is aborted."""


class VerdictParseError(ValueError):
    pass


@dataclass(frozen=True)
class EndpointConfig:
    base_url: str
    model_name: str
    credential_env_var: str = "DITRANS_API_KEY"
    timeout: float = 60.0
    max_retries: int = 2
    max_concurrent_requests: int = 4
    temperature: float = 0.0
    backoff_base: float = 0.5

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.max_concurrent_requests < 1:
            raise ValueError("need at least one concurrent request slot")


@dataclass(frozen=True)
class ChatBatch:
    batch_id: int
    system: str
    user: str
    expected_count: int


@dataclass(frozen=True)
class Verdict:
    label: int
    raw_line: str


@dataclass(frozen=True)
class BatchResult:
    batch_id: int
    verdicts: tuple[Verdict, ...] = ()
    failed: bool = False
    error: str = ""

    def __post_init__(self) -> None:
        if not self.failed and not self.verdicts:
            raise ValueError("a successful batch needs verdicts")


_VERDICT_LINE = re.compile(r"^\s*(\d+)\s*[.:]\s*(.*?)\s*$")


def parse_verdicts(raw_response: str, expected_count: int) -> list[int]:
    """Map a response to labels for sentences 1..expected_count.

    Accepts "<index>: <0|1>" lines, or the class strings as a fallback.
    Indices must cover the batch exactly once.
    """
    if expected_count < 1:
        raise ValueError("expected_count must be at least 1")
    found: dict[int, int] = {}
    for lineno, line in enumerate(raw_response.splitlines(), start=1):
        if not line.strip():
            continue
        m = _VERDICT_LINE.match(line)
        if not m:
            raise VerdictParseError(f"line {lineno} is not a verdict line: {line!r}")
        index = int(m.group(1))
        token = m.group(2).rstrip(".")
        if token in ("0", "1"):
            label = int(token)
        elif token.casefold() == POSITIVE_ANSWER.casefold():
            label = 1
        elif token.casefold() == NEGATIVE_ANSWER.casefold():
            label = 0
        else:
            raise VerdictParseError(f"line {lineno} has an unknown verdict token: {line!r}")
        if index in found:
            raise VerdictParseError(f"line {lineno} repeats index {index}")
        if not 1 <= index <= expected_count:
            raise VerdictParseError(f"line {lineno} index {index} outside 1..{expected_count}")
        found[index] = label
    missing = [i for i in range(1, expected_count + 1) if i not in found]
    if missing:
        raise VerdictParseError(f"response covers {len(found)} of {expected_count} "
                                f"sentences; missing indices {missing}")
    return [found[i] for i in range(1, expected_count + 1)]


class _TranscriptWriter:
    """Serialized append-only JSONL writer shared across worker threads."""

    def __init__(self, stream: TextIO):
        self._stream = stream
        self._lock = threading.Lock()

    def write(self, record: dict) -> None:
        with self._lock:
            self._stream.write(json.dumps(record, ensure_ascii=False) + "\n")
            self._stream.flush()


def _request_one(client: httpx.Client, config: EndpointConfig, batch: ChatBatch,
                 transcript: _TranscriptWriter,
                 sleep: Callable[[float], None]) -> BatchResult:
    payload = {
        "model": config.model_name,
        "messages": [
            {"role": "system", "content": batch.system},
            {"role": "user", "content": batch.user},
        ],
        "temperature": config.temperature,
    }
    last_error = ""
    for attempt in range(config.max_retries + 1):
        if attempt:
            sleep(config.backoff_base * 2 ** (attempt - 1))
        record = {"batch_id": batch.batch_id, "attempt": attempt, "request": payload}
        try:
            response = client.post(config.base_url, json=payload)
        except httpx.HTTPError as exc:
            last_error = f"transport error: {exc}"
            record["error"] = last_error
            transcript.write(record)
            continue
        record["status"] = response.status_code
        record["response_text"] = response.text
        transcript.write(record)
        if response.status_code in (401, 403):
            raise AuthenticationError(f"endpoint rejected the credential "
                                      f"(HTTP {response.status_code})")
        if response.status_code == 429 or response.status_code >= 500:
            last_error = f"HTTP {response.status_code}"
            continue
        if response.status_code != 200:
            return BatchResult(batch_id=batch.batch_id, failed=True,
                               error=f"HTTP {response.status_code}")
        try:
            content = response.json()["choices"][0]["message"]["content"]
            labels = parse_verdicts(content, batch.expected_count)
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            return BatchResult(batch_id=batch.batch_id, failed=True,
                               error=f"unparseable response: {exc}")
        line_by_index = {}
        for line in content.splitlines():
            m = _VERDICT_LINE.match(line)
            if m:
                line_by_index[int(m.group(1))] = line.strip()
        verdicts = tuple(Verdict(label=labels[i - 1], raw_line=line_by_index[i])
                         for i in range(1, batch.expected_count + 1))
        return BatchResult(batch_id=batch.batch_id, verdicts=verdicts)
    return BatchResult(batch_id=batch.batch_id, failed=True,
                       error=f"gave up after {config.max_retries + 1} attempts: {last_error}")


def classify_batches(config: EndpointConfig, batches: Sequence[ChatBatch],
                     transcript_stream: TextIO,
                     transport: Optional[httpx.BaseTransport] = None,
                     sleep: Callable[[float], None] = time.sleep) -> list[BatchResult]:
    """Send all batches with bounded concurrency; results in batch order."""
    if not batches:
        return []
    credential = os.environ.get(config.credential_env_var, "")
    if not credential:
        raise AuthenticationError(
            f"no credential in environment variable {config.credential_env_var}")
    writer = _TranscriptWriter(transcript_stream)
    headers = {"Authorization": f"Bearer {credential}"}
    with httpx.Client(timeout=config.timeout, headers=headers, transport=transport) as client:
        with ThreadPoolExecutor(max_workers=config.max_concurrent_requests) as pool:
            futures = [pool.submit(_request_one, client, config, b, writer, sleep)
                       for b in batches]
            return [f.result() for f in futures]


class MockClassifier:
    """Deterministic stand-in for a remote model.

    Labels come from a truth table; a seeded subset of exactly
    floor(flip_rate * table size) sentences gets its label inverted, so a
    target accuracy can be staged for pipeline rehearsals.
    """

    def __init__(self, truth_table: Mapping[str, int], flip_rate: float = 0.0,
                 seed: int = 0, on_unknown: Optional[int] = None):
        if not 0 <= flip_rate <= 1:
            raise ValueError("flip_rate must lie in [0, 1]")
        for text, label in truth_table.items():
            if label not in (0, 1):
                raise ValueError(f"bad label {label!r} for {text!r}")
        self._table = dict(truth_table)
        self._on_unknown = on_unknown
        n_flips = math.floor(flip_rate * len(self._table))
        self.flipped = frozenset(shuffled(sorted(self._table), seed)[:n_flips])

    def classify(self, texts: Sequence[str]) -> list[int]:
        out = []
        for text in texts:
            if text not in self._table:
                if self._on_unknown is None:
                    raise KeyError(f"sentence not in truth table: {text!r}")
                out.append(self._on_unknown)
                continue
            label = self._table[text]
            out.append(1 - label if text in self.flipped else label)
        return out
