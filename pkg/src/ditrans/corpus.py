"""Tagged-sentence data carriers and corpus file I/O.

The ingest format is vertical text: a ``# id:`` comment line, then one
token per line as ``surface<TAB>tag``, with a blank line terminating each
sentence.  Candidate instances are serialized as JSON Lines with fields
``sentence_id``, ``raw_text``, ``tokens`` and ``match``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, TextIO


class CorpusFormatError(ValueError):
    """Raised for a vertical-format record that cannot be parsed at all."""


@dataclass(frozen=True)
class TaggedToken:
    surface: str
    tag: str

    def __post_init__(self) -> None:
        if not self.surface.strip():
            raise ValueError("token surface is empty")
        if not self.tag or not all(c.isalnum() and not c.islower() for c in self.tag):
            raise ValueError(f"bad POS tag {self.tag!r}: must be uppercase alphanumeric")


@dataclass(frozen=True)
class TaggedSentence:
    id: str
    tokens: tuple[TaggedToken, ...]
    raw_text: str

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError(f"sentence {self.id!r} has no tokens")

    @classmethod
    def from_tokens(cls, sentence_id: str, tokens: Iterable[TaggedToken]) -> "TaggedSentence":
        toks = tuple(tokens)
        return cls(id=sentence_id, tokens=toks, raw_text=" ".join(t.surface for t in toks))

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(t.tag for t in self.tokens)


@dataclass(frozen=True)
class MatchSpan:
    """A pattern match over ``[start, end)`` with the per-element tiling."""

    sentence_id: str
    start: int
    end: int
    element_spans: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"bad span [{self.start}, {self.end})")
        pos = self.start
        for lo, hi in self.element_spans:
            if lo != pos or hi < lo:
                raise ValueError("element spans must tile the match span contiguously")
            pos = hi
        if pos != self.end:
            raise ValueError("element spans do not cover the match span")


@dataclass(frozen=True)
class CandidateInstance:
    sentence: TaggedSentence
    match: MatchSpan


@dataclass
class IngestDiagnostics:
    """Counts of records skipped while reading a vertical corpus file."""

    sentences_read: int = 0
    records_skipped: int = 0
    problems: list[str] = field(default_factory=list)

    def skip(self, message: str) -> None:
        self.records_skipped += 1
        self.problems.append(message)


def read_vertical(stream: TextIO, diagnostics: IngestDiagnostics | None = None) -> Iterator[TaggedSentence]:
    """Yield sentences from a vertical-format stream, skipping malformed records.

    A record is the run of lines from one ``# id:`` header to the next blank
    line.  Records with a missing header, an unparseable token line, or no
    tokens are skipped and counted in ``diagnostics``.
    """
    diag = diagnostics if diagnostics is not None else IngestDiagnostics()
    current_id: str | None = None
    tokens: list[TaggedToken] = []
    broken = False
    auto_index = 0

    def flush() -> TaggedSentence | None:
        nonlocal current_id, tokens, broken
        sent: TaggedSentence | None = None
        if current_id is None and not tokens:
            pass  # empty gap between sentences
        elif broken:
            diag.skip(f"record {current_id or '<missing id>'} skipped: malformed line")
        elif current_id is None:
            diag.skip(f"record before line {auto_index} skipped: missing '# id:' header")
        elif not tokens:
            diag.skip(f"record {current_id} skipped: no tokens")
        else:
            sent = TaggedSentence.from_tokens(current_id, tokens)
            diag.sentences_read += 1
        current_id, tokens, broken = None, [], False
        return sent

    for lineno, line in enumerate(stream, start=1):
        auto_index = lineno
        line = line.rstrip("\n")
        if not line.strip():
            sent = flush()
            if sent is not None:
                yield sent
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("id:"):
                if current_id is not None or tokens:
                    sent = flush()
                    if sent is not None:
                        yield sent
                current_id = body[len("id:"):].strip()
            continue  # other comments are ignored
        parts = line.split("\t")
        if len(parts) != 2:
            broken = True
            continue
        surface, tag = parts[0].strip(), parts[1].strip()
        try:
            tokens.append(TaggedToken(surface, tag))
        except ValueError:
            broken = True
    sent = flush()
    if sent is not None:
        yield sent


def write_vertical(sentences: Iterable[TaggedSentence], stream: TextIO) -> None:
    for sent in sentences:
        stream.write(f"# id: {sent.id}\n")
        for tok in sent.tokens:
            stream.write(f"{tok.surface}\t{tok.tag}\n")
        stream.write("\n")


def candidate_to_dict(candidate: CandidateInstance) -> dict:
    return {
        "sentence_id": candidate.sentence.id,
        "raw_text": candidate.sentence.raw_text,
        "tokens": [{"surface": t.surface, "tag": t.tag} for t in candidate.sentence.tokens],
        "match": {"start": candidate.match.start, "end": candidate.match.end},
    }


def candidate_from_dict(row: dict) -> CandidateInstance:
    tokens = tuple(TaggedToken(t["surface"], t["tag"]) for t in row["tokens"])
    sentence = TaggedSentence(id=row["sentence_id"], tokens=tokens, raw_text=row["raw_text"])
    start, end = int(row["match"]["start"]), int(row["match"]["end"])
    span = MatchSpan(sentence_id=sentence.id, start=start, end=end, element_spans=((start, end),))
    return CandidateInstance(sentence=sentence, match=span)


def write_candidates(candidates: Iterable[CandidateInstance], stream: TextIO) -> int:
    count = 0
    for cand in candidates:
        stream.write(json.dumps(candidate_to_dict(cand), ensure_ascii=False) + "\n")
        count += 1
    return count


def read_candidates(stream: TextIO) -> list[CandidateInstance]:
    out = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            out.append(candidate_from_dict(json.loads(line)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise CorpusFormatError(f"bad candidate record on line {lineno}: {exc}") from exc
    return out
