"""Keyword-based retrieval over a markdown knowledge base.

Documents are chunked at paragraph boundaries, each chunk is reduced to
its ten most frequent content terms, and retrieval scores chunks by
distinct query-term overlap against an inverted index.  This is the
"economical" scheme: no embeddings, deterministic, auditable.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Sequence

KEYWORDS_PER_CHUNK = 10
DEFAULT_CHUNK_WORDS = 500
MIN_TERM_LENGTH = 3

_WORD = re.compile(r"[a-z]+")


def load_stopwords() -> frozenset[str]:
    text = resources.files("ditrans.resources").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(line.strip() for line in text.splitlines()
                     if line.strip() and not line.startswith("#"))


def normalize_terms(text: str) -> list[str]:
    """Lowercased alphabetic terms of length >= 3, in order of appearance."""
    return [w for w in _WORD.findall(text.lower()) if len(w) >= MIN_TERM_LENGTH]


@dataclass(frozen=True)
class KnowledgeChunk:
    chunk_id: str
    doc_id: str
    text: str
    keywords: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.keywords) > KEYWORDS_PER_CHUNK:
            raise ValueError(f"chunk {self.chunk_id} has {len(self.keywords)} keywords")
        if len(set(self.keywords)) != len(self.keywords):
            raise ValueError(f"chunk {self.chunk_id} has duplicate keywords")


def extract_keywords(text: str, stopwords: frozenset[str],
                     count: int = KEYWORDS_PER_CHUNK) -> tuple[str, ...]:
    """Top terms by in-chunk frequency, ties broken alphabetically."""
    counts = Counter(t for t in normalize_terms(text) if t not in stopwords)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(term for term, _ in ranked[:count])


def _paragraphs(markdown: str) -> list[str]:
    return [p.strip() for p in re.split(r"\n\s*\n", markdown) if p.strip()]


def chunk_documents(docs: Sequence[tuple[str, str]], stopwords: frozenset[str],
                    target_size: int = DEFAULT_CHUNK_WORDS) -> tuple[list[KnowledgeChunk], list[str]]:
    """Paragraph-aligned chunks of at most target_size words per document.

    A lone paragraph longer than the target is split at word boundaries.
    Returns (chunks, warnings); empty documents produce a warning.
    """
    if not docs:
        raise ValueError("no documents given")
    if target_size < 1:
        raise ValueError("target size must be positive")
    chunks: list[KnowledgeChunk] = []
    warnings: list[str] = []
    for doc_id, text in docs:
        pieces: list[str] = []
        for para in _paragraphs(text):
            words = para.split()
            if len(words) > target_size:
                pieces.extend(" ".join(words[i:i + target_size])
                              for i in range(0, len(words), target_size))
            else:
                pieces.append(para)
        if not pieces:
            warnings.append(f"document {doc_id} is empty; no chunks produced")
            continue
        grouped: list[list[str]] = [[]]
        used = 0
        for piece in pieces:
            n = len(piece.split())
            if grouped[-1] and used + n > target_size:
                grouped.append([])
                used = 0
            grouped[-1].append(piece)
            used += n
        for i, group in enumerate(grouped):
            body = "\n\n".join(group)
            chunks.append(KnowledgeChunk(
                chunk_id=f"{doc_id}:{i:04d}",
                doc_id=doc_id,
                text=body,
                keywords=extract_keywords(body, stopwords),
            ))
    return chunks, warnings


@dataclass(frozen=True)
class InvertedIndex:
    chunks: dict[str, KnowledgeChunk]
    postings: dict[str, tuple[str, ...]]

    def check_consistency(self) -> None:
        for keyword, ids in self.postings.items():
            if list(ids) != sorted(ids):
                raise ValueError(f"postings for {keyword!r} are not sorted")
            for cid in ids:
                if keyword not in self.chunks[cid].keywords:
                    raise ValueError(f"posting {keyword!r} -> {cid} has no matching keyword")
        for cid, chunk in self.chunks.items():
            for keyword in chunk.keywords:
                if cid not in self.postings.get(keyword, ()):
                    raise ValueError(f"keyword {keyword!r} of {cid} missing from postings")


def build_index(chunks: Iterable[KnowledgeChunk]) -> InvertedIndex:
    store: dict[str, KnowledgeChunk] = {}
    postings: dict[str, list[str]] = {}
    for chunk in chunks:
        if chunk.chunk_id in store:
            raise ValueError(f"duplicate chunk id {chunk.chunk_id}")
        store[chunk.chunk_id] = chunk
        for keyword in chunk.keywords:
            postings.setdefault(keyword, []).append(chunk.chunk_id)
    index = InvertedIndex(
        chunks=store,
        postings={k: tuple(sorted(ids)) for k, ids in postings.items()},
    )
    index.check_consistency()
    return index


def retrieve(index: InvertedIndex, query: str, k: int) -> list[KnowledgeChunk]:
    """Top-k chunks by distinct query-term overlap; zero scores never rank."""
    if k < 1:
        raise ValueError("k must be at least 1")
    terms = set(normalize_terms(query))
    scores: Counter[str] = Counter()
    for term in terms:
        for cid in index.postings.get(term, ()):
            scores[cid] += 1
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return [index.chunks[cid] for cid, score in ranked[:k] if score > 0]


REFERENCE_HEADER = "Reference excerpts:"


def augment_prompt(system: str, user: str, retrieved: Sequence[KnowledgeChunk],
                   budget: int = 1000) -> tuple[str, str]:
    """Append retrieved chunk texts to the system prompt, truncating on
    chunk boundaries at the word budget.  No retrieval, no change."""
    kept: list[str] = []
    used = 0
    for chunk in retrieved:
        n = len(chunk.text.split())
        if used + n > budget:
            break
        kept.append(chunk.text)
        used += n
    if not kept:
        return system, user
    return system + "\n\n" + REFERENCE_HEADER + "\n" + "\n\n".join(kept), user


def serialize_index(index: InvertedIndex) -> str:
    payload = {
        "chunks": {
            cid: {"doc_id": c.doc_id, "text": c.text, "keywords": list(c.keywords)}
            for cid, c in index.chunks.items()
        },
        "postings": {k: list(ids) for k, ids in index.postings.items()},
    }
    return json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


def load_index(text: str) -> InvertedIndex:
    payload = json.loads(text)
    chunks = {
        cid: KnowledgeChunk(chunk_id=cid, doc_id=c["doc_id"], text=c["text"],
                            keywords=tuple(c["keywords"]))
        for cid, c in payload["chunks"].items()
    }
    index = InvertedIndex(chunks=chunks,
                          postings={k: tuple(ids) for k, ids in payload["postings"].items()})
    index.check_consistency()
    return index
