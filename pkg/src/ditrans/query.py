"""Tag-pattern query language: parsing, matching, candidate extraction.

The grammar is `pattern := element+` where an element is `_TAG` (exact
tag), `_PREFIX*` (tag prefix), `(alt|alt|...)` (alternation of the two
forms), or a bare `*` (a bounded gap of arbitrary tokens).  Example, the
double-object query over CLAWS5 tags::

    _VV* (_PN*|_NP0) * _NN*

Matching is non-greedy: for a fixed start position only the match with the
shortest total gap consumption is reported; ties between tilings of equal
total length resolve to the one whose earlier gaps are shortest.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

from .corpus import CandidateInstance, IngestDiagnostics, MatchSpan, TaggedSentence

DEFAULT_MAX_GAP = 3


class PatternSyntaxError(ValueError):
    """Syntax error in a tag pattern, with the character offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class TagLiteral:
    tag: str

    def matches(self, tag: str) -> bool:
        return tag == self.tag


@dataclass(frozen=True)
class TagPrefix:
    prefix: str

    def matches(self, tag: str) -> bool:
        return tag.startswith(self.prefix)


@dataclass(frozen=True)
class Alternation:
    branches: tuple[Union[TagLiteral, TagPrefix], ...]

    def matches(self, tag: str) -> bool:
        return any(b.matches(tag) for b in self.branches)


@dataclass(frozen=True)
class Gap:
    min: int
    max: int


Element = Union[TagLiteral, TagPrefix, Alternation, Gap]


@dataclass(frozen=True)
class TagPattern:
    elements: tuple[Element, ...]

    def __post_init__(self) -> None:
        if not any(not isinstance(e, Gap) for e in self.elements):
            raise ValueError("pattern needs at least one non-gap element")
        for a, b in zip(self.elements, self.elements[1:]):
            if isinstance(a, Gap) and isinstance(b, Gap):
                raise ValueError("adjacent gaps are not allowed")
        for e in self.elements:
            if isinstance(e, Alternation) and not e.branches:
                raise ValueError("empty alternation")


_TAG_CHARS = frozenset("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789")


def _scan_tag_element(source: str, pos: int) -> tuple[Union[TagLiteral, TagPrefix], int]:
    """Scan `_TAG` or `_PREFIX*` starting at the `_` sigil."""
    assert source[pos] == "_"
    i = pos + 1
    while i < len(source) and source[i] in _TAG_CHARS:
        i += 1
    body = source[pos + 1:i]
    if not body:
        raise PatternSyntaxError("expected a tag after '_'", pos)
    if i < len(source) and source[i] == "*":
        return TagPrefix(body), i + 1
    return TagLiteral(body), i


def parse_pattern(source: str, max_gap: int = DEFAULT_MAX_GAP) -> TagPattern:
    """Parse a query string into a TagPattern.

    A bare ``*`` becomes ``Gap(0, max_gap)``.  Raises PatternSyntaxError
    with the character offset for unbalanced parentheses, empty
    alternation branches, adjacent gaps, or a missing ``_`` sigil.
    """
    if not source.strip():
        raise PatternSyntaxError("empty pattern", 0)
    elements: list[Element] = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "_":
            elem, i = _scan_tag_element(source, i)
            elements.append(elem)
        elif ch == "*":
            if elements and isinstance(elements[-1], Gap):
                raise PatternSyntaxError("adjacent gaps", i)
            elements.append(Gap(0, max_gap))
            i += 1
        elif ch == "(":
            open_at = i
            i += 1
            branches: list[Union[TagLiteral, TagPrefix]] = []
            expect_branch = True
            while True:
                if i >= n:
                    raise PatternSyntaxError("unbalanced parenthesis", open_at)
                ch = source[i]
                if ch.isspace():
                    i += 1
                elif ch == "_":
                    if not expect_branch:
                        raise PatternSyntaxError("expected '|' or ')'", i)
                    branch, i = _scan_tag_element(source, i)
                    branches.append(branch)
                    expect_branch = False
                elif ch == "|":
                    if expect_branch:
                        raise PatternSyntaxError("empty alternation branch", i)
                    expect_branch = True
                    i += 1
                elif ch == ")":
                    if expect_branch:
                        raise PatternSyntaxError("empty alternation branch", i)
                    i += 1
                    break
                else:
                    raise PatternSyntaxError(f"unexpected character {ch!r} in alternation", i)
            elements.append(Alternation(tuple(branches)))
        elif ch == ")":
            raise PatternSyntaxError("unbalanced parenthesis", i)
        else:
            raise PatternSyntaxError(f"unexpected character {ch!r}; tags need a '_' sigil", i)
    if not elements:
        raise PatternSyntaxError("empty pattern", 0)
    try:
        return TagPattern(tuple(elements))
    except ValueError as exc:
        raise PatternSyntaxError(str(exc), 0) from exc


def render_pattern(pattern: TagPattern) -> str:
    """Render a pattern back to query syntax (inverse of parse_pattern
    for any fixed max_gap)."""
    parts = []
    for e in pattern.elements:
        if isinstance(e, TagLiteral):
            parts.append(f"_{e.tag}")
        elif isinstance(e, TagPrefix):
            parts.append(f"_{e.prefix}*")
        elif isinstance(e, Alternation):
            inner = "|".join(f"_{b.tag}" if isinstance(b, TagLiteral) else f"_{b.prefix}*" for b in e.branches)
            parts.append(f"({inner})")
        else:
            parts.append("*")
    return " ".join(parts)


def _tilings_at(elements: Sequence[Element], tags: Sequence[str], start: int) -> Iterator[tuple[tuple[int, ...], tuple[tuple[int, int], ...]]]:
    """Yield every (gap_lengths, element_spans) tiling of a full match at
    `start`, in lexicographic gap order."""

    spans: list[tuple[int, int]] = []
    gaps: list[int] = []

    def walk(idx: int, pos: int) -> Iterator[tuple[tuple[int, ...], tuple[tuple[int, int], ...]]]:
        if idx == len(elements):
            yield tuple(gaps), tuple(spans)
            return
        elem = elements[idx]
        if isinstance(elem, Gap):
            for g in range(elem.min, elem.max + 1):
                if pos + g > len(tags):
                    break
                spans.append((pos, pos + g))
                gaps.append(g)
                yield from walk(idx + 1, pos + g)
                spans.pop()
                gaps.pop()
        else:
            if pos < len(tags) and elem.matches(tags[pos]):
                spans.append((pos, pos + 1))
                yield from walk(idx + 1, pos + 1)
                spans.pop()

    yield from walk(0, start)


def match_sentence(pattern: TagPattern, sentence: TaggedSentence) -> list[MatchSpan]:
    """Return one MatchSpan per start position where the pattern matches.

    Per start, the reported span is the one with the least total gap
    consumption (shortest match); matches at distinct starts may overlap.
    """
    tags = sentence.tags
    out: list[MatchSpan] = []
    for start in range(len(tags)):
        best: tuple[int, tuple[int, ...], tuple[tuple[int, int], ...]] | None = None
        for gaps, spans in _tilings_at(pattern.elements, tags, start):
            key = (sum(gaps), gaps, spans)
            if best is None or key < best:
                best = key
        if best is not None:
            spans = best[2]
            end = spans[-1][1]
            out.append(MatchSpan(sentence_id=sentence.id, start=start, end=end, element_spans=spans))
    return out


def extract_candidates(
    pattern: TagPattern,
    corpus: Iterable[TaggedSentence],
    diagnostics: IngestDiagnostics | None = None,
) -> Iterator[CandidateInstance]:
    """Emit one CandidateInstance per matched sentence, in input order.

    A sentence with several matches contributes its leftmost match only;
    the corpus samples sentences, not spans.
    """
    for sentence in corpus:
        spans = match_sentence(pattern, sentence)
        if spans:
            yield CandidateInstance(sentence=sentence, match=spans[0])
