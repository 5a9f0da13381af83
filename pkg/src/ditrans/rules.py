"""Deterministic double-object classifier over tagged sentences.

Encodes the annotation criteria as ordered checks: a formal
verb + recipient + theme match without preposition marking, then question,
clause-status, verb-semantics, recipient-animacy, and idiom filters.  The
verdict carries every triggered rule code so each label can be audited.
Heuristics only: no parsing, so clause status and animacy are approximate
by design.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .corpus import TaggedSentence

MATCHED_FORM = "MATCHED-FORM"
NO_FORM_MATCH = "NO-FORM-MATCH"
QUESTION = "QUESTION"
SUBORDINATE = "SUBORDINATE"
FRAGMENT = "FRAGMENT"
NONFINITE = "NONFINITE"
PREP_DATIVE = "PREP-DATIVE"
VERB_NOT_TRANSFER = "VERB-NOT-TRANSFER"
INANIMATE_RECIPIENT = "INANIMATE-RECIPIENT"
IDIOM = "IDIOM"
IMPERATIVE_OK = "IMPERATIVE-OK"

DISQUALIFIERS = frozenset({
    NO_FORM_MATCH, QUESTION, SUBORDINATE, FRAGMENT, NONFINITE,
    PREP_DATIVE, VERB_NOT_TRANSFER, INANIMATE_RECIPIENT, IDIOM,
})

_DETERMINERS = frozenset({"AT0", "DPS", "DT0"})
_NP_MODIFIERS = frozenset({"AJ0", "AV0", "ORD", "CRD", "DT0"})
_NP_HEADS = frozenset({"NN0", "NN1", "NN2", "NP0", "PNP", "PNI"})
_PREPOSITIONS = frozenset({"PRP", "PRF", "TO0"})
_FINITE_LEXICAL = frozenset({"VVB", "VVD", "VVZ"})
_SUBJECT_TAGS = frozenset({"PNP", "PNI", "PNQ", "NP0", "NN0", "NN1", "NN2"})
# Tags that open a direct question: wh-words plus finite auxiliaries/modals.
_QUESTION_OPENERS = frozenset({
    "AVQ", "DTQ", "PNQ", "VM0",
    "VBB", "VBD", "VBZ", "VDB", "VDD", "VDZ", "VHB", "VHD", "VHZ",
})
_SUBORDINATOR_TAGS = frozenset({"CJS", "CJT"})
# Words that subordinate almost regardless of tagging.
_SUBORDINATOR_WORDS = frozenset({
    "if", "because", "although", "though", "unless", "whether", "provided",
})
_ANIMATE_PRONOUNS_PNI = frozenset({
    "one", "someone", "anyone", "everyone", "no-one", "noone",
    "somebody", "anybody", "everybody", "nobody",
})

IRREGULAR_VERBS = {
    "gave": "give", "given": "give",
    "sent": "send", "lent": "lend", "paid": "pay",
    "threw": "throw", "thrown": "throw",
    "shot": "shoot", "made": "make", "built": "build",
    "told": "tell", "taught": "teach", "shown": "show",
    "wrote": "write", "written": "write", "brought": "bring",
    "said": "say", "sang": "sing", "sung": "sing",
    "took": "take", "taken": "take", "got": "get", "gotten": "get",
    "came": "come", "went": "go", "found": "find", "bought": "buy",
    "sold": "sell", "saw": "see", "seen": "see", "knew": "know",
    "known": "know", "left": "leave", "kept": "keep", "felt": "feel",
    "held": "hold", "meant": "mean", "met": "meet", "ran": "run",
    "sat": "sit", "spoke": "speak", "spoken": "speak", "stood": "stand",
    "thought": "think", "won": "win", "drew": "draw", "drawn": "draw",
    "wore": "wear", "worn": "wear", "chose": "choose", "chosen": "choose",
    # regular verbs whose -ed/-ing stems defeat the e-restoration rule
    "donated": "donate", "donating": "donate",
    "promised": "promise", "promising": "promise",
    "guaranteed": "guarantee", "guaranteeing": "guarantee",
}

_VOWELS = set("aeiou")
# Letters that commonly double before -ed/-ing; ss/ll/ff/zz stay doubled.
_UNDOUBLE = set("bdgmnprt")


def _restore_stem(stem: str) -> str:
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] in _UNDOUBLE:
        return stem[:-1]
    if (len(stem) <= 4 and len(stem) >= 3
            and stem[-1] not in _VOWELS and stem[-1] not in "wxy"
            and stem[-2] in _VOWELS and stem[-3] not in _VOWELS):
        return stem + "e"
    return stem


def lemmatize_verb(surface: str, tag: str) -> str:
    """Best-effort verb lemma: irregular table first, then regular
    -s/-ed/-ing stripping with undoubling and e-restoration.  Unknown
    forms come back unchanged."""
    word = surface.lower()
    if word in IRREGULAR_VERBS:
        return IRREGULAR_VERBS[word]
    if not tag.startswith("V"):
        return word
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("ied") and len(word) > 4:
        return word[:-3] + "y"
    for suffix in ("ing", "ed"):
        if word.endswith(suffix) and len(word) - len(suffix) >= 3:
            return _restore_stem(word[:-len(suffix)])
    if word.endswith("es") and len(word) > 4 and word[-3] in "sxz" or \
            word.endswith(("ches", "shes")):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 3:
        return word[:-1]
    return word


def _singular_noun(surface: str) -> str:
    word = surface.lower()
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and len(word) > 4 and (word[-3] in "sxz" or word.endswith(("ches", "shes"))):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 3:
        return word[:-1]
    return word


@dataclass(frozen=True)
class VerbLexicon:
    classes: dict[str, frozenset[str]]
    excluded: frozenset[str]
    idioms: frozenset[tuple[str, str]]
    animate_nouns: frozenset[str]
    checksum: str = ""

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for name, members in self.classes.items():
            overlap = seen & members
            if overlap:
                raise ValueError(f"lemma(s) {sorted(overlap)} appear in more than one class")
            seen |= members
        bad = self.excluded & seen
        if bad:
            raise ValueError(f"excluded lemma(s) {sorted(bad)} also appear in a class")

    def verb_class(self, lemma: str) -> Optional[str]:
        for name, members in self.classes.items():
            if lemma in members:
                return name
        return None


def load_lexicon(path: Optional[Path] = None) -> VerbLexicon:
    if path is None:
        raw = resources.files("ditrans.resources").joinpath("lexicon.json").read_bytes()
    else:
        raw = Path(path).read_bytes()
    payload = json.loads(raw.decode("utf-8"))
    return VerbLexicon(
        classes={name: frozenset(members) for name, members in payload["classes"].items()},
        excluded=frozenset(payload["excluded"]),
        idioms=frozenset((v, n) for v, n in payload["idioms"]),
        animate_nouns=frozenset(w.lower() for w in payload["animate_nouns"]),
        checksum=hashlib.sha256(raw).hexdigest(),
    )


@dataclass(frozen=True)
class RuleConfig:
    max_gap: int = 3
    extra_animate: frozenset[str] = frozenset()
    extra_idioms: frozenset[tuple[str, str]] = frozenset()


@dataclass(frozen=True)
class RuleVerdict:
    label: int
    reasons: tuple[str, ...]

    def __post_init__(self) -> None:
        positive = MATCHED_FORM in self.reasons and not (set(self.reasons) & DISQUALIFIERS)
        if self.label != (1 if positive else 0):
            raise ValueError(f"label {self.label} contradicts reasons {self.reasons}")


@dataclass(frozen=True)
class _FormMatch:
    verb_idx: int
    recipient_head: int
    recipient_end: int
    theme_head: int


def _parse_np(sentence: TaggedSentence, start: int) -> Optional[tuple[int, int]]:
    """Parse determiner+modifiers+head from `start`; (head_idx, end_idx) or None."""
    tags = sentence.tags
    i = start
    if i < len(tags) and tags[i] in _DETERMINERS:
        i += 1
    while i < len(tags) and tags[i] in _NP_MODIFIERS:
        i += 1
    if i < len(tags) and tags[i] in _NP_HEADS:
        return i, i + 1
    return None


def _find_form(sentence: TaggedSentence, max_gap: int) -> tuple[Optional[_FormMatch], Optional[str]]:
    """Leftmost verb with recipient and theme noun phrases.

    Returns (match, None) on success, (None, PREP_DATIVE) when the only
    parse has a preposition where the second object should sit, and
    (None, NO_FORM_MATCH) otherwise.
    """
    tags = sentence.tags
    saw_prep_dative = False
    for v, tag in enumerate(tags):
        if not tag.startswith("VV"):
            continue
        after = v + 1
        if after < len(tags) and tags[after] in _PREPOSITIONS:
            saw_prep_dative = True
            continue
        recipient = _parse_np(sentence, after)
        if recipient is None:
            continue
        rec_head, rec_end = recipient
        k = rec_end
        skipped = 0
        while k < len(tags) and skipped <= max_gap:
            if tags[k] in _PREPOSITIONS:
                saw_prep_dative = True
                break
            if tags[k].startswith("VV"):
                break  # another lexical verb ends this verb's argument domain
            theme = _parse_np(sentence, k)
            if theme is not None:
                return _FormMatch(verb_idx=v, recipient_head=rec_head,
                                  recipient_end=rec_end, theme_head=theme[0]), None
            k += 1
            skipped += 1
    return None, PREP_DATIVE if saw_prep_dative else NO_FORM_MATCH


def _is_question(sentence: TaggedSentence) -> bool:
    if sentence.tokens[-1].surface == "?":
        return True
    return sentence.tokens[0].tag in _QUESTION_OPENERS


def _is_subordinate(sentence: TaggedSentence, verb_idx: int) -> bool:
    tags = sentence.tags
    for j in range(verb_idx):
        word = sentence.tokens[j].surface.lower()
        if tags[j] in _SUBORDINATOR_TAGS or word in _SUBORDINATOR_WORDS:
            # cleared only by a finite lexical verb between here and the
            # candidate; auxiliaries ("does", "will") do not close a clause
            if not any(tags[k] in _FINITE_LEXICAL for k in range(j + 1, verb_idx)):
                return True
    return False


def _recipient_is_animate(sentence: TaggedSentence, head_idx: int,
                          lexicon: VerbLexicon, config: RuleConfig) -> bool:
    token = sentence.tokens[head_idx]
    word = token.surface.lower()
    if token.tag == "PNP":
        return word not in ("it", "itself")
    if token.tag == "PNI":
        return word in _ANIMATE_PRONOUNS_PNI
    if token.tag == "NP0":
        return True
    return word in lexicon.animate_nouns or word in config.extra_animate or \
        _singular_noun(word) in lexicon.animate_nouns


def classify_rules(sentence: TaggedSentence, lexicon: VerbLexicon,
                   config: RuleConfig = RuleConfig()) -> RuleVerdict:
    reasons: list[str] = []
    form, failure = _find_form(sentence, config.max_gap)
    if form is None:
        return RuleVerdict(label=0, reasons=(failure,))
    reasons.append(MATCHED_FORM)

    if _is_question(sentence):
        reasons.append(QUESTION)

    verb_token = sentence.tokens[form.verb_idx]
    verb_tag = verb_token.tag
    if verb_tag in ("VVG", "VVN") or \
            (verb_tag == "VVI" and form.verb_idx > 0 and sentence.tags[form.verb_idx - 1] == "TO0"):
        reasons.append(NONFINITE)
    if form.verb_idx == 0:
        if verb_tag == "VVB":
            reasons.append(IMPERATIVE_OK)
        else:
            reasons.append(FRAGMENT)
    else:
        if not any(t in _SUBJECT_TAGS for t in sentence.tags[:form.verb_idx]):
            reasons.append(FRAGMENT)
        if _is_subordinate(sentence, form.verb_idx):
            reasons.append(SUBORDINATE)

    lemma = lemmatize_verb(verb_token.surface, verb_tag)
    if lemma in lexicon.excluded or lexicon.verb_class(lemma) is None:
        reasons.append(VERB_NOT_TRANSFER)

    if not _recipient_is_animate(sentence, form.recipient_head, lexicon, config):
        reasons.append(INANIMATE_RECIPIENT)

    theme = _singular_noun(sentence.tokens[form.theme_head].surface)
    if (lemma, theme) in lexicon.idioms or (lemma, theme) in config.extra_idioms:
        reasons.append(IDIOM)

    label = 1 if not (set(reasons) & DISQUALIFIERS) else 0
    return RuleVerdict(label=label, reasons=tuple(reasons))


def primary_reason(verdict: RuleVerdict) -> Optional[str]:
    """First disqualifying code, if any; used to seed error-taxonomy tags."""
    for code in verdict.reasons:
        if code in DISQUALIFIERS:
            return code
    return None
