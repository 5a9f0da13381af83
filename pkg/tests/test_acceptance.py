"""Release gate: every documented quantitative claim and core behavioural
contract, one test per claim, each at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v`` for one pass/fail line
per claim.  These tests intentionally overlap the per-module suites; the
point here is a single place where the published numbers and end-to-end
behaviour are checked together.
"""

import io
import json
import math
import os
import random
import time
from pathlib import Path

import httpx
import pytest

from ditrans.annotation import events as ev
from ditrans.annotation import state as st
from ditrans.annotation.service import AnnotationService, WorkflowError
from ditrans.cli import main
from ditrans.client import ChatBatch, EndpointConfig, classify_batches
from ditrans.corpus import (
    CandidateInstance,
    MatchSpan,
    TaggedSentence,
    TaggedToken,
    read_candidates,
)
from ditrans.dataset import (
    LabeledInstance,
    batched,
    build_batch_prompt,
    build_finetune_record,
    read_labeled,
    record_to_json_line,
    write_labeled,
)
from ditrans.kb import KnowledgeChunk, build_index, load_index, normalize_terms, \
    retrieve, serialize_index
from ditrans.query import match_sentence
from ditrans.rules import classify_rules, load_lexicon
from ditrans.stats import (
    PairedOutcome,
    bonferroni,
    chi2_sf_1df,
    cohens_kappa,
    f1_score,
    mcnemar,
)

from helpers_matching import oracle_matches, random_case

GOLDEN = Path(__file__).parent / "data" / "finetune_golden.jsonl"
TOY_CORPUS = Path(__file__).parent.parent / "src" / "ditrans" / "resources" / "toy" / "corpus.vrt"
TOY_GOLD = TOY_CORPUS.parent / "gold.jsonl"


def test_01_chi_square_tail_reproduces_published_values():
    published = [(46.68, 8.38e-12), (25.75, 3.88e-07), (6.11, 0.0134)]
    chi2_sf_1df(1.0)  # warm any lazy setup before timing
    start = time.perf_counter()
    computed = [chi2_sf_1df(x) for x, _ in published]
    elapsed = time.perf_counter() - start
    for (x, expected), got in zip(published, computed):
        assert abs(got - expected) / expected <= 0.02, (x, got, expected)
    assert elapsed < 0.001, f"three tail evaluations took {elapsed:.6f}s"


def test_02_f1_consistent_with_published_precision_recall():
    table = [((0.793, 0.974), 0.874), ((0.723, 0.895), 0.800),
             ((0.551, 0.474), 0.509)]
    for (precision, recall), expected in table:
        got = f1_score(precision, recall)
        assert got == pytest.approx(expected, abs=1e-3), (precision, recall, got)


def test_03_bonferroni_three_way_adjustment():
    assert bonferroni(0.05, 3) == pytest.approx(0.0166667, abs=1e-6)


def test_04_matcher_agrees_with_exhaustive_oracle():
    rng = random.Random(1187)
    start = time.perf_counter()
    disagreements = 0
    for _ in range(10_000):
        pattern, tags = random_case(rng, max_len=12, max_elements=5)
        sentence = TaggedSentence.from_tokens(
            "s", tuple(TaggedToken("w", t) for t in tags))
        got = [(m.start, m.end, m.element_spans)
               for m in match_sentence(pattern, sentence)]
        if got != oracle_matches(pattern, tags):
            disagreements += 1
    elapsed = time.perf_counter() - start
    assert disagreements == 0
    assert elapsed < 30, f"10,000 oracle comparisons took {elapsed:.1f}s"


def test_05_all_seven_guideline_sentences_reproduced():
    cases = [
        ("He sent her a letter", ["PNP", "VVD", "PNP", "AT0", "NN1"], 1),
        ("He sent a letter to her", ["PNP", "VVD", "AT0", "NN1", "PRP", "PNP"], 0),
        ("She awarded the student a medal",
         ["PNP", "VVD", "AT0", "NN1", "AT0", "NN1"], 1),
        ("She awarded the it a medal",
         ["PNP", "VVD", "AT0", "PNP", "AT0", "NN1"], 0),
        ("Give me the book", ["VVB", "PNP", "AT0", "NN1"], 1),
        ("Thank you , sir", ["VVB", "PNP", "PUN", "NN1"], 0),
        ("I 'll give her a call", ["PNP", "VM0", "VVI", "PNP", "AT0", "NN1"], 0),
    ]
    lexicon = load_lexicon()
    verdicts = []
    for text, tags, expected in cases:
        sentence = TaggedSentence.from_tokens(
            "g", tuple(TaggedToken(w, t) for w, t in zip(text.split(), tags)))
        verdicts.append(classify_rules(sentence, lexicon).label == expected)
    assert verdicts == [True] * 7, [c[0] for c, ok in zip(cases, verdicts) if not ok]


def test_06_training_record_matches_golden_bytes():
    text = "FACTSHEET BECOMING AN ACET HOME CARE VOLUNTEER"
    tokens = tuple(TaggedToken(w, "NN1") for w in text.split())
    sentence = TaggedSentence(id="golden", tokens=tokens, raw_text=text)
    instance = LabeledInstance(
        candidate=CandidateInstance(
            sentence=sentence, match=MatchSpan("golden", 0, 1, ((0, 1),))),
        gold_label=0)
    line = record_to_json_line(build_finetune_record(instance)) + "\n"
    assert line == GOLDEN.read_text(encoding="utf-8")


def test_07_five_hundred_sentences_make_exactly_fifty_requests(monkeypatch):
    monkeypatch.setenv("GATE_KEY", "sk-gate")
    sentences = []
    for n in range(500):
        tokens = (TaggedToken("sentence", "NN1"), TaggedToken("number", "NN1"),
                  TaggedToken(str(n), "CRD"))
        sent = TaggedSentence.from_tokens(f"s{n:04d}", tokens)
        sentences.append(CandidateInstance(
            sentence=sent, match=MatchSpan(sent.id, 0, 1, ((0, 1),))))

    requests_seen = []

    def handler(request: httpx.Request) -> httpx.Response:
        payload = json.loads(request.content)
        requests_seen.append(payload)
        lines = []
        for line in payload["messages"][1]["content"].splitlines():
            parts = line.split(". ", 1)
            if len(parts) == 2 and parts[0].isdigit():
                n = int(parts[1].split()[-1])
                lines.append(f"{parts[0]}. {n % 2}")
        content = "\n".join(lines)
        return httpx.Response(
            200, json={"choices": [{"message": {"content": content}}]})

    groups = batched(sentences, 10)
    batches = []
    for i, group in enumerate(groups, start=1):
        system, user = build_batch_prompt(group, 10)
        batches.append(ChatBatch(batch_id=i, system=system, user=user,
                                 expected_count=len(group)))
    config = EndpointConfig(base_url="https://stub.invalid/v1/chat/completions",
                            model_name="stub", credential_env_var="GATE_KEY")
    results = classify_batches(config, batches, io.StringIO(),
                               transport=httpx.MockTransport(handler))

    assert len(requests_seen) == 50
    assert not any(r.failed for r in results)
    flattened = [v.label for r in results for v in r.verdicts]
    assert flattened == [n % 2 for n in range(500)]


def test_08_retrieval_matches_brute_force_and_roundtrips():
    vocab = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf",
             "hotel", "india", "juliett", "kilo", "lima"]
    rng = random.Random(5150)

    def brute_force(chunks, query, k):
        terms = set(normalize_terms(query))
        scored = [(-len(terms & set(c.keywords)), c.chunk_id) for c in chunks
                  if terms & set(c.keywords)]
        return [cid for _, cid in sorted(scored)[:k]]

    queries_run = 0
    for round_no in range(10):
        chunks = []
        for i in range(rng.randint(1, 50)):
            words = rng.sample(vocab, rng.randint(2, 8))
            text = " ".join(words)
            chunks.append(KnowledgeChunk(
                chunk_id=f"d:{i:04d}", doc_id="d", text=text,
                keywords=tuple(sorted(set(words)))))
        index = build_index(chunks)
        for _ in range(100):
            query = " ".join(rng.sample(vocab, rng.randint(1, 5)))
            k = rng.randint(1, 6)
            got = [c.chunk_id for c in retrieve(index, query, k)]
            assert got == brute_force(chunks, query, k), (query, k)
            queries_run += 1
        first = serialize_index(index)
        again = serialize_index(load_index(first))
        assert first == again
    assert queries_run == 1000


def test_09_paired_test_and_agreement_properties():
    rng = random.Random(404)

    # symmetry: swapping the models swaps b and c, keeps statistic and p
    for _ in range(200):
        n = rng.randint(2, 200)
        b = rng.randint(0, n // 2)
        c = rng.randint(0, n - b)
        if b + c == 0:
            continue
        forward = mcnemar(PairedOutcome(b=b, c=c, n=n))
        backward = mcnemar(PairedOutcome(b=c, c=b, n=n))
        assert forward.statistic == backward.statistic
        assert forward.p_value == backward.p_value

    # exact variant against directly summed binomial tails, all b + c <= 10
    for total in range(0, 11):
        for b in range(total + 1):
            c = total - b
            got = mcnemar(PairedOutcome(b=b, c=c, n=20), variant="exact").p_value
            if total == 0:
                expected = 1.0
            else:
                k = min(b, c)
                tail = sum(math.comb(total, i) for i in range(k + 1)) * 0.5 ** total
                expected = min(1.0, 2 * tail) if b != c else 1.0
            assert got == pytest.approx(expected, abs=1e-12), (b, c)

    # agreement of a labeling with itself is perfect, and kappa is symmetric
    for _ in range(50):
        labels = [rng.randint(0, 1) for _ in range(rng.randint(1, 60))]
        other = [rng.randint(0, 1) for _ in labels]
        assert cohens_kappa(labels, labels) == 1.0
        assert cohens_kappa(labels, other) == cohens_kappa(other, labels)

    # the constructed 40/40/10/10 table
    a = [1] * 40 + [0] * 40 + [1] * 10 + [0] * 10
    b = [1] * 40 + [0] * 40 + [0] * 10 + [1] * 10
    assert cohens_kappa(a, b) == pytest.approx(0.600, abs=1e-9)


class _Clock:
    def __init__(self, now=1_700_000_000.0):
        self.now = now

    def time(self):
        return self.now


def _toy_candidate(i):
    tokens = (TaggedToken("She", "PNP"), TaggedToken("gave", "VVD"),
              TaggedToken("him", "PNP"), TaggedToken("a", "AT0"),
              TaggedToken(f"gift{i}", "NN1"), TaggedToken(".", "PUN"))
    sent = TaggedSentence.from_tokens(f"r{i:05d}", tokens)
    return CandidateInstance(sentence=sent,
                             match=MatchSpan(sent.id, 1, 5, ((1, 5),)))


def test_10_thousand_event_log_replays_to_identical_state():
    clock = _Clock()
    log = io.StringIO()
    service = AnnotationService(log, lease_timeout=60.0, clock=clock.time)
    rng = random.Random(99173)

    adjudicator = service.register_annotator("resolver", role="adjudicator")
    annotators = [service.register_annotator(f"worker-{i}") for i in range(5)]
    everyone = annotators + [adjudicator]

    made = 0
    guard = 0
    while service.last_seq < 1000 and guard < 30_000:
        guard += 1
        action = rng.random()
        clock.now += rng.choice([1.0, 2.0, 5.0, 90.0] if rng.random() < 0.1
                                else [1.0, 2.0, 5.0])
        try:
            if action < 0.08 or made == 0:
                service.load_candidates(
                    [_toy_candidate(made + j) for j in range(10)],
                    pilot_count=rng.randint(0, 10))
                made += 10
            elif action < 0.55:
                who = rng.choice(annotators)
                task = service.next_task(who)
                if task is not None and rng.random() < 0.85:
                    service.submit_label(
                        who, task.task_id, rng.randint(0, 1),
                        case_tag=rng.choice([None, "idiom", "animacy",
                                             "prep-dative", "no-transfer"]))
            elif action < 0.65:
                who = rng.choice(annotators)
                task = service.next_task(who)
                if task is not None:
                    service.release(who, task.task_id)
            elif action < 0.75:
                waiting, _ = service.list_tasks(state_filter="adjudicating",
                                                limit=5)
                if waiting:
                    service.adjudicate(adjudicator, waiting[0].task_id,
                                       rng.randint(0, 1))
            else:
                who = rng.choice(everyone)
                task = service.next_task(who)
                if task is not None and who != adjudicator:
                    service.submit_label(who, task.task_id, rng.randint(0, 1))
        except WorkflowError:
            pass

    assert service.last_seq >= 1000, f"only {service.last_seq} events generated"

    replayed = st.replay(ev.read_events(io.StringIO(log.getvalue())))
    assert st.state_to_dict(replayed) == service.state_dict()


def test_11_toy_corpus_pipeline_rehearsal(tmp_path):
    start = time.perf_counter()
    candidates = tmp_path / "candidates.jsonl"
    train = tmp_path / "train.jsonl"
    val = tmp_path / "val.jsonl"
    assert main(["extract", str(TOY_CORPUS), "--out", str(candidates)]) == 0
    assert main(["clean-split", str(candidates), "--train-n", "34",
                 "--val-n", "15", "--seed", "11", "--train-out", str(train),
                 "--val-out", str(val)]) == 0

    with open(val, encoding="utf-8") as f:
        val_ids = {c.sentence.id for c in read_candidates(f)}
    with open(TOY_GOLD, encoding="utf-8") as f:
        rows = [r for r in read_labeled(f) if r.candidate.sentence.id in val_ids]
    gold = tmp_path / "gold-val.jsonl"
    with open(gold, "w", encoding="utf-8") as f:
        write_labeled(rows, f)

    models = [("strong", "0.05", "3"), ("middling", "0.2", "5"),
              ("weak", "0.45", "7")]
    prediction_files = []
    for name, flip, seed in models:
        out = tmp_path / f"{name}.jsonl"
        assert main(["classify", str(val), "--engine", "mock",
                     "--truth", str(TOY_GOLD), "--flip-rate", flip,
                     "--mock-seed", seed, "--out", str(out)]) == 0
        prediction_files.append(str(out))

    report_md = tmp_path / "report.md"
    report_json = tmp_path / "report.json"
    assert main(["evaluate", "--gold", str(gold), *prediction_files,
                 "--report-out", str(report_md),
                 "--json-out", str(report_json)]) == 0

    payload = json.loads(report_json.read_text(encoding="utf-8"))
    assert len(payload["pairs"]) == 3
    assert payload["adjusted_alpha"] == pytest.approx(0.0166667, abs=1e-6)
    names = {p["model_a"] for p in payload["pairs"]} | \
        {p["model_b"] for p in payload["pairs"]}
    assert names == {"strong", "middling", "weak"}

    markdown = report_md.read_text(encoding="utf-8")
    assert "0.0167" in markdown
    assert markdown.count(" vs ") >= 3

    elapsed = time.perf_counter() - start
    assert elapsed < 10, f"pipeline rehearsal took {elapsed:.1f}s"
