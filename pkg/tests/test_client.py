"""Endpoint client behaviour over a fake transport, and the offline mock."""

import io
import json
import math

import httpx
import pytest

from ditrans.client import (
    AuthenticationError,
    BatchResult,
    ChatBatch,
    EndpointConfig,
    MockClassifier,
    VerdictParseError,
    classify_batches,
    parse_verdicts,
)

KEY_VAR = "DITRANS_TEST_KEY"
SECRET = "sk-test-9f2c7a"


def config(**overrides):
    defaults = dict(base_url="https://example.test/v1/chat/completions",
                    model_name="judge-8b", credential_env_var=KEY_VAR)
    defaults.update(overrides)
    return EndpointConfig(**defaults)


def batch(batch_id, count):
    return ChatBatch(batch_id=batch_id, system="classify each sentence",
                     user=f"{batch_id} {count}", expected_count=count)


def chat_response(content, status=200):
    return httpx.Response(status, json={"choices": [{"message": {"content": content}}]})


def alternating_handler(request):
    payload = json.loads(request.content)
    batch_id, count = (int(x) for x in payload["messages"][1]["content"].split())
    lines = "\n".join(f"{i}: {(batch_id + i) % 2}" for i in range(1, count + 1))
    return chat_response(lines)


def run(batches, handler, transcript=None, **overrides):
    sleeps = []
    results = classify_batches(config(**overrides), batches,
                               transcript or io.StringIO(),
                               transport=httpx.MockTransport(handler),
                               sleep=sleeps.append)
    return results, sleeps


@pytest.fixture(autouse=True)
def credential(monkeypatch):
    monkeypatch.setenv(KEY_VAR, SECRET)


# --- parsing ---

def test_parse_plain_index_lines():
    assert parse_verdicts("1: 1\n2: 0\n3: 1", 3) == [1, 0, 1]


def test_parse_accepts_period_separator_and_trailing_period():
    assert parse_verdicts("1. 0\n2. 1.", 2) == [0, 1]


def test_parse_accepts_class_strings_any_case():
    text = ("1: Double-object construction\n"
            "2: non-double-object construction.\n")
    assert parse_verdicts(text, 2) == [1, 0]


def test_parse_handles_out_of_order_lines_and_blanks():
    assert parse_verdicts("\n3: 1\n\n1: 0\n2: 0\n", 3) == [0, 0, 1]


@pytest.mark.parametrize("text,fragment", [
    ("1: 1\n1: 0", "repeats"),
    ("1: 1", "missing"),
    ("1: 1\n2: 0\n3: 1", "outside"),
    ("1: maybe\n2: 0", "unknown"),
    ("no colon here", "not a verdict"),
    ("1: 2\n2: 0", "unknown"),
], ids=["duplicate", "gap", "overrun", "stray-word", "shapeless", "stray-digit"])
def test_parse_rejects_malformed_responses(text, fragment):
    expected = 2
    with pytest.raises(VerdictParseError, match=fragment):
        parse_verdicts(text, expected)


def test_parse_requires_positive_expected_count():
    with pytest.raises(ValueError):
        parse_verdicts("1: 1", 0)


# --- request shape and credentials ---

def test_request_carries_model_messages_temperature_only():
    seen = []

    def handler(request):
        seen.append((dict(request.headers), json.loads(request.content)))
        return alternating_handler(request)

    run([batch(1, 2)], handler, temperature=0.25)
    headers, payload = seen[0]
    assert set(payload) == {"model", "messages", "temperature"}
    assert payload["model"] == "judge-8b"
    assert payload["temperature"] == 0.25
    assert [m["role"] for m in payload["messages"]] == ["system", "user"]
    assert headers["authorization"] == f"Bearer {SECRET}"


def test_missing_credential_aborts_before_any_request(monkeypatch):
    monkeypatch.delenv(KEY_VAR)
    calls = []

    def handler(request):
        calls.append(request)
        return alternating_handler(request)

    with pytest.raises(AuthenticationError, match=KEY_VAR):
        classify_batches(config(), [batch(1, 1)], io.StringIO(),
                         transport=httpx.MockTransport(handler))
    assert calls == []


def test_rejected_credential_stops_the_run():
    def handler(request):
        return httpx.Response(401, text="bad key")

    with pytest.raises(AuthenticationError, match="401"):
        run([batch(1, 1)], handler)


def test_credential_never_reaches_the_transcript():
    transcript = io.StringIO()
    run([batch(1, 2), batch(2, 2)], alternating_handler, transcript=transcript)
    assert SECRET not in transcript.getvalue()


def test_empty_batch_list_needs_no_credential(monkeypatch):
    monkeypatch.delenv(KEY_VAR)
    assert classify_batches(config(), [], io.StringIO()) == []


# --- happy path ---

def test_fifty_batches_yield_five_hundred_ordered_verdicts():
    batches = [batch(b, 10) for b in range(1, 51)]
    results, _ = run(batches, alternating_handler)
    assert [r.batch_id for r in results] == list(range(1, 51))
    assert all(not r.failed for r in results)
    labels = [v.label for r in results for v in r.verdicts]
    assert len(labels) == 500
    expected = [(b + i) % 2 for b in range(1, 51) for i in range(1, 11)]
    assert labels == expected


def test_raw_lines_follow_sentence_order_even_when_shuffled():
    def handler(request):
        return chat_response("2: 1\n1: 0")

    results, _ = run([batch(7, 2)], handler)
    assert [v.raw_line for v in results[0].verdicts] == ["1: 0", "2: 1"]
    assert [v.label for v in results[0].verdicts] == [0, 1]


# --- retries, failures, isolation ---

def test_server_errors_retry_with_growing_backoff():
    attempts = []

    def handler(request):
        attempts.append(1)
        if len(attempts) < 3:
            return httpx.Response(503, text="busy")
        return alternating_handler(request)

    results, sleeps = run([batch(1, 2)], handler, max_retries=2, backoff_base=0.5)
    assert not results[0].failed
    assert len(attempts) == 3
    assert sleeps == [0.5, 1.0]


def test_retry_budget_is_bounded():
    attempts = []

    def handler(request):
        attempts.append(1)
        return httpx.Response(429, text="slow down")

    results, _ = run([batch(1, 2)], handler, max_retries=2)
    assert results[0].failed
    assert "3 attempts" in results[0].error
    assert len(attempts) == 3


def test_transport_errors_also_retry():
    attempts = []

    def handler(request):
        attempts.append(1)
        if len(attempts) == 1:
            raise httpx.ConnectError("refused")
        return alternating_handler(request)

    results, _ = run([batch(1, 2)], handler, max_retries=1)
    assert not results[0].failed
    assert len(attempts) == 2


def test_client_errors_fail_without_retry():
    attempts = []

    def handler(request):
        attempts.append(1)
        return httpx.Response(404, text="gone")

    results, _ = run([batch(1, 2)], handler, max_retries=3)
    assert results[0].failed
    assert "404" in results[0].error
    assert len(attempts) == 1


def test_one_bad_batch_does_not_poison_the_rest():
    def handler(request):
        payload = json.loads(request.content)
        batch_id = int(payload["messages"][1]["content"].split()[0])
        if batch_id == 2:
            return httpx.Response(500, text="boom")
        return alternating_handler(request)

    results, _ = run([batch(1, 2), batch(2, 2), batch(3, 2)], handler, max_retries=1)
    assert [r.failed for r in results] == [False, True, False]


def test_unparseable_content_fails_that_batch_only():
    def handler(request):
        payload = json.loads(request.content)
        if payload["messages"][1]["content"].startswith("1 "):
            return chat_response("the weather is nice")
        return alternating_handler(request)

    results, _ = run([batch(1, 2), batch(2, 2)], handler)
    assert results[0].failed and "unparseable" in results[0].error
    assert not results[1].failed


def test_malformed_envelope_fails_cleanly():
    def handler(request):
        return httpx.Response(200, json={"choices": []})

    results, _ = run([batch(1, 1)], handler)
    assert results[0].failed and "unparseable" in results[0].error


# --- transcript audit trail ---

def read_transcript(transcript):
    return [json.loads(line) for line in transcript.getvalue().splitlines()]


def test_transcript_records_every_attempt_in_jsonl():
    transcript = io.StringIO()
    attempts = []

    def handler(request):
        attempts.append(1)
        if len(attempts) == 1:
            return httpx.Response(503, text="busy")
        return alternating_handler(request)

    run([batch(1, 2)], handler, transcript=transcript, max_retries=1)
    records = read_transcript(transcript)
    assert [r["attempt"] for r in records] == [0, 1]
    assert records[0]["status"] == 503
    assert records[1]["status"] == 200
    for record in records:
        assert record["batch_id"] == 1
        assert record["request"]["model"] == "judge-8b"


def test_transcript_precedes_parsing_of_garbage():
    transcript = io.StringIO()

    def handler(request):
        return chat_response("gibberish")

    results, _ = run([batch(1, 1)], handler, transcript=transcript)
    assert results[0].failed
    records = read_transcript(transcript)
    assert len(records) == 1
    assert "gibberish" in records[0]["response_text"]


def test_transcript_keeps_transport_failures():
    transcript = io.StringIO()

    def handler(request):
        raise httpx.ConnectError("refused")

    results, _ = run([batch(1, 1)], handler, transcript=transcript, max_retries=1)
    assert results[0].failed
    records = read_transcript(transcript)
    assert len(records) == 2
    assert all("transport error" in r["error"] for r in records)


# --- validation of the wrappers ---

def test_config_rejects_bad_limits():
    with pytest.raises(ValueError):
        config(timeout=0)
    with pytest.raises(ValueError):
        config(max_retries=-1)
    with pytest.raises(ValueError):
        config(max_concurrent_requests=0)


def test_successful_result_needs_verdicts():
    with pytest.raises(ValueError):
        BatchResult(batch_id=1)


# --- offline mock ---

def truth_table(n):
    return {f"s{i:03d}": i % 2 for i in range(n)}


def test_mock_with_zero_flip_rate_echoes_the_table():
    table = truth_table(20)
    mock = MockClassifier(table, flip_rate=0.0, seed=9)
    texts = sorted(table)
    assert mock.classify(texts) == [table[t] for t in texts]
    assert mock.flipped == frozenset()


def test_mock_flips_exactly_floor_of_rate_times_size():
    table = truth_table(500)
    mock = MockClassifier(table, flip_rate=0.064, seed=41)
    texts = sorted(table)
    predicted = mock.classify(texts)
    disagreements = sum(p != table[t] for p, t in zip(predicted, texts))
    assert disagreements == math.floor(0.064 * 500) == 32
    assert len(mock.flipped) == 32
    assert mock.flipped <= set(table)


def test_mock_is_deterministic_per_seed():
    table = truth_table(100)
    first = MockClassifier(table, flip_rate=0.25, seed=7)
    second = MockClassifier(table, flip_rate=0.25, seed=7)
    assert first.flipped == second.flipped
    texts = sorted(table)
    assert first.classify(texts) == second.classify(texts)


def test_mock_unknown_sentence_policy():
    mock = MockClassifier({"a known one": 1})
    with pytest.raises(KeyError):
        mock.classify(["never seen"])
    lenient = MockClassifier({"a known one": 1}, on_unknown=0)
    assert lenient.classify(["never seen", "a known one"]) == [0, 1]


def test_mock_validates_inputs():
    with pytest.raises(ValueError):
        MockClassifier({"a": 1}, flip_rate=1.5)
    with pytest.raises(ValueError):
        MockClassifier({"a": 2})
