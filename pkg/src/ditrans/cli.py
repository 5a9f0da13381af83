"""Command line wiring the pipeline end to end.

Exit codes: 0 success, 1 usage problems, 2 data problems (malformed
corpus, unsatisfiable split, misaligned inputs), 3 endpoint problems
(credentials, transport, exhausted retries).  A JSON config file may
supply any flag's value under its Python name; explicit flags win.
"""

from __future__ import annotations

import json
import sys
from dataclasses import fields as dataclass_fields
from pathlib import Path
from typing import Optional

import click
import httpx
from click.core import ParameterSource

from .annotation.api import create_app
from .annotation.service import AnnotationService
from .client import (
    AuthenticationError,
    ChatBatch,
    EndpointConfig,
    MockClassifier,
    classify_batches,
)
from .corpus import (
    CorpusFormatError,
    IngestDiagnostics,
    read_candidates,
    read_vertical,
    write_candidates,
)
from .dataset import (
    DEFAULT_BATCH_SIZE,
    FinetuneJobSpec,
    batched,
    build_batch_prompt,
    emit_job_spec,
    read_labeled,
    write_finetune_records,
)
from .kb import chunk_documents, build_index, load_index, load_stopwords, \
    normalize_terms, retrieve, serialize_index, augment_prompt
from .manifest import build_manifest, manifest_json, write_manifest_for
from .preprocess import InsufficientInstancesError, SplitSpec, clean, sample_and_split
from .query import PatternSyntaxError, extract_candidates, parse_pattern
from .rules import RuleConfig, classify_rules, load_lexicon
from .stats import build_error_records, compare_models, render_comparison_markdown, \
    report_to_dict

DEFAULT_PATTERN = "_VV* (_PN*|_NP0) * _NN*"


class EndpointBatchError(RuntimeError):
    """Some chat batches still failed after the configured retries."""

PATTERN_GRAMMAR = """\
Pattern grammar (whitespace separates elements):

\b
  _TAG     exact tag, e.g. _VVD
  _PREF*   any tag with this prefix, e.g. _VV*
  (a|b)    alternation of tag elements, e.g. (_PN*|_NP0)
  *        gap of 0 up to --max-gap arbitrary tokens

The default pattern targets verb + bare recipient + gap + theme:
"_VV* (_PN*|_NP0) * _NN*".
"""


def _merged(ctx: click.Context, **values):
    """Overlay config-file values onto parameters the user left at default."""
    config = ctx.obj or {}
    out = {}
    for name, value in values.items():
        if ctx.get_parameter_source(name) == ParameterSource.DEFAULT and name in config:
            out[name] = config[name]
        else:
            out[name] = value
    return out


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="JSON file supplying defaults for any flag.")
@click.pass_context
def cli(ctx, config_path):
    """Corpus-to-verdict pipeline for double-object construction study."""
    ctx.obj = (json.loads(Path(config_path).read_text(encoding="utf-8"))
               if config_path else {})


@cli.command(epilog=PATTERN_GRAMMAR)
@click.argument("corpus", type=click.Path(exists=True, dir_okay=False, allow_dash=True))
@click.option("--pattern", "-p", default=DEFAULT_PATTERN, show_default=True,
              help="Tag pattern to match.")
@click.option("--max-gap", default=3, show_default=True,
              help="Longest token gap a bare * may absorb.")
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False),
              help="Candidate JSONL to write.")
@click.option("--manifest", "print_manifest", is_flag=True,
              help="Print the run manifest to stdout.")
@click.pass_context
def extract(ctx, corpus, pattern, max_gap, out, print_manifest):
    """Match a tagged corpus against a pattern, one candidate per sentence."""
    params = _merged(ctx, pattern=pattern, max_gap=max_gap)
    try:
        compiled = parse_pattern(params["pattern"], max_gap=params["max_gap"])
    except PatternSyntaxError as exc:
        raise click.UsageError(f"bad pattern: {exc}")
    diagnostics = IngestDiagnostics()
    with click.open_file(corpus, "r", encoding="utf-8") as f:
        candidates = list(extract_candidates(compiled,
                                             read_vertical(f, diagnostics)))
    with open(out, "w", encoding="utf-8") as f:
        written = write_candidates(candidates, f)
    inputs = [] if corpus == "-" else [Path(corpus)]
    manifest = build_manifest("extract", inputs, {"max_gap": params["max_gap"]},
                              pattern=params["pattern"])
    write_manifest_for(Path(out), manifest)
    click.echo(f"{written} candidates from {diagnostics.sentences_read} sentences; "
               f"{diagnostics.records_skipped} records skipped", err=True)
    if print_manifest:
        click.echo(manifest_json(manifest), nl=False)


@cli.command("clean-split")
@click.argument("candidates", type=click.Path(exists=True, dir_okay=False))
@click.option("--train-n", default=5000, show_default=True)
@click.option("--val-n", default=500, show_default=True)
@click.option("--seed", default=13, show_default=True)
@click.option("--train-out", required=True, type=click.Path(dir_okay=False))
@click.option("--val-out", required=True, type=click.Path(dir_okay=False))
@click.pass_context
def clean_split(ctx, candidates, train_n, val_n, seed, train_out, val_out):
    """Clean candidates, then draw disjoint train and validation samples."""
    params = _merged(ctx, train_n=train_n, val_n=val_n, seed=seed)
    with open(candidates, encoding="utf-8") as f:
        instances = read_candidates(f)
    kept, report = clean(instances)
    spec = SplitSpec(train_size=params["train_n"], validation_size=params["val_n"],
                     seed=params["seed"])
    train, val = sample_and_split(kept, spec)
    for path, part in ((train_out, train), (val_out, val)):
        with open(path, "w", encoding="utf-8") as f:
            write_candidates(part, f)
        manifest = build_manifest("clean-split", [Path(candidates)],
                                  {"train_n": spec.train_size,
                                   "val_n": spec.validation_size},
                                  seed=spec.seed)
        write_manifest_for(Path(path), manifest)
    click.echo(json.dumps({
        "input": report.input_count,
        "removed_too_long": report.removed_too_long,
        "removed_noise": report.removed_noise,
        "removed_duplicates": report.removed_duplicates,
        "cleaned": report.output_count,
        "train": len(train),
        "validation": len(val),
    }, indent=2))


@cli.command("build-finetune")
@click.argument("labeled", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False))
def build_finetune(labeled, out):
    """Convert labeled instances into chat-format training JSONL."""
    with open(labeled, encoding="utf-8") as f:
        instances = read_labeled(f)
    with open(out, "w", encoding="utf-8") as f:
        written = write_finetune_records(instances, f)
    write_manifest_for(Path(out), build_manifest("build-finetune", [Path(labeled)], {}))
    if written == 0:
        click.echo("no labeled instances; wrote an empty file", err=True)
    else:
        click.echo(f"{written} training records", err=True)


@cli.command("job-spec")
@click.option("--out", "-o", type=click.Path(dir_okay=False), default=None,
              help="Write here instead of stdout.")
@click.option("--set", "overrides", multiple=True, metavar="NAME=VALUE",
              help="Override a field, e.g. --set learning_rate=1e-4.")
def job_spec(out, overrides):
    """Emit the adapter-training configuration document."""
    defaults = FinetuneJobSpec()
    known = {f.name for f in dataclass_fields(FinetuneJobSpec)}
    values = {}
    for item in overrides:
        name, sep, raw = item.partition("=")
        if not sep or name not in known:
            raise click.UsageError(f"unknown or malformed override {item!r}; "
                                   f"fields: {', '.join(sorted(known))}")
        current = getattr(defaults, name)
        try:
            values[name] = type(current)(raw) if not isinstance(current, str) else raw
        except ValueError as exc:
            raise click.UsageError(f"bad value for {name}: {exc}")
    text = emit_job_spec(FinetuneJobSpec(**values))
    if out is None:
        click.echo(text, nl=False)
    else:
        Path(out).write_text(text, encoding="utf-8")
        click.echo(f"wrote {out}", err=True)


@cli.command()
@click.argument("candidates", type=click.Path(exists=True, dir_okay=False))
@click.option("--engine", type=click.Choice(["endpoint", "rules", "mock"]),
              required=True)
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False))
@click.option("--batch-size", default=DEFAULT_BATCH_SIZE, show_default=True)
@click.option("--max-gap", default=3, show_default=True,
              help="Rules engine: longest argument gap.")
@click.option("--base-url", default=None, help="Endpoint engine: chat completions URL.")
@click.option("--model", default=None, help="Endpoint engine: model name.")
@click.option("--credential-env", default="DITRANS_API_KEY", show_default=True,
              help="Environment variable holding the API credential.")
@click.option("--timeout", default=60.0, show_default=True)
@click.option("--max-retries", default=2, show_default=True)
@click.option("--concurrency", default=4, show_default=True)
@click.option("--temperature", default=0.0, show_default=True)
@click.option("--transcript", default=None, type=click.Path(dir_okay=False),
              help="Endpoint engine: request/response JSONL "
                   "[default: OUT.transcript.jsonl].")
@click.option("--kb-index", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Endpoint engine: augment prompts from this index.")
@click.option("--kb-top-k", default=3, show_default=True)
@click.option("--kb-budget", default=1000, show_default=True,
              help="Word budget for appended reference excerpts.")
@click.option("--truth", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Mock engine: labeled JSONL giving true labels.")
@click.option("--flip-rate", default=0.0, show_default=True,
              help="Mock engine: fraction of sentences answered wrongly.")
@click.option("--mock-seed", default=0, show_default=True)
@click.pass_context
def classify(ctx, candidates, engine, out, batch_size, max_gap, base_url, model,
             credential_env, timeout, max_retries, concurrency, temperature,
             transcript, kb_index, kb_top_k, kb_budget, truth, flip_rate, mock_seed):
    """Label candidates with a chat endpoint, the rule baseline, or a mock."""
    params = _merged(ctx, batch_size=batch_size, max_gap=max_gap,
                     base_url=base_url, model=model, credential_env=credential_env,
                     timeout=timeout, max_retries=max_retries, concurrency=concurrency,
                     temperature=temperature, kb_top_k=kb_top_k, kb_budget=kb_budget,
                     flip_rate=flip_rate, mock_seed=mock_seed)
    with open(candidates, encoding="utf-8") as f:
        instances = read_candidates(f)
    rows: list[dict] = []

    if engine == "rules":
        if kb_index:
            raise click.UsageError("--kb-index applies to the endpoint engine only")
        lexicon = load_lexicon()
        config = RuleConfig(max_gap=params["max_gap"])
        for inst in instances:
            verdict = classify_rules(inst.sentence, lexicon, config)
            rows.append({"sentence_id": inst.sentence.id, "label": verdict.label,
                         "reasons": list(verdict.reasons)})

    elif engine == "mock":
        if truth is None:
            raise click.UsageError("the mock engine needs --truth")
        if kb_index:
            raise click.UsageError("--kb-index applies to the endpoint engine only")
        with open(truth, encoding="utf-8") as f:
            table = {li.candidate.sentence.raw_text: li.gold_label
                     for li in read_labeled(f)}
        mock = MockClassifier(table, flip_rate=params["flip_rate"],
                              seed=params["mock_seed"])
        texts = [inst.sentence.raw_text for inst in instances]
        try:
            labels = mock.classify(texts)
        except KeyError as exc:
            raise ValueError(f"truth table does not cover the input: {exc}") from exc
        rows = [{"sentence_id": inst.sentence.id, "label": label}
                for inst, label in zip(instances, labels)]

    else:
        if not params["base_url"] or not params["model"]:
            raise click.UsageError("the endpoint engine needs --base-url and --model")
        index = None
        if kb_index:
            index = load_index(Path(kb_index).read_text(encoding="utf-8"))
        groups = batched(instances, params["batch_size"])
        batches = []
        for i, group in enumerate(groups, start=1):
            system, user = build_batch_prompt(group, params["batch_size"])
            if index is not None:
                retrieved = retrieve(index, user, params["kb_top_k"])
                system, user = augment_prompt(system, user, retrieved,
                                              budget=params["kb_budget"])
            batches.append(ChatBatch(batch_id=i, system=system, user=user,
                                     expected_count=len(group)))
        endpoint = EndpointConfig(
            base_url=params["base_url"], model_name=params["model"],
            credential_env_var=params["credential_env"], timeout=params["timeout"],
            max_retries=params["max_retries"],
            max_concurrent_requests=params["concurrency"],
            temperature=params["temperature"])
        transcript_path = transcript or f"{out}.transcript.jsonl"
        with open(transcript_path, "a", encoding="utf-8") as transcript_stream:
            results = classify_batches(endpoint, batches, transcript_stream)
        failed = [r.batch_id for r in results if r.failed]
        for group, result in zip(groups, results):
            if result.failed:
                continue
            for inst, verdict in zip(group, result.verdicts):
                rows.append({"sentence_id": inst.sentence.id, "label": verdict.label})
        if failed:
            with open(out, "w", encoding="utf-8") as f:
                for row in rows:
                    f.write(json.dumps(row, ensure_ascii=False) + "\n")
            raise EndpointBatchError(
                f"batches {failed} failed after retries; wrote "
                f"{len(rows)} verdicts, see {transcript_path}")

    with open(out, "w", encoding="utf-8") as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + "\n")
    write_manifest_for(Path(out), build_manifest(
        "classify", [Path(candidates)],
        {"engine": engine, "batch_size": params["batch_size"]},
        seed=params["mock_seed"] if engine == "mock" else None))
    click.echo(f"{len(rows)} verdicts via {engine}", err=True)


@cli.command()
@click.option("--gold", required=True, type=click.Path(exists=True, dir_okay=False))
@click.argument("predictions", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--alpha", default=0.05, show_default=True)
@click.option("--report-out", default=None, type=click.Path(dir_okay=False),
              help="Markdown report path [default: stdout].")
@click.option("--json-out", default=None, type=click.Path(dir_okay=False),
              help="Also write the full report as JSON.")
@click.pass_context
def evaluate(ctx, gold, predictions, alpha, report_out, json_out):
    """Compare prediction files against gold labels, pairwise."""
    params = _merged(ctx, alpha=alpha)
    with open(gold, encoding="utf-8") as f:
        gold_instances = read_labeled(f)
    ids = [li.candidate.sentence.id for li in gold_instances]
    texts = [li.candidate.sentence.raw_text for li in gold_instances]
    gold_labels = [li.gold_label for li in gold_instances]

    model_labels: dict[str, list[int]] = {}
    for path in predictions:
        name = Path(path).stem
        if name in model_labels:
            name = f"{name}-{len(model_labels)}"
        by_id: dict[str, int] = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                row = json.loads(line)
                by_id[row["sentence_id"]] = row["label"]
        missing = [i for i in ids if i not in by_id]
        extra = sorted(set(by_id) - set(ids))
        if missing or extra:
            raise ValueError(f"{path} does not align with gold: "
                             f"{len(missing)} missing, {len(extra)} extra")
        model_labels[name] = [by_id[i] for i in ids]

    report = compare_models(gold_labels, model_labels, alpha=params["alpha"])
    markdown = render_comparison_markdown(report)
    if report_out is None:
        click.echo(markdown)
    else:
        Path(report_out).write_text(markdown, encoding="utf-8")
        click.echo(f"wrote {report_out}", err=True)
    if json_out is not None:
        payload = report_to_dict(report)
        payload["errors"] = {
            name: [{"instance_id": e.instance_id, "text": e.text, "gold": e.gold,
                    "predicted": e.predicted, "kind": e.kind, "tags": list(e.tags)}
                   for e in build_error_records(gold_labels, labels, ids, texts)]
            for name, labels in model_labels.items()
        }
        Path(json_out).write_text(json.dumps(payload, ensure_ascii=False, indent=2)
                                  + "\n", encoding="utf-8")
        click.echo(f"wrote {json_out}", err=True)


@cli.group()
def kb():
    """Build and query the reference knowledge index."""


@kb.command("build")
@click.argument("documents", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "-o", required=True, type=click.Path(dir_okay=False))
@click.option("--chunk-words", default=500, show_default=True)
def kb_build(documents, out, chunk_words):
    """Chunk markdown documents into a serialized inverted index."""
    stopwords = load_stopwords()
    docs = []
    seen = set()
    for path in documents:
        doc_id = Path(path).stem
        if doc_id in seen:
            raise ValueError(f"duplicate document id {doc_id!r} from {path}")
        seen.add(doc_id)
        docs.append((doc_id, Path(path).read_text(encoding="utf-8")))
    chunks, warnings = chunk_documents(docs, stopwords, target_size=chunk_words)
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    index = build_index(chunks)
    Path(out).write_text(serialize_index(index), encoding="utf-8")
    write_manifest_for(Path(out), build_manifest(
        "kb-build", [Path(p) for p in documents], {"chunk_words": chunk_words}))
    click.echo(f"{len(chunks)} chunks from {len(docs)} documents", err=True)


@kb.command("query")
@click.argument("index_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("query")
@click.option("--k", default=3, show_default=True)
def kb_query(index_path, query, k):
    """Rank chunks for a query by distinct keyword overlap."""
    index = load_index(Path(index_path).read_text(encoding="utf-8"))
    terms = set(normalize_terms(query))
    for chunk in retrieve(index, query, k):
        score = len(terms & set(chunk.keywords))
        click.echo(json.dumps({"chunk_id": chunk.chunk_id, "doc_id": chunk.doc_id,
                               "score": score}))


@cli.command("annotate-serve")
@click.option("--log", "log_path", required=True, type=click.Path(dir_okay=False),
              help="Append-only event log (created if absent).")
@click.option("--candidates", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Load these candidates as tasks on first boot.")
@click.option("--pilot", default=0, show_default=True,
              help="How many loaded tasks need two independent labels.")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8400, show_default=True)
@click.option("--lease-timeout", default=1800.0, show_default=True)
@click.option("--snapshot", default=None, type=click.Path(dir_okay=False),
              help="Write periodic state snapshots here.")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False),
              help="Serve these static files under /ui.")
def annotate_serve(log_path, candidates, pilot, host, port, lease_timeout, snapshot,
                   ui_dir):
    """Run the annotation HTTP service."""
    import uvicorn

    service = AnnotationService.resume(
        Path(log_path), lease_timeout=lease_timeout,
        snapshot_path=Path(snapshot) if snapshot else None)
    if candidates is not None:
        if service.state_dict()["tasks"]:
            click.echo("log already contains tasks; not loading candidates again",
                       err=True)
        else:
            with open(candidates, encoding="utf-8") as f:
                created = service.load_candidates(read_candidates(f), pilot_count=pilot)
            click.echo(f"loaded {len(created)} tasks ({pilot} pilot)", err=True)
    app = create_app(service, ui_dir=Path(ui_dir) if ui_dir else None)
    uvicorn.run(app, host=host, port=port)


DATA_ERRORS = (CorpusFormatError, InsufficientInstancesError, ValueError, KeyError)

# raised by bare `ditrans` / `ditrans kb`; treated as a help request, not an error
_NO_ARGS_HELP = getattr(click.exceptions, "NoArgsIsHelpError", ())


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False, prog_name="ditrans")
        return 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        if _NO_ARGS_HELP and isinstance(exc, _NO_ARGS_HELP):
            click.echo(exc.format_message())
            return 0
        exc.show(file=sys.stderr)
        return 1
    except click.ClickException as exc:
        exc.show(file=sys.stderr)
        return 1
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except AuthenticationError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except EndpointBatchError as exc:
        click.echo(f"error: {exc}", err=True)
        return 3
    except httpx.HTTPError as exc:
        click.echo(f"error: transport failure: {exc}", err=True)
        return 3
    except DATA_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 2


if __name__ == "__main__":
    sys.exit(main())
