"""Classification metrics, agreement, and paired significance tests.

Implements the evaluation arithmetic used throughout: confusion-matrix
metrics with explicit undefined markers, Cohen's kappa for annotator
agreement, McNemar's test (corrected, uncorrected, and exact binomial
variants) for paired classifier comparison, the chi-squared(1df) survival
function, and Bonferroni adjustment.  `compare_models` ties these together
into a report with one row per model pair.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

TAXONOMY_TAGS = frozenset({
    "subordinate-clause",
    "idiomatic",
    "non-finite-overidentification",
    "missing-argument-overgeneralization",
    "prepositional-binding-confusion",
    "nested-clause-status",
})

# Rule-classifier reason codes whose meaning lines up with a taxonomy tag.
REASON_TAGS = {
    "SUBORDINATE": "subordinate-clause",
    "IDIOM": "idiomatic",
    "NONFINITE": "non-finite-overidentification",
}

EXACT_RECOMMENDED_BELOW = 25


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "tn", "fn"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative count, got {v!r}")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_labels(cls, gold: Sequence[int], predicted: Sequence[int]) -> "ConfusionMatrix":
        if len(gold) != len(predicted):
            raise ValueError(f"length mismatch: {len(gold)} gold vs {len(predicted)} predicted")
        tp = fp = tn = fn = 0
        for g, p in zip(gold, predicted):
            if g not in (0, 1) or p not in (0, 1):
                raise ValueError(f"labels must be 0 or 1, got gold={g!r} predicted={p!r}")
            if g == 1 and p == 1:
                tp += 1
            elif g == 0 and p == 1:
                fp += 1
            elif g == 0 and p == 0:
                tn += 1
            else:
                fn += 1
        return cls(tp=tp, fp=fp, tn=tn, fn=fn)


@dataclass(frozen=True)
class Metrics:
    """Accuracy/precision/recall/f1; None means the denominator was empty."""

    accuracy: float
    precision: Optional[float]
    recall: Optional[float]
    f1: Optional[float]


def f1_score(precision: float, recall: float) -> Optional[float]:
    if precision + recall == 0:
        return None
    return 2 * precision * recall / (precision + recall)


def metrics(m: ConfusionMatrix) -> Metrics:
    if m.total == 0:
        raise ValueError("empty confusion matrix")
    accuracy = (m.tp + m.tn) / m.total
    precision = m.tp / (m.tp + m.fp) if m.tp + m.fp > 0 else None
    recall = m.tp / (m.tp + m.fn) if m.tp + m.fn > 0 else None
    f1 = f1_score(precision, recall) if precision is not None and recall is not None else None
    return Metrics(accuracy=accuracy, precision=precision, recall=recall, f1=f1)


@dataclass(frozen=True)
class PairedOutcome:
    """Discordant counts for two classifiers scored on the same instances.

    b counts instances the first model got right and the second wrong;
    c the reverse.  n is the number of paired instances.
    """

    b: int
    c: int
    n: int

    def __post_init__(self) -> None:
        if self.b < 0 or self.c < 0 or self.n < 0:
            raise ValueError("counts must be non-negative")
        if self.b + self.c > self.n:
            raise ValueError(f"b+c = {self.b + self.c} exceeds instance count {self.n}")

    @classmethod
    def from_labels(cls, gold: Sequence[int], pred_a: Sequence[int], pred_b: Sequence[int]) -> "PairedOutcome":
        if not (len(gold) == len(pred_a) == len(pred_b)):
            raise ValueError("gold and prediction vectors must be aligned")
        b = c = 0
        for g, a, bb in zip(gold, pred_a, pred_b):
            if (a == g) and (bb != g):
                b += 1
            elif (a != g) and (bb == g):
                c += 1
        return cls(b=b, c=c, n=len(gold))


@dataclass(frozen=True)
class McNemarResult:
    b: int
    c: int
    variant: str
    statistic: Optional[float]  # None for the exact variant
    p_value: float
    recommended_variant: str


def chi2_sf_1df(x: float) -> float:
    """Survival function of chi-squared with 1 degree of freedom.

    P(X > x) = erfc(sqrt(x/2)); erfc keeps full relative precision in the
    far tail, so no special-casing is needed for tiny p.
    """
    if x < 0:
        raise ValueError(f"chi-squared statistic must be non-negative, got {x}")
    return math.erfc(math.sqrt(x / 2.0))


def _binomial_tail_two_sided(b: int, c: int) -> float:
    """Two-sided exact p: 2 * P(X >= max(b, c)) for X ~ Binomial(b+c, 1/2)."""
    n = b + c
    k = max(b, c)
    tail = sum(math.comb(n, i) for i in range(k, n + 1)) * 0.5 ** n
    return min(1.0, 2.0 * tail)


def mcnemar(outcome: PairedOutcome, variant: str = "uncorrected") -> McNemarResult:
    b, c = outcome.b, outcome.c
    recommended = "exact" if b + c < EXACT_RECOMMENDED_BELOW else "uncorrected"
    if variant == "exact":
        if b + c == 0:
            p = 1.0
        else:
            p = _binomial_tail_two_sided(b, c)
        return McNemarResult(b=b, c=c, variant=variant, statistic=None, p_value=p,
                             recommended_variant=recommended)
    if b + c == 0:
        raise ValueError("no discordant pairs; asymptotic McNemar is undefined")
    if variant == "uncorrected":
        stat = (b - c) ** 2 / (b + c)
    elif variant == "corrected":
        stat = max(abs(b - c) - 1, 0) ** 2 / (b + c)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return McNemarResult(b=b, c=c, variant=variant, statistic=stat,
                         p_value=chi2_sf_1df(stat), recommended_variant=recommended)


def bonferroni(alpha: float, comparisons: int) -> float:
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if comparisons < 1:
        raise ValueError(f"need at least one comparison, got {comparisons}")
    return alpha / comparisons


def cohens_kappa(labels_a: Sequence[int], labels_b: Sequence[int]) -> Optional[float]:
    """Chance-corrected agreement between two binary label lists.

    Returns None (undefined) in the degenerate case where chance agreement
    is 1 but observed agreement is not.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError(f"length mismatch: {len(labels_a)} vs {len(labels_b)}")
    if not labels_a:
        raise ValueError("empty label lists")
    for v in itertools.chain(labels_a, labels_b):
        if v not in (0, 1):
            raise ValueError(f"labels must be 0 or 1, got {v!r}")
    n = len(labels_a)
    p_o = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    pa1 = sum(labels_a) / n
    pb1 = sum(labels_b) / n
    p_e = pa1 * pb1 + (1 - pa1) * (1 - pb1)
    if p_e == 1.0:
        return 1.0 if p_o == 1.0 else None
    return (p_o - p_e) / (1 - p_e)


@dataclass(frozen=True)
class PairRow:
    model_a: str
    model_b: str
    b: int
    c: int
    degenerate: bool
    statistic: Optional[float]
    statistic_corrected: Optional[float]
    p_value: Optional[float]
    significant: Optional[bool]
    recommended_variant: Optional[str]


@dataclass(frozen=True)
class ComparisonReport:
    alpha: float
    adjusted_alpha: float
    n_instances: int
    confusions: Mapping[str, ConfusionMatrix]
    model_metrics: Mapping[str, Metrics]
    pairs: tuple[PairRow, ...] = field(default_factory=tuple)


def compare_models(gold: Sequence[int], predictions: Mapping[str, Sequence[int]],
                   alpha: float = 0.05) -> ComparisonReport:
    """Score every model against gold and run all pairwise McNemar tests.

    Pairs with no discordant instances are flagged degenerate and carry no
    statistic.  Significance uses the uncorrected statistic's p against
    the Bonferroni-adjusted alpha (adjusted only when there are pairs).
    """
    if not predictions:
        raise ValueError("no predictions given")
    for name, pred in predictions.items():
        if len(pred) != len(gold):
            raise ValueError(f"predictions for {name!r} are not aligned to gold "
                             f"({len(pred)} vs {len(gold)})")
    confusions = {name: ConfusionMatrix.from_labels(gold, pred) for name, pred in predictions.items()}
    model_metrics = {name: metrics(cm) for name, cm in confusions.items()}
    names = list(predictions)
    n_pairs = len(names) * (len(names) - 1) // 2
    adjusted = bonferroni(alpha, n_pairs) if n_pairs else alpha
    rows = []
    for name_a, name_b in itertools.combinations(names, 2):
        outcome = PairedOutcome.from_labels(gold, predictions[name_a], predictions[name_b])
        if outcome.b + outcome.c == 0:
            rows.append(PairRow(model_a=name_a, model_b=name_b, b=0, c=0, degenerate=True,
                                statistic=None, statistic_corrected=None, p_value=None,
                                significant=None, recommended_variant=None))
            continue
        plain = mcnemar(outcome, "uncorrected")
        corrected = mcnemar(outcome, "corrected")
        rows.append(PairRow(
            model_a=name_a, model_b=name_b, b=outcome.b, c=outcome.c, degenerate=False,
            statistic=plain.statistic, statistic_corrected=corrected.statistic,
            p_value=plain.p_value, significant=plain.p_value < adjusted,
            recommended_variant=plain.recommended_variant,
        ))
    return ComparisonReport(alpha=alpha, adjusted_alpha=adjusted, n_instances=len(gold),
                            confusions=confusions, model_metrics=model_metrics,
                            pairs=tuple(rows))


def _fmt(x: Optional[float], digits: int = 4) -> str:
    if x is None:
        return "undefined"
    if isinstance(x, bool):
        return "yes" if x else "no"
    if x != 0 and abs(x) < 10 ** -digits:
        return f"{x:.2e}"
    return f"{x:.{digits}f}"


def render_comparison_markdown(report: ComparisonReport) -> str:
    """Human-readable report: a pairwise-comparison table and a metric table."""
    lines = []
    lines.append("| Comparison Models | Chi-Square Value | p-value | Significance after Correction |")
    lines.append("| --- | --- | --- | --- |")
    for row in report.pairs:
        pair = f"{row.model_a} vs {row.model_b}"
        if row.degenerate:
            lines.append(f"| {pair} | not tested (no discordant pairs) | - | - |")
        else:
            sig = "significant" if row.significant else "not significant"
            lines.append(f"| {pair} | {_fmt(row.statistic, 2)} | {_fmt(row.p_value)} | {sig} |")
    lines.append("")
    lines.append(f"Adjusted significance level: {_fmt(report.adjusted_alpha)} "
                 f"(alpha {_fmt(report.alpha, 2)}, {len(report.pairs)} comparisons)")
    lines.append("")
    lines.append("| Model | Accuracy | Precision | Recall | F1 |")
    lines.append("| --- | --- | --- | --- | --- |")
    for name, m in report.model_metrics.items():
        lines.append(f"| {name} | {_fmt(m.accuracy)} | {_fmt(m.precision)} "
                     f"| {_fmt(m.recall)} | {_fmt(m.f1)} |")
    return "\n".join(lines) + "\n"


def report_to_dict(report: ComparisonReport) -> dict:
    """Machine-readable mirror of the markdown report."""
    return {
        "alpha": report.alpha,
        "adjusted_alpha": report.adjusted_alpha,
        "n_instances": report.n_instances,
        "models": {
            name: {
                "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
                "metrics": {
                    "accuracy": report.model_metrics[name].accuracy,
                    "precision": report.model_metrics[name].precision,
                    "recall": report.model_metrics[name].recall,
                    "f1": report.model_metrics[name].f1,
                },
            }
            for name, cm in report.confusions.items()
        },
        "pairs": [
            {
                "model_a": r.model_a,
                "model_b": r.model_b,
                "b": r.b,
                "c": r.c,
                "degenerate": r.degenerate,
                "statistic": r.statistic,
                "statistic_corrected": r.statistic_corrected,
                "p_value": r.p_value,
                "significant": r.significant,
                "recommended_variant": r.recommended_variant,
            }
            for r in report.pairs
        ],
    }


@dataclass(frozen=True)
class ErrorRecord:
    instance_id: str
    text: str
    gold: int
    predicted: int
    kind: str  # "false-positive" or "false-negative"
    tags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        expected = "false-positive" if (self.gold, self.predicted) == (0, 1) else "false-negative"
        if (self.gold, self.predicted) not in ((0, 1), (1, 0)):
            raise ValueError("error records require gold != predicted")
        if self.kind != expected:
            raise ValueError(f"kind {self.kind!r} contradicts gold={self.gold} predicted={self.predicted}")
        unknown = set(self.tags) - TAXONOMY_TAGS
        if unknown:
            raise ValueError(f"unknown taxonomy tags: {sorted(unknown)}")


def build_error_records(gold: Sequence[int], predicted: Sequence[int],
                        instance_ids: Sequence[str], texts: Sequence[str],
                        reasons: Sequence[Optional[str]] | None = None) -> list[ErrorRecord]:
    """One record per misclassification, with taxonomy tags suggested from
    rule-classifier reason codes where those are available."""
    if not (len(gold) == len(predicted) == len(instance_ids) == len(texts)):
        raise ValueError("aligned gold/predicted/ids/texts required")
    if reasons is not None and len(reasons) != len(gold):
        raise ValueError("reasons must align with gold")
    out = []
    for i, (g, p) in enumerate(zip(gold, predicted)):
        if g == p:
            continue
        kind = "false-positive" if g == 0 else "false-negative"
        tags: tuple[str, ...] = ()
        if reasons is not None and reasons[i] in REASON_TAGS:
            tags = (REASON_TAGS[reasons[i]],)
        out.append(ErrorRecord(instance_id=instance_ids[i], text=texts[i], gold=g,
                               predicted=p, kind=kind, tags=tags))
    return out
