"""Precision/recall/F1 scoring, sentence-length error analysis, and
manual-effort accounting for the three annotation workflows."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .corpus import TaggedExample, Vocabulary, encode
from .errors import ContractError, LengthError
from .kb import RelationSchema
from .model import Hyperparams, ModelParams, predict


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall,
                "f1": self.f1, "support": self.support}


@dataclass
class MetricsReport:
    """Per-class scores plus the macro average over non-negative classes."""

    per_class: dict[str, ClassMetrics]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: dict[str, dict[str, int]] = field(default_factory=dict)
    num_examples: int = 0

    def to_dict(self) -> dict:
        return {
            "per_class": {label: m.to_dict() for label, m in self.per_class.items()},
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "confusion": self.confusion,
            "num_examples": self.num_examples,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "MetricsReport":
        return cls(
            per_class={label: ClassMetrics(**m) for label, m in data["per_class"].items()},
            macro_precision=data["macro_precision"],
            macro_recall=data["macro_recall"],
            macro_f1=data["macro_f1"],
            confusion={g: dict(row) for g, row in data.get("confusion", {}).items()},
            num_examples=data.get("num_examples", 0),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def compute_metrics(golds: Sequence[int], preds: Sequence[int],
                    class_labels: Sequence[str], negative_index: int) -> MetricsReport:
    """Confusion-count metrics with the macro average taken over the
    non-negative classes only. 0/0 ratios collapse to 0."""
    if len(golds) != len(preds):
        raise ContractError("golds and predictions differ in length")
    if not golds:
        raise ContractError("cannot score an empty test set")
    num_classes = len(class_labels)
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    for g, p in zip(golds, preds):
        if not (0 <= g < num_classes and 0 <= p < num_classes):
            raise ContractError(f"class index out of range: gold={g} pred={p}")
        counts[g, p] += 1

    per_class: dict[str, ClassMetrics] = {}
    macro_p: list[float] = []
    macro_r: list[float] = []
    macro_f: list[float] = []
    for c, label in enumerate(class_labels):
        tp = int(counts[c, c])
        fp = int(counts[:, c].sum() - tp)
        fn = int(counts[c, :].sum() - tp)
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_class[label] = ClassMetrics(precision, recall, f1, support=tp + fn)
        if c != negative_index:
            macro_p.append(precision)
            macro_r.append(recall)
            macro_f.append(f1)
    if not macro_f:
        raise ContractError("no non-negative classes to average over")

    confusion = {
        class_labels[g]: {class_labels[p]: int(counts[g, p])
                          for p in range(num_classes) if counts[g, p]}
        for g in range(num_classes) if counts[g].any()
    }
    return MetricsReport(
        per_class=per_class,
        macro_precision=float(np.mean(macro_p)),
        macro_recall=float(np.mean(macro_r)),
        macro_f1=float(np.mean(macro_f)),
        confusion=confusion,
        num_examples=len(golds),
    )


def predict_labels(params: ModelParams, examples: Sequence[TaggedExample],
                   vocab: Vocabulary, hyper: Hyperparams) -> list[int]:
    """Predicted class index per example. Over-long sentences raise
    rather than being silently truncated."""
    preds = []
    for ex in examples:
        enc = encode(ex, vocab, clip=hyper.clip_distance, max_len=hyper.max_len)
        preds.append(predict(params, enc, other_mode=hyper.other_mode,
                             activation=hyper.activation))
    return preds


def evaluate(params: ModelParams, examples: Sequence[TaggedExample],
             vocab: Vocabulary, schema: RelationSchema,
             hyper: Hyperparams) -> MetricsReport:
    """Score a labeled test set with the model's predictions."""
    if not examples:
        raise ContractError("cannot score an empty test set")
    golds = []
    preds = []
    skipped = 0
    for ex in examples:
        if ex.label is None:
            raise ContractError("evaluation needs labeled examples")
        try:
            enc = encode(ex, vocab, clip=hyper.clip_distance, max_len=hyper.max_len)
        except LengthError:
            skipped += 1
            continue
        golds.append(schema.class_index(ex.label, ex.direction))
        preds.append(predict(params, enc, other_mode=hyper.other_mode,
                             activation=hyper.activation))
    if not golds:
        raise ContractError("every test example exceeded the length limit")
    return compute_metrics(golds, preds, schema.class_labels(), schema.negative_index)


LOW_SUPPORT_THRESHOLD = 6


@dataclass(frozen=True)
class LengthBucket:
    """Shares of correct and wrong predictions among examples whose
    sentence length falls in [start, start + width)."""

    start: int
    correct_share: float
    wrong_share: float
    count: int
    low_support: bool

    def to_dict(self) -> dict:
        return {"start": self.start, "correct_share": self.correct_share,
                "wrong_share": self.wrong_share, "count": self.count,
                "low_support": self.low_support}


def length_analysis(params: ModelParams, examples: Sequence[TaggedExample],
                    vocab: Vocabulary, schema: RelationSchema,
                    hyper: Hyperparams, bucket_width: int = 1) -> list[LengthBucket]:
    """Correct/wrong shares per sentence-length bucket, normalized within
    each bucket. Buckets under 6 examples are flagged low-support; empty
    buckets are omitted."""
    if bucket_width < 1:
        raise ContractError("bucket width must be >= 1")
    correct: dict[int, int] = {}
    total: dict[int, int] = {}
    for ex in examples:
        if ex.label is None:
            raise ContractError("length analysis needs labeled examples")
        try:
            enc = encode(ex, vocab, clip=hyper.clip_distance, max_len=hyper.max_len)
        except LengthError:
            continue
        start = (len(ex.sentence) // bucket_width) * bucket_width
        gold = schema.class_index(ex.label, ex.direction)
        pred = predict(params, enc, other_mode=hyper.other_mode,
                       activation=hyper.activation)
        total[start] = total.get(start, 0) + 1
        if pred == gold:
            correct[start] = correct.get(start, 0) + 1
    buckets = []
    for start in sorted(total):
        n = total[start]
        c = correct.get(start, 0)
        buckets.append(LengthBucket(
            start=start,
            correct_share=c / n,
            wrong_share=(n - c) / n,
            count=n,
            low_support=n < LOW_SUPPORT_THRESHOLD,
        ))
    return buckets


def length_analysis_csv(buckets: Sequence[LengthBucket]) -> str:
    lines = ["length,correct_share,wrong_share,count,low_support"]
    for b in buckets:
        lines.append(f"{b.start},{b.correct_share:.6f},{b.wrong_share:.6f},"
                     f"{b.count},{str(b.low_support).lower()}")
    return "\n".join(lines) + "\n"


WORKFLOW_MANUAL = "manual"
WORKFLOW_SUPERVISED = "supervised"
WORKFLOW_DISTANT = "distant"


@dataclass(frozen=True)
class EffortCounts:
    """Dataset sizes the effort accounting draws on. Result-check counts
    are inputs; they are produced by the review process, not derived."""

    test_sentences: int = 0
    training_sentences: int = 0
    result_check_sentences: int = 0

    def __post_init__(self) -> None:
        for name in ("test_sentences", "training_sentences", "result_check_sentences"):
            if getattr(self, name) < 0:
                raise ContractError(f"{name} must be >= 0")


def effort_report(workflow: str, counts: EffortCounts) -> int:
    """Sentences a human expert must read under the given workflow:
    labeling everything by hand, labeling a training set plus checking
    results, or only checking results of distantly supervised training."""
    if workflow == WORKFLOW_MANUAL:
        return counts.test_sentences
    if workflow == WORKFLOW_SUPERVISED:
        return counts.training_sentences + counts.result_check_sentences
    if workflow == WORKFLOW_DISTANT:
        return counts.result_check_sentences
    raise ContractError(f"unknown workflow {workflow!r}")


def format_metrics_table(report: MetricsReport) -> str:
    """Aligned text table of per-class scores with the macro row last."""
    rows = [("class", "precision", "recall", "f1", "support")]
    for label in sorted(report.per_class):
        m = report.per_class[label]
        rows.append((label, f"{m.precision:.4f}", f"{m.recall:.4f}",
                     f"{m.f1:.4f}", str(m.support)))
    rows.append(("macro (non-negative)", f"{report.macro_precision:.4f}",
                 f"{report.macro_recall:.4f}", f"{report.macro_f1:.4f}",
                 str(report.num_examples)))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = []
    for r in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(r)).rstrip())
    return "\n".join(lines) + "\n"
