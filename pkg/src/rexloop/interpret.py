"""Trace class scores back through max pooling to token trigrams.

Every pooled filter value is routed entirely to the window it was pooled
from, so each window's attribution is the sum of its routed filter
contributions and the per-window values add up to the class score.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .corpus import PAD_TOKEN, EncodedExample, TaggedExample, Vocabulary, encode, format_label
from .errors import ContractError, LengthError
from .kb import RelationSchema
from .model import Hyperparams, ModelParams, forward

Trigram = tuple[str, str, str]


@dataclass(frozen=True)
class TrigramAttribution:
    """A (class, trigram) pair with its summed score contribution."""

    relation: str
    trigram: Trigram
    value: float
    count: int
    samples: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "relation": self.relation,
            "trigram": list(self.trigram),
            "value": self.value,
            "count": self.count,
            "samples": list(self.samples),
        }


def attribute(params: ModelParams, encoded: EncodedExample, target_class: int,
              activation: str = "tanh") -> np.ndarray:
    """Per-window attribution of the target class score.

    For each filter f the contribution ``w_classes[target, f] * pooled[f]``
    goes entirely to the window the pooled value came from; windows with
    no routed filter get 0.
    """
    if not (0 <= target_class < params.num_scored_classes):
        raise ContractError(
            f"target class {target_class} out of range for {params.num_scored_classes} scored classes")
    trace = forward(params, encoded, activation=activation)
    contributions = params.w_classes[target_class] * trace.pooled
    values = np.zeros(len(encoded))
    np.add.at(values, trace.argmax_pos, contributions)
    return values


def window_trigram(norms: Sequence[str], t: int) -> Trigram:
    """The token trigram a window at position t covers, with boundary
    slots rendered as the padding marker."""
    n = len(norms)
    return (
        norms[t - 1] if t > 0 else PAD_TOKEN,
        norms[t],
        norms[t + 1] if t < n - 1 else PAD_TOKEN,
    )


def top_trigrams(params: ModelParams, examples: Sequence[TaggedExample],
                 vocab: Vocabulary, schema: RelationSchema, hyper: Hyperparams,
                 k: int, against: str = "gold",
                 samples_per_trigram: int = 5) -> dict[str, list[TrigramAttribution]]:
    """Ranked representative trigrams per class over a labeled dataset.

    Each example is attributed against its gold class (or the predicted
    class with ``against="predicted"``); per (class, trigram) the window
    attributions are summed across the dataset and the windows counted.
    Over-long sentences and, in omitted mode, negative-gold examples are
    skipped since they have no attribution target.
    """
    if k < 1:
        raise ContractError("k must be >= 1")
    if against not in ("gold", "predicted"):
        raise ContractError(f"against must be 'gold' or 'predicted', got {against!r}")
    class_labels = schema.class_labels()
    sums: dict[tuple[str, Trigram], float] = {}
    counts: dict[tuple[str, Trigram], int] = {}
    samples: dict[tuple[str, Trigram], list[str]] = {}

    for ex in examples:
        if ex.label is None:
            raise ContractError("trigram extraction needs labeled examples")
        try:
            enc = encode(ex, vocab, clip=hyper.clip_distance, max_len=hyper.max_len)
        except LengthError:
            continue
        trace = forward(params, enc, activation=hyper.activation)
        if against == "gold":
            target = schema.class_index(ex.label, ex.direction)
        else:
            target = int(np.argmax(trace.scores))
        if target >= params.num_scored_classes:
            continue  # omitted-mode negative class has no class embedding
        label = class_labels[target]

        contributions = params.w_classes[target] * trace.pooled
        routed: dict[int, float] = {}
        for f, window_idx in enumerate(trace.argmax_pos):
            routed[int(window_idx)] = routed.get(int(window_idx), 0.0) + float(contributions[f])
        norms = ex.sentence.norms
        for window_idx, value in routed.items():
            key = (label, window_trigram(norms, window_idx))
            sums[key] = sums.get(key, 0.0) + value
            counts[key] = counts.get(key, 0) + 1
            bucket = samples.setdefault(key, [])
            if len(bucket) < samples_per_trigram and ex.sentence.id not in bucket:
                bucket.append(ex.sentence.id)

    tables: dict[str, list[TrigramAttribution]] = {}
    for (label, trigram), value in sums.items():
        tables.setdefault(label, []).append(TrigramAttribution(
            relation=label, trigram=trigram, value=value,
            count=counts[(label, trigram)],
            samples=tuple(samples[(label, trigram)]),
        ))
    for label, rows in tables.items():
        rows.sort(key=lambda r: (-r.value, r.trigram))
        tables[label] = rows[:k]
    return tables


def trigrams_to_jsonl(tables: Mapping[str, Sequence[TrigramAttribution]]) -> str:
    lines = []
    for label in sorted(tables):
        for row in tables[label]:
            lines.append(json.dumps(row.to_dict(), ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def trigrams_from_jsonl(text: str) -> dict[str, list[TrigramAttribution]]:
    tables: dict[str, list[TrigramAttribution]] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        tables.setdefault(rec["relation"], []).append(TrigramAttribution(
            relation=rec["relation"], trigram=tuple(rec["trigram"]),
            value=rec["value"], count=rec["count"], samples=tuple(rec["samples"]),
        ))
    return tables


def find_trigram_samples(examples: Sequence[TaggedExample], relation: str,
                         trigram: Trigram, limit: int = 5,
                         ) -> list[tuple[TaggedExample, int]]:
    """Examples of the given class containing the trigram, each with the
    window position that matches it. Class labels carry the direction,
    so directional classes are looked up separately."""
    hits: list[tuple[TaggedExample, int]] = []
    for ex in examples:
        if ex.label is None or format_label(ex.label, ex.direction) != relation:
            continue
        norms = ex.sentence.norms
        for t in range(len(norms)):
            if window_trigram(norms, t) == trigram:
                hits.append((ex, t))
                break
        if len(hits) >= limit:
            break
    return hits


def format_trigram_table(tables: Mapping[str, Sequence[TrigramAttribution]]) -> str:
    """Two-column text table: class, then its trigrams joined by semicolons."""
    if not tables:
        return "(no trigrams)\n"
    width = max(len(label) for label in tables)
    lines = []
    for label in sorted(tables):
        cell = "; ".join(" ".join(row.trigram) for row in tables[label])
        lines.append(f"{label.ljust(width)} | {cell}")
    return "\n".join(lines) + "\n"
