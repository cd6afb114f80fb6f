"""Input-validation helpers shared by the estimator and the pipeline
entry points."""

from __future__ import annotations

from dataclasses import replace
from typing import Sequence

from .corpus import NO_RELATION, Direction, TaggedExample, parse_label
from .errors import ContractError
from .kb import RelationSchema


def check_examples(X, require_labels: bool = False) -> list[TaggedExample]:
    """Normalize fit/predict input to a non-empty list of tagged examples."""
    try:
        examples = list(X)
    except TypeError:
        raise ContractError(f"expected an iterable of tagged examples, got {type(X).__name__}")
    if not examples:
        raise ContractError("expected at least one example")
    for i, ex in enumerate(examples):
        if not isinstance(ex, TaggedExample):
            raise ContractError(f"item {i} is {type(ex).__name__}, expected TaggedExample")
        if require_labels and ex.label is None:
            raise ContractError(f"item {i} ({ex.sentence.id!r}) is unlabeled")
    return examples


def apply_labels(examples: Sequence[TaggedExample], y,
                 negative: str = NO_RELATION) -> list[TaggedExample]:
    """Replace example labels with the strings in y, parsed in the same
    ``rel(e1,e2)`` form the writers emit."""
    labels = list(y)
    if len(labels) != len(examples):
        raise ContractError(f"y has {len(labels)} labels for {len(examples)} examples")
    out = []
    for ex, raw in zip(examples, labels):
        label, direction = parse_label(str(raw), negative=negative)
        out.append(replace(ex, label=label, direction=direction))
    return out


def derive_schema(examples: Sequence[TaggedExample],
                  negative: str = NO_RELATION) -> RelationSchema:
    """Build a schema from the labels present in the data.

    The schema is directional when any example carries a direction;
    relations are listed in sorted order with the negative class added.
    """
    seen: set[str] = set()
    directional = False
    for ex in examples:
        if ex.label is None:
            raise ContractError(f"example {ex.sentence.id!r} is unlabeled")
        if ex.label != negative:
            seen.add(ex.label)
            if ex.direction is not Direction.NONE:
                directional = True
    relations = tuple(sorted(seen)) + (negative,)
    return RelationSchema(relations=relations, directional=directional, negative=negative)


def check_positive(name: str, value: float) -> None:
    if value <= 0:
        raise ContractError(f"{name} must be > 0, got {value}")
