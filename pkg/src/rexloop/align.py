"""Align KB triples against a tokenized corpus and group matches into bags."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import NO_RELATION, Direction, EntitySpan, Sentence, TaggedExample
from .errors import ContractError
from .kb import Triple


@dataclass(frozen=True)
class BagKey:
    head: tuple[str, ...]
    tail: tuple[str, ...]
    relation: str


@dataclass
class Bag:
    """All aligned sentences sharing one (head, tail, relation) key."""

    key: BagKey
    examples: list[TaggedExample]

    def __post_init__(self):
        if not self.examples:
            raise ContractError("bag must contain at least one example")

    def __len__(self) -> int:
        return len(self.examples)


def _occurrences(norms: Sequence[str], needle: tuple[str, ...]) -> list[int]:
    """Start indices of contiguous token-boundary matches of needle in norms."""
    n, k = len(norms), len(needle)
    return [i for i in range(n - k + 1) if tuple(norms[i : i + k]) == needle]


def _choose_spans(norms: Sequence[str], head: tuple[str, ...],
                  tail: tuple[str, ...]) -> tuple[int, int] | None:
    """First non-overlapping (head start, tail start) pair in lexicographic
    order of start positions, or None when no such pair exists."""
    head_occ = _occurrences(norms, head)
    if not head_occ:
        return None
    tail_occ = _occurrences(norms, tail)
    for hs in head_occ:
        he = hs + len(head) - 1
        for ts in tail_occ:
            te = ts + len(tail) - 1
            if he < ts or te < hs:
                return hs, ts
    return None


def align(sentences: Sequence[Sentence], triples: Sequence[Triple],
          max_len: int = 100, negative: str = NO_RELATION,
          directional: bool = True) -> list[TaggedExample]:
    """Label sentences by string-matching triple entities.

    For each (sentence, triple) pair where both entity token sequences
    occur without overlap, emits one example spanning the first such
    occurrence pair, labeled with the triple's relation (direction e1,e2
    when directional; negative-class triples get no direction). Sentences
    longer than max_len are skipped, duplicate triples are matched once,
    and the output is ordered by (sentence id, triple index).
    """
    distinct: dict[Triple, int] = {}
    for idx, triple in enumerate(triples):
        distinct.setdefault(triple, idx)
    prepared = sorted(
        ((idx, t, t.head_norms(), t.tail_norms()) for t, idx in distinct.items()),
        key=lambda item: item[0],
    )

    emitted: list[tuple[str, int, TaggedExample]] = []
    for sentence in sentences:
        if len(sentence) > max_len:
            continue
        norms = sentence.norms
        for idx, triple, head, tail in prepared:
            spans = _choose_spans(norms, head, tail)
            if spans is None:
                continue
            hs, ts = spans
            label = triple.relation
            direction = (Direction.E1_TO_E2 if directional and label != negative
                         else Direction.NONE)
            emitted.append((
                sentence.id,
                idx,
                TaggedExample(
                    sentence=sentence,
                    span_e1=EntitySpan(hs, hs + len(head) - 1, "e1"),
                    span_e2=EntitySpan(ts, ts + len(tail) - 1, "e2"),
                    label=label,
                    direction=direction,
                ),
            ))
    emitted.sort(key=lambda item: (item[0], item[1]))
    return [ex for _, _, ex in emitted]


def build_bags(examples: Sequence[TaggedExample]) -> list[Bag]:
    """Group labeled examples into (head norms, tail norms, relation) bags.

    Bags appear in order of first occurrence; duplicate sentence ids
    within one bag are dropped (first kept).
    """
    bags: dict[BagKey, list[TaggedExample]] = {}
    seen: dict[BagKey, set[str]] = {}
    order: list[BagKey] = []
    for ex in examples:
        if ex.label is None:
            raise ContractError("cannot bag an unlabeled example")
        key = BagKey(head=ex.e1_norms, tail=ex.e2_norms, relation=ex.label)
        if key not in bags:
            bags[key] = []
            seen[key] = set()
            order.append(key)
        if ex.sentence.id in seen[key]:
            continue
        seen[key].add(ex.sentence.id)
        bags[key].append(ex)
    return [Bag(key=k, examples=bags[k]) for k in order]


@dataclass
class AlignmentStats:
    examples_per_relation: dict[str, int] = field(default_factory=dict)
    bag_size_histogram: dict[int, int] = field(default_factory=dict)
    sentence_length_histogram: dict[int, int] = field(default_factory=dict)
    skipped_by_length: int = 0
    num_examples: int = 0
    num_bags: int = 0

    def to_dict(self) -> dict:
        return {
            "examples_per_relation": dict(sorted(self.examples_per_relation.items())),
            "bag_size_histogram": {str(k): v for k, v in sorted(self.bag_size_histogram.items())},
            "sentence_length_histogram": {str(k): v for k, v in sorted(self.sentence_length_histogram.items())},
            "skipped_by_length": self.skipped_by_length,
            "num_examples": self.num_examples,
            "num_bags": self.num_bags,
        }


def alignment_stats(examples: Sequence[TaggedExample], bags: Sequence[Bag],
                    skipped_by_length: int = 0) -> AlignmentStats:
    per_relation = Counter(ex.label for ex in examples)
    return AlignmentStats(
        examples_per_relation=dict(per_relation),
        bag_size_histogram=dict(Counter(len(b) for b in bags)),
        sentence_length_histogram=dict(Counter(len(ex.sentence) for ex in examples)),
        skipped_by_length=skipped_by_length,
        num_examples=len(examples),
        num_bags=len(bags),
    )


def bags_to_jsonl(bags: Iterable[Bag], example_ids: dict[int, str]) -> str:
    """Serialize bags as line-delimited JSON referencing example record ids.

    ``example_ids`` maps id(example) to the record id used in the tagged
    file written alongside (see ``dataset_io.write_dataset``).
    """
    lines = []
    for bag in bags:
        lines.append(json.dumps({
            "head": list(bag.key.head),
            "tail": list(bag.key.tail),
            "relation": bag.key.relation,
            "examples": [example_ids[id(ex)] for ex in bag.examples],
        }, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def bags_from_jsonl(text: str, examples_by_id: dict[str, TaggedExample]) -> list[Bag]:
    bags = []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        members = [examples_by_id[eid] for eid in rec["examples"]]
        bags.append(Bag(
            key=BagKey(head=tuple(rec["head"]), tail=tuple(rec["tail"]), relation=rec["relation"]),
            examples=members,
        ))
    return bags
