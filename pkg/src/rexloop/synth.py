"""Synthetic planted-pattern datasets.

Every relation gets a set of signature trigrams; a sentence expresses a
relation by containing one signature as three consecutive tokens between
the two entity mentions. The generators are seeded and deterministic, so
experiments built on them are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .corpus import NO_RELATION, Direction, EntitySpan, Sentence, TaggedExample, Token
from .errors import ContractError
from .kb import RelationSchema, write_schema
from .dataset_io import write_dataset

Trigram = tuple[str, str, str]

_FILLERS = tuple(f"w{i:02d}" for i in range(30))
_ENTITIES = tuple(f"name{i:02d}" for i in range(50))


def relation_name(r: int) -> str:
    return f"rel-{r}"


def signature(r: int, j: int) -> Trigram:
    return (f"sig-{r}-{j}-a", f"sig-{r}-{j}-b", f"sig-{r}-{j}-c")


def make_schema(num_relations: int) -> RelationSchema:
    return RelationSchema(
        relations=tuple(relation_name(r) for r in range(num_relations)) + (NO_RELATION,),
        directional=False,
    )


def _tokens(words: list[str]) -> list[Token]:
    return [Token.of(w) for w in words]


def _sentence(rng: np.random.Generator, sid: str, middle: list[str],
              label: str | None, e1: str | None = None, e2: str | None = None,
              ) -> TaggedExample:
    """Assemble ``fill* E1 fill+ <middle> fill+ E2 fill*`` around the
    planted middle tokens (possibly empty)."""
    if e1 is None:
        i1, i2 = rng.choice(len(_ENTITIES), size=2, replace=False)
        e1, e2 = _ENTITIES[int(i1)], _ENTITIES[int(i2)]

    def fill(lo: int, hi: int) -> list[str]:
        count = int(rng.integers(lo, hi + 1))
        return [_FILLERS[int(i)] for i in rng.integers(0, len(_FILLERS), size=count)]

    words: list[str] = []
    words += fill(0, 2)
    e1_start = len(words)
    words.append(e1)
    words += fill(1, 2)
    words += middle
    words += fill(1, 2)
    e2_start = len(words)
    words.append(e2)
    words += fill(0, 2)
    return TaggedExample(
        sentence=Sentence(id=sid, tokens=tuple(_tokens(words))),
        span_e1=EntitySpan(e1_start, e1_start, role="e1"),
        span_e2=EntitySpan(e2_start, e2_start, role="e2"),
        label=label,
        direction=Direction.NONE,
    )


@dataclass
class SynthData:
    train: list[TaggedExample]
    test: list[TaggedExample]
    schema: RelationSchema
    signatures: dict[str, list[Trigram]]


def make_plain_dataset(num_relations: int = 5, per_relation_train: int = 40,
                       per_relation_test: int = 20, noise: float = 0.0,
                       seed: int = 0, signatures_per_relation: int = 3) -> SynthData:
    """Clean planted-pattern classification data.

    ``noise`` is the fraction of training sentences whose label is
    flipped to a uniformly random other relation.
    """
    if num_relations < 2:
        raise ContractError("need at least 2 relations")
    if not (0.0 <= noise < 1.0):
        raise ContractError("noise must be in [0, 1)")
    rng = np.random.default_rng(seed)
    schema = make_schema(num_relations)
    sigs = {relation_name(r): [signature(r, j) for j in range(signatures_per_relation)]
            for r in range(num_relations)}

    def build(split: str, per_relation: int) -> list[TaggedExample]:
        out = []
        for r in range(num_relations):
            label = relation_name(r)
            for i in range(per_relation):
                sig = sigs[label][int(rng.integers(0, signatures_per_relation))]
                out.append(_sentence(rng, f"{split}-{label}-{i}", list(sig), label))
        return out

    train = build("train", per_relation_train)
    if noise > 0.0:
        for i, ex in enumerate(train):
            if rng.random() >= noise:
                continue
            r = int(ex.label.rsplit("-", 1)[1])
            wrong = (r + 1 + int(rng.integers(0, num_relations - 1))) % num_relations
            train[i] = replace(ex, label=relation_name(wrong))
    test = build("test", per_relation_test)
    return SynthData(train=train, test=test, schema=schema, signatures=sigs)


@dataclass
class MILSynthData:
    bags: list[list[TaggedExample]]
    test: list[TaggedExample]
    schema: RelationSchema
    signatures: dict[str, list[Trigram]]

    @property
    def train(self) -> list[TaggedExample]:
        return [ex for bag in self.bags for ex in bag]


def make_mil_dataset(num_relations: int = 5, bags_per_relation: int = 12,
                     members_per_bag: int = 3, corrupt_fraction: float = 0.3,
                     per_relation_test: int = 20, seed: int = 0) -> MILSynthData:
    """Entity-pair bags where a fraction of bags carry noise members.

    Every bag keeps at least one clean member (a sentence with the bag
    relation's signature); noise members carry another relation's
    signature but inherit the bag label. Each bag has its own entity
    pair, so grouping by entity pair reconstructs the bags exactly.
    """
    rng = np.random.default_rng(seed)
    schema = make_schema(num_relations)
    sigs = {relation_name(r): [signature(r, j) for j in range(3)]
            for r in range(num_relations)}
    bags: list[list[TaggedExample]] = []
    bag_no = 0
    for r in range(num_relations):
        label = relation_name(r)
        corrupt_flags = [i < int(round(corrupt_fraction * bags_per_relation))
                         for i in range(bags_per_relation)]
        for b in range(bags_per_relation):
            e1, e2 = f"head{bag_no:03d}", f"tail{bag_no:03d}"
            bag_no += 1
            members = []
            for m in range(members_per_bag):
                corrupt_member = corrupt_flags[b] and m > 0
                if corrupt_member:
                    other = (r + 1 + int(rng.integers(0, num_relations - 1))) % num_relations
                    sig = sigs[relation_name(other)][int(rng.integers(0, 3))]
                else:
                    sig = sigs[label][int(rng.integers(0, 3))]
                members.append(_sentence(
                    rng, f"bag{bag_no - 1:03d}-{m}", list(sig), label, e1=e1, e2=e2))
            bags.append(members)
    order = rng.permutation(len(bags))
    bags = [bags[int(i)] for i in order]

    test = []
    for r in range(num_relations):
        label = relation_name(r)
        for i in range(per_relation_test):
            sig = sigs[label][int(rng.integers(0, 3))]
            test.append(_sentence(rng, f"test-{label}-{i}", list(sig), label))
    return MILSynthData(bags=bags, test=test, schema=schema, signatures=sigs)


@dataclass
class DecoySynthData:
    train: list[TaggedExample]
    test: list[TaggedExample]
    schema: RelationSchema
    signatures: dict[str, list[Trigram]]
    target: str
    decoy_trigram: Trigram


def make_decoy_dataset(num_relations: int = 3, clean_per_relation: int = 40,
                       decoy_count: int = 80, per_relation_test: int = 20,
                       seed: int = 0) -> DecoySynthData:
    """Noise injection for the feedback loop: the target relation's
    training set gains decoy sentences that actually carry a second
    relation's signature. Banning that trigram for the target relation
    removes exactly the decoys.

    Each relation here has a single signature, so the conflict covers
    the whole of the second relation's test data.
    """
    if num_relations < 2:
        raise ContractError("need at least 2 relations")
    rng = np.random.default_rng(seed)
    schema = make_schema(num_relations)
    sigs = {relation_name(r): [signature(r, 0)] for r in range(num_relations)}
    target = relation_name(0)
    decoy = sigs[relation_name(1)][0]

    train: list[TaggedExample] = []
    for r in range(num_relations):
        label = relation_name(r)
        for i in range(clean_per_relation):
            train.append(_sentence(rng, f"train-{label}-{i}", list(sigs[label][0]), label))
    for i in range(decoy_count):
        train.append(_sentence(rng, f"decoy-{i}", list(decoy), target))
    order = rng.permutation(len(train))
    train = [train[int(i)] for i in order]

    test = []
    for r in range(num_relations):
        label = relation_name(r)
        for i in range(per_relation_test):
            test.append(_sentence(rng, f"test-{label}-{i}", list(sigs[label][0]), label))
    return DecoySynthData(train=train, test=test, schema=schema, signatures=sigs,
                          target=target, decoy_trigram=decoy)


def write_synth_dataset(out_dir: str | Path, data: SynthData) -> None:
    """Emit schema.txt plus train/ and test/ dataset directories."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "schema.txt").write_text(write_schema(data.schema), encoding="utf-8")
    write_dataset(out / "train", data.train)
    write_dataset(out / "test", data.test)
    sig_lines = []
    for label in sorted(data.signatures):
        for tri in data.signatures[label]:
            sig_lines.append(f"{label}\t{' '.join(tri)}")
    (out / "signatures.tsv").write_text("\n".join(sig_lines) + "\n", encoding="utf-8")
