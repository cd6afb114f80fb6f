"""Relation triples, the relation schema, and KB cleaning rules."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import NO_RELATION, Direction, tokenize
from .errors import FormatError, SchemaError

REASON_ONE_LETTER = "one-letter"
REASON_CAPS_AND_DOTS = "caps-and-dots"
REASON_HEAD_EQUALS_TAIL = "head-equals-tail"


@dataclass(frozen=True)
class Triple:
    """A knowledge-base fact (head entity, relation, tail entity)."""

    head: str
    relation: str
    tail: str

    def head_norms(self) -> tuple[str, ...]:
        return tuple(t.norm for t in tokenize(self.head))

    def tail_norms(self) -> tuple[str, ...]:
        return tuple(t.norm for t in tokenize(self.tail))


@dataclass(frozen=True)
class RemovedTriple:
    triple: Triple
    reason: str


def load_triples(source: str | Path) -> list[Triple]:
    """Parse a ``head<TAB>relation<TAB>tail`` TSV; ``#`` lines are comments.

    Duplicates are preserved in file order.
    """
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    triples = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.rstrip("\n").split("\t")
        if len(fields) != 3 or not all(f.strip() for f in fields):
            raise FormatError("expected head<TAB>relation<TAB>tail", lineno)
        head, relation, tail = (f.strip() for f in fields)
        triples.append(Triple(head=head, relation=relation, tail=tail))
    return triples


def _is_one_letter(surface: str) -> bool:
    return len(surface) == 1 and surface.isalpha()


def _is_caps_and_dots(surface: str) -> bool:
    # all characters are uppercase letters or dots, with at least one of each
    has_dot = has_upper = False
    for ch in surface:
        if ch == ".":
            has_dot = True
        elif ch.isalpha() and ch.isupper():
            has_upper = True
        else:
            return False
    return has_dot and has_upper


def _removal_reason(triple: Triple) -> str | None:
    for entity in (triple.head, triple.tail):
        if _is_one_letter(entity):
            return REASON_ONE_LETTER
    for entity in (triple.head, triple.tail):
        if _is_caps_and_dots(entity):
            return REASON_CAPS_AND_DOTS
    if triple.head_norms() == triple.tail_norms():
        return REASON_HEAD_EQUALS_TAIL
    return None


def clean_triples(triples: Iterable[Triple]) -> tuple[list[Triple], list[RemovedTriple]]:
    """Split triples into (kept, removed-with-reason).

    Removes triples with a one-letter entity, an entity written purely as
    capital letters and dots, or a head equal to the tail after
    normalization. The rules are checked on the raw entity surface.
    """
    kept: list[Triple] = []
    removed: list[RemovedTriple] = []
    for triple in triples:
        reason = _removal_reason(triple)
        if reason is None:
            kept.append(triple)
        else:
            removed.append(RemovedTriple(triple, reason))
    return kept, removed


@dataclass(frozen=True)
class RelationSchema:
    """The relation inventory, the designated negative class, and any
    relations demoted into it.

    For a directional schema every non-negative relation contributes two
    classes, ``rel(e1,e2)`` and ``rel(e2,e1)``; the negative class is
    always the last class index.
    """

    relations: tuple[str, ...]
    directional: bool = True
    negative: str = NO_RELATION
    demoted: frozenset[str] = frozenset()

    def __post_init__(self):
        if len(set(self.relations)) != len(self.relations):
            raise SchemaError("relation ids must be unique")
        if self.negative not in self.relations:
            raise SchemaError(f"negative class {self.negative!r} missing from relations")
        if self.demoted & {self.negative}:
            raise SchemaError("the negative class cannot be demoted")

    def knows(self, relation: str) -> bool:
        return relation in self.relations or relation in self.demoted

    @property
    def non_negative(self) -> tuple[str, ...]:
        return tuple(r for r in self.relations if r != self.negative)

    def class_labels(self) -> tuple[str, ...]:
        labels: list[str] = []
        for rel in self.non_negative:
            if self.directional:
                labels.append(f"{rel}({Direction.E1_TO_E2.value})")
                labels.append(f"{rel}({Direction.E2_TO_E1.value})")
            else:
                labels.append(rel)
        labels.append(self.negative)
        return tuple(labels)

    @property
    def negative_index(self) -> int:
        return len(self.class_labels()) - 1

    def class_index(self, label: str | None, direction: Direction = Direction.NONE) -> int:
        """Map a (label, direction) pair to its class index.

        Demoted relations and absent labels map to the negative class.
        """
        if label is None or label == self.negative or label in self.demoted:
            return self.negative_index
        if label not in self.relations:
            raise SchemaError(f"unknown relation {label!r}")
        if self.directional:
            if direction is Direction.NONE:
                raise SchemaError(f"relation {label!r} requires a direction in a directional schema")
            return self.class_labels().index(f"{label}({direction.value})")
        return self.class_labels().index(label)

    def effective_relation(self, relation: str) -> str:
        """Relation id after demotion, for labeling aligned examples."""
        if not self.knows(relation):
            raise SchemaError(f"unknown relation {relation!r}")
        return self.negative if relation in self.demoted else relation

    def to_dict(self) -> dict:
        return {
            "relations": list(self.relations),
            "directional": self.directional,
            "negative": self.negative,
            "demoted": sorted(self.demoted),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RelationSchema":
        return cls(
            relations=tuple(data["relations"]),
            directional=bool(data["directional"]),
            negative=data["negative"],
            demoted=frozenset(data.get("demoted", ())),
        )


def designate_negative(schema: RelationSchema, demoted: set[str]) -> RelationSchema:
    """Fold the given relations into the negative class.

    Demoted relations drop out of the class list; downstream alignment
    labels their triples with the negative class, so no triple is lost.
    """
    if schema.negative in demoted:
        raise SchemaError("cannot demote the negative class")
    unknown = demoted - set(schema.relations)
    if unknown:
        raise SchemaError(f"cannot demote unknown relations: {sorted(unknown)}")
    if not demoted:
        return schema
    return replace(
        schema,
        relations=tuple(r for r in schema.relations if r not in demoted),
        demoted=schema.demoted | frozenset(demoted),
    )


def relabel_demoted(triples: Sequence[Triple], schema: RelationSchema) -> list[Triple]:
    """Rewrite demoted-relation triples to the negative class."""
    return [replace(t, relation=schema.effective_relation(t.relation)) for t in triples]


def load_schema(source: str | Path) -> RelationSchema:
    """Read a schema file: one relation id per line; header lines
    ``!negative <id>`` and ``!directional <true|false>`` are optional."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    negative = NO_RELATION
    directional = True
    relations: list[str] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("!"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "negative":
                negative = parts[1]
            elif len(parts) == 2 and parts[0] == "directional":
                if parts[1].lower() not in ("true", "false"):
                    raise FormatError("!directional takes true or false", lineno)
                directional = parts[1].lower() == "true"
            else:
                raise FormatError(f"unknown schema header {line!r}", lineno)
        else:
            relations.append(line)
    if not relations:
        raise FormatError("schema file lists no relations")
    if negative not in relations:
        relations.append(negative)
    return RelationSchema(relations=tuple(relations), directional=directional, negative=negative)


def write_schema(schema: RelationSchema) -> str:
    lines = [f"!negative {schema.negative}", f"!directional {str(schema.directional).lower()}"]
    lines.extend(schema.relations)
    return "\n".join(lines) + "\n"
