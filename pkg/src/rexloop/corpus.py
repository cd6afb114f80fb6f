"""Tokenization, tagged-sentence parsing, vocabulary and integer encoding.

Datasets come in two text formats:

* tagged-example files: records separated by blank lines, record line 1 is
  ``id<TAB>sentence with <e1>..</e1> and <e2>..</e2> markers``, line 2 is a
  relation label (``rel(e1,e2)``, ``rel(e2,e1)`` or ``no_relation``);
* plain corpora: one sentence per line, ``#`` comment lines ignored.
"""

from __future__ import annotations

import hashlib
import re
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ContractError, FormatError, LengthError, SchemaError

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
NO_RELATION = "no_relation"

# these characters always become single-character tokens
_SPLIT_PUNCT = frozenset(".,();:'\"")


class Direction(str, Enum):
    E1_TO_E2 = "e1,e2"
    E2_TO_E1 = "e2,e1"
    NONE = "none"


@dataclass(frozen=True)
class Token:
    surface: str
    norm: str

    @classmethod
    def of(cls, surface: str) -> "Token":
        return cls(surface=surface, norm=surface.lower())


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[Token, ...]

    def __post_init__(self):
        if not self.tokens:
            raise ContractError("sentence must have at least one token")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def norms(self) -> tuple[str, ...]:
        return tuple(t.norm for t in self.tokens)

    @property
    def surfaces(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)


@dataclass(frozen=True)
class EntitySpan:
    """Inclusive token span [start, end] with role 'e1' or 'e2'."""

    start: int
    end: int
    role: str

    def __post_init__(self):
        if self.role not in ("e1", "e2"):
            raise ContractError(f"span role must be e1 or e2, got {self.role!r}")
        if not (0 <= self.start <= self.end):
            raise ContractError(f"invalid span [{self.start}, {self.end}]")

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start <= other.end and other.start <= self.end

    def width(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class TaggedExample:
    """A sentence with two marked entity spans and an optional relation label.

    ``direction`` is NONE exactly when the label is absent or is the
    negative class; constructors (parser, aligner, generators) enforce it.
    """

    sentence: Sentence
    span_e1: EntitySpan
    span_e2: EntitySpan
    label: str | None = None
    direction: Direction = Direction.NONE

    def __post_init__(self):
        n = len(self.sentence)
        for span in (self.span_e1, self.span_e2):
            if span.end >= n:
                raise ContractError(f"span [{span.start}, {span.end}] outside sentence of length {n}")
        if self.span_e1.role != "e1" or self.span_e2.role != "e2":
            raise ContractError("span roles must be e1 and e2 respectively")
        if self.span_e1.overlaps(self.span_e2):
            raise ContractError("entity spans must not overlap")

    def span_norms(self, span: EntitySpan) -> tuple[str, ...]:
        return self.sentence.norms[span.start : span.end + 1]

    @property
    def e1_norms(self) -> tuple[str, ...]:
        return self.span_norms(self.span_e1)

    @property
    def e2_norms(self) -> tuple[str, ...]:
        return self.span_norms(self.span_e2)


def tokenize(raw: str) -> list[Token]:
    """Split text into tokens: whitespace-separated, with ``.,();:'"``
    always split off as single-character tokens."""
    if raw is None or not raw.strip():
        raise FormatError("empty or whitespace-only sentence")
    out: list[str] = []
    for chunk in raw.split():
        buf = ""
        for ch in chunk:
            if ch in _SPLIT_PUNCT:
                if buf:
                    out.append(buf)
                    buf = ""
                out.append(ch)
            else:
                buf += ch
        if buf:
            out.append(buf)
    return [Token.of(s) for s in out]


_E1_RE = re.compile(r"<e1>(.*?)</e1>", re.DOTALL)
_E2_RE = re.compile(r"<e2>(.*?)</e2>", re.DOTALL)
_LABEL_RE = re.compile(r"^(?P<name>[^()\s]+)\s*(?:\((?P<dir>e1,e2|e2,e1)\))?$")


def parse_label(text: str, negative: str = NO_RELATION,
                directional: bool | None = None) -> tuple[str, Direction]:
    """Parse ``rel(e1,e2)``, ``rel(e2,e1)`` or a bare relation name.

    ``directional`` True requires a direction suffix on non-negative
    labels, False forbids suffixes, and None accepts both forms.
    """
    m = _LABEL_RE.match(text.strip())
    if not m:
        raise FormatError(f"cannot parse relation label {text!r}")
    name, dir_part = m.group("name"), m.group("dir")
    if dir_part is None:
        if name != negative and directional is True:
            raise FormatError(
                f"relation {name!r} needs a direction suffix (e1,e2) or (e2,e1)"
            )
        return name, Direction.NONE
    if name == negative:
        raise FormatError(f"negative class {name!r} must not carry a direction")
    if directional is False:
        raise FormatError(
            f"relation {name!r} carries a direction but the schema is not directional")
    return name, Direction(dir_part)


def format_label(label: str, direction: Direction) -> str:
    if direction is Direction.NONE:
        return label
    return f"{label}({direction.value})"


def _marker_region(text: str, pattern: re.Pattern, tag: str, line: int) -> re.Match:
    matches = list(pattern.finditer(text))
    if len(matches) != 1:
        raise FormatError(f"expected exactly one <{tag}>..</{tag}> region, found {len(matches)}", line)
    return matches[0]


def parse_tagged(record: str, schema=None, first_line_number: int = 1,
                 negative: str | None = None) -> TaggedExample:
    """Parse one tagged record (sentence line plus optional label line).

    The sentence line may be prefixed with ``id<TAB>``; when the id is
    missing the first line number is used. ``schema`` (a RelationSchema),
    when given, validates the relation name and supplies the negative class.
    """
    if negative is None:
        negative = schema.negative if schema is not None else NO_RELATION
    lines = [ln for ln in record.splitlines() if ln.strip()]
    if not lines:
        raise FormatError("empty record", first_line_number)
    if len(lines) > 2:
        raise FormatError("record has more than two non-empty lines", first_line_number)

    sent_line = lines[0]
    if "\t" in sent_line:
        sent_id, text = sent_line.split("\t", 1)
        sent_id = sent_id.strip()
    else:
        sent_id, text = str(first_line_number), sent_line

    m1 = _marker_region(text, _E1_RE, "e1", first_line_number)
    m2 = _marker_region(text, _E2_RE, "e2", first_line_number)
    if max(m1.start(), m2.start()) < min(m1.end(), m2.end()):
        raise FormatError("entity markers nest or overlap", first_line_number)

    first, second = (m1, m2) if m1.start() < m2.start() else (m2, m1)
    segments = [
        (text[: first.start()], None),
        (first.group(1), "e1" if first is m1 else "e2"),
        (text[first.end() : second.start()], None),
        (second.group(1), "e1" if second is m1 else "e2"),
        (text[second.end() :], None),
    ]

    tokens: list[Token] = []
    spans: dict[str, EntitySpan] = {}
    for seg_text, role in segments:
        if not seg_text.strip():
            if role is not None:
                raise FormatError(f"empty <{role}> entity", first_line_number)
            continue
        seg_tokens = tokenize(seg_text)
        if role is not None:
            spans[role] = EntitySpan(len(tokens), len(tokens) + len(seg_tokens) - 1, role)
        tokens.extend(seg_tokens)

    label: str | None = None
    direction = Direction.NONE
    if len(lines) == 2:
        directional = schema.directional if schema is not None else None
        label, direction = parse_label(lines[1], negative=negative,
                                       directional=directional)
        if schema is not None and not schema.knows(label):
            raise SchemaError(f"unknown relation {label!r}")

    return TaggedExample(
        sentence=Sentence(id=sent_id, tokens=tuple(tokens)),
        span_e1=spans["e1"],
        span_e2=spans["e2"],
        label=label,
        direction=direction,
    )


def read_tagged(source: str | Path, schema=None) -> list[TaggedExample]:
    """Read a tagged-example file (blank-line separated records)."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    examples: list[TaggedExample] = []
    block: list[str] = []
    block_start = 1
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            if not block:
                block_start = lineno
            block.append(line)
        elif block:
            examples.append(parse_tagged("\n".join(block), schema=schema, first_line_number=block_start))
            block = []
    if block:
        examples.append(parse_tagged("\n".join(block), schema=schema, first_line_number=block_start))
    return examples


def write_tagged(examples: Iterable[TaggedExample]) -> str:
    """Render examples back to the tagged file format.

    Record ids repeat a sentence id with a ``#n`` suffix when several
    examples share the same source sentence.
    """
    seen: Counter[str] = Counter()
    records = []
    for ex in examples:
        base = ex.sentence.id
        seen[base] += 1
        rec_id = base if seen[base] == 1 else f"{base}#{seen[base]}"
        pieces = []
        for i, tok in enumerate(ex.sentence.tokens):
            piece = tok.surface
            if i == ex.span_e1.start:
                piece = "<e1>" + piece
            if i == ex.span_e2.start:
                piece = "<e2>" + piece
            if i == ex.span_e1.end:
                piece = piece + "</e1>"
            if i == ex.span_e2.end:
                piece = piece + "</e2>"
            pieces.append(piece)
        lines = [f"{rec_id}\t{' '.join(pieces)}"]
        if ex.label is not None:
            lines.append(format_label(ex.label, ex.direction))
        records.append("\n".join(lines))
    return "\n\n".join(records) + "\n"


def read_plain_corpus(source: str | Path) -> list[Sentence]:
    """Read a plain corpus: one sentence per line, ``#`` lines are comments."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    sentences = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        sentences.append(Sentence(id=str(lineno), tokens=tuple(tokenize(line))))
    return sentences


class Vocabulary:
    """Immutable token-to-index mapping with reserved PAD=0 and UNK=1."""

    PAD = 0
    UNK = 1

    def __init__(self, tokens: Sequence[str]):
        self.itos: tuple[str, ...] = (PAD_TOKEN, UNK_TOKEN, *tokens)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(self.itos)}
        if len(self.stoi) != len(self.itos):
            raise ContractError("vocabulary tokens must be unique")

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, norm: str) -> bool:
        return norm in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.itos == other.itos

    def index(self, norm: str) -> int:
        return self.stoi.get(norm, self.UNK)

    def content_hash(self) -> str:
        payload = "\n".join(self.itos).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


def build_vocab(examples: Sequence[TaggedExample], min_count: int = 1) -> Vocabulary:
    """Build a vocabulary over token norms.

    Norms with frequency >= min_count get indices from 2 up, ordered by
    descending frequency with lexicographic tie-break. Input order never
    affects the result.
    """
    if not examples:
        raise ContractError("cannot build a vocabulary from an empty example list")
    if min_count < 1:
        raise ContractError("min_count must be >= 1")
    freq: Counter[str] = Counter()
    for ex in examples:
        freq.update(ex.sentence.norms)
    kept = [t for t, c in freq.items() if c >= min_count]
    kept.sort(key=lambda t: (-freq[t], t))
    return Vocabulary(kept)


@dataclass(frozen=True)
class EncodedExample:
    """Integer encoding of one example: token ids plus clipped signed
    distances to each entity span, shifted into [0, 2K]."""

    token_ids: np.ndarray
    pos1_ids: np.ndarray
    pos2_ids: np.ndarray
    gold: int | None = None

    def __post_init__(self):
        if not (len(self.token_ids) == len(self.pos1_ids) == len(self.pos2_ids)):
            raise ContractError("encoded arrays must have equal length")

    def __len__(self) -> int:
        return len(self.token_ids)


def _position_ids(n: int, span: EntitySpan, clip: int) -> np.ndarray:
    t = np.arange(n)
    dist = t - span.start
    dist[(t >= span.start) & (t <= span.end)] = 0
    return np.clip(dist, -clip, clip) + clip


def encode(example: TaggedExample, vocab: Vocabulary, clip: int = 30,
           max_len: int = 100, gold: int | None = None) -> EncodedExample:
    """Encode an example against a vocabulary.

    Distances are measured to each span's start token and are zero inside
    the span, clipped to [-clip, clip] and shifted by +clip. Sentences
    longer than max_len raise LengthError; length filtering is the
    caller's job.
    """
    n = len(example.sentence)
    if n > max_len:
        raise LengthError(f"sentence of length {n} exceeds max_len={max_len}")
    token_ids = np.array([vocab.index(t) for t in example.sentence.norms], dtype=np.int64)
    return EncodedExample(
        token_ids=token_ids,
        pos1_ids=_position_ids(n, example.span_e1, clip).astype(np.int64),
        pos2_ids=_position_ids(n, example.span_e2, clip).astype(np.int64),
        gold=gold,
    )
