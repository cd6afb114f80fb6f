"""The sentence scoring network.

Per token, the word embedding and two entity-distance embeddings are
concatenated; a convolution over windows of three consecutive merged
vectors (zero-padded, so positions are preserved) feeds a global max pool
per filter; class scores are dot products of the pooled vector with
learned class embeddings, with no bias.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import EncodedExample, Vocabulary
from .errors import ContractError, FormatError

EMBEDDED_OTHER = "embedded"
OMITTED_OTHER = "omitted"

CHECKPOINT_FORMAT_VERSION = 1

# uniform init half-width for all parameter tables
_INIT_SCALE = 0.01


@dataclass(frozen=True)
class Hyperparams:
    """Model dimensions and training settings.

    ``other_mode`` controls whether the negative class owns a class
    embedding row ("embedded") or is predicted only when every scored
    class is negative ("omitted").
    """

    dim_word: int = 50
    dim_pos: int = 10
    num_filters: int = 64
    clip_distance: int = 30
    max_len: int = 100
    gamma: float = 2.0
    margin_pos: float = 2.5
    margin_neg: float = 0.5
    learning_rate: float = 0.025
    epochs: int = 10
    seed: int = 0
    mil: bool = False
    other_mode: str = EMBEDDED_OTHER
    activation: str = "tanh"
    min_count: int = 1

    def __post_init__(self):
        if self.gamma <= 0:
            raise ContractError("gamma must be positive")
        if self.num_filters < 1:
            raise ContractError("num_filters must be >= 1")
        if self.epochs < 0:
            raise ContractError("epochs must be >= 0")
        if self.other_mode not in (EMBEDDED_OTHER, OMITTED_OTHER):
            raise ContractError(f"unknown other_mode {self.other_mode!r}")
        if self.activation not in ("tanh", "identity"):
            raise ContractError(f"unknown activation {self.activation!r}")

    def to_dict(self) -> dict:
        return {
            "dim_word": self.dim_word, "dim_pos": self.dim_pos,
            "num_filters": self.num_filters, "clip_distance": self.clip_distance,
            "max_len": self.max_len, "gamma": self.gamma,
            "margin_pos": self.margin_pos, "margin_neg": self.margin_neg,
            "learning_rate": self.learning_rate, "epochs": self.epochs,
            "seed": self.seed, "mil": self.mil, "other_mode": self.other_mode,
            "activation": self.activation, "min_count": self.min_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        return cls(**d)

    @classmethod
    def full_scale(cls, **overrides) -> "Hyperparams":
        """The large preset: 1000 convolution filters."""
        return cls(**{"num_filters": 1000, **overrides})


@dataclass
class ModelParams:
    """All learnable arrays, float64 throughout. Row 0 of w_word is the
    padding row and stays zero through training."""

    w_word: np.ndarray      # |V| x dim_word
    w_pos1: np.ndarray      # (2K+1) x dim_pos
    w_pos2: np.ndarray      # (2K+1) x dim_pos
    w_conv: np.ndarray      # num_filters x 3*(dim_word + 2*dim_pos)
    b_conv: np.ndarray      # num_filters
    w_classes: np.ndarray   # num_scored_classes x num_filters

    @property
    def num_filters(self) -> int:
        return self.w_conv.shape[0]

    @property
    def num_scored_classes(self) -> int:
        return self.w_classes.shape[0]

    @property
    def merged_dim(self) -> int:
        return self.w_word.shape[1] + self.w_pos1.shape[1] + self.w_pos2.shape[1]

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.w_word, self.w_pos1, self.w_pos2, self.w_conv, self.b_conv, self.w_classes)

    def copy(self) -> "ModelParams":
        return ModelParams(*(a.copy() for a in self.arrays()))

    def allclose(self, other: "ModelParams", atol: float = 0.0) -> bool:
        return all(np.allclose(a, b, rtol=0.0, atol=atol)
                   for a, b in zip(self.arrays(), other.arrays()))


def num_scored_classes(num_classes: int, other_mode: str) -> int:
    """Rows of the class-embedding matrix for a class list of the given
    size (the negative class is always the last class index)."""
    if other_mode == OMITTED_OTHER:
        if num_classes < 2:
            raise ContractError("omitted mode needs at least one non-negative class")
        return num_classes - 1
    return num_classes


def init_params(hyper: Hyperparams, vocab_size: int, num_classes: int,
                rng: np.random.Generator | int | None = None) -> ModelParams:
    """Draw all entries uniform(-0.01, 0.01) from a seeded generator and
    zero the padding row."""
    if vocab_size < 2 or num_classes < 1:
        raise ContractError("vocab_size and num_classes must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(hyper.seed if rng is None else rng)
    merged = hyper.dim_word + 2 * hyper.dim_pos
    scored = num_scored_classes(num_classes, hyper.other_mode)

    def draw(*shape):
        return rng.uniform(-_INIT_SCALE, _INIT_SCALE, size=shape)

    params = ModelParams(
        w_word=draw(vocab_size, hyper.dim_word),
        w_pos1=draw(2 * hyper.clip_distance + 1, hyper.dim_pos),
        w_pos2=draw(2 * hyper.clip_distance + 1, hyper.dim_pos),
        w_conv=draw(hyper.num_filters, 3 * merged),
        b_conv=draw(hyper.num_filters),
        w_classes=draw(scored, hyper.num_filters),
    )
    params.w_word[Vocabulary.PAD, :] = 0.0
    return params


@dataclass(frozen=True)
class ForwardTrace:
    """Scores plus the pooling evidence needed for attribution: for each
    filter, the pooled activation and the window index it came from."""

    scores: np.ndarray       # num_scored_classes
    pooled: np.ndarray       # num_filters
    argmax_pos: np.ndarray   # num_filters, window index per filter


def _merged_matrix(params: ModelParams, encoded: EncodedExample) -> np.ndarray:
    return np.concatenate([
        params.w_word[encoded.token_ids],
        params.w_pos1[encoded.pos1_ids],
        params.w_pos2[encoded.pos2_ids],
    ], axis=1)


def _window_matrix(merged: np.ndarray) -> np.ndarray:
    """Stack [m(t-1); m(t); m(t+1)] rows with zero vectors past the ends;
    one window per token position."""
    n, d = merged.shape
    padded = np.zeros((n + 2, d))
    padded[1 : n + 1] = merged
    return np.concatenate([padded[0:n], padded[1 : n + 1], padded[2 : n + 2]], axis=1)


def _activations(params: ModelParams, encoded: EncodedExample, activation: str) -> tuple[np.ndarray, np.ndarray]:
    merged = _merged_matrix(params, encoded)
    windows = _window_matrix(merged)
    pre = windows @ params.w_conv.T + params.b_conv
    act = np.tanh(pre) if activation == "tanh" else pre
    return windows, act


def forward(params: ModelParams, encoded: EncodedExample, activation: str = "tanh") -> ForwardTrace:
    """Score one encoded sentence. Max-pool ties break toward the lowest
    window index so attribution is deterministic."""
    if len(encoded) < 1:
        raise ContractError("cannot run forward on an empty example")
    if encoded.token_ids.max() >= params.w_word.shape[0]:
        raise ContractError("token id out of vocabulary range")
    _, act = _activations(params, encoded, activation)
    argmax_pos = act.argmax(axis=0)
    pooled = act[argmax_pos, np.arange(act.shape[1])]
    return ForwardTrace(scores=params.w_classes @ pooled, pooled=pooled, argmax_pos=argmax_pos)


def predict(params: ModelParams, encoded: EncodedExample,
            other_mode: str = EMBEDDED_OTHER, activation: str = "tanh") -> int:
    """Predicted class index; ties go to the lowest index.

    In omitted mode the negative class is index ``num_scored_classes``
    (one past the scored classes) and is predicted when every score is
    negative.
    """
    scores = forward(params, encoded, activation=activation).scores
    if other_mode == OMITTED_OTHER and bool(np.all(scores < 0.0)):
        return params.num_scored_classes
    return int(np.argmax(scores))


_ARRAY_ORDER = ("w_word", "w_pos1", "w_pos2", "w_conv", "b_conv", "w_classes")


def save_checkpoint(stem: str | Path, params: ModelParams, hyper: Hyperparams,
                    classes: Sequence[str], vocab: Vocabulary,
                    schema_dict: dict | None = None) -> None:
    """Write ``<stem>.json`` (header) and ``<stem>.bin`` (little-endian
    float64 row-major arrays, concatenated in a fixed order)."""
    stem = Path(stem)
    header = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "dims": {name: list(getattr(params, name).shape) for name in _ARRAY_ORDER},
        "classes": list(classes),
        "vocab": list(vocab.itos),
        "vocab_sha256": vocab.content_hash(),
        "hyper": hyper.to_dict(),
    }
    if schema_dict is not None:
        header["schema"] = schema_dict
    payload = b"".join(np.ascontiguousarray(getattr(params, name), dtype="<f8").tobytes()
                       for name in _ARRAY_ORDER)
    stem.with_suffix(stem.suffix + ".bin").write_bytes(payload)
    stem.with_suffix(stem.suffix + ".json").write_text(
        json.dumps(header, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


@dataclass
class Checkpoint:
    params: ModelParams
    hyper: Hyperparams
    classes: list[str]
    vocab: Vocabulary
    schema_dict: dict | None = None


def load_checkpoint(stem: str | Path) -> Checkpoint:
    stem = Path(stem)
    header_path = stem.with_suffix(stem.suffix + ".json")
    bin_path = stem.with_suffix(stem.suffix + ".bin")
    header = json.loads(header_path.read_text(encoding="utf-8"))
    if header.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise FormatError(f"unsupported checkpoint format {header.get('format_version')!r}")
    raw = bin_path.read_bytes()
    arrays = {}
    offset = 0
    for name in _ARRAY_ORDER:
        shape = tuple(header["dims"][name])
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset).reshape(shape)
        arrays[name] = arr.astype(np.float64, copy=True)
        offset += count * 8
    if offset != len(raw):
        raise FormatError("checkpoint binary size does not match header dims")
    itos = header["vocab"]
    vocab = Vocabulary(itos[2:])
    if vocab.content_hash() != header["vocab_sha256"]:
        raise FormatError("vocabulary content hash mismatch")
    return Checkpoint(
        params=ModelParams(**arrays),
        hyper=Hyperparams.from_dict(header["hyper"]),
        classes=list(header["classes"]),
        vocab=vocab,
        schema_dict=header.get("schema"),
    )
