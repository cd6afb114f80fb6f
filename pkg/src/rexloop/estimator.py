"""Scikit-learn style wrapper around the ranking CNN pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from .align import build_bags
from .corpus import NO_RELATION, build_vocab, encode
from .errors import ContractError
from .kb import RelationSchema
from .model import (
    EMBEDDED_OTHER,
    Hyperparams,
    forward,
    load_checkpoint,
    predict as predict_index,
    save_checkpoint,
)
from .train import train_mil, train_supervised
from .validation import apply_labels, check_examples, derive_schema


class RankingCNNClassifier(BaseEstimator, ClassifierMixin):
    """Relation classifier over entity-tagged sentences.

    X is a sequence of ``TaggedExample``; y is optional and, when given,
    overrides the labels the examples carry (strings in ``rel(e1,e2)``
    form, or the bare negative class name). With ``mil=True`` training
    groups examples into entity-pair bags and each epoch updates on the
    highest-scoring member of every bag.
    """

    def __init__(self, dim_word: int = 50, dim_pos: int = 10, num_filters: int = 64,
                 clip_distance: int = 30, max_len: int = 100, gamma: float = 2.0,
                 margin_pos: float = 2.5, margin_neg: float = 0.5,
                 learning_rate: float = 0.025, epochs: int = 10, seed: int = 0,
                 mil: bool = False, other_mode: str = EMBEDDED_OTHER,
                 activation: str = "tanh", min_count: int = 1):
        self.dim_word = dim_word
        self.dim_pos = dim_pos
        self.num_filters = num_filters
        self.clip_distance = clip_distance
        self.max_len = max_len
        self.gamma = gamma
        self.margin_pos = margin_pos
        self.margin_neg = margin_neg
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.seed = seed
        self.mil = mil
        self.other_mode = other_mode
        self.activation = activation
        self.min_count = min_count

    def _hyper(self) -> Hyperparams:
        return Hyperparams(**self.get_params())

    def fit(self, X, y=None, schema: RelationSchema | None = None):
        hyper = self._hyper()
        examples = check_examples(X)
        negative = schema.negative if schema is not None else NO_RELATION
        if y is not None:
            examples = apply_labels(examples, y, negative=negative)
        check_examples(examples, require_labels=True)
        if schema is None:
            schema = derive_schema(examples)
        self.schema_ = schema
        self.hyper_ = hyper
        self.vocab_ = build_vocab(examples, min_count=hyper.min_count)
        self.classes_ = np.asarray(schema.class_labels(), dtype=object)

        encoded = [
            encode(ex, self.vocab_, clip=hyper.clip_distance, max_len=hyper.max_len,
                   gold=schema.class_index(ex.label, ex.direction))
            for ex in examples
        ]
        num_classes = len(self.classes_)
        if hyper.mil:
            by_id = {id(ex): enc for ex, enc in zip(examples, encoded)}
            bags = [[by_id[id(member)] for member in bag.examples]
                    for bag in build_bags(examples)]
            self.params_, self.history_ = train_mil(
                bags, hyper, len(self.vocab_), num_classes)
        else:
            self.params_, self.history_ = train_supervised(
                encoded, hyper, len(self.vocab_), num_classes)
        return self

    def _encode(self, X) -> list:
        check_is_fitted(self, "params_")
        examples = check_examples(X)
        return [encode(ex, self.vocab_, clip=self.hyper_.clip_distance,
                       max_len=self.hyper_.max_len) for ex in examples]

    def decision_function(self, X) -> np.ndarray:
        """Class scores, one row per example. In omitted mode the negative
        class has no score column."""
        encoded = self._encode(X)
        return np.stack([forward(self.params_, enc, activation=self.hyper_.activation).scores
                         for enc in encoded])

    def predict(self, X) -> np.ndarray:
        encoded = self._encode(X)
        indices = [predict_index(self.params_, enc, other_mode=self.hyper_.other_mode,
                                 activation=self.hyper_.activation)
                   for enc in encoded]
        return self.classes_[np.asarray(indices, dtype=np.intp)]

    def save(self, stem) -> None:
        """Write the fitted model as a checkpoint (JSON header plus a
        float64 weight sidecar)."""
        check_is_fitted(self, "params_")
        save_checkpoint(stem, self.params_, self.hyper_, list(self.classes_),
                        self.vocab_, schema_dict=self.schema_.to_dict())

    @classmethod
    def from_checkpoint(cls, stem) -> "RankingCNNClassifier":
        """Rebuild a fitted classifier from a saved checkpoint."""
        ckpt = load_checkpoint(stem)
        if ckpt.schema_dict is None:
            raise ContractError("checkpoint carries no relation schema")
        est = cls(**ckpt.hyper.to_dict())
        est.hyper_ = ckpt.hyper
        est.params_ = ckpt.params
        est.vocab_ = ckpt.vocab
        est.schema_ = RelationSchema.from_dict(ckpt.schema_dict)
        est.classes_ = np.asarray(ckpt.classes, dtype=object)
        return est
