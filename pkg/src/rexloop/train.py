"""Pairwise ranking loss, exact gradients, SGD, and the bag-level
multi-instance training loop."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .corpus import EncodedExample, Vocabulary
from .errors import ContractError
from .model import (
    OMITTED_OTHER,
    Hyperparams,
    ModelParams,
    _activations,
    forward,
    init_params,
    predict,
)


def _softplus(x: float) -> float:
    # log(1 + exp(x)) without overflow
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    ex = math.exp(x)
    return ex / (1.0 + ex)


def ranking_loss(scores: np.ndarray, gold: int, hyper: Hyperparams) -> tuple[float, int | None]:
    """Two-term ranking loss and the chosen competing class.

    The competing class is the highest-scoring class other than gold
    (ties to the lowest index). When gold is the negative class in
    omitted mode (``gold == len(scores)``) only the competing term is
    computed; when no competing class exists only the gold term is.
    """
    scores = np.asarray(scores, dtype=np.float64)
    n = len(scores)
    gold_is_scored = gold < n
    if gold < 0 or gold > n or (gold == n and hyper.other_mode != OMITTED_OTHER):
        raise ContractError(f"gold class {gold} out of range for {n} scored classes")

    neg: int | None
    if gold_is_scored:
        if n == 1:
            neg = None
        else:
            masked = scores.copy()
            masked[gold] = -np.inf
            neg = int(np.argmax(masked))
    else:
        neg = int(np.argmax(scores))

    loss = 0.0
    if gold_is_scored:
        loss += _softplus(hyper.gamma * (hyper.margin_pos - float(scores[gold])))
    if neg is not None:
        loss += _softplus(hyper.gamma * (hyper.margin_neg + float(scores[neg])))
    return loss, neg


@dataclass
class Gradients:
    """Loss gradients, same shapes as ModelParams, plus the loss value."""

    w_word: np.ndarray
    w_pos1: np.ndarray
    w_pos2: np.ndarray
    w_conv: np.ndarray
    b_conv: np.ndarray
    w_classes: np.ndarray
    loss: float

    def arrays(self) -> tuple[np.ndarray, ...]:
        return (self.w_word, self.w_pos1, self.w_pos2, self.w_conv, self.b_conv, self.w_classes)


def gradient(params: ModelParams, encoded: EncodedExample, gold: int,
             hyper: Hyperparams) -> Gradients:
    """Exact gradients of the ranking loss for one example.

    Max-pool routing and the competing-class choice are constants of the
    forward pass, so only argmax windows and the embedding rows they read
    receive nonzero gradients; the padding row is forced to zero.
    """
    windows, act = _activations(params, encoded, hyper.activation)
    n_win, d_c = act.shape
    argmax_pos = act.argmax(axis=0)
    pooled = act[argmax_pos, np.arange(d_c)]
    scores = params.w_classes @ pooled
    loss, neg = ranking_loss(scores, gold, hyper)

    g_scores = np.zeros_like(scores)
    if gold < len(scores):
        g_scores[gold] -= hyper.gamma * _sigmoid(hyper.gamma * (hyper.margin_pos - scores[gold]))
    if neg is not None:
        g_scores[neg] += hyper.gamma * _sigmoid(hyper.gamma * (hyper.margin_neg + scores[neg]))

    g_w_classes = np.outer(g_scores, pooled)
    g_pooled = params.w_classes.T @ g_scores

    g_act = np.zeros_like(act)
    g_act[argmax_pos, np.arange(d_c)] = g_pooled
    g_pre = g_act * (1.0 - act * act) if hyper.activation == "tanh" else g_act

    g_w_conv = g_pre.T @ windows
    g_b_conv = g_pre.sum(axis=0)

    g_windows = g_pre @ params.w_conv
    d = params.merged_dim
    g_padded = np.zeros((n_win + 2, d))
    g_padded[0:n_win] += g_windows[:, 0:d]
    g_padded[1 : n_win + 1] += g_windows[:, d : 2 * d]
    g_padded[2 : n_win + 2] += g_windows[:, 2 * d :]
    g_merged = g_padded[1 : n_win + 1]

    d_w = params.w_word.shape[1]
    d_p = params.w_pos1.shape[1]
    g_w_word = np.zeros_like(params.w_word)
    g_w_pos1 = np.zeros_like(params.w_pos1)
    g_w_pos2 = np.zeros_like(params.w_pos2)
    np.add.at(g_w_word, encoded.token_ids, g_merged[:, :d_w])
    np.add.at(g_w_pos1, encoded.pos1_ids, g_merged[:, d_w : d_w + d_p])
    np.add.at(g_w_pos2, encoded.pos2_ids, g_merged[:, d_w + d_p :])
    g_w_word[Vocabulary.PAD, :] = 0.0

    return Gradients(
        w_word=g_w_word, w_pos1=g_w_pos1, w_pos2=g_w_pos2,
        w_conv=g_w_conv, b_conv=g_b_conv, w_classes=g_w_classes,
        loss=loss,
    )


def sgd_step(params: ModelParams, grads: Gradients, learning_rate: float) -> None:
    for p, g in zip(params.arrays(), grads.arrays()):
        p -= learning_rate * g


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    train_accuracy: float
    elapsed_sec: float


@dataclass
class TrainHistory:
    epochs: list[EpochStats] = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps({
            "epoch": e.epoch, "mean_loss": e.mean_loss,
            "train_accuracy": e.train_accuracy, "elapsed_sec": e.elapsed_sec,
        }) for e in self.epochs]
        return "\n".join(lines) + ("\n" if lines else "")


def _require_gold(examples: Sequence[EncodedExample]) -> None:
    for ex in examples:
        if ex.gold is None:
            raise ContractError("training examples must carry a gold class index")


def _train_accuracy(params: ModelParams, examples: Sequence[EncodedExample],
                    hyper: Hyperparams) -> float:
    hits = sum(1 for ex in examples
               if predict(params, ex, hyper.other_mode, hyper.activation) == ex.gold)
    return hits / len(examples)


def train_supervised(examples: Sequence[EncodedExample], hyper: Hyperparams,
                     vocab_size: int, num_classes: int,
                     on_epoch: Callable[[int, int], None] | None = None,
                     ) -> tuple[ModelParams, TrainHistory]:
    """Plain per-example SGD; examples are reshuffled every epoch from the
    seeded generator, so runs are bit-reproducible given the seed."""
    if not examples:
        raise ContractError("cannot train on an empty example list")
    _require_gold(examples)
    rng = np.random.default_rng(hyper.seed)
    params = init_params(hyper, vocab_size, num_classes, rng)
    history = TrainHistory()
    for epoch in range(hyper.epochs):
        start = time.perf_counter()
        order = rng.permutation(len(examples))
        total_loss = 0.0
        for i in order:
            ex = examples[int(i)]
            grads = gradient(params, ex, ex.gold, hyper)
            sgd_step(params, grads, hyper.learning_rate)
            total_loss += grads.loss
        history.epochs.append(EpochStats(
            epoch=epoch,
            mean_loss=total_loss / len(examples),
            train_accuracy=_train_accuracy(params, examples, hyper),
            elapsed_sec=time.perf_counter() - start,
        ))
        if on_epoch is not None:
            on_epoch(epoch + 1, hyper.epochs)
    return params, history


def select_instance(params: ModelParams, bag: Sequence[EncodedExample],
                    hyper: Hyperparams) -> int:
    """Index of the bag member scoring highest for the bag's label; ties
    go to the lowest index.

    For negative-label bags in omitted mode, where the label has no score,
    the member whose best scored class is weakest is selected.
    """
    if not bag:
        raise ContractError("cannot select from an empty bag")
    gold = bag[0].gold
    member_scores = []
    for ex in bag:
        scores = forward(params, ex, activation=hyper.activation).scores
        if gold == len(scores):
            member_scores.append(-float(np.max(scores)))
        else:
            member_scores.append(float(scores[gold]))
    return int(np.argmax(member_scores))


def train_mil(bags: Sequence[Sequence[EncodedExample]], hyper: Hyperparams,
              vocab_size: int, num_classes: int,
              on_epoch: Callable[[int, int], None] | None = None,
              ) -> tuple[ModelParams, TrainHistory]:
    """Bag-level training: every epoch shuffles the bags, and each bag
    contributes one gradient step on its currently highest-scoring member.

    With singleton bags this reproduces ``train_supervised`` exactly.
    """
    if not bags:
        raise ContractError("cannot train on an empty bag list")
    flat: list[EncodedExample] = []
    for bag in bags:
        if not bag:
            raise ContractError("bags must be non-empty")
        golds = {ex.gold for ex in bag}
        if None in golds:
            raise ContractError("bag members must carry a gold class index")
        if len(golds) != 1:
            raise ContractError("all members of a bag must share its label")
        flat.extend(bag)
    rng = np.random.default_rng(hyper.seed)
    params = init_params(hyper, vocab_size, num_classes, rng)
    history = TrainHistory()
    for epoch in range(hyper.epochs):
        start = time.perf_counter()
        order = rng.permutation(len(bags))
        total_loss = 0.0
        for i in order:
            bag = bags[int(i)]
            chosen = bag[select_instance(params, bag, hyper)]
            grads = gradient(params, chosen, chosen.gold, hyper)
            sgd_step(params, grads, hyper.learning_rate)
            total_loss += grads.loss
        history.epochs.append(EpochStats(
            epoch=epoch,
            mean_loss=total_loss / len(bags),
            train_accuracy=_train_accuracy(params, flat, hyper),
            elapsed_sec=time.perf_counter() - start,
        ))
        if on_epoch is not None:
            on_epoch(epoch + 1, hyper.epochs)
    return params, history
