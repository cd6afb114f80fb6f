"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from rexloop.corpus import (
    Direction,
    EncodedExample,
    EntitySpan,
    Sentence,
    TaggedExample,
    Token,
)
from rexloop.model import Hyperparams, init_params


def make_example(words: list[str], e1: tuple[int, int], e2: tuple[int, int],
                 label: str | None = None, direction: Direction = Direction.NONE,
                 sid: str = "s1") -> TaggedExample:
    return TaggedExample(
        sentence=Sentence(id=sid, tokens=tuple(Token.of(w) for w in words)),
        span_e1=EntitySpan(e1[0], e1[1], "e1"),
        span_e2=EntitySpan(e2[0], e2[1], "e2"),
        label=label,
        direction=direction,
    )


def micro_hyper(**overrides) -> Hyperparams:
    base = dict(dim_word=8, dim_pos=4, num_filters=16, clip_distance=3,
                max_len=10, epochs=1, seed=0)
    base.update(overrides)
    return Hyperparams(**base)


def random_micro_model(rng: np.random.Generator, hyper: Hyperparams,
                       vocab_size: int = 20, num_classes: int = 5,
                       scale: float = 0.5):
    """Params at a magnitude where finite differences are meaningful."""
    params = init_params(hyper, vocab_size, num_classes, rng)
    for arr in params.arrays():
        arr[:] = rng.uniform(-scale, scale, size=arr.shape)
    params.w_word[0, :] = 0.0
    return params


def random_encoded(rng: np.random.Generator, hyper: Hyperparams,
                   vocab_size: int = 20, length: int | None = None,
                   gold: int | None = None) -> EncodedExample:
    n = int(length if length is not None else rng.integers(1, hyper.max_len + 1))
    width = 2 * hyper.clip_distance + 1
    return EncodedExample(
        token_ids=rng.integers(2, vocab_size, size=n).astype(np.int64),
        pos1_ids=rng.integers(0, width, size=n).astype(np.int64),
        pos2_ids=rng.integers(0, width, size=n).astype(np.int64),
        gold=gold,
    )


def numerical_gradients(params, encoded: EncodedExample, gold: int, hyper: Hyperparams,
                        eps: float = 1e-4) -> list[np.ndarray]:
    """Central finite differences of the ranking loss over every parameter
    entry, evaluating the loss through the public forward pass only."""
    from rexloop.model import forward
    from rexloop.train import ranking_loss

    def loss_at() -> float:
        scores = forward(params, encoded, activation=hyper.activation).scores
        return ranking_loss(scores, gold, hyper)[0]

    grads = []
    for arr in params.arrays():
        g = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = arr[idx]
            arr[idx] = orig + eps
            up = loss_at()
            arr[idx] = orig - eps
            down = loss_at()
            arr[idx] = orig
            g[idx] = (up - down) / (2.0 * eps)
        grads.append(g)
    return grads


def max_relative_error(analytic, numeric, floor: float = 1e-6) -> float:
    """Worst element-wise relative disagreement across parameter arrays."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the one-line acceptance results after the main report,
    where output capturing cannot swallow them."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
