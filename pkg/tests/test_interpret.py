"""Attribution routing, completeness, trigram tables, and samples."""

import numpy as np
import pytest

from rexloop.corpus import (
    NO_RELATION,
    PAD_TOKEN,
    Direction,
    EncodedExample,
    build_vocab,
    encode,
)
from rexloop.errors import ContractError
from rexloop.interpret import (
    attribute,
    find_trigram_samples,
    format_trigram_table,
    top_trigrams,
    trigrams_from_jsonl,
    trigrams_to_jsonl,
    window_trigram,
)
from rexloop.kb import RelationSchema
from rexloop.model import ModelParams, forward, init_params

from conftest import make_example, micro_hyper, random_encoded, random_micro_model


class TestAttribute:
    def test_two_filter_hand_case(self):
        # one token, one window: zero conv weights leave only the biases,
        # so the class score decomposes as 0.5*0.6 + (-0.2)*0.5 = 0.2
        params = ModelParams(
            w_word=np.zeros((3, 2)),
            w_pos1=np.zeros((3, 1)),
            w_pos2=np.zeros((3, 1)),
            w_conv=np.zeros((2, 12)),
            b_conv=np.array([0.6, 0.5]),
            w_classes=np.array([[0.5, -0.2], [1.0, 1.0]]),
        )
        enc = EncodedExample(token_ids=np.array([1]),
                             pos1_ids=np.array([0]), pos2_ids=np.array([0]))
        values = attribute(params, enc, target_class=0, activation="identity")
        assert values.shape == (1,)
        assert values[0] == pytest.approx(0.2, abs=1e-12)
        assert forward(params, enc, activation="identity").scores[0] == pytest.approx(0.2)

    @pytest.mark.parametrize("activation", ["tanh", "identity"])
    def test_completeness(self, rng, activation):
        hyper = micro_hyper(activation=activation)
        params = random_micro_model(rng, hyper)
        for _ in range(20):
            enc = random_encoded(rng, hyper)
            scores = forward(params, enc, activation=activation).scores
            for target in range(params.num_scored_classes):
                values = attribute(params, enc, target, activation=activation)
                assert values.sum() == pytest.approx(float(scores[target]), abs=1e-10)

    def test_routing_concentrates_on_argmax_windows(self, rng):
        hyper = micro_hyper()
        params = random_micro_model(rng, hyper)
        enc = random_encoded(rng, hyper, length=8)
        trace = forward(params, enc)
        values = attribute(params, enc, target_class=0)
        used = set(trace.argmax_pos.tolist())
        for t in range(len(enc)):
            if t not in used:
                assert values[t] == 0.0

    def test_matches_manual_routing(self, rng):
        hyper = micro_hyper()
        params = random_micro_model(rng, hyper)
        enc = random_encoded(rng, hyper, length=6)
        trace = forward(params, enc)
        target = 3
        expected = np.zeros(len(enc))
        for f in range(params.num_filters):
            expected[trace.argmax_pos[f]] += params.w_classes[target, f] * trace.pooled[f]
        np.testing.assert_allclose(attribute(params, enc, target), expected, atol=1e-12)

    def test_target_out_of_range(self, rng):
        params = random_micro_model(rng, micro_hyper())
        enc = random_encoded(rng, micro_hyper())
        with pytest.raises(ContractError):
            attribute(params, enc, target_class=5)
        with pytest.raises(ContractError):
            attribute(params, enc, target_class=-1)


class TestWindowTrigram:
    def test_interior(self):
        assert window_trigram(("a", "b", "c", "d"), 2) == ("b", "c", "d")

    def test_boundaries(self):
        norms = ("a", "b", "c")
        assert window_trigram(norms, 0) == (PAD_TOKEN, "a", "b")
        assert window_trigram(norms, 2) == ("b", "c", PAD_TOKEN)

    def test_single_token_sentence(self):
        assert window_trigram(("only",), 0) == (PAD_TOKEN, "only", PAD_TOKEN)


def small_schema():
    return RelationSchema(relations=("ra", "rb", NO_RELATION), directional=False)


def labeled_examples():
    rows = [
        (["e1a", "loves", "sig", "x", "e2a"], (4, 4), "ra"),
        (["e1b", "sig", "near", "e2b"], (3, 3), "ra"),
        (["e1c", "hates", "e2c", "today"], (2, 2), "rb"),
        (["e1d", "void", "e2d"], (2, 2), NO_RELATION),
    ]
    return [make_example(words, (0, 0), e2, label, Direction.NONE, sid=f"s{i}")
            for i, (words, e2, label) in enumerate(rows)]


class TestTopTrigrams:
    def fitted(self, seed=0):
        examples = labeled_examples()
        schema = small_schema()
        vocab = build_vocab(examples)
        hyper = micro_hyper(seed=seed)
        params = init_params(hyper, len(vocab), len(schema.class_labels()),
                             np.random.default_rng(seed))
        # spread the weights so rankings are not dominated by init noise
        widen = np.random.default_rng(seed + 1)
        for arr in params.arrays():
            arr[:] = widen.uniform(-0.5, 0.5, size=arr.shape)
        params.w_word[0, :] = 0.0
        return examples, schema, vocab, hyper, params

    def test_tables_structure(self):
        examples, schema, vocab, hyper, params = self.fitted()
        tables = top_trigrams(params, examples, vocab, schema, hyper, k=3)
        assert set(tables) <= set(schema.class_labels())
        for label, rows in tables.items():
            assert len(rows) <= 3
            values = [r.value for r in rows]
            assert values == sorted(values, reverse=True)
            for r in rows:
                assert r.relation == label
                assert len(r.trigram) == 3
                assert r.count >= 1
                assert all(s.startswith("s") for s in r.samples)

    def test_per_class_sums_match_scores(self):
        examples, schema, vocab, hyper, params = self.fitted()
        tables = top_trigrams(params, examples, vocab, schema, hyper, k=1000)
        by_label_total = {label: sum(r.value for r in rows)
                          for label, rows in tables.items()}
        expected: dict[str, float] = {}
        for ex in examples:
            enc = encode(ex, vocab, clip=hyper.clip_distance, max_len=hyper.max_len)
            target = schema.class_index(ex.label, ex.direction)
            score = float(forward(params, enc, activation=hyper.activation).scores[target])
            label = schema.class_labels()[target]
            expected[label] = expected.get(label, 0.0) + score
        assert set(by_label_total) == set(expected)
        for label in expected:
            assert by_label_total[label] == pytest.approx(expected[label], abs=1e-9)

    def test_k_truncates(self):
        examples, schema, vocab, hyper, params = self.fitted()
        tables = top_trigrams(params, examples, vocab, schema, hyper, k=1)
        assert all(len(rows) == 1 for rows in tables.values())

    def test_against_predicted(self):
        examples, schema, vocab, hyper, params = self.fitted()
        tables = top_trigrams(params, examples, vocab, schema, hyper, k=5,
                              against="predicted")
        for label, rows in tables.items():
            assert rows

    def test_overlong_examples_skipped(self):
        examples, schema, vocab, hyper, params = self.fitted()
        import dataclasses
        hyper = dataclasses.replace(hyper, max_len=3)
        tables = top_trigrams(params, examples, vocab, schema, hyper, k=10)
        # only the 3-token negative example survives, and in embedded mode
        # the negative class is a real target
        assert set(tables) == {NO_RELATION}

    def test_omitted_mode_skips_negative_gold(self):
        examples = labeled_examples()
        schema = small_schema()
        vocab = build_vocab(examples)
        hyper = micro_hyper(other_mode="omitted")
        params = init_params(hyper, len(vocab), len(schema.class_labels()),
                             np.random.default_rng(0))
        tables = top_trigrams(params, examples, vocab, schema, hyper, k=10)
        assert NO_RELATION not in tables

    def test_contract_errors(self):
        examples, schema, vocab, hyper, params = self.fitted()
        with pytest.raises(ContractError):
            top_trigrams(params, examples, vocab, schema, hyper, k=0)
        with pytest.raises(ContractError):
            top_trigrams(params, examples, vocab, schema, hyper, k=3, against="oracle")
        unlabeled = [make_example(["a", "b"], (0, 0), (1, 1))]
        with pytest.raises(ContractError):
            top_trigrams(params, unlabeled, vocab, schema, hyper, k=3)

    def test_deterministic(self):
        examples, schema, vocab, hyper, params = self.fitted()
        t1 = top_trigrams(params, examples, vocab, schema, hyper, k=4)
        t2 = top_trigrams(params, examples, vocab, schema, hyper, k=4)
        assert trigrams_to_jsonl(t1) == trigrams_to_jsonl(t2)


class TestTrigramSerialization:
    def test_jsonl_round_trip(self):
        examples = labeled_examples()
        schema = small_schema()
        vocab = build_vocab(examples)
        hyper = micro_hyper()
        params = init_params(hyper, len(vocab), len(schema.class_labels()), 0)
        tables = top_trigrams(params, examples, vocab, schema, hyper, k=5)
        back = trigrams_from_jsonl(trigrams_to_jsonl(tables))
        assert set(back) == set(tables)
        for label in tables:
            assert back[label] == tables[label]

    def test_empty_tables(self):
        assert trigrams_to_jsonl({}) == ""
        assert trigrams_from_jsonl("") == {}

    def test_format_table_smoke(self):
        examples = labeled_examples()
        schema = small_schema()
        vocab = build_vocab(examples)
        hyper = micro_hyper()
        params = init_params(hyper, len(vocab), len(schema.class_labels()), 0)
        text = format_trigram_table(
            top_trigrams(params, examples, vocab, schema, hyper, k=2))
        assert "|" in text
        assert format_trigram_table({}) == "(no trigrams)\n"


class TestFindSamples:
    def test_finds_matching_windows(self):
        examples = labeled_examples()
        hits = find_trigram_samples(examples, "ra", ("e1a", "loves", "sig"))
        assert len(hits) == 1
        ex, pos = hits[0]
        assert ex.sentence.id == "s0"
        assert window_trigram(ex.sentence.norms, pos) == ("e1a", "loves", "sig")

    def test_respects_relation(self):
        examples = labeled_examples()
        assert find_trigram_samples(examples, "rb", ("e1a", "loves", "sig")) == []

    def test_boundary_trigram(self):
        examples = labeled_examples()
        hits = find_trigram_samples(examples, "ra", (PAD_TOKEN, "e1a", "loves"))
        assert len(hits) == 1 and hits[0][1] == 0

    def test_limit(self):
        ex = make_example(["a", "b", "c"], (0, 0), (2, 2), "ra", Direction.NONE)
        many = [ex] * 7
        assert len(find_trigram_samples(many, "ra", (PAD_TOKEN, "a", "b"), limit=4)) == 4

    def test_directional_label_form(self):
        ex = make_example(["a", "b", "c"], (0, 0), (2, 2), "rel", Direction.E1_TO_E2)
        assert find_trigram_samples([ex], "rel(e1,e2)", (PAD_TOKEN, "a", "b"))
        assert find_trigram_samples([ex], "rel", (PAD_TOKEN, "a", "b")) == []
