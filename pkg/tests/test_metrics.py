"""Scoring against a loop-based reference, length buckets, and effort."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rexloop.corpus import NO_RELATION, Direction, build_vocab
from rexloop.errors import ContractError
from rexloop.kb import RelationSchema
from rexloop.metrics import (
    LOW_SUPPORT_THRESHOLD,
    EffortCounts,
    MetricsReport,
    compute_metrics,
    effort_report,
    evaluate,
    format_metrics_table,
    length_analysis,
    length_analysis_csv,
    predict_labels,
)
from rexloop.model import init_params

from conftest import make_example, micro_hyper


def ref_metrics(golds, preds, num_classes, negative_index):
    """Straight-line reference: per-class counts by explicit iteration."""
    per = {}
    for c in range(num_classes):
        tp = sum(1 for g, p in zip(golds, preds) if g == c and p == c)
        fp = sum(1 for g, p in zip(golds, preds) if g != c and p == c)
        fn = sum(1 for g, p in zip(golds, preds) if g == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if precision + recall else 0.0)
        per[c] = (precision, recall, f1, tp + fn)
    scored = [c for c in range(num_classes) if c != negative_index]
    macro = tuple(sum(per[c][i] for c in scored) / len(scored) for i in range(3))
    return per, macro


class TestComputeMetrics:
    LABELS = ("ra", "rb", NO_RELATION)

    def test_hand_worked_case(self):
        report = compute_metrics([0, 0, 1, 2], [0, 1, 1, 2], self.LABELS, 2)
        ra, rb = report.per_class["ra"], report.per_class["rb"]
        assert (ra.precision, ra.recall) == (1.0, 0.5)
        assert ra.f1 == pytest.approx(2 / 3)
        assert (rb.precision, rb.recall) == (0.5, 1.0)
        assert rb.f1 == pytest.approx(2 / 3)
        assert report.macro_precision == pytest.approx(0.75)
        assert report.macro_recall == pytest.approx(0.75)
        assert report.macro_f1 == pytest.approx(2 / 3)
        assert (ra.support, rb.support) == (2, 1)
        assert report.num_examples == 4

    def test_perfect_predictions(self):
        report = compute_metrics([0, 1, 2, 1], [0, 1, 2, 1], self.LABELS, 2)
        assert report.macro_f1 == 1.0
        assert report.macro_precision == 1.0

    def test_unseen_class_scores_zero(self):
        report = compute_metrics([0, 2], [0, 2], self.LABELS, 2)
        rb = report.per_class["rb"]
        assert (rb.precision, rb.recall, rb.f1, rb.support) == (0.0, 0.0, 0.0, 0)

    def test_negative_class_excluded_from_macro(self):
        # the negative class is predicted perfectly, relations are not
        report = compute_metrics([2, 2, 0], [2, 2, 1], self.LABELS, 2)
        assert report.macro_f1 == 0.0
        assert report.per_class[NO_RELATION].f1 == 1.0

    def test_confusion_counts(self):
        report = compute_metrics([0, 0, 1], [1, 0, 1], self.LABELS, 2)
        assert report.confusion == {"ra": {"ra": 1, "rb": 1}, "rb": {"rb": 1}}

    def test_errors(self):
        with pytest.raises(ContractError):
            compute_metrics([0], [0, 1], self.LABELS, 2)
        with pytest.raises(ContractError):
            compute_metrics([], [], self.LABELS, 2)
        with pytest.raises(ContractError):
            compute_metrics([3], [0], self.LABELS, 2)
        with pytest.raises(ContractError):
            compute_metrics([0], [0], (NO_RELATION,), 0)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(2, 6), st.integers(1, 100), st.integers(0, 10_000))
    def test_matches_reference_on_random_instances(self, num_classes, n, seed):
        rng = np.random.default_rng(seed)
        golds = rng.integers(0, num_classes, size=n).tolist()
        preds = rng.integers(0, num_classes, size=n).tolist()
        labels = tuple(f"c{i}" for i in range(num_classes - 1)) + (NO_RELATION,)
        negative_index = num_classes - 1
        report = compute_metrics(golds, preds, labels, negative_index)
        per, macro = ref_metrics(golds, preds, num_classes, negative_index)
        for c, label in enumerate(labels):
            m = report.per_class[label]
            assert (m.precision, m.recall, m.f1, m.support) == pytest.approx(per[c])
        assert (report.macro_precision, report.macro_recall,
                report.macro_f1) == pytest.approx(macro)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)),
                    min_size=1, max_size=40),
           st.randoms())
    def test_permutation_invariance(self, pairs, rnd):
        golds, preds = zip(*pairs)
        before = compute_metrics(list(golds), list(preds), self.LABELS, 2).to_dict()
        shuffled = list(pairs)
        rnd.shuffle(shuffled)
        g2, p2 = zip(*shuffled)
        after = compute_metrics(list(g2), list(p2), self.LABELS, 2).to_dict()
        assert before == after

    def test_report_round_trip(self):
        report = compute_metrics([0, 1, 2], [0, 2, 2], self.LABELS, 2)
        back = MetricsReport.from_dict(json.loads(report.to_json()))
        assert back.to_dict() == report.to_dict()


def eval_fixture():
    schema = RelationSchema(relations=("ra", "rb", NO_RELATION), directional=False)
    examples = [
        make_example(["a", "x", "b"], (0, 0), (2, 2), "ra", Direction.NONE, sid="t0"),
        make_example(["a", "y", "b", "z"], (0, 0), (2, 2), "rb", Direction.NONE, sid="t1"),
        make_example(["a", "b"], (0, 0), (1, 1), NO_RELATION, Direction.NONE, sid="t2"),
    ]
    vocab = build_vocab(examples)
    hyper = micro_hyper()
    params = init_params(hyper, len(vocab), len(schema.class_labels()), 0)
    return schema, examples, vocab, hyper, params


class TestEvaluate:
    def test_consistent_with_compute_metrics(self):
        schema, examples, vocab, hyper, params = eval_fixture()
        report = evaluate(params, examples, vocab, schema, hyper)
        golds = [schema.class_index(ex.label, ex.direction) for ex in examples]
        preds = predict_labels(params, examples, vocab, hyper)
        expected = compute_metrics(golds, preds, schema.class_labels(),
                                   schema.negative_index)
        assert report.to_dict() == expected.to_dict()

    def test_forced_predictions_give_known_metrics(self):
        schema, examples, vocab, hyper, params = eval_fixture()
        # zero class rows force every prediction to class 0 ("ra")
        params.w_classes[:] = 0.0
        report = evaluate(params, examples, vocab, schema, hyper)
        assert report.per_class["ra"].recall == 1.0
        assert report.per_class["ra"].precision == pytest.approx(1 / 3)
        assert report.per_class["rb"].recall == 0.0

    def test_overlong_examples_skipped(self):
        import dataclasses
        schema, examples, vocab, hyper, params = eval_fixture()
        report = evaluate(params, examples, vocab, schema,
                          dataclasses.replace(hyper, max_len=3))
        assert report.num_examples == 2

    def test_all_overlong_rejected(self):
        import dataclasses
        schema, examples, vocab, hyper, params = eval_fixture()
        with pytest.raises(ContractError):
            evaluate(params, examples, vocab, schema,
                     dataclasses.replace(hyper, max_len=1))

    def test_unlabeled_rejected(self):
        schema, examples, vocab, hyper, params = eval_fixture()
        bad = examples + [make_example(["a", "b"], (0, 0), (1, 1))]
        with pytest.raises(ContractError):
            evaluate(params, bad, vocab, schema, hyper)

    def test_empty_rejected(self):
        schema, _, vocab, hyper, params = eval_fixture()
        with pytest.raises(ContractError):
            evaluate(params, [], vocab, schema, hyper)


class TestLengthAnalysis:
    def fixture(self):
        schema = RelationSchema(relations=("ra", NO_RELATION), directional=False)
        # lengths 2 and 3; zeroed class rows predict "ra" everywhere
        examples = (
            [make_example(["a", "b"], (0, 0), (1, 1), "ra", sid=f"a{i}") for i in range(4)]
            + [make_example(["a", "b"], (0, 0), (1, 1), NO_RELATION, sid=f"n{i}")
               for i in range(4)]
            + [make_example(["a", "b", "c"], (0, 0), (1, 1), "ra", sid=f"l{i}")
               for i in range(6)]
        )
        vocab = build_vocab(examples)
        hyper = micro_hyper()
        params = init_params(hyper, len(vocab), 2, 0)
        params.w_classes[:] = 0.0
        return schema, examples, vocab, hyper, params

    def test_bucket_shares(self):
        schema, examples, vocab, hyper, params = self.fixture()
        buckets = length_analysis(params, examples, vocab, schema, hyper)
        by_start = {b.start: b for b in buckets}
        assert set(by_start) == {2, 3}
        b2 = by_start[2]
        assert b2.count == 8
        assert b2.correct_share == pytest.approx(0.5)
        assert b2.wrong_share == pytest.approx(0.5)
        assert not b2.low_support
        b3 = by_start[3]
        assert b3.count == 6
        assert b3.correct_share == 1.0
        assert not b3.low_support
        assert LOW_SUPPORT_THRESHOLD == 6

    def test_low_support_flag(self):
        schema, examples, vocab, hyper, params = self.fixture()
        buckets = length_analysis(params, examples[:3], vocab, schema, hyper)
        assert all(b.low_support for b in buckets)

    def test_bucket_width_groups(self):
        schema, examples, vocab, hyper, params = self.fixture()
        buckets = length_analysis(params, examples, vocab, schema, hyper,
                                  bucket_width=5)
        assert [b.start for b in buckets] == [0]
        assert buckets[0].count == 14

    def test_shares_sum_to_one(self):
        schema, examples, vocab, hyper, params = self.fixture()
        for b in length_analysis(params, examples, vocab, schema, hyper):
            assert b.correct_share + b.wrong_share == pytest.approx(1.0)

    def test_bad_width_rejected(self):
        schema, examples, vocab, hyper, params = self.fixture()
        with pytest.raises(ContractError):
            length_analysis(params, examples, vocab, schema, hyper, bucket_width=0)

    def test_csv_format(self):
        schema, examples, vocab, hyper, params = self.fixture()
        csv = length_analysis_csv(length_analysis(params, examples, vocab, schema, hyper))
        lines = csv.strip().splitlines()
        assert lines[0] == "length,correct_share,wrong_share,count,low_support"
        assert lines[1].startswith("2,0.500000,0.500000,8,")


class TestEffort:
    def test_workflow_formulas(self):
        counts = EffortCounts(test_sentences=100, training_sentences=500,
                              result_check_sentences=40)
        assert effort_report("manual", counts) == 100
        assert effort_report("supervised", counts) == 540
        assert effort_report("distant", counts) == 40

    def test_unknown_workflow(self):
        with pytest.raises(ContractError):
            effort_report("psychic", EffortCounts())

    def test_negative_counts_rejected(self):
        with pytest.raises(ContractError):
            EffortCounts(test_sentences=-1)

    @given(st.integers(0, 10**6), st.integers(0, 10**6), st.integers(0, 10**6))
    def test_distant_never_exceeds_supervised(self, test_n, train_n, check_n):
        counts = EffortCounts(test_sentences=test_n, training_sentences=train_n,
                              result_check_sentences=check_n)
        assert effort_report("distant", counts) <= effort_report("supervised", counts)


class TestFormatting:
    def test_table_contains_macro_row(self):
        report = compute_metrics([0, 1], [0, 1], ("ra", NO_RELATION), 1)
        text = format_metrics_table(report)
        assert "macro (non-negative)" in text
        assert "ra" in text
