"""Invariants of the planted-pattern dataset generators."""

from collections import Counter

import pytest

from rexloop.align import build_bags
from rexloop.corpus import NO_RELATION, read_tagged
from rexloop.errors import ContractError
from rexloop.kb import load_schema
from rexloop.synth import (
    make_decoy_dataset,
    make_mil_dataset,
    make_plain_dataset,
    relation_name,
    signature,
    write_synth_dataset,
)


def contains_trigram(norms, trigram):
    return any(tuple(norms[i : i + 3]) == trigram for i in range(len(norms) - 2))


def planted_relation(ex):
    """The relation whose signature the sentence actually carries."""
    for tok in ex.sentence.norms:
        if tok.startswith("sig-"):
            return relation_name(int(tok.split("-")[1]))
    return None


class TestPlainDataset:
    def test_sizes_and_balance(self):
        data = make_plain_dataset(num_relations=3, per_relation_train=5,
                                  per_relation_test=4)
        assert len(data.train) == 15
        assert len(data.test) == 12
        assert Counter(ex.label for ex in data.train) == {
            relation_name(r): 5 for r in range(3)}

    def test_signature_planted_between_entities(self):
        data = make_plain_dataset(num_relations=2, per_relation_train=6,
                                  per_relation_test=2)
        for ex in data.train + data.test:
            tri_options = data.signatures[ex.label]
            norms = ex.sentence.norms
            assert any(contains_trigram(norms, tri) for tri in tri_options)
            first_sig = next(i for i, t in enumerate(norms) if t.startswith("sig-"))
            assert ex.span_e1.end < first_sig
            assert first_sig + 2 < ex.span_e2.start

    def test_entity_spans_are_single_tokens(self):
        data = make_plain_dataset(num_relations=2, per_relation_train=3,
                                  per_relation_test=1)
        for ex in data.train:
            assert ex.span_e1.width() == 1
            assert ex.span_e2.width() == 1

    def test_deterministic(self):
        a = make_plain_dataset(seed=7, per_relation_train=4, per_relation_test=2)
        b = make_plain_dataset(seed=7, per_relation_train=4, per_relation_test=2)
        assert [ex.sentence.norms for ex in a.train] == [ex.sentence.norms for ex in b.train]
        c = make_plain_dataset(seed=8, per_relation_train=4, per_relation_test=2)
        assert [ex.sentence.norms for ex in a.train] != [ex.sentence.norms for ex in c.train]

    def test_noise_flips_labels(self):
        data = make_plain_dataset(num_relations=3, per_relation_train=40,
                                  per_relation_test=1, noise=0.3, seed=1)
        flipped = sum(1 for ex in data.train if ex.label != planted_relation(ex))
        assert 0 < flipped < len(data.train)
        # flipped share lands near the requested rate
        assert flipped == pytest.approx(0.3 * len(data.train), rel=0.5)

    def test_schema_covers_labels(self):
        data = make_plain_dataset(num_relations=2, per_relation_train=2,
                                  per_relation_test=1)
        assert data.schema.directional is False
        assert data.schema.negative == NO_RELATION
        for ex in data.train:
            assert data.schema.knows(ex.label)

    def test_validation(self):
        with pytest.raises(ContractError):
            make_plain_dataset(num_relations=1)
        with pytest.raises(ContractError):
            make_plain_dataset(noise=1.0)


class TestMILDataset:
    def test_bag_structure(self):
        data = make_mil_dataset(num_relations=3, bags_per_relation=4,
                                members_per_bag=3, corrupt_fraction=0.5,
                                per_relation_test=2, seed=0)
        assert len(data.bags) == 12
        pairs = set()
        for bag in data.bags:
            assert len(bag) == 3
            labels = {ex.label for ex in bag}
            assert len(labels) == 1
            pair = (bag[0].e1_norms, bag[0].e2_norms)
            assert all((ex.e1_norms, ex.e2_norms) == pair for ex in bag)
            pairs.add(pair)
        assert len(pairs) == 12

    def test_corrupt_bags_keep_one_clean_member(self):
        data = make_mil_dataset(num_relations=3, bags_per_relation=4,
                                corrupt_fraction=0.5, per_relation_test=2)
        corrupted = 0
        for bag in data.bags:
            label = bag[0].label
            clean = [ex for ex in bag if planted_relation(ex) == label]
            assert clean, "every bag needs at least one clean member"
            if len(clean) < len(bag):
                corrupted += 1
        assert corrupted == 3 * 2  # round(0.5 * 4) per relation

    def test_group_by_pair_reconstructs_bags(self):
        data = make_mil_dataset(num_relations=2, bags_per_relation=3,
                                per_relation_test=2)
        rebuilt = build_bags(data.train)
        assert len(rebuilt) == len(data.bags)
        original = {(bag[0].e1_norms, bag[0].e2_norms): len(bag) for bag in data.bags}
        for bag in rebuilt:
            assert len(bag) == original[(bag.key.head, bag.key.tail)]

    def test_train_property_flattens(self):
        data = make_mil_dataset(num_relations=2, bags_per_relation=2,
                                members_per_bag=4, per_relation_test=2)
        assert len(data.train) == 2 * 2 * 4


class TestDecoyDataset:
    def test_decoys_carry_foreign_signature(self):
        data = make_decoy_dataset(num_relations=3, clean_per_relation=5,
                                  decoy_count=8, per_relation_test=2)
        decoys = [ex for ex in data.train
                  if ex.label == data.target and planted_relation(ex) != data.target]
        assert len(decoys) == 8
        for ex in decoys:
            assert contains_trigram(ex.sentence.norms, data.decoy_trigram)
        assert data.decoy_trigram == signature(1, 0)

    def test_clean_counts(self):
        data = make_decoy_dataset(num_relations=3, clean_per_relation=5,
                                  decoy_count=8, per_relation_test=2)
        clean = [ex for ex in data.train if planted_relation(ex) == ex.label]
        assert len(clean) == 15
        assert len(data.train) == 23
        assert len(data.test) == 6

    def test_single_signature_per_relation(self):
        data = make_decoy_dataset()
        assert all(len(v) == 1 for v in data.signatures.values())


class TestWriteSynth:
    def test_files_round_trip(self, tmp_path):
        data = make_plain_dataset(num_relations=2, per_relation_train=3,
                                  per_relation_test=2)
        write_synth_dataset(tmp_path / "ds", data)
        schema = load_schema(tmp_path / "ds" / "schema.txt")
        assert schema == data.schema
        train = read_tagged(tmp_path / "ds" / "train" / "examples.txt", schema=schema)
        assert len(train) == len(data.train)
        assert [ex.label for ex in train] == [ex.label for ex in data.train]
        sig_text = (tmp_path / "ds" / "signatures.tsv").read_text()
        assert "rel-0\tsig-0-0-a sig-0-0-b sig-0-0-c" in sig_text
