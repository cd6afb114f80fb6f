"""Batch command line: compose the pipeline through files.

Every subcommand reads and writes plain files, so any chain of steps is
reproducible and independently inspectable. Exit codes: 0 success, 1
operation error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .align import Bag, align, alignment_stats, bags_from_jsonl, build_bags
from .corpus import build_vocab, encode, read_plain_corpus
from .dataset_io import read_dataset, write_dataset
from .errors import RexloopError
from .estimator import RankingCNNClassifier
from .feedback import (
    SCOPE_GLOBAL,
    SCOPE_RELATION,
    Workspace,
    apply_verdicts,
    parse_banned,
)
from .interpret import format_trigram_table, top_trigrams, trigrams_to_jsonl
from .kb import RelationSchema, clean_triples, load_schema, load_triples, relabel_demoted
from .metrics import evaluate, format_metrics_table
from .model import Hyperparams, save_checkpoint
from .synth import make_plain_dataset, write_synth_dataset
from .train import train_mil, train_supervised
from .validation import derive_schema


def _hyper_from_args(args: argparse.Namespace) -> Hyperparams:
    return Hyperparams(
        dim_word=args.dim_word, dim_pos=args.dim_pos, num_filters=args.num_filters,
        clip_distance=args.clip_distance, max_len=args.max_len, gamma=args.gamma,
        margin_pos=args.margin_pos, margin_neg=args.margin_neg,
        learning_rate=args.learning_rate, epochs=args.epochs, seed=args.seed,
        mil=args.mil, other_mode=args.other_mode, activation=args.activation,
        min_count=args.min_count,
    )


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    d = Hyperparams()
    p.add_argument("--dim-word", type=int, default=d.dim_word)
    p.add_argument("--dim-pos", type=int, default=d.dim_pos)
    p.add_argument("--num-filters", type=int, default=d.num_filters)
    p.add_argument("--clip-distance", type=int, default=d.clip_distance)
    p.add_argument("--max-len", type=int, default=d.max_len)
    p.add_argument("--gamma", type=float, default=d.gamma)
    p.add_argument("--margin-pos", type=float, default=d.margin_pos)
    p.add_argument("--margin-neg", type=float, default=d.margin_neg)
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--other-mode", choices=("embedded", "omitted"), default=d.other_mode)
    p.add_argument("--activation", choices=("tanh", "identity"), default=d.activation)
    p.add_argument("--min-count", type=int, default=d.min_count)


def _cmd_align(args: argparse.Namespace) -> int:
    schema = load_schema(Path(args.schema))
    triples = load_triples(Path(args.kb))
    triples, removed = clean_triples(triples)
    triples = relabel_demoted(triples, schema)
    sentences = read_plain_corpus(Path(args.corpus))
    skipped = sum(1 for s in sentences if len(s) > args.max_len)
    examples = align(sentences, triples, max_len=args.max_len,
                     negative=schema.negative, directional=schema.directional)
    bags = build_bags(examples)
    write_dataset(args.out, examples, bags=bags)
    stats = alignment_stats(examples, bags, skipped_by_length=skipped)
    report = stats.to_dict()
    report["triples_removed_by_cleaning"] = len(removed)
    print(json.dumps(report, indent=2))
    return 0


def _read_training_data(args: argparse.Namespace, schema: RelationSchema | None):
    examples, bags = read_dataset(args.data, schema=schema)
    if schema is None:
        schema = derive_schema(examples)
    if args.bags:
        by_id = {ex.sentence.id: ex for ex in examples}
        bags = bags_from_jsonl(Path(args.bags).read_text(encoding="utf-8"), by_id)
    return examples, bags, schema


def _cmd_train(args: argparse.Namespace) -> int:
    schema = load_schema(Path(args.schema)) if args.schema else None
    examples, bags, schema = _read_training_data(args, schema)
    hyper = _hyper_from_args(args)
    vocab = build_vocab(examples, min_count=hyper.min_count)
    num_classes = len(schema.class_labels())
    encoded = [
        encode(ex, vocab, clip=hyper.clip_distance, max_len=hyper.max_len,
               gold=schema.class_index(ex.label, ex.direction))
        for ex in examples
    ]
    if hyper.mil:
        if bags is None:
            bags = build_bags(examples)
        enc_by_id = {id(ex): enc for ex, enc in zip(examples, encoded)}
        enc_bags = [[enc_by_id[id(ex)] for ex in bag.examples] for bag in bags]
        params, history = train_mil(enc_bags, hyper, len(vocab), num_classes)
    else:
        params, history = train_supervised(encoded, hyper, len(vocab), num_classes)
    save_checkpoint(args.checkpoint_out, params, hyper, schema.class_labels(),
                    vocab, schema_dict=schema.to_dict())
    if args.history_out:
        Path(args.history_out).write_text(history.to_jsonl(), encoding="utf-8")
    for stats in history.epochs:
        print(f"epoch {stats.epoch}: mean loss {stats.mean_loss:.6f}, "
              f"train accuracy {stats.train_accuracy:.4f}")
    print(f"checkpoint written to {args.checkpoint_out}.json / .bin")
    return 0


def _load_fitted(stem: str) -> RankingCNNClassifier:
    return RankingCNNClassifier.from_checkpoint(stem)


def _cmd_trigrams(args: argparse.Namespace) -> int:
    est = _load_fitted(args.checkpoint)
    examples, _, = read_dataset(args.data, schema=est.schema_)
    tables = top_trigrams(est.params_, examples, est.vocab_, est.schema_,
                          est.hyper_, k=args.top_k)
    if args.out:
        Path(args.out).write_text(trigrams_to_jsonl(tables), encoding="utf-8")
        print(f"trigram tables written to {args.out}")
    else:
        print(format_trigram_table(tables), end="")
    return 0


def _cmd_filter(args: argparse.Namespace) -> int:
    examples, bags = read_dataset(args.data)
    banned = parse_banned(Path(args.banned).read_text(encoding="utf-8"))
    scope = SCOPE_GLOBAL if args.scope == "global" else SCOPE_RELATION
    result = apply_verdicts(examples, banned, scope=scope)
    retained_bags = None
    if bags is not None:
        removed_ids = {id(ex) for ex in result.removed}
        retained_bags = []
        for bag in bags:
            members = [ex for ex in bag.examples if id(ex) not in removed_ids]
            if members:
                retained_bags.append(Bag(key=bag.key, examples=members))
    write_dataset(args.out, result.retained, bags=retained_bags)
    print(json.dumps({
        "retained": len(result.retained),
        "removed": len(result.removed),
        "removed_per_relation": result.removed_per_relation(),
    }, indent=2))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    est = _load_fitted(args.checkpoint)
    examples, _ = read_dataset(args.test, schema=est.schema_)
    report = evaluate(est.params_, examples, est.vocab_, est.schema_, est.hyper_)
    if args.report_out:
        Path(args.report_out).write_text(report.to_json(), encoding="utf-8")
    print(format_metrics_table(report), end="")
    return 0


def _cmd_round(args: argparse.Namespace) -> int:
    ws = Workspace.load(args.workspace)
    banned = set()
    if args.banned:
        banned = parse_banned(Path(args.banned).read_text(encoding="utf-8"))
    record = ws.run_round(banned)
    print(json.dumps({
        "round": record.index,
        "removed_per_relation": record.removed_per_relation,
        "macro_f1": record.metrics["macro_f1"],
    }, indent=2))
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    data_dir = args.data_dir or os.environ.get("REXLOOP_DATA_DIR")
    if not data_dir:
        print("error: --data-dir or REXLOOP_DATA_DIR is required", file=sys.stderr)
        return 1
    port = args.port if args.port is not None else int(os.environ.get("REXLOOP_PORT", "8000"))
    serve(port, data_dir)
    return 0


def _cmd_synth(args: argparse.Namespace) -> int:
    data = make_plain_dataset(
        num_relations=args.relations,
        per_relation_train=args.per_relation,
        per_relation_test=args.per_relation_test,
        noise=args.noise,
        seed=args.seed,
    )
    write_synth_dataset(args.out, data)
    print(f"synthetic dataset written to {args.out} "
          f"({len(data.train)} train / {len(data.test)} test)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rexloop",
        description="Relation extraction workbench: distant supervision, "
                    "ranking CNN training, trigram review, feedback rounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="label a corpus from a knowledge base")
    p.add_argument("--kb", required=True, help="triples TSV: head<TAB>relation<TAB>tail")
    p.add_argument("--schema", required=True, help="relation schema file")
    p.add_argument("--corpus", required=True, help="plain corpus, one sentence per line")
    p.add_argument("--max-len", type=int, default=100)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("train", help="train the ranking CNN on a dataset directory")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--bags", help="bag file overriding the dataset's bags.jsonl")
    p.add_argument("--mil", action="store_true", help="multi-instance training over bags")
    p.add_argument("--schema", help="schema file; derived from the data when omitted")
    p.add_argument("--checkpoint-out", required=True, help="checkpoint stem path")
    p.add_argument("--history-out", help="write per-epoch stats as JSONL")
    _add_hyper_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("trigrams", help="extract top attributed trigrams per class")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True, help="dataset directory to attribute")
    p.add_argument("--top-k", type=int, default=20)
    p.add_argument("--out", help="JSONL output; prints a table when omitted")
    p.set_defaults(func=_cmd_trigrams)

    p = sub.add_parser("filter", help="remove sentences matching banned trigrams")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--banned", required=True, help="TSV: relation<TAB>tok1 tok2 tok3")
    p.add_argument("--scope", choices=("relation", "global"), default="relation")
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_filter)

    p = sub.add_parser("eval", help="score a checkpoint on a test dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--test", required=True, help="test dataset directory")
    p.add_argument("--report-out", help="write the full JSON report here")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("round", help="run one feedback round in a workspace")
    p.add_argument("--workspace", required=True, help="workspace directory")
    p.add_argument("--banned", help="banned TSV applied this round")
    p.set_defaults(func=_cmd_round)

    p = sub.add_parser("serve", help="start the HTTP review service")
    p.add_argument("--port", type=int, help="default: $REXLOOP_PORT or 8000")
    p.add_argument("--data-dir", help="default: $REXLOOP_DATA_DIR")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("synth", help="generate a planted-pattern synthetic dataset")
    p.add_argument("--relations", type=int, default=5)
    p.add_argument("--per-relation", type=int, default=40, help="training sentences per relation")
    p.add_argument("--per-relation-test", type=int, default=20)
    p.add_argument("--noise", type=float, default=0.0, help="label corruption fraction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        return args.func(args)
    except RexloopError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
