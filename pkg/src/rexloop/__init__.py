"""Relation extraction workbench: distant supervision, a ranking CNN
trained from scratch, trigram attribution, and an expert feedback loop."""

from .align import Bag, align, build_bags
from .corpus import (
    Direction,
    EntitySpan,
    Sentence,
    TaggedExample,
    Token,
    Vocabulary,
    build_vocab,
    encode,
    read_tagged,
    write_tagged,
)
from .errors import (
    ContractError,
    EmptiedRelationError,
    FormatError,
    LengthError,
    RexloopError,
    SchemaError,
    StaleRoundError,
)
from .estimator import RankingCNNClassifier
from .feedback import Verdict, Workspace, apply_verdicts, parse_banned
from .interpret import attribute, top_trigrams, window_trigram
from .kb import RelationSchema, Triple, clean_triples, load_schema, load_triples
from .metrics import MetricsReport, effort_report, evaluate, length_analysis
from .model import Hyperparams, ModelParams, forward, load_checkpoint, save_checkpoint, predict
from .train import ranking_loss, train_mil, train_supervised

__version__ = "0.1.0"

__all__ = [
    "Bag",
    "ContractError",
    "Direction",
    "EmptiedRelationError",
    "EntitySpan",
    "FormatError",
    "Hyperparams",
    "LengthError",
    "MetricsReport",
    "ModelParams",
    "RankingCNNClassifier",
    "RelationSchema",
    "RexloopError",
    "SchemaError",
    "Sentence",
    "StaleRoundError",
    "TaggedExample",
    "Token",
    "Triple",
    "Verdict",
    "Vocabulary",
    "Workspace",
    "align",
    "apply_verdicts",
    "attribute",
    "build_bags",
    "build_vocab",
    "clean_triples",
    "effort_report",
    "encode",
    "evaluate",
    "forward",
    "length_analysis",
    "load_checkpoint",
    "load_schema",
    "load_triples",
    "parse_banned",
    "predict",
    "ranking_loss",
    "read_tagged",
    "save_checkpoint",
    "top_trigrams",
    "train_mil",
    "train_supervised",
    "window_trigram",
    "write_tagged",
]
