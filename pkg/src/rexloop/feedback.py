"""Expert feedback: banned-trigram filtering and retraining rounds.

A workspace directory owns the training and test data, the accumulated
verdicts, and one subdirectory per completed round. Round k retrains
from scratch (same seed) on round k-1's retained sentences minus the
newly banned material; round 0 is the unfiltered baseline.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .align import Bag
from .corpus import TaggedExample, build_vocab, encode, format_label
from .dataset_io import read_dataset, write_dataset
from .errors import ContractError, EmptiedRelationError, FormatError, StaleRoundError
from .interpret import top_trigrams, trigrams_to_jsonl, window_trigram
from .kb import RelationSchema
from .metrics import evaluate
from .model import Hyperparams, save_checkpoint
from .train import train_mil, train_supervised

Trigram = tuple[str, str, str]
BannedEntry = tuple[str, Trigram]

SCOPE_RELATION = "relation"
SCOPE_GLOBAL = "global"


@dataclass(frozen=True)
class Verdict:
    """One expert decision on a (relation, trigram) pair."""

    relation: str
    trigram: Trigram
    decision: str
    reviewer: str = ""
    timestamp: str = ""

    def __post_init__(self):
        if self.decision not in ("keep", "ban"):
            raise ContractError(f"decision must be 'keep' or 'ban', got {self.decision!r}")
        if len(self.trigram) != 3:
            raise ContractError("trigram must have exactly 3 tokens")

    def key(self) -> str:
        return f"{self.relation}\t{' '.join(self.trigram)}"

    def to_dict(self) -> dict:
        return {"relation": self.relation, "trigram": list(self.trigram),
                "decision": self.decision, "reviewer": self.reviewer,
                "timestamp": self.timestamp}

    @classmethod
    def from_dict(cls, data: Mapping) -> "Verdict":
        return cls(relation=data["relation"], trigram=tuple(data["trigram"]),
                   decision=data["decision"], reviewer=data.get("reviewer", ""),
                   timestamp=data.get("timestamp", ""))


def parse_banned(text: str) -> set[BannedEntry]:
    """Banned-set TSV: ``relation<TAB>tok1 tok2 tok3`` per line."""
    banned: set[BannedEntry] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError("expected relation<TAB>tok1 tok2 tok3", line=lineno)
        tokens = parts[1].split()
        if len(tokens) != 3:
            raise FormatError(f"expected 3 trigram tokens, got {len(tokens)}", line=lineno)
        banned.add((parts[0], (tokens[0], tokens[1], tokens[2])))
    return banned


def format_banned(banned: Iterable[BannedEntry]) -> str:
    lines = [f"{relation}\t{' '.join(trigram)}"
             for relation, trigram in sorted(banned)]
    return "\n".join(lines) + ("\n" if lines else "")


def sentence_windows(norms: Sequence[str]) -> set[Trigram]:
    """Every trigram window of a sentence, including the padded boundary
    windows; the same set attribution routes scores to."""
    return {window_trigram(norms, t) for t in range(len(norms))}


def _matches(example: TaggedExample, banned: set[BannedEntry], scope: str) -> list[BannedEntry]:
    if scope not in (SCOPE_RELATION, SCOPE_GLOBAL):
        raise ContractError(f"unknown scope {scope!r}")
    windows = sentence_windows(example.sentence.norms)
    class_label = format_label(example.label, example.direction)
    hits = []
    for relation, trigram in banned:
        if scope == SCOPE_RELATION and class_label != relation:
            continue
        if trigram in windows:
            hits.append((relation, trigram))
    return hits


@dataclass
class FilterResult:
    retained: list[TaggedExample]
    removed: list[TaggedExample]
    removal_counts: dict[BannedEntry, int] = field(default_factory=dict)

    def removed_per_relation(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for ex in self.removed:
            key = format_label(ex.label, ex.direction)
            out[key] = out.get(key, 0) + 1
        return out


def apply_verdicts(examples: Sequence[TaggedExample], banned: Iterable[BannedEntry],
                   scope: str = SCOPE_RELATION) -> FilterResult:
    """Partition examples into retained and removed.

    Banned entries name class labels (directional classes separate); an
    example of class r is removed iff any trigram banned for r occurs in
    its window set. With global scope the entry's class is ignored. A
    removed example counts once per banned entry it matched.
    """
    banned = set(banned)
    result = FilterResult(retained=[], removed=[])
    for ex in examples:
        if ex.label is None:
            raise ContractError("filtering needs labeled examples")
        hits = _matches(ex, banned, scope)
        if hits:
            result.removed.append(ex)
            for entry in hits:
                result.removal_counts[entry] = result.removal_counts.get(entry, 0) + 1
        else:
            result.retained.append(ex)
    return result


def apply_verdicts_bags(bags: Sequence[Bag], banned: Iterable[BannedEntry],
                        scope: str = SCOPE_RELATION,
                        ) -> tuple[list[Bag], FilterResult]:
    """Filter bag members; a bag whose members are all removed is dropped."""
    banned = set(banned)
    flat = [ex for bag in bags for ex in bag.examples]
    result = apply_verdicts(flat, banned, scope)
    removed_ids = {id(ex) for ex in result.removed}
    retained_bags = []
    for bag in bags:
        members = [ex for ex in bag.examples if id(ex) not in removed_ids]
        if members:
            retained_bags.append(Bag(key=bag.key, examples=members))
    return retained_bags, result


@dataclass
class RoundRecord:
    """Everything one retraining round produced, as persisted."""

    index: int
    banned_new: list[BannedEntry]
    banned_cumulative: list[BannedEntry]
    sizes_before: dict[str, int]
    sizes_after: dict[str, int]
    removed_per_relation: dict[str, int]
    removal_counts: list[dict]
    metrics: dict
    previous_metrics: dict | None
    checkpoint: str
    trigrams_file: str
    retained_dir: str
    elapsed_sec: float
    created: str

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["banned_new"] = [[r, list(t)] for r, t in self.banned_new]
        d["banned_cumulative"] = [[r, list(t)] for r, t in self.banned_cumulative]
        return d

    @classmethod
    def from_dict(cls, data: Mapping) -> "RoundRecord":
        d = dict(data)
        d["banned_new"] = [(r, tuple(t)) for r, t in d["banned_new"]]
        d["banned_cumulative"] = [(r, tuple(t)) for r, t in d["banned_cumulative"]]
        return cls(**d)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def write_json_atomic(path: Path, obj) -> None:
    """Write-then-rename so a crash never leaves a half-written file."""
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    os.replace(tmp, path)


WORKSPACE_FILE = "workspace.json"
VERDICTS_FILE = "verdicts.json"
STATUS_FILE = "status.json"
ROUNDS_DIR = "rounds"
RETAINED_DIR = "retained"
TRIGRAMS_FILE = "trigrams.jsonl"
METRICS_FILE = "metrics.json"
RECORD_FILE = "record.json"
CHECKPOINT_STEM = "checkpoint"

STATE_IDLE = "idle"
STATE_TRAINING = "training"
STATE_FAILED = "failed"


class Workspace:
    """On-disk state of one feedback loop."""

    def __init__(self, root: str | Path, meta: dict):
        self.root = Path(root)
        self.meta = meta

    @classmethod
    def create(cls, root: str | Path, train: Sequence[TaggedExample],
               test: Sequence[TaggedExample], schema: RelationSchema,
               hyper: Hyperparams, bags: Sequence[Bag] | None = None,
               workspace_id: str | None = None, top_k: int = 20,
               scope: str = SCOPE_RELATION) -> "Workspace":
        root = Path(root)
        if (root / WORKSPACE_FILE).exists():
            raise ContractError(f"workspace already exists at {root}")
        if hyper.mil and bags is None:
            raise ContractError("mil training needs bag structure")
        root.mkdir(parents=True, exist_ok=True)
        write_dataset(root / "train", train, bags=bags)
        write_dataset(root / "test", test)
        meta = {
            "id": workspace_id or root.name,
            "created": _utcnow(),
            "hyper": hyper.to_dict(),
            "schema": schema.to_dict(),
            "top_k": top_k,
            "scope": scope,
        }
        write_json_atomic(root / WORKSPACE_FILE, meta)
        write_json_atomic(root / VERDICTS_FILE, {})
        ws = cls(root, meta)
        ws.write_status(STATE_IDLE)
        return ws

    @classmethod
    def load(cls, root: str | Path) -> "Workspace":
        root = Path(root)
        path = root / WORKSPACE_FILE
        if not path.exists():
            raise ContractError(f"no workspace at {root}")
        return cls(root, json.loads(path.read_text(encoding="utf-8")))

    @property
    def workspace_id(self) -> str:
        return self.meta["id"]

    @property
    def hyper(self) -> Hyperparams:
        return Hyperparams.from_dict(self.meta["hyper"])

    @property
    def schema(self) -> RelationSchema:
        return RelationSchema.from_dict(self.meta["schema"])

    @property
    def top_k(self) -> int:
        return int(self.meta.get("top_k", 20))

    @property
    def scope(self) -> str:
        return self.meta.get("scope", SCOPE_RELATION)

    # round bookkeeping

    def round_dir(self, k: int) -> Path:
        return self.root / ROUNDS_DIR / f"round_{k:03d}"

    def num_rounds(self) -> int:
        """Completed rounds only: a round exists iff its record file does."""
        k = 0
        while (self.round_dir(k) / RECORD_FILE).exists():
            k += 1
        return k

    def read_record(self, k: int) -> RoundRecord:
        path = self.round_dir(k) / RECORD_FILE
        if not path.exists():
            raise ContractError(f"round {k} does not exist")
        return RoundRecord.from_dict(json.loads(path.read_text(encoding="utf-8")))

    def round_input(self, k: int) -> tuple[list[TaggedExample], list[Bag] | None]:
        """The dataset round k trains on after filtering: the original
        training data for round 0, the previous round's retained set
        otherwise."""
        if k == 0:
            return read_dataset(self.root / "train", schema=self.schema)
        return read_dataset(self.round_dir(k - 1) / RETAINED_DIR, schema=self.schema)

    def test_examples(self) -> list[TaggedExample]:
        examples, _ = read_dataset(self.root / "test", schema=self.schema)
        return examples

    # verdict store

    def _read_verdicts(self) -> dict:
        path = self.root / VERDICTS_FILE
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def get_verdicts(self, round_index: int) -> list[Verdict]:
        per_round = self._read_verdicts().get(str(round_index), {})
        return [Verdict.from_dict(v) for v in per_round.values()]

    def record_verdicts(self, round_index: int, verdicts: Sequence[Verdict]) -> list[Verdict]:
        """Store verdicts against a completed round; later verdicts for
        the same (relation, trigram) overwrite earlier ones."""
        current = self.num_rounds() - 1
        if current < 0:
            raise ContractError("no completed round to review yet")
        if round_index != current:
            raise StaleRoundError(round_index, current)
        store = self._read_verdicts()
        per_round = store.setdefault(str(round_index), {})
        for v in verdicts:
            per_round[v.key()] = v.to_dict()
        write_json_atomic(self.root / VERDICTS_FILE, store)
        return [Verdict.from_dict(v) for v in per_round.values()]

    def banned_from_verdicts(self, round_index: int) -> set[BannedEntry]:
        return {(v.relation, v.trigram) for v in self.get_verdicts(round_index)
                if v.decision == "ban"}

    # status

    def read_status(self) -> dict:
        path = self.root / STATUS_FILE
        if not path.exists():
            return {"state": STATE_IDLE, "rounds": self.num_rounds()}
        status = json.loads(path.read_text(encoding="utf-8"))
        status["rounds"] = self.num_rounds()
        return status

    def write_status(self, state: str, progress: dict | None = None,
                     reason: str | None = None) -> None:
        status = {"state": state, "rounds": self.num_rounds()}
        if progress is not None:
            status["progress"] = progress
        if reason is not None:
            status["reason"] = reason
        write_json_atomic(self.root / STATUS_FILE, status)

    # the round itself

    def run_round(self, banned_new: Iterable[BannedEntry] | None = None,
                  on_epoch=None) -> RoundRecord:
        """Filter, retrain from fresh init with the workspace seed,
        re-extract trigrams, evaluate, and persist the round.

        The record file is written last, so a crash mid-round leaves no
        visible round.
        """
        start = time.perf_counter()
        k = self.num_rounds()
        banned_new = set(banned_new or ())
        if k == 0 and banned_new:
            raise ContractError("round 0 is the unfiltered baseline; ban after it exists")

        examples, bags = self.round_input(k)
        schema = self.schema
        hyper = self.hyper
        prev_cumulative: set[BannedEntry] = set()
        if k > 0:
            prev_cumulative = set(self.read_record(k - 1).banned_cumulative)
        cumulative = prev_cumulative | banned_new

        sizes_before = _sizes_per_relation(examples)
        result = apply_verdicts(examples, banned_new, scope=self.scope)
        retained = result.retained
        retained_bags = None
        if bags is not None:
            removed_ids = {id(ex) for ex in result.removed}
            retained_bags = []
            for bag in bags:
                members = [ex for ex in bag.examples if id(ex) not in removed_ids]
                if members:
                    retained_bags.append(Bag(key=bag.key, examples=members))
        sizes_after = _sizes_per_relation(retained)
        emptied = sorted(r for r, n in sizes_before.items()
                         if n > 0 and sizes_after.get(r, 0) == 0)
        if emptied:
            raise EmptiedRelationError(emptied)
        if not retained:
            raise EmptiedRelationError(sorted(sizes_before))

        vocab = build_vocab(retained, min_count=hyper.min_count)
        num_classes = len(schema.class_labels())
        encoded = {
            id(ex): encode(ex, vocab, clip=hyper.clip_distance, max_len=hyper.max_len,
                           gold=schema.class_index(ex.label, ex.direction))
            for ex in retained
        }
        if hyper.mil:
            if retained_bags is None:
                raise ContractError("mil training needs bag structure")
            enc_bags = [[encoded[id(ex)] for ex in bag.examples] for bag in retained_bags]
            params, _ = train_mil(enc_bags, hyper, len(vocab), num_classes,
                                  on_epoch=on_epoch)
        else:
            params, _ = train_supervised([encoded[id(ex)] for ex in retained],
                                         hyper, len(vocab), num_classes,
                                         on_epoch=on_epoch)

        report = evaluate(params, self.test_examples(), vocab, schema, hyper)
        tables = top_trigrams(params, retained, vocab, schema, hyper, k=self.top_k)
        previous_metrics = self.read_record(k - 1).metrics if k > 0 else None

        rdir = self.round_dir(k)
        rdir.mkdir(parents=True, exist_ok=True)
        write_dataset(rdir / RETAINED_DIR, retained, bags=retained_bags)
        save_checkpoint(rdir / CHECKPOINT_STEM, params, hyper,
                        schema.class_labels(), vocab, schema_dict=schema.to_dict())
        (rdir / TRIGRAMS_FILE).write_text(trigrams_to_jsonl(tables), encoding="utf-8")
        write_json_atomic(rdir / METRICS_FILE, report.to_dict())
        record = RoundRecord(
            index=k,
            banned_new=sorted(banned_new),
            banned_cumulative=sorted(cumulative),
            sizes_before=sizes_before,
            sizes_after=sizes_after,
            removed_per_relation=result.removed_per_relation(),
            removal_counts=[{"relation": r, "trigram": list(t), "count": n}
                            for (r, t), n in sorted(result.removal_counts.items())],
            metrics=report.to_dict(),
            previous_metrics=previous_metrics,
            checkpoint=f"{ROUNDS_DIR}/round_{k:03d}/{CHECKPOINT_STEM}",
            trigrams_file=f"{ROUNDS_DIR}/round_{k:03d}/{TRIGRAMS_FILE}",
            retained_dir=f"{ROUNDS_DIR}/round_{k:03d}/{RETAINED_DIR}",
            elapsed_sec=time.perf_counter() - start,
            created=_utcnow(),
        )
        write_json_atomic(rdir / RECORD_FILE, record.to_dict())
        return record


def _sizes_per_relation(examples: Sequence[TaggedExample]) -> dict[str, int]:
    sizes: dict[str, int] = {}
    for ex in examples:
        key = format_label(ex.label, ex.direction)
        sizes[key] = sizes.get(key, 0) + 1
    return sizes
