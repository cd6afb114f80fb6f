"""Reading and writing example datasets with their optional bag structure.

A dataset directory holds ``examples.txt`` (tagged format) and, when bag
structure exists, ``bags.jsonl`` whose records reference examples by the
record ids used in the tagged file. The pair round-trips losslessly.
"""

from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Sequence

from .align import Bag, bags_from_jsonl, bags_to_jsonl
from .corpus import TaggedExample, read_tagged, write_tagged

EXAMPLES_FILE = "examples.txt"
BAGS_FILE = "bags.jsonl"


def assign_record_ids(examples: Sequence[TaggedExample]) -> list[str]:
    """Record ids for a tagged file: the sentence id, with a ``#n`` suffix
    whenever several examples share one source sentence."""
    seen: Counter[str] = Counter()
    ids = []
    for ex in examples:
        base = ex.sentence.id
        seen[base] += 1
        ids.append(base if seen[base] == 1 else f"{base}#{seen[base]}")
    return ids


def write_dataset(out_dir: str | Path, examples: Sequence[TaggedExample],
                  bags: Sequence[Bag] | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / EXAMPLES_FILE).write_text(write_tagged(examples), encoding="utf-8")
    if bags is not None:
        record_ids = assign_record_ids(examples)
        by_identity = {id(ex): rid for ex, rid in zip(examples, record_ids)}
        (out_dir / BAGS_FILE).write_text(
            bags_to_jsonl(bags, by_identity), encoding="utf-8")


def read_dataset(in_dir: str | Path, schema=None) -> tuple[list[TaggedExample], list[Bag] | None]:
    in_dir = Path(in_dir)
    examples = read_tagged(in_dir / EXAMPLES_FILE, schema=schema)
    bags_path = in_dir / BAGS_FILE
    if not bags_path.exists():
        return examples, None
    by_id = {ex.sentence.id: ex for ex in examples}
    bags = bags_from_jsonl(bags_path.read_text(encoding="utf-8"), by_id)
    return examples, bags
