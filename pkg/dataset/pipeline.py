"""Ingest → filter → popularity-stratified sample → holdout split.

Every stage is deterministic: sampling orders items by
``(rating_number, id)`` and the split shuffles with the seeded SplitMix64
generator, so identical inputs and config give byte-identical outputs.
"""

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Set, Tuple, Union

from pydantic import BaseModel, Field
from tqdm import tqdm

from csv_utils import format_preamble, write_csv
from model.seeded_rng import SplitMix64
from .records import ItemRecord, parse_record, resolve_location

logger = logging.getLogger(__name__)


class SamplingConfig(BaseModel):
    k: int = Field(default=1000, ge=1)
    min_reviews: int = Field(default=10, ge=0)
    holdout_n: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    max_train: Optional[int] = Field(default=None, ge=1)


@dataclass
class RejectsReport:
    """Malformed input lines, kept instead of aborting the stream."""
    entries: List[Tuple[str, str]] = field(default_factory=list)

    def add(self, line: Union[int, str], reason: str):
        """Record one rejected line."""
        self.entries.append((str(line), reason))
        logger.warning(f"Rejected line {line}: {reason}")

    @property
    def count(self) -> int:
        return len(self.entries)

    def write(self, path: Union[str, Path], preamble: str = ""):
        """Write the rejects as CSV."""
        rows = [{"line": line, "reason": reason} for line, reason in self.entries]
        write_csv(path, ["line", "reason"], rows, preamble=preamble)


def ingest_jsonl(path: Union[str, Path], rejects: Optional[RejectsReport] = None,
                 seen: Optional[Set[str]] = None, line_prefix: str = "",
                 show_progress: bool = False) -> Iterator[ItemRecord]:
    """Stream records from one JSON-lines file; bad lines go to ``rejects``."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input not found: {path}")
    rejects = rejects if rejects is not None else RejectsReport()
    seen = seen if seen is not None else set()
    source_dir = str(path.parent.resolve())
    with path.open("rb") as handle:
        lines = tqdm(handle, desc=path.name, unit=" lines", disable=not show_progress)
        for line_number, data in enumerate(lines, start=1):
            where = f"{line_prefix}{line_number}"
            try:
                line = data.decode("utf-8", errors="strict")
            except UnicodeDecodeError:
                rejects.add(where, "line is not valid UTF-8")
                continue
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as e:
                rejects.add(where, f"unparsable JSON: {e.msg}")
                continue
            try:
                record = parse_record(raw, line=line_number, source_dir=source_dir)
            except (ValueError, TypeError, OverflowError) as e:
                rejects.add(where, str(e))
                continue
            if record.id in seen:
                rejects.add(where, f"duplicate id {record.id}")
                continue
            seen.add(record.id)
            yield record


def filter_items(records: Sequence[ItemRecord], cfg: SamplingConfig = SamplingConfig()) -> List[ItemRecord]:
    """Keep items with enough reviews and a MAIN image; input order is preserved."""
    kept = []
    for record in records:
        if record.rating_number < cfg.min_reviews:
            continue
        image = record.main_image()
        if image is None:
            continue
        record.resolved_image = resolve_location(image.best_url, record.source_dir)
        kept.append(record)
    logger.info(f"Filter kept {len(kept)} of {len(records)} records")
    return kept


def stratified_sample(records: Sequence[ItemRecord], cfg: SamplingConfig = SamplingConfig()) -> List[ItemRecord]:
    """Per category, the ``k`` most- and ``k`` least-reviewed items.

    Categories with at most ``2k`` items are kept whole. Ordering is by
    ``(rating_number, id)``, so the two tails never share an item.
    """
    by_category: Dict[str, List[ItemRecord]] = defaultdict(list)
    for record in records:
        by_category[record.main_category].append(record)

    selected: List[ItemRecord] = []
    for category in sorted(by_category):
        items = sorted(by_category[category], key=lambda r: (r.rating_number, r.id))
        if len(items) > 2 * cfg.k:
            items = items[:cfg.k] + items[-cfg.k:]
        selected.extend(items)
        logger.info(f"Category '{category}': kept {len(items)} of {len(by_category[category])}")
    return sorted(selected, key=lambda r: (r.main_category, r.id))


def split_holdout(records: Sequence[ItemRecord],
                  cfg: SamplingConfig = SamplingConfig()) -> Tuple[List[ItemRecord], List[ItemRecord]]:
    """Seeded Fisher-Yates shuffle; the first ``holdout_n`` items are validation."""
    if len(records) <= cfg.holdout_n:
        raise ValueError(f"too few records: {len(records)} available, holdout_n={cfg.holdout_n}")
    order = SplitMix64(cfg.seed).permutation(len(records))
    shuffled = [records[index] for index in order]
    validation = shuffled[:cfg.holdout_n]
    train = shuffled[cfg.holdout_n:]
    if cfg.max_train is not None:
        train = train[:cfg.max_train]
    return train, validation


def input_files(path: Union[str, Path]) -> List[Path]:
    """A JSON-lines file, or every ``*.jsonl`` in a directory in file-name order."""
    path = Path(path)
    if path.is_file():
        return [path]
    if path.is_dir():
        files = sorted(path.glob("*.jsonl"))
        if not files:
            raise ValueError(f"no .jsonl files in {path}")
        return files
    raise FileNotFoundError(f"input not found: {path}")


def write_jsonl(path: Union[str, Path], records: Sequence[ItemRecord], config_hash: str = "",
                root_seed: int = 0):
    """One record per line, each stamped with the config hash and seed that produced it."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for record in records:
            payload = {**record.to_json(), "config_hash": config_hash, "seed": root_seed}
            handle.write(json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n")


class PrepareSummary(BaseModel):
    ingested: int
    rejected: int
    filtered: int
    sampled: int
    train: int
    validation: int
    files: List[str]


def prepare_dataset(data: Union[str, Path], cfg: SamplingConfig, out_dir: Union[str, Path],
                    config_hash: str = "", root_seed: int = 0,
                    show_progress: bool = False) -> PrepareSummary:
    """Run the full pipeline and write train/val JSON-lines, rejects and manifest."""
    files = input_files(data)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    rejects = RejectsReport()
    seen: Set[str] = set()
    records: List[ItemRecord] = []
    for path in files:
        prefix = f"{path.name}:" if len(files) > 1 else ""
        records.extend(ingest_jsonl(path, rejects, seen, prefix, show_progress))
    logger.info(f"Ingested {len(records)} records ({rejects.count} rejected) from {len(files)} file(s)")

    filtered = filter_items(records, cfg)
    sampled = stratified_sample(filtered, cfg)
    train, validation = split_holdout(sampled, cfg)

    preamble = format_preamble(config_hash, root_seed)
    write_jsonl(out_dir / "train.jsonl", train, config_hash, root_seed)
    write_jsonl(out_dir / "val.jsonl", validation, config_hash, root_seed)
    rejects.write(out_dir / "rejects.csv", preamble=preamble)

    summary = PrepareSummary(
        ingested=len(records), rejected=rejects.count, filtered=len(filtered),
        sampled=len(sampled), train=len(train), validation=len(validation),
        files=[path.name for path in files],
    )
    manifest = {
        "config_hash": config_hash,
        "seed": root_seed,
        "outputs": {"train": "train.jsonl", "validation": "val.jsonl", "rejects": "rejects.csv"},
        **summary.model_dump(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Prepared {len(train)} train / {len(validation)} validation records in {out_dir}")
    return summary
