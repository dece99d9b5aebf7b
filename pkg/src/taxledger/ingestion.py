"""Corpus loading, cleaning and seeded splitting.

Cleaning drops unavailable posts first, then duplicate post_ids (first
occurrence kept), reporting both removal counts. Splitting samples the
test set uniformly without replacement with a portable seeded generator,
then carves the validation set out of the remaining training pool.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .domain import (
    AnnotatedPost,
    LabelValidationError,
    MediaKind,
    annotated_from_json,
    annotated_to_json,
    dumps_record,
)
from .rng import Xoshiro256StarStar, derive_seed

logger = logging.getLogger(__name__)


class ParseError(ValueError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class LabelError(ValueError):
    def __init__(self, line_no: int, fieldname: str, reason: str = ""):
        msg = f"line {line_no}: invalid label field {fieldname!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.line_no = line_no
        self.field = fieldname


class SizeError(ValueError):
    pass


@dataclass
class CorpusManifest:
    records: list[AnnotatedPost]
    provenance: str = ""
    seed: int = 0

    def __len__(self) -> int:
        return len(self.records)


@dataclass
class CleanReport:
    removed_unavailable: int = 0
    removed_duplicates: int = 0

    def to_dict(self) -> dict[str, int]:
        return {
            "removed_unavailable": self.removed_unavailable,
            "removed_duplicates": self.removed_duplicates,
        }


@dataclass
class DatasetSplit:
    train: list[AnnotatedPost] = field(default_factory=list)
    validation: list[AnnotatedPost] = field(default_factory=list)
    test: list[AnnotatedPost] = field(default_factory=list)
    seed: int = 0


def _label_field_of(exc: LabelValidationError) -> str:
    for attr in ("name", "field"):
        value = getattr(exc, attr, None)
        if isinstance(value, str):
            return value
    return "contact_channels"  # ContactInconsistency names no single field


def load_corpus(path: Path | str) -> CorpusManifest:
    """Parse a JSONL corpus; every line must parse and carry valid labels.

    Raises ParseError with the offending line number for malformed JSON
    or records, LabelError for label-schema violations.
    """
    path = Path(path)
    records: list[AnnotatedPost] = []
    base_dir = path.parent
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(line_no, f"malformed JSON: {exc.msg}") from exc
            try:
                records.append(annotated_from_json(obj, base_dir))
            except LabelValidationError as exc:
                raise LabelError(line_no, _label_field_of(exc), str(exc)) from exc
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(line_no, f"invalid record: {exc}") from exc
    return CorpusManifest(records=records, provenance=str(path))


def write_corpus(manifest: CorpusManifest, path: Path | str, images_dir: Path | str | None = None) -> None:
    """Write JSONL; image payloads are saved as PNG files referenced by path."""
    path = Path(path)
    needs_images = any(r.post.media.kind is MediaKind.IMAGE for r in manifest.records)
    img_dir: Path | None = None
    if needs_images:
        img_dir = Path(images_dir) if images_dir is not None else path.parent / (path.stem + "_images")
        img_dir.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for record in manifest.records:
            image_path = None
            if record.post.media.kind is MediaKind.IMAGE:
                img_file = img_dir / f"{record.post.post_id}.png"
                img_file.write_bytes(record.post.media.image_bytes)
                try:
                    image_path = str(img_file.relative_to(path.parent))
                except ValueError:
                    image_path = str(img_file)
            fh.write(dumps_record(annotated_to_json(record, image_path)) + "\n")


def clean_corpus(manifest: CorpusManifest) -> tuple[CorpusManifest, CleanReport]:
    """Drop unavailable posts, then duplicate ids (first occurrence kept)."""
    report = CleanReport()
    available = []
    for record in manifest.records:
        if record.labels.available:
            available.append(record)
        else:
            report.removed_unavailable += 1
    seen: set[str] = set()
    kept = []
    for record in available:
        if record.post.post_id in seen:
            report.removed_duplicates += 1
        else:
            seen.add(record.post.post_id)
            kept.append(record)
    cleaned = CorpusManifest(records=kept, provenance=manifest.provenance, seed=manifest.seed)
    return cleaned, report


def _round_half_up(x: float) -> int:
    return int(x + 0.5)


def split_corpus(
    manifest: CorpusManifest,
    test_size: int,
    val_fraction: float,
    seed: int,
) -> DatasetSplit:
    """Seeded uniform split into train / validation / test.

    ``test_size`` posts are drawn without replacement; the validation set
    is round(val_fraction * remaining) of the leftover training pool.
    Deterministic for a fixed seed.
    """
    n = len(manifest.records)
    if not 0 < test_size < n:
        raise SizeError(f"test_size must be in (0, {n}), got {test_size}")
    if not 0.0 <= val_fraction < 1.0:
        raise SizeError(f"val_fraction must be in [0, 1), got {val_fraction}")

    order = list(manifest.records)
    rng = Xoshiro256StarStar(derive_seed(seed, "corpus-split"))
    rng.shuffle(order)

    test = order[:test_size]
    pool = order[test_size:]
    n_val = _round_half_up(val_fraction * len(pool))
    validation = pool[:n_val]
    train = pool[n_val:]
    logger.info(
        "split corpus: train=%d validation=%d test=%d (seed=%d)",
        len(train), len(validation), len(test), seed,
    )
    return DatasetSplit(train=train, validation=validation, test=test, seed=seed)


_SPLIT_FILES = {"train": "train.jsonl", "validation": "validation.jsonl", "test": "test.jsonl"}


def write_split_dir(split: DatasetSplit, out_dir: Path | str) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, filename in _SPLIT_FILES.items():
        part = CorpusManifest(records=getattr(split, name), seed=split.seed)
        write_corpus(part, out_dir / filename, images_dir=out_dir / "images")
    meta = {"seed": split.seed, "sizes": {k: len(getattr(split, k)) for k in _SPLIT_FILES}}
    (out_dir / "split.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")


def read_split_dir(in_dir: Path | str) -> DatasetSplit:
    in_dir = Path(in_dir)
    parts = {}
    for name, filename in _SPLIT_FILES.items():
        file_path = in_dir / filename
        if not file_path.exists():
            raise FileNotFoundError(f"split file missing: {file_path}")
        parts[name] = load_corpus(file_path).records
    seed = 0
    meta_path = in_dir / "split.json"
    if meta_path.exists():
        seed = int(json.loads(meta_path.read_text()).get("seed", 0))
    return DatasetSplit(seed=seed, **parts)
