"""Symptom-text datasets: loading, validation, splitting, and synthesis."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .embed import EmbeddingStore
from .rng import SplitMix64

LOW_RISK = 0
HIGH_RISK = 1


class CorpusError(ValueError):
    """Malformed dataset file or record (parse failure, duplicate id, bad label)."""


@dataclass(frozen=True)
class SymptomRecord:
    """One free-text symptom narrative, optionally labeled 0 (low) / 1 (high) risk."""

    id: str
    text: str
    label: int | None = None
    source: str = "real"

    def __post_init__(self):
        if not self.id:
            raise CorpusError("record id must be nonempty")
        if not self.text.strip():
            raise CorpusError(f"record {self.id!r}: text must be nonempty")
        if self.label is not None and self.label not in (0, 1):
            raise CorpusError(f"record {self.id!r}: label must be 0 or 1, got {self.label!r}")
        if self.source not in ("real", "synthetic"):
            raise CorpusError(f"record {self.id!r}: source must be 'real' or 'synthetic'")


@dataclass(frozen=True)
class Dataset:
    """Ordered collection of records with unique ids."""

    records: tuple[SymptomRecord, ...]

    def __post_init__(self):
        seen: set[str] = set()
        for rec in self.records:
            if rec.id in seen:
                raise CorpusError(f"duplicate record id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def ids(self) -> list[str]:
        return [rec.id for rec in self.records]

    def labels(self) -> list[int]:
        """Labels in record order; raises if any record is unlabeled."""
        out = []
        for rec in self.records:
            if rec.label is None:
                raise CorpusError(f"record {rec.id!r} is unlabeled")
            out.append(rec.label)
        return out

    def fully_labeled(self) -> bool:
        return all(rec.label is not None for rec in self.records)


@dataclass(frozen=True)
class SplitSpec:
    """Train/test partition parameters. The split is a pure function of
    (dataset order, spec): records are shuffled by a splitmix64-driven
    Fisher-Yates and the first round-half-up(train_fraction * n) become
    the training set."""

    train_fraction: float = 0.7
    seed: int = 42
    stratified: bool = False

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


@dataclass(frozen=True)
class DatasetSplit:
    train: Dataset
    test: Dataset


def _make_record(obj: dict, where: str) -> SymptomRecord:
    rec_id = obj.get("id")
    text = obj.get("text")
    if not isinstance(rec_id, str) or not rec_id:
        raise CorpusError(f"{where}: missing or invalid 'id'")
    if not isinstance(text, str) or not text.strip():
        raise CorpusError(f"{where}: missing or invalid 'text'")
    label = obj.get("label")
    if label is not None:
        if isinstance(label, bool) or label not in (0, 1):
            raise CorpusError(f"{where}: label must be 0 or 1, got {label!r}")
        label = int(label)
    source = obj.get("source") or "real"
    try:
        return SymptomRecord(id=rec_id, text=text, label=label, source=source)
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def _check_unique(records: list[SymptomRecord], lines: list[int], path: str) -> None:
    seen: dict[str, int] = {}
    for rec, line in zip(records, lines):
        if rec.id in seen:
            raise CorpusError(f"{path}:{line}: duplicate id {rec.id!r} (first seen on line {seen[rec.id]})")
        seen[rec.id] = line


def load_records(path: str | Path, format: str | None = None) -> Dataset:
    """Load a dataset from JSONL (one object per line) or CSV
    (header id,text,label,source). Format is inferred from the suffix
    when not given."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format not in ("jsonl", "csv"):
        raise ValueError(f"unknown format {format!r}")

    records: list[SymptomRecord] = []
    lines: list[int] = []
    if format == "jsonl":
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
                if not isinstance(obj, dict):
                    raise CorpusError(f"{path}:{lineno}: expected a JSON object")
                records.append(_make_record(obj, f"{path}:{lineno}"))
                lines.append(lineno)
    else:
        with open(path, encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or "id" not in reader.fieldnames or "text" not in reader.fieldnames:
                raise CorpusError(f"{path}: CSV header must contain 'id' and 'text'")
            for row in reader:
                lineno = reader.line_num
                obj = {
                    "id": row.get("id"),
                    "text": row.get("text"),
                    "label": None if row.get("label") in (None, "") else _parse_csv_label(row["label"], f"{path}:{lineno}"),
                    "source": row.get("source") or "real",
                }
                records.append(_make_record(obj, f"{path}:{lineno}"))
                lines.append(lineno)
    _check_unique(records, lines, str(path))
    return Dataset(tuple(records))


def _parse_csv_label(raw: str, where: str) -> int:
    if raw not in ("0", "1"):
        raise CorpusError(f"{where}: label must be 0 or 1, got {raw!r}")
    return int(raw)


def save_records(ds: Dataset, path: str | Path, format: str | None = None) -> None:
    """Write a dataset as JSONL or CSV (inverse of load_records)."""
    path = Path(path)
    if format is None:
        format = "csv" if path.suffix.lower() == ".csv" else "jsonl"
    if format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for rec in ds:
                obj = {"id": rec.id, "text": rec.text}
                if rec.label is not None:
                    obj["label"] = rec.label
                obj["source"] = rec.source
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    elif format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "text", "label", "source"])
            for rec in ds:
                writer.writerow([rec.id, rec.text, "" if rec.label is None else rec.label, rec.source])
    else:
        raise ValueError(f"unknown format {format!r}")


def _train_size(fraction: float, n: int) -> int:
    # round-half-up
    return int(math.floor(fraction * n + 0.5))


def split(ds: Dataset, spec: SplitSpec = SplitSpec()) -> DatasetSplit:
    """Deterministically partition a fully labeled dataset into train/test.

    Plain mode shuffles all records and takes the first
    round-half-up(train_fraction * n) as train. Stratified mode shuffles
    within each label class and takes per-class prefixes sized by
    largest-remainder allocation, so the total still equals the plain
    train size and each class stays within one record of proportionality.
    """
    n = len(ds)
    if n < 2:
        raise CorpusError(f"need at least 2 records to split, got {n}")
    for rec in ds:
        if rec.label is None:
            raise CorpusError(f"cannot split: record {rec.id!r} is unlabeled")

    k_train = _train_size(spec.train_fraction, n)
    rng = SplitMix64(spec.seed)

    if not spec.stratified:
        order = list(range(n))
        rng.shuffle(order)
        train_idx, test_idx = order[:k_train], order[k_train:]
    else:
        by_class: dict[int, list[int]] = {0: [], 1: []}
        for i, rec in enumerate(ds):
            by_class[rec.label].append(i)
        for c in (0, 1):
            rng.shuffle(by_class[c])
        # largest-remainder allocation keeps the total at k_train while
        # holding each class within +-1 of its exact proportional share
        quotas = {c: spec.train_fraction * len(by_class[c]) for c in (0, 1)}
        take = {c: int(math.floor(quotas[c])) for c in (0, 1)}
        leftover = k_train - sum(take.values())
        for c in sorted((0, 1), key=lambda c: (-(quotas[c] - take[c]), c))[:leftover]:
            take[c] += 1
        train_idx = by_class[0][: take[0]] + by_class[1][: take[1]]
        test_idx = by_class[0][take[0]:] + by_class[1][take[1]:]

    recs = ds.records
    return DatasetSplit(
        train=Dataset(tuple(recs[i] for i in train_idx)),
        test=Dataset(tuple(recs[i] for i in test_idx)),
    )


# Fixed phrase bank for synthetic corpora: cardinal symptom families
# (chest pain, shortness of breath, fatigue, palpitations), split into
# clearly high- and low-acuity narratives. Curated content, not data.
HIGH_RISK_PHRASES = (
    "crushing chest pain radiating to the left arm since this morning",
    "sudden shortness of breath at rest for the last hour",
    "severe chest tightness with palpitations since last night",
    "chest pressure and cold sweat that started two hours ago",
    "worsening shortness of breath with crushing fatigue for two days",
    "pounding palpitations with dizziness since midnight",
    "sharp chest pain on exertion that began this week",
    "severe breathlessness and chest heaviness since yesterday",
    "racing heart with chest discomfort for three hours",
    "intense chest pain with nausea that started suddenly today",
)
LOW_RISK_PHRASES = (
    "mild fatigue after exercise yesterday",
    "occasional palpitations after coffee that settle within minutes",
    "slight breathlessness when climbing stairs for years",
    "intermittent tiredness with good sleep over the past month",
    "brief fluttering sensation last week, none since",
    "mild muscle soreness in the chest wall after lifting boxes today",
    "feels well today, no chest pain",
    "a little winded after a long run this morning",
    "occasional fatigue in the evenings for several weeks",
    "minor palpitations during stressful meetings, years of history",
)


def generate_synthetic(n: int, margin: float, dim: int, seed: int) -> tuple[Dataset, EmbeddingStore]:
    """Build a balanced synthetic dataset plus matching embeddings.

    Emits n/2 high-risk and n/2 low-risk records with texts cycled from the
    phrase bank. Each record's embedding is drawn from an isotropic
    unit-variance Gaussian; the two class means sit at +margin/2 (high risk)
    and -margin/2 (low risk) along dimension 0. Deterministic given seed.
    """
    if n <= 0 or n % 2 != 0:
        raise ValueError(f"n must be a positive even number, got {n}")
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")

    half = n // 2
    rng = SplitMix64(seed)
    width = len(str(n))
    records: list[SymptomRecord] = []
    vectors: dict[str, np.ndarray] = {}
    for i in range(n):
        label = HIGH_RISK if i < half else LOW_RISK
        bank = HIGH_RISK_PHRASES if label == HIGH_RISK else LOW_RISK_PHRASES
        rec_id = f"syn-{i + 1:0{width}d}"
        records.append(
            SymptomRecord(
                id=rec_id,
                text=bank[(i if label == HIGH_RISK else i - half) % len(bank)],
                label=label,
                source="synthetic",
            )
        )
        vec = np.empty(dim, dtype=np.float64)
        for j in range(dim):
            vec[j] = rng.next_gauss()
        vec[0] += margin / 2.0 if label == HIGH_RISK else -margin / 2.0
        vectors[rec_id] = vec.astype(np.float32)

    return Dataset(tuple(records)), EmbeddingStore(dim=dim, vectors=vectors)


def summarize(ds: Dataset) -> dict:
    """Counts used by the ingest command's one-line summary."""
    labels = [rec.label for rec in ds]
    return {
        "records": len(ds),
        "labeled": sum(1 for v in labels if v is not None),
        "high_risk": sum(1 for v in labels if v == 1),
        "low_risk": sum(1 for v in labels if v == 0),
        "synthetic": sum(1 for rec in ds if rec.source == "synthetic"),
    }


def as_matrix(ds: Dataset | Iterable[SymptomRecord], store: EmbeddingStore) -> tuple[np.ndarray, np.ndarray]:
    """Stack stored embeddings for the given records into (X, y)."""
    rows = []
    labels = []
    for rec in ds:
        rows.append(store.get(rec.id))
        if rec.label is None:
            raise CorpusError(f"record {rec.id!r} is unlabeled")
        labels.append(rec.label)
    return np.vstack(rows).astype(np.float64), np.asarray(labels, dtype=np.int64)
