"""Batch [CLS]-embedding extraction from a frozen clinical transformer."""

from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cvde import write_store

DEFAULT_MODEL = "emilyalsentzer/Bio_ClinicalBERT"

log = logging.getLogger(__name__)


class ExportError(RuntimeError):
    """Corpus or checkpoint problem that prevents the export."""


@dataclass(frozen=True)
class ExportJob:
    input_path: str
    output_path: str
    model: str = DEFAULT_MODEL
    max_len: int = 128
    batch_size: int = 8

    def __post_init__(self):
        if self.max_len < 3:
            raise ValueError("max_len must be >= 3")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def read_corpus(path: str | Path) -> tuple[list[str], list[str]]:
    """Read (ids, texts) from a JSONL corpus, preserving file order."""
    ids: list[str] = []
    texts: list[str] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            rec_id = obj.get("id")
            text = obj.get("text")
            if not isinstance(rec_id, str) or not rec_id:
                raise ExportError(f"{path}:{lineno}: missing 'id'")
            if not isinstance(text, str) or not text.strip():
                raise ExportError(f"{path}:{lineno}: missing 'text'")
            if rec_id in seen:
                raise ExportError(f"{path}:{lineno}: duplicate id {rec_id!r}")
            seen.add(rec_id)
            ids.append(rec_id)
            texts.append(text)
    if not ids:
        raise ExportError(f"{path}: corpus is empty")
    return ids, texts


def _load_model(name_or_path: str):
    import torch
    from transformers import AutoModel, AutoTokenizer

    try:
        tokenizer = AutoTokenizer.from_pretrained(name_or_path)
        model = AutoModel.from_pretrained(name_or_path)
    except Exception as exc:
        # hub unreachable: a warm local cache is still a valid checkpoint source
        try:
            tokenizer = AutoTokenizer.from_pretrained(name_or_path, local_files_only=True)
            model = AutoModel.from_pretrained(name_or_path, local_files_only=True)
        except Exception:
            raise ExportError(f"cannot retrieve checkpoint {name_or_path!r}: {exc}") from exc
    model.eval()  # inference mode: dropout and friends disabled
    torch.set_grad_enabled(False)
    return tokenizer, model


def export(job: ExportJob) -> dict:
    """Run the checkpoint over the corpus and write store + manifest.

    Each text is tokenized with the model's own vocabulary (truncated to
    job.max_len with a warning, never fatally) and the final-layer hidden
    state at position 0 becomes its float32 vector. Vectors are written in
    corpus order. Returns the manifest dict."""
    import torch

    ids, texts = read_corpus(job.input_path)
    tokenizer, model = _load_model(job.model)
    dim = int(model.config.hidden_size)

    overlong = 0
    rows: list[np.ndarray] = []
    with torch.no_grad():
        for start in range(0, len(texts), job.batch_size):
            batch = texts[start : start + job.batch_size]
            lengths = [len(tokenizer(t, truncation=False)["input_ids"]) for t in batch]
            overlong += sum(1 for n in lengths if n > job.max_len)
            encoded = tokenizer(
                batch,
                padding=True,
                truncation=True,
                max_length=job.max_len,
                return_tensors="pt",
            )
            hidden = model(**encoded).last_hidden_state
            rows.append(hidden[:, 0, :].to(torch.float32).cpu().numpy())
    if overlong:
        warnings.warn(f"{overlong} record(s) exceeded max_len={job.max_len} and were truncated")
        log.warning("%d record(s) truncated to max_len=%d", overlong, job.max_len)

    vectors = np.vstack(rows)
    if not np.all(np.isfinite(vectors)):
        raise ExportError("model produced non-finite components")
    write_store(job.output_path, ids, vectors)

    manifest = {"model": job.model, "dim": dim, "count": len(ids), "max_len": job.max_len}
    manifest_path = Path(f"{job.output_path}.manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return manifest
