"""Writer for the CVDE embedding-store format.

Layout: magic "CVDE", u16 version 1, u32 dim, u32 count, an index of
(u16 id-length, id bytes) entries, then count*dim little-endian float32
components in index order. Implemented here independently of the reader
that ships with the triage pipeline; the byte layout is the contract.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CVDE"
VERSION = 1


def write_store(path: str | Path, ids: list[str], vectors: np.ndarray) -> None:
    vectors = np.asarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        raise ValueError("vectors must be a 2-D (count, dim) array")
    count, dim = vectors.shape
    if count != len(ids):
        raise ValueError(f"{len(ids)} ids for {count} vectors")
    if len(set(ids)) != len(ids):
        raise ValueError("record ids must be unique")
    if count == 0:
        raise ValueError("refusing to write an empty store")
    if not np.all(np.isfinite(vectors)):
        raise ValueError("vectors contain non-finite components")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HII", VERSION, dim, count))
        for rec_id in ids:
            raw = rec_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise ValueError(f"id too long: {rec_id[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(vectors.tobytes())
