"""Fixed-length text embeddings behind pluggable providers.

Three providers share one contract (a finite float32 vector of the
configured dimension per text): a deterministic hashing mock, a
precomputed binary store, and a remote HTTP service. The transformer that
produces real embeddings lives out of process; see the exporter package.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import requests

from .rng import hash_bytes
from .tokenizer import normalize

DEFAULT_DIM = 768

STORE_MAGIC = b"CVDE"
STORE_VERSION = 1


class EmbeddingError(RuntimeError):
    """Provider failure: missing id, bad dimension, or unreachable service."""


class StoreFormatError(EmbeddingError):
    """Embedding store file violates the CVDE layout."""


def _check_vector(values: np.ndarray, dim: int, origin: str) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float32)
    if vec.ndim != 1 or vec.shape[0] != dim:
        raise EmbeddingError(f"{origin}: expected {dim} components, got shape {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise EmbeddingError(f"{origin}: vector contains non-finite components")
    return vec


@dataclass
class EmbeddingStore:
    """id -> float32 vector map with a single fixed dimension."""

    dim: int
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for rec_id, vec in list(self.vectors.items()):
            self.vectors[rec_id] = _check_vector(vec, self.dim, f"store[{rec_id!r}]")

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, rec_id: str) -> bool:
        return rec_id in self.vectors

    def get(self, rec_id: str) -> np.ndarray:
        try:
            return self.vectors[rec_id]
        except KeyError:
            raise EmbeddingError(f"missing id {rec_id!r} in embedding store") from None

    def put(self, rec_id: str, values) -> None:
        if rec_id in self.vectors:
            raise EmbeddingError(f"duplicate id {rec_id!r} in embedding store")
        self.vectors[rec_id] = _check_vector(values, self.dim, f"store[{rec_id!r}]")


def store_write(store: EmbeddingStore, path: str | Path) -> None:
    """Serialize a store: CVDE magic, u16 version, u32 dim, u32 count,
    an (id-length u16, id bytes) index, then count*dim little-endian
    float32 components in index order."""
    if len(store) == 0:
        raise EmbeddingError("refusing to write an empty embedding store")
    with open(path, "wb") as fh:
        fh.write(STORE_MAGIC)
        fh.write(struct.pack("<HII", STORE_VERSION, store.dim, len(store)))
        for rec_id in store.vectors:
            raw = rec_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise EmbeddingError(f"id too long to serialize: {rec_id[:32]!r}...")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        for vec in store.vectors.values():
            fh.write(vec.astype("<f4", copy=False).tobytes())


def store_read(path: str | Path) -> EmbeddingStore:
    """Read a CVDE file back; bit-exact inverse of store_write."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 14 or data[:4] != STORE_MAGIC:
        raise StoreFormatError(f"{path}: not an embedding store (bad magic)")
    version, dim, count = struct.unpack_from("<HII", data, 4)
    if version != STORE_VERSION:
        raise StoreFormatError(f"{path}: unsupported version {version}")
    offset = 14
    ids: list[str] = []
    for _ in range(count):
        if offset + 2 > len(data):
            raise StoreFormatError(f"{path}: truncated index")
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        if offset + id_len > len(data):
            raise StoreFormatError(f"{path}: truncated index")
        ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
    payload = data[offset:]
    expected = count * dim * 4
    if len(payload) != expected:
        raise StoreFormatError(
            f"{path}: payload holds {len(payload)} bytes, header implies {expected}"
        )
    matrix = np.frombuffer(payload, dtype="<f4").reshape(count, dim) if count else np.empty((0, dim), "<f4")
    store = EmbeddingStore(dim=dim)
    for i, rec_id in enumerate(ids):
        store.put(rec_id, matrix[i])
    return store


def mock_embed(text: str, dim: int, seed: int = 42) -> np.ndarray:
    """Deterministic stand-in embedding: each normalized token hashes to one
    component (hash mod dim) and contributes +-1 there (sign from hash bit
    63); the sum is scaled by 1/sqrt(token count). Empty text gives the
    zero vector."""
    if dim < 1:
        raise ValueError(f"dim must be >= 1, got {dim}")
    tokens = normalize(text).split()
    acc = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        h = hash_bytes(token.encode("utf-8"), seed)
        sign = 1.0 if (h >> 63) & 1 else -1.0
        acc[h % dim] += sign
    if tokens:
        acc /= math.sqrt(len(tokens))
    return acc.astype(np.float32)


@dataclass(frozen=True)
class ProviderConfig:
    """Selects and parameterizes the embedding source."""

    kind: str = "mock"  # mock | file | http
    dim: int = DEFAULT_DIM
    path: str | None = None  # required iff kind == "file"
    endpoint: str | None = None  # required iff kind == "http"
    timeout_s: float = 10.0
    seed: int = 42  # mock provider only

    def __post_init__(self):
        if self.kind not in ("mock", "file", "http"):
            raise ValueError(f"unknown provider kind {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise ValueError("file provider requires 'path'")
        if self.kind == "http" and not self.endpoint:
            raise ValueError("http provider requires 'endpoint'")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")


class MockProvider:
    """Pure hashing provider; identical (text, dim, seed) gives identical bits."""

    def __init__(self, cfg: ProviderConfig):
        self.dim = cfg.dim
        self.seed = cfg.seed

    def embed(self, rec_id: str, text: str) -> np.ndarray:
        return _check_vector(mock_embed(text, self.dim, self.seed), self.dim, f"mock[{rec_id!r}]")


class FileProvider:
    """Looks embeddings up by record id in a CVDE store loaded once."""

    def __init__(self, cfg: ProviderConfig):
        store = store_read(cfg.path)
        if store.dim != cfg.dim:
            raise EmbeddingError(
                f"store {cfg.path} has dim {store.dim}, provider configured for {cfg.dim}"
            )
        self.dim = cfg.dim
        self._store = store

    def embed(self, rec_id: str, text: str) -> np.ndarray:
        return self._store.get(rec_id)


class HttpProvider:
    """POSTs {endpoint}/embed with {"texts": [...]}; no retries, failures
    surface immediately rather than yielding fallback vectors."""

    def __init__(self, cfg: ProviderConfig):
        self.dim = cfg.dim
        self.endpoint = cfg.endpoint.rstrip("/")
        self.timeout_s = cfg.timeout_s

    def embed(self, rec_id: str, text: str) -> np.ndarray:
        return self.embed_batch([rec_id], [text])[0]

    def embed_batch(self, rec_ids: list[str], texts: list[str]) -> list[np.ndarray]:
        url = f"{self.endpoint}/embed"
        try:
            resp = requests.post(url, json={"texts": texts}, timeout=self.timeout_s)
        except requests.RequestException as exc:
            raise EmbeddingError(f"embedding service unreachable at {url}: {exc}") from None
        if resp.status_code != 200:
            raise EmbeddingError(f"embedding service returned HTTP {resp.status_code} for {url}")
        try:
            body = resp.json()
            vectors = body["vectors"]
            service_dim = body["dim"]
        except (ValueError, KeyError, TypeError) as exc:
            raise EmbeddingError(f"malformed embedding response from {url}: {exc}") from None
        if service_dim != self.dim:
            raise EmbeddingError(f"service reports dim {service_dim}, expected {self.dim}")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise EmbeddingError(
                f"service returned {len(vectors) if isinstance(vectors, list) else '?'} vectors "
                f"for {len(texts)} texts"
            )
        return [
            _check_vector(np.asarray(vec, dtype=np.float32), self.dim, f"http[{rid!r}]")
            for rid, vec in zip(rec_ids, vectors)
        ]


def make_provider(cfg: ProviderConfig):
    if cfg.kind == "mock":
        return MockProvider(cfg)
    if cfg.kind == "file":
        return FileProvider(cfg)
    return HttpProvider(cfg)


def embed_text(cfg: ProviderConfig, rec_id: str, text: str) -> np.ndarray:
    """One-shot convenience wrapper around make_provider()."""
    return make_provider(cfg).embed(rec_id, text)


def embed_records(provider, records) -> EmbeddingStore:
    """Embed every record through the provider into a fresh store.

    HTTP providers get a single batched request; failures identify the
    offending record id."""
    ids = [rec.id for rec in records]
    texts = [rec.text for rec in records]
    store = EmbeddingStore(dim=provider.dim)
    if isinstance(provider, HttpProvider):
        for rec_id, vec in zip(ids, provider.embed_batch(ids, texts)):
            store.put(rec_id, vec)
        return store
    for rec_id, text in zip(ids, texts):
        try:
            store.put(rec_id, provider.embed(rec_id, text))
        except EmbeddingError as exc:
            raise EmbeddingError(f"record {rec_id!r}: {exc}") from None
    return store
