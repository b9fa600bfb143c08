"""Second-stage question encoder: feature-hashed bag of tokens + linear map.

Tokens are hashed with 64-bit FNV-1a (seeded) into H buckets; bucket values
are count / sqrt(total tokens) so feature magnitude is roughly
length-invariant. The encoder embeds both queries and indexed questions
with the same weights (single shared tower).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import List, Union

import numpy as np

from .corpus import QAPair
from .textnorm import normalize

DEFAULT_HASH_DIM = 2**16
DEFAULT_EMBED_DIM = 128

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF

_EMB_MAGIC = b"SQEM"
_EMB_VERSION = 1


class EmbeddingFormatError(ValueError):
    """Raised for malformed or unsupported embedding files."""


def fnv1a64(data: bytes, seed: int = 0) -> int:
    h = _FNV_OFFSET ^ (seed & _MASK64)
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class SparseFeatures:
    """Hashed bag-of-tokens features: parallel (index, value) arrays."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim, dtype=np.float64)
        dense[self.indices] = self.values
        return dense


@dataclass
class EncoderParams:
    hash_dim: int
    embed_dim: int
    weights: np.ndarray  # embed_dim x hash_dim, float64
    seed: int

    def __post_init__(self):
        if self.embed_dim < 1 or self.hash_dim < self.embed_dim:
            raise ValueError("require hash_dim >= embed_dim >= 1")
        if self.weights.shape != (self.embed_dim, self.hash_dim):
            raise ValueError("weights shape mismatch")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")


def init_params(
    hash_dim: int = DEFAULT_HASH_DIM,
    embed_dim: int = DEFAULT_EMBED_DIM,
    seed: int = 0,
    scale: float = 0.01,
) -> EncoderParams:
    rng = np.random.default_rng(seed)
    weights = rng.normal(0.0, scale, size=(embed_dim, hash_dim))
    return EncoderParams(hash_dim=hash_dim, embed_dim=embed_dim, weights=weights, seed=seed)


def featurize(text: str, hash_dim: int, seed: int) -> SparseFeatures:
    """Hash normalized tokens into buckets; values are count/sqrt(n_tokens)."""
    if hash_dim < 1:
        raise ValueError("hash_dim must be >= 1")
    tokens = normalize(text)
    if not tokens:
        return SparseFeatures(
            indices=np.empty(0, dtype=np.int64),
            values=np.empty(0, dtype=np.float64),
            dim=hash_dim,
        )
    counts: dict[int, int] = {}
    for tok in tokens:
        bucket = fnv1a64(tok.encode("utf-8"), seed) % hash_dim
        counts[bucket] = counts.get(bucket, 0) + 1
    indices = np.array(sorted(counts), dtype=np.int64)
    scale = 1.0 / np.sqrt(len(tokens))
    values = np.array([counts[i] * scale for i in indices.tolist()], dtype=np.float64)
    return SparseFeatures(indices=indices, values=values, dim=hash_dim)


def embed_features(params: EncoderParams, features: SparseFeatures) -> np.ndarray:
    if features.dim != params.hash_dim:
        raise ValueError("feature dimension mismatch")
    if len(features.indices) == 0:
        return np.zeros(params.embed_dim, dtype=np.float64)
    return params.weights[:, features.indices] @ features.values


def embed(params: EncoderParams, text: str) -> np.ndarray:
    """Embed text into the dense space: weights @ featurize(text)."""
    return embed_features(params, featurize(text, params.hash_dim, params.seed))


def sim(v1: np.ndarray, v2: np.ndarray) -> float:
    """Dot-product similarity between two question vectors."""
    a = np.asarray(v1, dtype=np.float64)
    b = np.asarray(v2, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(a @ b)


def embed_corpus(params: EncoderParams, corpus: List[QAPair]) -> np.ndarray:
    """Row i = embed(question of pair i); float32 storage."""
    if not corpus:
        raise ValueError("corpus must be non-empty")
    matrix = np.empty((len(corpus), params.embed_dim), dtype=np.float32)
    for pair in corpus:
        matrix[pair.id] = embed(params, pair.question).astype(np.float32)
    return matrix


def save_embeddings(matrix: np.ndarray, path: Union[str, Path]) -> None:
    """Write the SQEM file: magic, version, rows u64, dim u32, f32 rows (LE)."""
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    rows, dim = matrix.shape
    with open(path, "wb") as fh:
        fh.write(_EMB_MAGIC)
        fh.write(struct.pack("<IQI", _EMB_VERSION, rows, dim))
        fh.write(matrix.astype("<f4").tobytes())


def load_embeddings(path: Union[str, Path]) -> np.ndarray:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _EMB_MAGIC:
        raise EmbeddingFormatError("not an embedding file (bad magic)")
    version, rows, dim = struct.unpack_from("<IQI", blob, 4)
    if version != _EMB_VERSION:
        raise EmbeddingFormatError(f"unsupported embedding format version {version}")
    off = 4 + struct.calcsize("<IQI")
    expected = rows * dim * 4
    payload = blob[off : off + expected]
    if len(payload) != expected:
        raise EmbeddingFormatError("truncated embedding file")
    return np.frombuffer(payload, dtype="<f4").reshape(rows, dim).astype(np.float32)
