"""BM25 inverted index over the indexed questions (first-stage retriever).

Okapi scoring with IDF = ln(1 + (N - df + 0.5) / (df + 0.5)), which is
never negative. Ties are broken by ascending qa_id for determinism.
"""

from __future__ import annotations

import math
import struct
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np

from . import kernels
from .corpus import QAPair
from .textnorm import normalize

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75

_MAGIC = b"SQIX"
_VERSION = 1


class IndexFormatError(ValueError):
    """Raised when a persisted index file is malformed or unsupported."""


@dataclass
class SparseIndex:
    """Immutable BM25 index; safe for concurrent read-only search."""

    postings: Dict[str, Tuple[np.ndarray, np.ndarray]]  # term -> (ids, tfs)
    doc_lengths: np.ndarray
    avg_doc_length: float
    doc_count: int
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B
    _norm: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        avg = self.avg_doc_length if self.avg_doc_length > 0 else 1.0
        self._norm = self.k1 * (1.0 - self.b + self.b * self.doc_lengths / avg)

    def idf(self, term: str) -> float:
        entry = self.postings.get(term)
        if entry is None:
            return 0.0
        df = len(entry[0])
        return math.log(1.0 + (self.doc_count - df + 0.5) / (df + 0.5))

    def search(self, query: str, k: int) -> List[Tuple[int, float]]:
        return sparse_search(self, query, k)


def build_sparse_index(
    corpus: List[QAPair], k1: float = DEFAULT_K1, b: float = DEFAULT_B
) -> SparseIndex:
    """Index normalize(question) of every pair; deterministic for a corpus."""
    if not corpus:
        raise ValueError("cannot build an index over an empty corpus")
    if k1 <= 0:
        raise ValueError("k1 must be > 0")
    if not 0.0 <= b <= 1.0:
        raise ValueError("b must be in [0, 1]")

    raw: Dict[str, List[Tuple[int, int]]] = {}
    doc_lengths = np.zeros(len(corpus), dtype=np.float64)
    for pair in corpus:
        tokens = normalize(pair.question)
        doc_lengths[pair.id] = len(tokens)
        for term, tf in Counter(tokens).items():
            raw.setdefault(term, []).append((pair.id, tf))

    postings: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}
    for term, pairs in raw.items():
        pairs.sort()
        ids = np.array([p[0] for p in pairs], dtype=np.int64)
        tfs = np.array([p[1] for p in pairs], dtype=np.float64)
        postings[term] = (ids, tfs)

    avg = float(doc_lengths.mean())
    return SparseIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=avg,
        doc_count=len(corpus),
        k1=k1,
        b=b,
    )


def sparse_search(index: SparseIndex, query: str, k: int) -> List[Tuple[int, float]]:
    """Top-k Okapi BM25 scores; only documents with score > 0 are returned."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = np.zeros(index.doc_count, dtype=np.float64)
    for term in normalize(query):
        entry = index.postings.get(term)
        if entry is None:
            continue
        ids, tfs = entry
        kernels.bm25_accumulate(ids, tfs, index.idf(term), index.k1, index._norm, scores)
    hit_ids = np.nonzero(scores > 0.0)[0]
    ranked = sorted(((int(i), float(scores[i])) for i in hit_ids), key=lambda h: (-h[1], h[0]))
    return ranked[:k]


def save_sparse_index(index: SparseIndex, path: Union[str, Path]) -> None:
    """Persist to the SQIX binary format (little-endian, delta-coded ids)."""
    terms = sorted(index.postings)
    vocab = bytearray()
    vocab += struct.pack("<I", len(terms))
    for term in terms:
        data = term.encode("utf-8")
        vocab += struct.pack("<I", len(data)) + data

    post = bytearray()
    for term in terms:
        ids, tfs = index.postings[term]
        post += struct.pack("<I", len(ids))
        prev = 0
        for doc_id, tf in zip(ids.tolist(), tfs.tolist()):
            post += struct.pack("<II", doc_id - prev, int(tf))
            prev = doc_id

    lengths = bytearray()
    lengths += struct.pack("<I", index.doc_count)
    for n in index.doc_lengths.astype(np.int64).tolist():
        lengths += struct.pack("<I", n)

    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<Idd", _VERSION, index.k1, index.b))
        for section in (vocab, post, lengths):
            fh.write(struct.pack("<Q", len(section)))
            fh.write(section)


def load_sparse_index(path: Union[str, Path]) -> SparseIndex:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise IndexFormatError("not a sparse index file (bad magic)")
    version, k1, b = struct.unpack_from("<Idd", blob, 4)
    if version != _VERSION:
        raise IndexFormatError(f"unsupported index format version {version}")
    off = 4 + struct.calcsize("<Idd")

    sections = []
    for _ in range(3):
        (size,) = struct.unpack_from("<Q", blob, off)
        off += 8
        sections.append(blob[off : off + size])
        off += size
    vocab_b, post_b, len_b = sections

    pos = 0
    (n_terms,) = struct.unpack_from("<I", vocab_b, pos)
    pos += 4
    terms = []
    for _ in range(n_terms):
        (n,) = struct.unpack_from("<I", vocab_b, pos)
        pos += 4
        terms.append(vocab_b[pos : pos + n].decode("utf-8"))
        pos += n

    postings: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}
    pos = 0
    for term in terms:
        (n,) = struct.unpack_from("<I", post_b, pos)
        pos += 4
        ids = np.empty(n, dtype=np.int64)
        tfs = np.empty(n, dtype=np.float64)
        prev = 0
        for i in range(n):
            gap, tf = struct.unpack_from("<II", post_b, pos)
            pos += 8
            prev += gap
            ids[i] = prev
            tfs[i] = tf
        postings[term] = (ids, tfs)

    (doc_count,) = struct.unpack_from("<I", len_b, 0)
    doc_lengths = np.array(
        struct.unpack_from(f"<{doc_count}I", len_b, 4), dtype=np.float64
    )
    avg = float(doc_lengths.mean()) if doc_count else 0.0
    return SparseIndex(
        postings=postings,
        doc_lengths=doc_lengths,
        avg_doc_length=avg,
        doc_count=doc_count,
        k1=k1,
        b=b,
    )
