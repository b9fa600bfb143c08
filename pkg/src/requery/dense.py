"""Exact maximum inner product search over precomputed question vectors.

Search is exact: the cascade's second step scores at most k candidates, so
approximate indexing buys nothing. Scores accumulate in float64 over the
float32 matrix; ordering uses scores rounded to 1e-9 with ties broken by
ascending qa_id.
"""

from __future__ import annotations

from typing import List, Sequence, Tuple

import numpy as np

from . import kernels


def _rank(ids: np.ndarray, scores: np.ndarray, k: int) -> List[Tuple[int, float]]:
    order = sorted(
        range(len(ids)), key=lambda i: (-round(float(scores[i]), 9), int(ids[i]))
    )
    return [(int(ids[i]), float(scores[i])) for i in order[:k]]


def mips_restricted(
    matrix: np.ndarray,
    query: np.ndarray,
    candidate_ids: Sequence[int],
    k: int,
) -> List[Tuple[int, float]]:
    """Exact top-k inner products over the given candidate rows."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(candidate_ids) == 0:
        raise ValueError("candidate_ids must be non-empty")
    n_rows = matrix.shape[0]
    ids = np.asarray(candidate_ids, dtype=np.int64)
    for cid in ids.tolist():
        if cid < 0 or cid >= n_rows:
            raise IndexError(f"invalid candidate id {cid}")
    q = np.ascontiguousarray(query, dtype=np.float64)
    if q.shape != (matrix.shape[1],):
        raise ValueError(f"query dimension {q.shape} does not match matrix dim {matrix.shape[1]}")
    scores = kernels.dot_rows(np.ascontiguousarray(matrix, dtype=np.float32), ids, q)
    return _rank(ids, scores, k)


def mips_full(matrix: np.ndarray, query: np.ndarray, k: int) -> List[Tuple[int, float]]:
    """Exact top-k inner products over every row (diagnostic full scan)."""
    return mips_restricted(matrix, query, np.arange(matrix.shape[0]), k)
