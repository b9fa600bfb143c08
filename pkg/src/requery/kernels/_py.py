"""NumPy fallback implementations of the scoring kernels."""

from __future__ import annotations

import numpy as np


def bm25_accumulate(ids, tfs, idf, k1, norm, scores):
    """Add one query term's Okapi contribution to per-document scores.

    ids: int64 posting doc ids; tfs: float64 term frequencies;
    norm: per-document length normalization factor k1*(1-b+b*len/avglen);
    scores: float64 accumulator indexed by doc id, mutated in place.
    """
    scores[ids] += idf * tfs * (k1 + 1.0) / (tfs + norm[ids])


def dot_rows(matrix, row_ids, query):
    """Dot products of the selected float32 rows against a float64 query."""
    return matrix[row_ids].astype(np.float64) @ query
