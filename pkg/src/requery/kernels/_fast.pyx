# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scoring kernels: BM25 posting accumulation and row dot products."""

import numpy as np

cimport numpy as cnp


def bm25_accumulate(
    cnp.int64_t[::1] ids,
    cnp.float64_t[::1] tfs,
    double idf,
    double k1,
    cnp.float64_t[::1] norm,
    cnp.float64_t[::1] scores,
):
    cdef Py_ssize_t i, n = ids.shape[0]
    cdef cnp.int64_t doc
    cdef double tf
    for i in range(n):
        doc = ids[i]
        tf = tfs[i]
        scores[doc] += idf * tf * (k1 + 1.0) / (tf + norm[doc])


def dot_rows(
    cnp.float32_t[:, ::1] matrix,
    cnp.int64_t[::1] row_ids,
    cnp.float64_t[::1] query,
):
    cdef Py_ssize_t i, j, n = row_ids.shape[0], d = matrix.shape[1]
    cdef double acc
    cdef cnp.int64_t row
    out = np.empty(n, dtype=np.float64)
    cdef cnp.float64_t[::1] out_v = out
    for i in range(n):
        row = row_ids[i]
        acc = 0.0
        for j in range(d):
            acc += <double> matrix[row, j] * query[j]
        out_v[i] = acc
    return out
