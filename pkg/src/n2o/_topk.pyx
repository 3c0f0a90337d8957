# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled batch top-k kernel over a row-normalized float32 matrix.

Scores are float64 dot products with a fixed sequential accumulation
order over each row, so the output is bit-identical regardless of how
many OpenMP threads process the query batch.  Selection keeps the k best
rows under the total order (score descending, row id ascending) using a
bounded worst-at-root heap per query.
"""

import numpy as np

cimport numpy as cnp
from cython.parallel cimport prange

cnp.import_array()


cdef inline bint _worse(double s1, long long i1, double s2, long long i2) noexcept nogil:
    # True when (s1, i1) ranks strictly worse than (s2, i2).
    if s1 != s2:
        return s1 < s2
    return i1 > i2


cdef void _sift_up(double* hs, long long* hi, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t parent
    cdef double s = hs[pos]
    cdef long long i = hi[pos]
    while pos > 0:
        parent = (pos - 1) // 2
        if _worse(s, i, hs[parent], hi[parent]):
            hs[pos] = hs[parent]
            hi[pos] = hi[parent]
            pos = parent
        else:
            break
    hs[pos] = s
    hi[pos] = i


cdef void _sift_down(double* hs, long long* hi, Py_ssize_t size, Py_ssize_t pos) noexcept nogil:
    cdef Py_ssize_t child
    cdef double s = hs[pos]
    cdef long long i = hi[pos]
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and _worse(hs[child + 1], hi[child + 1], hs[child], hi[child]):
            child += 1
        if _worse(hs[child], hi[child], s, i):
            hs[pos] = hs[child]
            hi[pos] = hi[child]
            pos = child
        else:
            break
    hs[pos] = s
    hi[pos] = i


cdef void _query_topk(const float* rows, const float* q, const unsigned char* skip,
                      long long self_row, Py_ssize_t n, Py_ssize_t d, Py_ssize_t k,
                      double* hs, long long* hi) noexcept nogil:
    cdef Py_ssize_t i, t, size = 0
    cdef double s, tmps
    cdef long long tmpi
    cdef const float* row
    for i in range(n):
        if skip[i] or i == self_row:
            continue
        row = rows + i * d
        s = 0.0
        for t in range(d):
            s = s + (<double> row[t]) * (<double> q[t])
        if size < k:
            hs[size] = s
            hi[size] = i
            _sift_up(hs, hi, size)
            size += 1
        elif _worse(hs[0], hi[0], s, i):
            hs[0] = s
            hi[0] = i
            _sift_down(hs, hi, k, 0)
    # Heap-sort in place: repeatedly move the worst element to the tail,
    # leaving the array ordered best-first.
    for t in range(size - 1, 0, -1):
        tmps = hs[0]; tmpi = hi[0]
        hs[0] = hs[t]; hi[0] = hi[t]
        hs[t] = tmps; hi[t] = tmpi
        _sift_down(hs, hi, t, 0)


def dense_topk_batch(const float[:, ::1] rows, const float[:, ::1] queries,
                     const long long[:] self_rows, const unsigned char[:] skip,
                     Py_ssize_t k, int threads):
    """Top-k ids and float64 scores for each query over all non-skipped rows.

    ``self_rows[j]`` is a row id excluded for query j (-1 for none).  The
    caller guarantees k does not exceed the number of usable rows.
    """
    cdef Py_ssize_t n = rows.shape[0]
    cdef Py_ssize_t d = rows.shape[1]
    cdef Py_ssize_t nq = queries.shape[0]
    if queries.shape[1] != d:
        raise ValueError("query dimension does not match matrix")
    ids_arr = np.empty((nq, k), dtype=np.int64)
    scores_arr = np.empty((nq, k), dtype=np.float64)
    cdef long long[:, ::1] ids_v = ids_arr
    cdef double[:, ::1] scores_v = scores_arr
    cdef const float* rows_p = &rows[0, 0]
    cdef const float* queries_p = &queries[0, 0] if nq > 0 else NULL
    cdef const unsigned char* skip_p = &skip[0]
    cdef const long long* self_p = &self_rows[0] if nq > 0 else NULL
    cdef double* hs_p = &scores_v[0, 0] if nq > 0 else NULL
    cdef long long* hi_p = &ids_v[0, 0] if nq > 0 else NULL
    cdef Py_ssize_t j
    if threads < 1:
        threads = 1
    for j in prange(nq, nogil=True, num_threads=threads, schedule='static'):
        _query_topk(rows_p, queries_p + j * d, skip_p, self_p[j], n, d, k,
                    hs_p + j * k, hi_p + j * k)
    return ids_arr, scores_arr
