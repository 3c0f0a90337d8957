"""Kernel dispatch: compiled extension when available, numpy otherwise.

``HAVE_COMPILED`` reports which implementation was selected at import
time.  Both share one contract, so callers never branch on it.
"""

from __future__ import annotations

import numpy as np

from . import _topk_py

try:
    from . import _topk as _impl  # type: ignore[attr-defined]

    HAVE_COMPILED = True
except ImportError:  # pragma: no cover - depends on build environment
    _impl = _topk_py
    HAVE_COMPILED = False

KERNEL_BACKEND = "compiled" if HAVE_COMPILED else "python"


def dense_topk_batch(rows: np.ndarray, queries: np.ndarray,
                     self_rows: np.ndarray, skip: np.ndarray,
                     k: int, threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Batch top-k over L2-normalized float32 rows.

    Returns ``(ids, scores)`` with shapes (nq, k); ids are int64 row
    positions ordered by (cosine descending, id ascending), scores are
    float64 dot products.  ``self_rows[j] == -1`` means no self
    exclusion for query j; ``skip`` marks rows excluded for every query.
    Output is identical for every ``threads`` value.
    """
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    queries = np.ascontiguousarray(queries, dtype=np.float32)
    self_rows = np.ascontiguousarray(self_rows, dtype=np.int64)
    skip = np.ascontiguousarray(skip, dtype=np.uint8)
    if queries.ndim != 2 or rows.ndim != 2:
        raise ValueError("rows and queries must be 2-d")
    if queries.shape[1] != rows.shape[1]:
        raise ValueError("query dimension does not match matrix")
    if self_rows.shape[0] != queries.shape[0]:
        raise ValueError("self_rows length does not match query count")
    if skip.shape[0] != rows.shape[0]:
        raise ValueError("skip length does not match row count")
    if k < 1:
        raise ValueError("k must be positive")
    return _impl.dense_topk_batch(rows, queries, self_rows, skip, k, int(threads))


def scores_against(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Float64 scores of one query against a float32 row block."""
    return _topk_py.scores_against(rows, query)


def select_topk(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact (score desc, index asc) selection from a float64 score vector."""
    return _topk_py.select_topk(scores, k)
