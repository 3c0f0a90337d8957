"""Pure-numpy batch top-k, the fallback when the compiled kernel is absent.

Matches the compiled kernel's contract: float64 scores over float32
rows, selection under (score descending, row id ascending), self-row
and skip-mask exclusion.  Queries are processed one at a time; the
``threads`` argument is accepted for interface parity and ignored,
which trivially keeps results independent of it.
"""

from __future__ import annotations

import numpy as np

# Rows are widened to float64 in chunks to bound the temporary copy.
_CHUNK_ROWS = 65536


def scores_against(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Float64 dot products of every row with one float32 query."""
    n = rows.shape[0]
    out = np.empty(n, dtype=np.float64)
    q64 = query.astype(np.float64)
    for start in range(0, n, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n)
        out[start:stop] = rows[start:stop].astype(np.float64) @ q64
    return out


def select_topk(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the k best scores, ordered (score desc, index asc).

    Entries set to -inf are never selected as long as at least k finite
    scores remain, which the caller guarantees.
    """
    neg = -scores
    kth = np.partition(neg, k - 1)[k - 1]
    better = np.flatnonzero(neg < kth)
    # Stable sort keeps ascending index order within equal scores.
    better = better[np.argsort(neg[better], kind="stable")]
    ties = np.flatnonzero(neg == kth)[: k - better.shape[0]]
    ids = np.concatenate([better, ties]).astype(np.int64)
    return ids, scores[ids]


def dense_topk_batch(rows: np.ndarray, queries: np.ndarray,
                     self_rows: np.ndarray, skip: np.ndarray,
                     k: int, threads: int) -> tuple[np.ndarray, np.ndarray]:
    nq = queries.shape[0]
    ids = np.empty((nq, k), dtype=np.int64)
    scores = np.empty((nq, k), dtype=np.float64)
    skip_mask = skip.astype(bool)
    for j in range(nq):
        s = scores_against(rows, queries[j])
        s[skip_mask] = -np.inf
        if self_rows[j] >= 0:
            s[self_rows[j]] = -np.inf
        ids[j], scores[j] = select_topk(s, k)
    return ids, scores
