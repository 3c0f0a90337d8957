"""Deterministic brute-force cosine top-k over an embedding matrix.

The index holds a row-normalized copy of the matrix, so similarity is a
plain dot product.  Results follow one total order everywhere: score
descending, then sentence id ascending.  The query's own row is always
excluded; other rows with identical embeddings are legitimate neighbors
and stay in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import kernels
from .embedders import EmbeddingMatrix
from .errors import ConfigError, DataFormatError, InvariantError
from .vectors import ZERO_NORM_EPS


@dataclass
class NeighborList:
    """Ranked neighbors of one query under one embedder.

    ``entries`` is a list of (neighbor_id, cosine) pairs, best first.
    ``truncated`` marks approximate results that could not reach the
    requested depth (candidate starvation in the LSH path).
    """

    query_id: int
    embedder: str
    entries: list[tuple[int, float]]
    truncated: bool = False

    def ids(self, k: int | None = None) -> list[int]:
        entries = self.entries if k is None else self.entries[:k]
        return [nid for nid, _ in entries]

    def __len__(self) -> int:
        return len(self.entries)


@dataclass
class SearchIndex:
    """Normalized matrix plus the set of rows excluded from search."""

    embedder: str
    rows: np.ndarray | sp.csr_array
    corpus_hash: int
    excluded: frozenset[int]
    _skip: np.ndarray = field(repr=False)
    _csc: sp.csc_array | None = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def usable(self) -> int:
        return self.n_rows - len(self.excluded)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.rows)


# Rows are normalized block-wise to cap the float64 temporary.
_NORM_CHUNK = 131072


def _normalize_dense(rows: np.ndarray) -> tuple[np.ndarray, frozenset[int]]:
    out = np.empty(rows.shape, dtype=np.float32)
    zero: list[int] = []
    for start in range(0, rows.shape[0], _NORM_CHUNK):
        stop = min(start + _NORM_CHUNK, rows.shape[0])
        block = rows[start:stop].astype(np.float64)
        norms = np.sqrt((block * block).sum(axis=1))
        live = norms >= ZERO_NORM_EPS
        block[live] /= norms[live, None]
        block[~live] = 0.0
        out[start:stop] = block.astype(np.float32)
        zero.extend(int(start + i) for i in np.flatnonzero(~live))
    return out, frozenset(zero)


def _normalize_sparse(rows: sp.csr_array) -> tuple[sp.csr_array, frozenset[int]]:
    m = rows.tocsr(copy=True)
    m.sort_indices()
    sq = m.data.astype(np.float64) ** 2
    counts = np.diff(m.indptr)
    norms = np.sqrt(np.add.reduceat(sq, m.indptr[:-1], dtype=np.float64)) \
        if m.data.size else np.zeros(m.shape[0])
    # reduceat yields garbage for empty rows; force those norms to zero
    norms = np.where(counts > 0, norms, 0.0)
    live = norms >= ZERO_NORM_EPS
    scale = np.repeat(np.where(live, norms, 1.0), counts)
    m.data = (m.data.astype(np.float64) / scale).astype(np.float32)
    dead = np.flatnonzero(~live)
    return m, frozenset(int(i) for i in dead)


def build_index(matrix: EmbeddingMatrix) -> SearchIndex:
    """Normalize the matrix once and record unusable (zero) rows."""
    if matrix.n_rows < 2:
        raise InvariantError("search index needs at least 2 rows")
    if matrix.is_sparse:
        rows, zero = _normalize_sparse(matrix.rows)
    else:
        rows, zero = _normalize_dense(np.asarray(matrix.rows, dtype=np.float32))
    excluded = frozenset(matrix.zero_rows) | zero
    if matrix.n_rows - len(excluded) < 2:
        raise InvariantError(
            f"embedder {matrix.embedder!r}: fewer than 2 usable rows after "
            f"excluding {len(excluded)} zero embeddings"
        )
    skip = np.zeros(matrix.n_rows, dtype=np.uint8)
    if excluded:
        skip[np.fromiter(excluded, dtype=np.int64)] = 1
    return SearchIndex(embedder=matrix.embedder, rows=rows,
                       corpus_hash=matrix.corpus_hash, excluded=excluded,
                       _skip=skip)


def _check_queries(index: SearchIndex, query_ids, k: int) -> np.ndarray:
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if k > index.usable - 1:
        raise ConfigError(
            f"k={k} exceeds the {index.usable - 1} usable rows available "
            "once the query itself is excluded"
        )
    qids = np.asarray(list(query_ids), dtype=np.int64)
    for qid in qids:
        if qid < 0 or qid >= index.n_rows:
            raise ConfigError(f"query {int(qid)}: no such row")
        if int(qid) in index.excluded:
            raise ConfigError(
                f"query {int(qid)}: zero embedding, cannot be searched"
            )
    return qids


def sparse_scores_for_terms(index: SearchIndex, terms,
                            weights) -> np.ndarray:
    """Exact cosine of a sparse query against all rows of a sparse index.

    The query's nonzero terms walk the term-major (inverted) layout;
    accumulation order is ascending term id, fixed and thread-free.
    """
    if index._csc is None:
        index._csc = index.rows.tocsc()
    csc = index._csc
    scores = np.zeros(index.n_rows, dtype=np.float64)
    for t, w in zip(terms, weights):
        start, stop = csc.indptr[t], csc.indptr[t + 1]
        scores[csc.indices[start:stop]] += (
            csc.data[start:stop].astype(np.float64) * float(w)
        )
    return scores


def _sparse_query_scores(index: SearchIndex, qid: int) -> np.ndarray:
    m = index.rows
    lo, hi = m.indptr[qid], m.indptr[qid + 1]
    return sparse_scores_for_terms(index, m.indices[lo:hi], m.data[lo:hi])


def batch_top_k(index: SearchIndex, query_ids, k: int,
                threads: int = 1) -> list[NeighborList]:
    """Top-k for each query id, in input order.

    Output is identical for every ``threads`` value; the flag only caps
    workers inside the dense kernel.
    """
    qids = _check_queries(index, query_ids, k)
    if index.is_sparse:
        skip_mask = index._skip.astype(bool)
        results = []
        for qid in qids:
            scores = _sparse_query_scores(index, int(qid))
            scores[skip_mask] = -np.inf
            scores[qid] = -np.inf
            ids, top = kernels.select_topk(scores, k)
            results.append(NeighborList(
                query_id=int(qid), embedder=index.embedder,
                entries=[(int(i), float(s)) for i, s in zip(ids, top)],
            ))
        return results
    queries = np.ascontiguousarray(index.rows[qids])
    ids, scores = kernels.dense_topk_batch(
        index.rows, queries, qids, index._skip, k, threads)
    return [
        NeighborList(
            query_id=int(qid), embedder=index.embedder,
            entries=[(int(i), float(s)) for i, s in zip(ids[j], scores[j])],
        )
        for j, qid in enumerate(qids)
    ]


def top_k(index: SearchIndex, query_id: int, k: int) -> NeighborList:
    return batch_top_k(index, [query_id], k)[0]


def dump_neighbors(lists, path) -> None:
    """Write neighbor lists as JSONL, one record per (embedder, query)."""
    with open(path, "w", encoding="utf-8") as fh:
        for nl in lists:
            record = {
                "embedder": nl.embedder,
                "query_id": nl.query_id,
                "k": len(nl.entries),
                "neighbors": [
                    {"id": nid, "score": score, "rank": rank}
                    for rank, (nid, score) in enumerate(nl.entries, start=1)
                ],
            }
            if nl.truncated:
                record["truncated"] = True
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_neighbors(path) -> list[NeighborList]:
    lists: list[NeighborList] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entries = [(int(n["id"]), float(n["score"]))
                           for n in record["neighbors"]]
                nl = NeighborList(
                    query_id=int(record["query_id"]),
                    embedder=str(record["embedder"]),
                    entries=entries,
                    truncated=bool(record.get("truncated", False)),
                )
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise DataFormatError(
                    f"{path}:{lineno}: bad neighbor record: {exc}"
                ) from exc
            lists.append(nl)
    return lists
