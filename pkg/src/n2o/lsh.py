"""Random-hyperplane LSH over a SearchIndex, plus a recall harness.

Signatures hash each row into one bucket per table; a query gathers the
union of its buckets and reranks those candidates with exactly the same
scores and total order as the brute-force path.  Approximation can only
drop neighbors, never invent scores.  b=0 degenerates to a single
all-ids bucket, which makes the approximate result equal the exact one.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, InvariantError
from .search import NeighborList, SearchIndex, _check_queries, batch_top_k

_SIG_CHUNK = 65536


@dataclass
class LshIndex:
    seed: int
    n_tables: int
    bits_per_table: int
    hyperplanes: np.ndarray  # (L, b, d) float32 unit rows
    buckets: list[dict[int, np.ndarray]]  # per table: signature -> sorted ids


def _keys_for_block(planes: np.ndarray, block: np.ndarray) -> np.ndarray:
    """Signature keys for a block of rows under one table's hyperplanes.

    Bit i is set when hyperplane_i . x >= 0; bits pack little-endian
    into a uint64 key.
    """
    b = planes.shape[0]
    if b == 0:
        return np.zeros(block.shape[0], dtype=np.uint64)
    bits = (block @ planes.T) >= 0.0
    powers = (np.uint64(1) << np.arange(b, dtype=np.uint64))
    return (bits.astype(np.uint64) * powers).sum(axis=1, dtype=np.uint64)


def build_lsh(index: SearchIndex, n_tables: int, bits_per_table: int,
              seed: int) -> LshIndex:
    """Hash every usable row into one bucket per table; reproducible
    from the seed alone."""
    if n_tables < 1:
        raise ConfigError(f"need at least 1 table, got {n_tables}")
    if bits_per_table < 0 or bits_per_table > 64:
        raise ConfigError(
            f"bits per table must be in [0, 64], got {bits_per_table}"
        )
    if index.is_sparse:
        raise ConfigError("LSH supports dense matrices only")
    d = index.dim
    rng = np.random.Generator(np.random.PCG64(seed))
    planes = rng.standard_normal((n_tables, bits_per_table, d))
    norms = np.linalg.norm(planes, axis=2, keepdims=True)
    planes = (planes / np.where(norms > 0, norms, 1.0)).astype(np.float32)
    usable = np.flatnonzero(index._skip == 0).astype(np.int64)
    buckets: list[dict[int, np.ndarray]] = []
    for t in range(n_tables):
        keys = np.empty(usable.shape[0], dtype=np.uint64)
        for start in range(0, usable.shape[0], _SIG_CHUNK):
            stop = min(start + _SIG_CHUNK, usable.shape[0])
            keys[start:stop] = _keys_for_block(
                planes[t], index.rows[usable[start:stop]])
        order = np.argsort(keys, kind="stable")
        sorted_keys = keys[order]
        sorted_ids = usable[order]
        table: dict[int, np.ndarray] = {}
        bounds = np.flatnonzero(np.diff(sorted_keys)) + 1
        for chunk_ids, chunk_keys in zip(np.split(sorted_ids, bounds),
                                         np.split(sorted_keys, bounds)):
            table[int(chunk_keys[0])] = chunk_ids
        buckets.append(table)
    return LshIndex(seed=seed, n_tables=n_tables,
                    bits_per_table=bits_per_table, hyperplanes=planes,
                    buckets=buckets)


def _candidates(lsh: LshIndex, index: SearchIndex, qid: int) -> np.ndarray:
    row = index.rows[qid:qid + 1]
    found = []
    for t in range(lsh.n_tables):
        key = int(_keys_for_block(lsh.hyperplanes[t], row)[0])
        ids = lsh.buckets[t].get(key)
        if ids is not None:
            found.append(ids)
    if not found:
        return np.empty(0, dtype=np.int64)
    cand = np.unique(np.concatenate(found))
    return cand[cand != qid]


def query_lsh(lsh: LshIndex, index: SearchIndex, query_id: int,
              k: int) -> NeighborList:
    """Approximate top-k: bucket-union candidates, exact rerank.

    When fewer than k candidates hash near the query the result is
    shorter and carries ``truncated=True``.
    """
    _check_queries(index, [query_id], k)
    cand = _candidates(lsh, index, query_id)
    if cand.shape[0] == 0:
        return NeighborList(query_id=query_id, embedder=index.embedder,
                            entries=[], truncated=True)
    sub = np.ascontiguousarray(index.rows[cand])
    kk = min(k, cand.shape[0])
    ids, scores = kernels.dense_topk_batch(
        sub, index.rows[query_id:query_id + 1],
        np.asarray([-1], dtype=np.int64),
        np.zeros(cand.shape[0], dtype=np.uint8), kk, 1)
    entries = [(int(cand[i]), float(s)) for i, s in zip(ids[0], scores[0])]
    return NeighborList(query_id=query_id, embedder=index.embedder,
                        entries=entries, truncated=cand.shape[0] < k)


def measure_recall(lsh_results: list[NeighborList],
                   exact_results: list[NeighborList]) -> float:
    """Mean fraction of exact neighbors the approximate lists found."""
    if len(lsh_results) != len(exact_results) or not exact_results:
        raise InvariantError("recall needs aligned, non-empty result lists")
    total = 0.0
    for approx, exact in zip(lsh_results, exact_results):
        if approx.query_id != exact.query_id:
            raise InvariantError(
                f"recall inputs misaligned at query {exact.query_id}"
            )
        k = len(exact)
        if k == 0 or len(approx) > k:
            raise InvariantError(
                f"query {exact.query_id}: approximate list deeper than exact"
            )
        total += len(set(approx.ids()) & set(exact.ids())) / k
    return total / len(exact_results)


@dataclass(frozen=True)
class RecallRow:
    n_tables: int
    bits_per_table: int
    seed: int
    recall: float
    mean_candidates: float
    query_time_us: float


def tune_lsh(index: SearchIndex, query_ids, k: int,
             table_grid, bits_grid, seed: int) -> list[RecallRow]:
    """Sweep (L, b) on held-out queries against the exact oracle."""
    qids = [int(q) for q in query_ids]
    exact = batch_top_k(index, qids, k)
    rows: list[RecallRow] = []
    for n_tables in table_grid:
        for bits in bits_grid:
            lsh = build_lsh(index, n_tables, bits, seed)
            n_cand = 0
            approx = []
            t0 = time.perf_counter()
            for qid in qids:
                cand = _candidates(lsh, index, qid)
                n_cand += cand.shape[0]
                approx.append(query_lsh(lsh, index, qid, k))
            elapsed = time.perf_counter() - t0
            rows.append(RecallRow(
                n_tables=n_tables, bits_per_table=bits, seed=seed,
                recall=measure_recall(approx, exact),
                mean_candidates=n_cand / len(qids),
                query_time_us=elapsed / len(qids) * 1e6,
            ))
    return rows


def best_params(rows: list[RecallRow],
                target_recall: float = 0.9) -> RecallRow:
    """Cheapest sweep row meeting the recall target, else the highest
    recall row."""
    if not rows:
        raise ConfigError("empty sweep")
    hits = [r for r in rows if r.recall >= target_recall]
    if hits:
        return min(hits, key=lambda r: (r.mean_candidates,
                                        -r.recall, r.n_tables))
    return max(rows, key=lambda r: (r.recall, -r.mean_candidates))


def write_recall_csv(rows: list[RecallRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["L", "b", "seed", "recall", "mean_candidates",
                         "query_time_us"])
        for r in rows:
            writer.writerow([r.n_tables, r.bits_per_table, r.seed,
                             repr(r.recall), repr(r.mean_candidates),
                             f"{r.query_time_us:.1f}"])
