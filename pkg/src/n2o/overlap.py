"""Nearest-neighbor overlap: the pairwise score, its multi-sample
aggregation, and the k-sweep / sample-variance robustness summaries.

N2O for a pair of embedders is the mean fraction of shared ids among
their k-nearest-neighbor sets over a query sample: sum_j o[j] / (k * n)
with o[j] the intersection size at query j.  Everything here consumes
already-ranked NeighborLists, so one dump at the largest k serves every
smaller k via list prefixes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import QuerySample
from .errors import ConfigError, InvariantError
from .search import NeighborList


@dataclass(frozen=True)
class OverlapRecord:
    """Intersection size for one query under one embedder pair."""

    query_id: int
    pair: tuple[str, str]
    k: int
    overlap_count: int


@dataclass
class N2OResult:
    pair: tuple[str, str]
    k: int
    n: int
    per_query: list[OverlapRecord]
    value: float


@dataclass
class N2OMatrix:
    """Pairwise N2O across samples: per-sample matrices plus mean/std.

    ``std`` is the population standard deviation over samples (the
    samples are the whole population being described, not a draw from
    one).
    """

    embedders: list[str]
    k: int
    sample_seeds: list[int]
    samples: list[np.ndarray]
    mean: np.ndarray
    std: np.ndarray
    records: dict[tuple[str, str], list[list[OverlapRecord]]]

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    def pair_index(self, name: str) -> int:
        try:
            return self.embedders.index(name)
        except ValueError:
            raise ConfigError(f"unknown embedder {name!r}") from None


def canonical_pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if a <= b else (b, a)


def overlap_at_k(a: NeighborList, b: NeighborList, k: int) -> int:
    """Shared ids between the two lists' top-k prefixes."""
    if a.query_id != b.query_id:
        raise InvariantError(
            f"overlap across different queries: {a.query_id} vs {b.query_id}"
        )
    if len(a) < k or len(b) < k:
        raise InvariantError(
            f"query {a.query_id}: neighbor lists shorter than k={k} "
            f"({len(a)} and {len(b)})"
        )
    return len(set(a.ids(k)) & set(b.ids(k)))


def n2o_pair(neighbors_a: list[NeighborList], neighbors_b: list[NeighborList],
             k: int) -> N2OResult:
    """N2O between two embedders over one aligned query sample."""
    if len(neighbors_a) != len(neighbors_b) or not neighbors_a:
        raise InvariantError("neighbor lists do not cover the same query sample")
    for la, lb in zip(neighbors_a, neighbors_b):
        if la.query_id != lb.query_id:
            raise InvariantError(
                "neighbor lists do not cover the same query sample"
            )
    pair = canonical_pair(neighbors_a[0].embedder, neighbors_b[0].embedder)
    n = len(neighbors_a)
    per_query = [
        OverlapRecord(query_id=la.query_id, pair=pair, k=k,
                      overlap_count=overlap_at_k(la, lb, k))
        for la, lb in zip(neighbors_a, neighbors_b)
    ]
    total = sum(r.overlap_count for r in per_query)
    return N2OResult(pair=pair, k=k, n=n, per_query=per_query,
                     value=total / (k * n))


def n2o_matrix(all_neighbors: dict[str, list[list[NeighborList]]], k: int,
               samples: list[QuerySample]) -> N2OMatrix:
    """Pairwise N2O for every embedder pair, aggregated across samples.

    ``all_neighbors[name][s]`` holds the NeighborLists for sample s in
    sample query order.  The diagonal is computed like any other pair
    (A against A), which lands on 1.0 exactly.
    """
    names = list(all_neighbors.keys())
    if not names:
        raise InvariantError("no embedders given")
    for name in names:
        lists = all_neighbors[name]
        if len(lists) != len(samples):
            raise InvariantError(
                f"embedder {name!r}: {len(lists)} neighbor sets for "
                f"{len(samples)} samples"
            )
        for s, sample in enumerate(samples):
            got = [nl.query_id for nl in lists[s]]
            if got != list(sample.query_ids):
                raise InvariantError(
                    f"embedder {name!r}, sample {s}: neighbor lists do not "
                    "match the sample's queries"
                )
    m = len(names)
    per_sample = [np.zeros((m, m), dtype=np.float64) for _ in samples]
    records: dict[tuple[str, str], list[list[OverlapRecord]]] = {}
    for i in range(m):
        for j in range(i, m):
            pair = canonical_pair(names[i], names[j])
            pair_records: list[list[OverlapRecord]] = []
            for s in range(len(samples)):
                result = n2o_pair(all_neighbors[names[i]][s],
                                  all_neighbors[names[j]][s], k)
                per_sample[s][i, j] = result.value
                per_sample[s][j, i] = result.value
                pair_records.append(result.per_query)
            records[pair] = pair_records
    stack = np.stack(per_sample)
    return N2OMatrix(embedders=names, k=k,
                     sample_seeds=[s.seed for s in samples],
                     samples=per_sample, mean=stack.mean(axis=0),
                     std=stack.std(axis=0), records=records)


def _average_ranks(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0], dtype=np.float64)
    i = 0
    sorted_vals = values[order]
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x, y) -> float:
    """Rank correlation with ties sharing the average rank.

    Constant input has no defined rank order, so it raises rather than
    returning NaN.
    """
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if xv.ndim != 1 or yv.ndim != 1 or xv.shape[0] != yv.shape[0]:
        raise InvariantError("rank correlation needs two equal-length vectors")
    if xv.shape[0] < 2:
        raise InvariantError("rank correlation needs at least 2 points")
    if np.all(xv == xv[0]) or np.all(yv == yv[0]):
        raise InvariantError("rank correlation undefined for constant input")
    rx = _average_ranks(xv)
    ry = _average_ranks(yv)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx * ry).sum() / np.sqrt((rx * rx).sum() * (ry * ry).sum()))


@dataclass
class KStabilitySummary:
    k_grid: list[int]
    pair_order: list[tuple[str, str]]
    values_by_k: dict[int, list[float]]
    rho_by_k_pair: dict[tuple[int, int], float]
    mean_rho: float
    min_rho: float


def k_stability(all_neighbors: dict[str, list[list[NeighborList]]],
                k_grid: list[int],
                samples: list[QuerySample]) -> KStabilitySummary:
    """How stable the embedder-pair ranking is as k varies.

    For each k the pairs are ranked by mean N2O; rho is computed between
    every two k values.  Identical value vectors count as rho 1.0 even
    when constant, covering the degenerate single-pair case.
    """
    k_grid = sorted(set(int(k) for k in k_grid))
    if not k_grid or k_grid[0] < 1:
        raise ConfigError("k grid must contain positive values")
    depth_needed = k_grid[-1]
    for name, lists in all_neighbors.items():
        for per_sample in lists:
            for nl in per_sample:
                if len(nl) < depth_needed:
                    raise InvariantError(
                        f"embedder {name!r}, query {nl.query_id}: list depth "
                        f"{len(nl)} < max k {depth_needed}"
                    )
    names = list(all_neighbors.keys())
    pair_order = [(names[i], names[j]) for i in range(len(names))
                  for j in range(i + 1, len(names))]
    if not pair_order:
        raise ConfigError("k stability needs at least 2 embedders")
    values_by_k: dict[int, list[float]] = {}
    for k in k_grid:
        matrix = n2o_matrix(all_neighbors, k, samples)
        values_by_k[k] = [float(matrix.mean[matrix.pair_index(a),
                                            matrix.pair_index(b)])
                          for a, b in pair_order]
    rho_by_k_pair: dict[tuple[int, int], float] = {}
    for a_idx in range(len(k_grid)):
        for b_idx in range(a_idx + 1, len(k_grid)):
            ka, kb = k_grid[a_idx], k_grid[b_idx]
            va, vb = values_by_k[ka], values_by_k[kb]
            # A single pair (or identical vectors) cannot change rank
            # order, so rho degenerates to 1.0.
            rho = 1.0 if len(va) == 1 or va == vb else spearman_rho(va, vb)
            rho_by_k_pair[(ka, kb)] = rho
    rhos = list(rho_by_k_pair.values())
    return KStabilitySummary(
        k_grid=k_grid, pair_order=pair_order, values_by_k=values_by_k,
        rho_by_k_pair=rho_by_k_pair,
        mean_rho=float(np.mean(rhos)), min_rho=float(min(rhos)),
    )


@dataclass
class PairStdSummary:
    per_pair: dict[tuple[str, str], float]
    min: float
    mean: float
    max: float


def sample_variance(matrix: N2OMatrix) -> PairStdSummary:
    """Spread of each pair's N2O across samples (population std)."""
    if matrix.n_samples < 2:
        raise InvariantError("variance needs at least 2 samples")
    per_pair: dict[tuple[str, str], float] = {}
    names = matrix.embedders
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            per_pair[(names[i], names[j])] = float(matrix.std[i, j])
    if not per_pair:
        raise InvariantError("variance summary needs at least 2 embedders")
    stds = list(per_pair.values())
    return PairStdSummary(per_pair=per_pair, min=min(stds),
                          mean=float(np.mean(stds)), max=max(stds))


def one_vs_rest(matrix: N2OMatrix, embedder: str) -> list[tuple[str, float]]:
    """Mean-N2O of one embedder against each of the others."""
    idx = matrix.pair_index(embedder)
    return [(other, float(matrix.mean[idx, j]))
            for j, other in enumerate(matrix.embedders) if j != idx]


def write_n2o_csv(matrix: N2OMatrix, mean_path, std_path) -> None:
    """Mean and std matrices as CSV with embedder name headers.

    Values are written with repr, the shortest round-trip form, so a
    rerun over identical inputs is byte-identical.
    """
    for path, grid in ((mean_path, matrix.mean), (std_path, matrix.std)):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("embedder," + ",".join(matrix.embedders) + "\n")
            for name, row in zip(matrix.embedders, grid):
                fh.write(name + "," + ",".join(repr(float(v)) for v in row)
                         + "\n")


def stability_payload(stability: KStabilitySummary) -> dict:
    return {
        "k_grid": stability.k_grid,
        "pairs": [f"{a}|{b}" for a, b in stability.pair_order],
        "values_by_k": {str(k): v
                        for k, v in sorted(stability.values_by_k.items())},
        "rho": {f"{ka}|{kb}": rho
                for (ka, kb), rho in sorted(stability.rho_by_k_pair.items())},
        "mean_rho": stability.mean_rho,
        "min_rho": stability.min_rho,
    }


def write_report_json(matrix: N2OMatrix, path,
                      stability: KStabilitySummary | None = None) -> None:
    per_query = {
        f"{a}|{b}": [
            [{"query_id": r.query_id, "overlap": r.overlap_count}
             for r in sample_records]
            for sample_records in matrix.records[(a, b)]
        ]
        for a, b in sorted(matrix.records)
    }
    payload = {
        "embedders": matrix.embedders,
        "k": matrix.k,
        "n": len(matrix.records[next(iter(sorted(matrix.records)))][0]),
        "sample_seeds": matrix.sample_seeds,
        "mean": matrix.mean.tolist(),
        "std": matrix.std.tolist(),
        "per_sample": [m.tolist() for m in matrix.samples],
        "per_query": per_query,
        "k_stability": None if stability is None
        else stability_payload(stability),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2)
        fh.write("\n")
