"""Downstream analyses over neighbor dumps: token overlap between
queries and their neighbors, popular and outlier neighbors, and the
paraphrase insertion probe.

Token overlap is Jaccard over lowercased token types; the same
definition drives both the per-embedder overlap statistic and the
pair-filtering threshold, so the two stay comparable.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .corpus import Corpus, Sentence, tokenize
from .embedders import EmbeddingMatrix
from .errors import ConfigError, DataFormatError, InvariantError
from .kernels import scores_against
from .search import NeighborList, build_index, sparse_scores_for_terms
from .vectors import SparseVector, ZERO_NORM_EPS, l2_normalize, sparse_dot


def mrr(ranks) -> float:
    """Mean reciprocal rank; every rank must be >= 1."""
    if not ranks:
        raise InvariantError("mrr needs at least one rank")
    if any(r < 1 for r in ranks):
        raise InvariantError("ranks start at 1")
    return float(np.mean([1.0 / r for r in ranks]))


def _jaccard(tokens_a: set[str], tokens_b: set[str]) -> float:
    return len(tokens_a & tokens_b) / len(tokens_a | tokens_b)


def token_overlap(a: Sentence | str, b: Sentence | str) -> float:
    """Jaccard overlap of the two sentences' token type sets.

    Raw strings are tokenized on the fly, so quick interactive checks
    do not need a corpus-backed Sentence.
    """
    if isinstance(a, str):
        a = Sentence(-1, a)
    if isinstance(b, str):
        b = Sentence(-1, b)
    set_a, set_b = set(a.tokens), set(b.tokens)
    if not set_a or not set_b:
        empty = a if not set_a else b
        raise InvariantError(f"sentence {empty.id} has no tokens")
    return _jaccard(set_a, set_b)


@dataclass
class TokenOverlapStat:
    embedder: str
    mean_overlap: float
    ci95_halfwidth: float
    per_query: list[tuple[int, float]]


def mean_query_token_overlap(neighbors: list[NeighborList],
                             corpus: Corpus) -> TokenOverlapStat:
    """Average query-to-neighbor token overlap for one embedder.

    Per query the overlaps with its k neighbors are averaged; the
    embedder-level mean over queries carries a 95% normal-approximation
    CI (1.96 * s / sqrt(n_queries), sample std).
    """
    if not neighbors:
        raise InvariantError("no neighbor lists given")
    per_query: list[tuple[int, float]] = []
    for nl in neighbors:
        if not nl.entries:
            raise InvariantError(f"query {nl.query_id}: empty neighbor list")
        query_sentence = corpus[nl.query_id]
        vals = [token_overlap(query_sentence, corpus[nid])
                for nid in nl.ids()]
        per_query.append((nl.query_id, float(np.mean(vals))))
    values = np.asarray([v for _, v in per_query])
    halfwidth = 0.0
    if values.shape[0] >= 2:
        halfwidth = float(1.96 * values.std(ddof=1)
                          / np.sqrt(values.shape[0]))
    return TokenOverlapStat(embedder=neighbors[0].embedder,
                            mean_overlap=float(values.mean()),
                            ci95_halfwidth=halfwidth, per_query=per_query)


@dataclass(frozen=True)
class PopularNeighbor:
    query_id: int
    sentence_id: int
    ranks: dict[str, int]


@dataclass(frozen=True)
class OutlierNeighbor:
    query_id: int
    sentence_id: int
    owner: str
    owner_rank: int
    k_large: int


def _list_for(all_neighbors: dict[str, list[NeighborList]], name: str,
              query_id: int, depth: int) -> NeighborList:
    for nl in all_neighbors.get(name, ()):
        if nl.query_id == query_id:
            if len(nl) < depth:
                raise InvariantError(
                    f"embedder {name!r}, query {query_id}: neighbor list "
                    f"depth {len(nl)} < required {depth}"
                )
            return nl
    raise InvariantError(
        f"embedder {name!r} has no neighbor list for query {query_id}"
    )


def popular_neighbors(all_neighbors: dict[str, list[NeighborList]],
                      query_id: int, k_small: int) -> list[PopularNeighbor]:
    """Sentences inside every embedder's k_small-neighborhood of the query."""
    if k_small < 1:
        raise ConfigError(f"k_small must be at least 1, got {k_small}")
    names = list(all_neighbors.keys())
    if not names:
        raise InvariantError("no embedders given")
    lists = {name: _list_for(all_neighbors, name, query_id, k_small)
             for name in names}
    shared = set(lists[names[0]].ids(k_small))
    for name in names[1:]:
        shared &= set(lists[name].ids(k_small))
    found = []
    for sid in sorted(shared):
        ranks = {name: lists[name].ids(k_small).index(sid) + 1
                 for name in names}
        found.append(PopularNeighbor(query_id=query_id, sentence_id=sid,
                                     ranks=ranks))
    return found


def outlier_neighbors(all_neighbors: dict[str, list[NeighborList]],
                      query_id: int, owner: str, r_small: int = 15,
                      k_large: int = 50) -> list[OutlierNeighbor]:
    """Owner's top-r_small neighbors that no other embedder ranks within
    k_large."""
    if owner not in all_neighbors:
        raise ConfigError(f"unknown embedder {owner!r}")
    owner_list = _list_for(all_neighbors, owner, query_id, r_small)
    others = {name: set(_list_for(all_neighbors, name, query_id,
                                  k_large).ids(k_large))
              for name in all_neighbors if name != owner}
    found = []
    for rank, (sid, _) in enumerate(owner_list.entries[:r_small], start=1):
        if all(sid not in seen for seen in others.values()):
            found.append(OutlierNeighbor(query_id=query_id, sentence_id=sid,
                                         owner=owner, owner_rank=rank,
                                         k_large=k_large))
    return found


@dataclass
class ProbePipeline:
    """A native embedder able to vectorize unseen text for the probe."""

    embedder: str
    matrix: EmbeddingMatrix
    embed_text: Callable[[str], np.ndarray | SparseVector]


@dataclass(frozen=True)
class ProbePair:
    query_text: str
    paraphrase_text: str
    similarity: float


@dataclass
class ProbeOutcome:
    embedder: str
    pairs: list[ProbePair]
    ranks: list[int]
    mrr: float
    n_top: int
    n_top5: int
    k_report: int
    n_within_k: int


def _normalized_probe_vector(pipeline: ProbePipeline, text: str,
                             role: str, pair_idx: int):
    vec = pipeline.embed_text(text)
    if isinstance(vec, SparseVector):
        if vec.norm() < ZERO_NORM_EPS:
            raise InvariantError(
                f"pair {pair_idx}: {role} embeds to the zero vector"
            )
        return vec
    vec = np.asarray(vec, dtype=np.float32)
    if float(np.linalg.norm(vec.astype(np.float64))) < ZERO_NORM_EPS:
        raise InvariantError(
            f"pair {pair_idx}: {role} embeds to the zero vector"
        )
    return l2_normalize(vec)


def paraphrase_probe(corpus: Corpus, pairs: list[tuple[str, str]],
                     pipeline: ProbePipeline,
                     k_report: int = 5) -> ProbeOutcome:
    """Rank each inserted paraphrase among the query's neighbors.

    Semantically the paraphrase joins the corpus as the highest id, the
    query retrieves over corpus+paraphrase, and the insertion is rolled
    back.  The rank is computed arithmetically against the unmodified
    matrix (rows tied with the inserted one outrank it, since every
    corpus id is smaller), so no input is ever mutated.
    """
    if not pairs:
        raise ConfigError("no probe pairs given")
    index = build_index(pipeline.matrix)
    usable = index._skip == 0
    ranks: list[int] = []
    out_pairs: list[ProbePair] = []
    for idx, (query_text, para_text) in enumerate(pairs):
        q = _normalized_probe_vector(pipeline, query_text, "query", idx)
        p = _normalized_probe_vector(pipeline, para_text, "paraphrase", idx)
        if index.is_sparse:
            scores = sparse_scores_for_terms(
                index, q.indices, q.weights)[usable]
            inserted = sparse_dot(q, p)
        else:
            scores = scores_against(index.rows, q)[usable]
            inserted = float(q.astype(np.float64) @ p.astype(np.float64))
        rank = 1 + int(np.count_nonzero(scores > inserted)) \
            + int(np.count_nonzero(scores == inserted))
        ranks.append(rank)
        out_pairs.append(ProbePair(query_text=query_text,
                                   paraphrase_text=para_text,
                                   similarity=inserted))
    return ProbeOutcome(
        embedder=pipeline.embedder, pairs=out_pairs, ranks=ranks,
        mrr=mrr(ranks),
        n_top=sum(1 for r in ranks if r == 1),
        n_top5=sum(1 for r in ranks if r <= 5),
        k_report=k_report,
        n_within_k=sum(1 for r in ranks if r <= k_report),
    )


@dataclass(frozen=True)
class ScoredPair:
    score: float
    text_a: str
    text_b: str


def filter_sts_pairs(candidates: list[ScoredPair], min_score: float,
                     max_overlap: float) -> list[ScoredPair]:
    """Keep pairs scored >= min_score whose token overlap is strictly
    below max_overlap.  Pairs where either side has no tokens cannot be
    assessed and are dropped."""
    kept = []
    for pair in candidates:
        if pair.score < min_score:
            continue
        tokens_a = set(tokenize(pair.text_a))
        tokens_b = set(tokenize(pair.text_b))
        if not tokens_a or not tokens_b:
            continue
        if _jaccard(tokens_a, tokens_b) < max_overlap:
            kept.append(pair)
    return kept


def read_sts_tsv(path) -> list[ScoredPair]:
    """Parse `score<TAB>sentence1<TAB>sentence2` lines."""
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataFormatError(
                    f"{path}:{lineno}: expected 3 tab-separated fields, "
                    f"got {len(parts)}"
                )
            try:
                score = float(parts[0])
            except ValueError:
                raise DataFormatError(
                    f"{path}:{lineno}: bad score {parts[0]!r}"
                ) from None
            pairs.append(ScoredPair(score=score, text_a=parts[1],
                                    text_b=parts[2]))
    return pairs


def write_probe_csv(outcomes: list[ProbeOutcome], path) -> None:
    """Probe summary CSV, rows sorted by decreasing MRR."""
    ordered = sorted(outcomes, key=lambda o: (-o.mrr, o.embedder))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["embedder", "mrr", "n_top", "n_top5"])
        for o in ordered:
            writer.writerow([o.embedder, repr(o.mrr), o.n_top, o.n_top5])


def write_token_overlap_csv(stats: list[TokenOverlapStat], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["embedder", "mean_overlap", "ci95_halfwidth"])
        for s in stats:
            writer.writerow([s.embedder, repr(s.mean_overlap),
                             repr(s.ci95_halfwidth)])


def write_popularity_jsonl(records: list[PopularNeighbor], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps({
                "query_id": r.query_id,
                "sentence_id": r.sentence_id,
                "ranks": dict(sorted(r.ranks.items())),
            }, ensure_ascii=False) + "\n")
