"""Sentence embedders: native tf-idf, static word-vector averaging, and
token-sequence composition.

Each embedder turns the whole corpus into an EmbeddingMatrix whose rows
align with corpus sentence ids.  Sentences an embedder cannot represent
(all terms corpus-universal, or every token out of vocabulary) come out
as zero rows; they stay in the matrix but are flagged so search and
sampling can skip them.
"""

from __future__ import annotations

import enum
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus, Sentence
from .errors import DataFormatError
from .vectors import ZERO_NORM_EPS, SparseVector

EMBEDDER_NAME_RE = re.compile(r"[a-z0-9._-]+\Z")


def check_embedder_name(name: str) -> str:
    if not EMBEDDER_NAME_RE.match(name):
        raise ValueError(
            f"bad embedder name {name!r}: must match [a-z0-9._-]+"
        )
    return name


# ---------------------------------------------------------------------------
# tf-idf
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TfIdfModel:
    """Vocabulary and document frequencies fit on one corpus.

    Each sentence counts as a document.  idf is ln(n_docs / df) with no
    smoothing, so a term present in every sentence gets weight 0.
    """

    vocab: Mapping[str, int]
    doc_freq: np.ndarray
    n_docs: int

    @property
    def dim(self) -> int:
        return len(self.vocab)


def fit_tfidf(corpus: Corpus) -> TfIdfModel:
    """Collect vocabulary and per-term document frequencies.

    Term ids follow first appearance in the corpus (dict order, not set
    order, so runs are reproducible across processes).
    """
    vocab: dict[str, int] = {}
    df = Counter()
    for sentence in corpus:
        for token in dict.fromkeys(sentence.tokens):
            if token not in vocab:
                vocab[token] = len(vocab)
            df[token] += 1
    doc_freq = np.zeros(len(vocab), dtype=np.int64)
    for token, term_id in vocab.items():
        doc_freq[term_id] = df[token]
    return TfIdfModel(vocab=vocab, doc_freq=doc_freq, n_docs=len(corpus))


def tfidf_weights(
    model: TfIdfModel, sentence: Sentence
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized tf-idf weights at full (float64) precision.

    Returns (term ids ascending, weights).  Terms outside the model's
    vocabulary and terms appearing in every document are dropped; a
    sentence of only such terms yields empty arrays.
    """
    counts = Counter(sentence.tokens)
    term_ids = []
    weights = []
    for token, tf in counts.items():
        term_id = model.vocab.get(token)
        if term_id is None:
            continue
        df = int(model.doc_freq[term_id])
        if df >= model.n_docs:
            continue
        term_ids.append(term_id)
        weights.append(tf * math.log(model.n_docs / df))
    if not term_ids:
        return np.empty(0, np.int64), np.empty(0, np.float64)
    order = np.argsort(term_ids)
    idx = np.asarray(term_ids, dtype=np.int64)[order]
    w = np.asarray(weights, dtype=np.float64)[order]
    w /= np.sqrt(np.dot(w, w))
    return idx, w


def embed_tfidf(model: TfIdfModel, sentence: Sentence) -> SparseVector:
    """idf-scaled term frequencies, L2-normalized, stored as float32."""
    idx, w = tfidf_weights(model, sentence)
    return SparseVector(idx, w.astype(np.float32), model.dim)


# ---------------------------------------------------------------------------
# Static word vectors
# ---------------------------------------------------------------------------

class WordVectorTable:
    """token -> dense vector lookup with cased/uncased fallback.

    Cased tables try the surface form first and fall back to the
    lowercased form; uncased tables lowercase unconditionally.
    """

    def __init__(self, dim: int, entries: dict[str, np.ndarray], cased: bool):
        self.dim = dim
        self.entries = entries
        self.cased = cased

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, token: str) -> np.ndarray | None:
        if self.cased:
            hit = self.entries.get(token)
            if hit is not None:
                return hit
            return self.entries.get(token.lower())
        return self.entries.get(token.lower())


def load_word_vectors(path: str | Path, cased: bool | None = None) -> WordVectorTable:
    """Read a whitespace-separated ``token v1 ... vd`` text file.

    An optional first line holding exactly two integers (count, dim) is
    treated as a header and skipped.  Duplicate tokens keep their first
    occurrence.  When ``cased`` is None it is auto-detected from the keys.
    """
    path = Path(path)
    entries: dict[str, np.ndarray] = {}
    dim: int | None = None
    with path.open("r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # header line
                except ValueError:
                    pass
            token, values = parts[0], parts[1:]
            try:
                vec = np.array([float(v) for v in values], dtype=np.float32)
            except ValueError as e:
                raise DataFormatError(
                    f"{path}:{lineno}: non-numeric vector component ({e})"
                ) from e
            if dim is None:
                dim = vec.size
                if dim == 0:
                    raise DataFormatError(f"{path}:{lineno}: row has no vector values")
            elif vec.size != dim:
                raise DataFormatError(
                    f"{path}:{lineno}: dimension mismatch, expected {dim} got {vec.size}"
                )
            if token not in entries:
                entries[token] = vec
    if dim is None:
        raise DataFormatError(f"{path}: empty word-vector file")
    if cased is None:
        cased = any(t != t.lower() for t in entries)
    return WordVectorTable(dim=dim, entries=entries, cased=cased)


def embed_average(table: WordVectorTable, sentence: Sentence) -> np.ndarray:
    """Mean of the word vectors of in-vocabulary tokens.

    Out-of-vocabulary tokens are skipped; a sentence with no hits yields
    a zero vector.
    """
    acc = np.zeros(table.dim, dtype=np.float64)
    hits = 0
    for token in sentence.tokens:
        vec = table.lookup(token)
        if vec is not None:
            acc += vec
            hits += 1
    if hits == 0:
        return np.zeros(table.dim, dtype=np.float32)
    return (acc / hits).astype(np.float32)


# ---------------------------------------------------------------------------
# Token-sequence composition (imported contextual embedders)
# ---------------------------------------------------------------------------

class CompositionMode(str, enum.Enum):
    """Rule collapsing a per-token embedding matrix to one vector."""

    AVERAGE = "average"
    FIRST_TOKEN = "first_token"
    LAST_TOKEN = "last_token"


def compose_tokens(token_matrix: Sequence | np.ndarray, mode: CompositionMode) -> np.ndarray:
    """Collapse a non-empty (tokens x dim) matrix per the given mode."""
    mat = np.asarray(token_matrix, dtype=np.float32)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise ValueError(f"expected a non-empty 2-d token matrix, got shape {mat.shape}")
    mode = CompositionMode(mode)
    if mode is CompositionMode.AVERAGE:
        return mat.astype(np.float64).mean(axis=0).astype(np.float32)
    if mode is CompositionMode.FIRST_TOKEN:
        return mat[0].copy()
    return mat[-1].copy()


# ---------------------------------------------------------------------------
# Embedding matrices
# ---------------------------------------------------------------------------

@dataclass
class EmbeddingMatrix:
    """Per-embedder sentence vectors aligned to corpus row ids.

    ``rows`` is a dense (N, d) float32 array or a scipy CSR matrix for
    tf-idf.  ``corpus_hash`` ties the matrix to the corpus it was built
    from; ``zero_rows`` are sentence ids with zero-norm vectors.
    """

    embedder: str
    dim: int
    rows: np.ndarray | sp.csr_matrix
    corpus_hash: int
    zero_rows: frozenset[int] = field(default_factory=frozenset)

    @property
    def n_rows(self) -> int:
        return int(self.rows.shape[0])

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.rows)


def _detect_zero_rows_dense(rows: np.ndarray) -> frozenset[int]:
    norms = np.linalg.norm(rows.astype(np.float64), axis=1)
    return frozenset(int(i) for i in np.flatnonzero(norms < ZERO_NORM_EPS))


def _detect_zero_rows_sparse(rows: sp.csr_matrix) -> frozenset[int]:
    norms = np.sqrt(np.asarray(rows.multiply(rows).sum(axis=1)).ravel())
    return frozenset(int(i) for i in np.flatnonzero(norms < ZERO_NORM_EPS))


def detect_zero_rows(rows) -> frozenset[int]:
    if sp.issparse(rows):
        return _detect_zero_rows_sparse(rows)
    return _detect_zero_rows_dense(np.asarray(rows))


def build_tfidf_matrix(corpus: Corpus, name: str = "tfidf") -> EmbeddingMatrix:
    """Fit tf-idf on the corpus and embed every sentence (sparse rows)."""
    check_embedder_name(name)
    model = fit_tfidf(corpus)
    indptr = [0]
    indices: list[np.ndarray] = []
    data: list[np.ndarray] = []
    zero_rows = []
    for sentence in corpus:
        vec = embed_tfidf(model, sentence)
        if vec.nnz == 0:
            zero_rows.append(sentence.id)
        indices.append(vec.indices)
        data.append(vec.weights)
        indptr.append(indptr[-1] + vec.nnz)
    rows = sp.csr_matrix(
        (
            np.concatenate(data) if data else np.empty(0, np.float32),
            np.concatenate(indices) if indices else np.empty(0, np.int64),
            np.asarray(indptr, dtype=np.int64),
        ),
        shape=(len(corpus), model.dim),
        dtype=np.float32,
    )
    return EmbeddingMatrix(
        embedder=name,
        dim=model.dim,
        rows=rows,
        corpus_hash=corpus.content_hash,
        zero_rows=frozenset(zero_rows),
    )


def build_average_matrix(
    corpus: Corpus, table: WordVectorTable, name: str
) -> EmbeddingMatrix:
    """Embed every sentence as the mean of its word vectors."""
    check_embedder_name(name)
    rows = np.zeros((len(corpus), table.dim), dtype=np.float32)
    zero_rows = []
    for sentence in corpus:
        vec = embed_average(table, sentence)
        rows[sentence.id] = vec
        if float(np.linalg.norm(vec.astype(np.float64))) < ZERO_NORM_EPS:
            zero_rows.append(sentence.id)
    return EmbeddingMatrix(
        embedder=name,
        dim=table.dim,
        rows=rows,
        corpus_hash=corpus.content_hash,
        zero_rows=frozenset(zero_rows),
    )
