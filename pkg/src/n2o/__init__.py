"""Nearest-neighbor overlap toolkit for comparing sentence embedders.

N2O scores how similarly two embedders organize a corpus: for a sample
of query sentences it retrieves each embedder's k nearest neighbors and
averages the fraction of shared neighbors.  The package covers the full
pipeline: corpus handling, native tf-idf and word-average embedders,
binary import of externally computed matrices, exact and LSH-
approximate cosine search, the overlap statistics, and the downstream
analyses (k-sweep stability, token overlap, popular/outlier neighbors,
paraphrase probe).
"""

from ._version import __version__
from .corpus import (
    Corpus,
    QuerySample,
    Sentence,
    content_hash_of,
    derive_sample_seed,
    load_corpus,
    sample_queries,
    save_corpus,
    tokenize,
)
from .embedders import (
    CompositionMode,
    EmbeddingMatrix,
    TfIdfModel,
    WordVectorTable,
    build_average_matrix,
    build_tfidf_matrix,
    compose_tokens,
    embed_average,
    embed_tfidf,
    tfidf_weights,
    fit_tfidf,
    load_word_vectors,
)
from .errors import ConfigError, DataFormatError, InvariantError, N2OError
from .kernels import HAVE_COMPILED, KERNEL_BACKEND
from .lsh import LshIndex, build_lsh, measure_recall, query_lsh, tune_lsh
from .matrix_io import import_matrix, read_matrix, write_matrix
from .overlap import (
    KStabilitySummary,
    N2OMatrix,
    N2OResult,
    OverlapRecord,
    k_stability,
    n2o_matrix,
    n2o_pair,
    one_vs_rest,
    overlap_at_k,
    sample_variance,
    spearman_rho,
)
from .analysis import (
    OutlierNeighbor,
    PopularNeighbor,
    ProbeOutcome,
    ProbePipeline,
    ScoredPair,
    filter_sts_pairs,
    mean_query_token_overlap,
    mrr,
    outlier_neighbors,
    paraphrase_probe,
    popular_neighbors,
    token_overlap,
)
from .search import (
    NeighborList,
    SearchIndex,
    batch_top_k,
    build_index,
    dump_neighbors,
    load_neighbors,
    top_k,
)
from .vectors import SparseVector, cosine, l2_normalize

__all__ = [
    "__version__",
    "HAVE_COMPILED",
    "KERNEL_BACKEND",
    "ConfigError",
    "DataFormatError",
    "InvariantError",
    "N2OError",
    "Corpus",
    "QuerySample",
    "Sentence",
    "content_hash_of",
    "derive_sample_seed",
    "load_corpus",
    "sample_queries",
    "save_corpus",
    "tokenize",
    "CompositionMode",
    "EmbeddingMatrix",
    "TfIdfModel",
    "WordVectorTable",
    "build_average_matrix",
    "build_tfidf_matrix",
    "compose_tokens",
    "embed_average",
    "embed_tfidf",
    "tfidf_weights",
    "fit_tfidf",
    "load_word_vectors",
    "import_matrix",
    "read_matrix",
    "write_matrix",
    "NeighborList",
    "SearchIndex",
    "batch_top_k",
    "build_index",
    "dump_neighbors",
    "load_neighbors",
    "top_k",
    "LshIndex",
    "build_lsh",
    "measure_recall",
    "query_lsh",
    "tune_lsh",
    "KStabilitySummary",
    "N2OMatrix",
    "N2OResult",
    "OverlapRecord",
    "k_stability",
    "n2o_matrix",
    "n2o_pair",
    "one_vs_rest",
    "overlap_at_k",
    "sample_variance",
    "spearman_rho",
    "OutlierNeighbor",
    "PopularNeighbor",
    "ProbeOutcome",
    "ProbePipeline",
    "ScoredPair",
    "filter_sts_pairs",
    "mean_query_token_overlap",
    "mrr",
    "outlier_neighbors",
    "paraphrase_probe",
    "popular_neighbors",
    "token_overlap",
    "SparseVector",
    "cosine",
    "l2_normalize",
]
