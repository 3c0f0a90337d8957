"""Shared fixtures: in-memory corpora and synthetic correlated embedders."""

from __future__ import annotations

import numpy as np
import pytest

from n2o.corpus import Corpus, Sentence, content_hash_of
from n2o.embedders import EmbeddingMatrix, detect_zero_rows


def make_corpus(texts: list[str], source: str = "<memory>") -> Corpus:
    """Build a corpus directly from distinct texts, skipping file IO."""
    assert len(set(texts)) == len(texts), "fixture texts must be distinct"
    sentences = [Sentence(i, t) for i, t in enumerate(texts)]
    return Corpus(sentences, content_hash_of(texts), source)


def dense_matrix(name: str, rows: np.ndarray,
                 corpus_hash: int = 0) -> EmbeddingMatrix:
    rows = np.ascontiguousarray(rows, dtype=np.float32)
    return EmbeddingMatrix(embedder=name, dim=rows.shape[1], rows=rows,
                           corpus_hash=corpus_hash,
                           zero_rows=detect_zero_rows(rows))


def correlated_embedders(n_sentences: int, noise_levels: list[float],
                         latent_dim: int = 16, dim: int = 32,
                         seed: int = 0) -> dict[str, np.ndarray]:
    """Synthetic embedders sharing one latent space.

    Every sentence has a latent vector; each embedder sees it through
    its own random linear map plus Gaussian noise.  Lower noise means
    embedders agree more, which gives the N2O matrix real structure.
    """
    rng = np.random.default_rng(seed)
    latent = rng.standard_normal((n_sentences, latent_dim))
    out = {}
    for e, noise in enumerate(noise_levels):
        proj = rng.standard_normal((latent_dim, dim)) / np.sqrt(latent_dim)
        rows = latent @ proj + noise * rng.standard_normal((n_sentences, dim))
        out[f"emb{e}"] = rows.astype(np.float32)
    return out


def word_salad(n_sentences: int, seed: int, vocab_size: int = 40,
               min_len: int = 3, max_len: int = 9) -> list[str]:
    """Deterministic nonsense sentences with a closed vocabulary."""
    rng = np.random.default_rng(seed)
    vocab = [f"w{i:02d}" for i in range(vocab_size)]
    seen = set()
    out = []
    while len(out) < n_sentences:
        n = int(rng.integers(min_len, max_len + 1))
        text = " ".join(rng.choice(vocab, size=n))
        if text not in seen:
            seen.add(text)
            out.append(text)
    return out


@pytest.fixture
def tiny_corpus() -> Corpus:
    return make_corpus([
        "the cat sat on the mat",
        "a dog barked at the moon",
        "the moon rose over the hill",
        "cats and dogs live together",
        "numbers like 3.6 stay whole",
    ])


ACCEPTANCE_GATES = [
    ("test_a01_n2o_matches_naive_reference",
     "A1  pipeline N2O equals the naive reference at k=5,25,50"),
    ("test_a02_self_n2o_bounds_and_symmetry",
     "A2  self-N2O 1.0 exactly, off-diagonals in [0,1], bit-symmetric"),
    ("test_a03_exact_search_parity_across_threads",
     "A3  exact search matches the naive scan at 1/4/max threads"),
    ("test_a04_pair_ranking_stable_across_k",
     "A4  pair rankings at k=5 vs k=50 agree (mean rho >= 0.9)"),
    ("test_a05_sample_variance_bounded",
     "A5  N2O std across query samples < 0.05 on a 100k corpus"),
    ("test_a06_tfidf_hand_derived_weights",
     "A6  tf-idf weights match hand-derived values to 1e-9"),
    ("test_a07_statistics_units",
     "A7  spearman / mrr / token-overlap unit values"),
    ("test_a08_paraphrase_probe_mechanics",
     "A8  probe ranks identical text and planted near-duplicate first"),
    ("test_a09_lsh_recall_and_candidate_budget",
     "A9  LSH recall@50 >= 0.9 under a 20% candidate budget; b=0 exact"),
    ("test_a10_million_row_throughput",
     "A10 100 queries at k=50 over 1M x 128-d inside 60 s"),
    ("test_a11_reproducible_cli_runs",
     "A11 repeated n2o runs produce byte-identical artifacts"),
]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per release gate after the usual summary."""
    outcome = {}
    for category, verdict in (
        ("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL"),
    ):
        for report in terminalreporter.stats.get(category, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" in nodeid:
                outcome[nodeid.rsplit("::", 1)[-1]] = verdict
    if not outcome:
        return
    terminalreporter.write_sep("-", "acceptance gates")
    for test_name, label in ACCEPTANCE_GATES:
        if test_name in outcome:
            terminalreporter.write_line(f"{label}: {outcome[test_name]}")
