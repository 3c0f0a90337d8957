"""Sentence corpus loading, deduplication, tokenization and query sampling.

Every embedder in a run shares one corpus.  Sentences get contiguous ids
(0..N-1) after exact-duplicate removal, and the corpus carries a 64-bit
content hash so that embedding matrices computed elsewhere can be checked
for provenance before use.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigError, DataFormatError

# Tokens are maximal runs of Unicode alphanumerics (underscore excluded).
# A period joins two runs only when flanked by digits on both sides, so
# "3.6" stays one token while "e.g" splits.
_TOKEN_RE = re.compile(r"[^\W_]+(?:(?<=[0-9])\.(?=[0-9])[0-9][^\W_]*)*")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric boundaries.

    Deterministic and locale-independent; empty input gives an empty list.
    """
    return _TOKEN_RE.findall(text.lower())


def content_hash_of(texts: Iterable[str]) -> int:
    """64-bit corpus content hash.

    SHA-256 over each sentence's UTF-8 bytes followed by a single LF,
    truncated to the first 8 digest bytes (little-endian).  The exporter
    computes the same value, so binary matrices can be tied to the exact
    corpus they were built from.
    """
    h = hashlib.sha256()
    for text in texts:
        h.update(text.encode("utf-8"))
        h.update(b"\n")
    return int.from_bytes(h.digest()[:8], "little")


class Sentence:
    """A corpus sentence: row id, raw text, lazily tokenized."""

    __slots__ = ("id", "text", "_tokens")

    def __init__(self, id: int, text: str):
        self.id = id
        self.text = text
        self._tokens: list[str] | None = None

    @property
    def tokens(self) -> list[str]:
        if self._tokens is None:
            self._tokens = tokenize(self.text)
        return self._tokens

    def __repr__(self) -> str:
        return f"Sentence(id={self.id}, text={self.text!r})"


@dataclass
class Corpus:
    """Deduplicated, id-indexed sentence collection."""

    sentences: list[Sentence]
    content_hash: int
    source_path: str = ""

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __getitem__(self, sentence_id: int) -> Sentence:
        return self.sentences[sentence_id]

    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]


@dataclass(frozen=True)
class QuerySample:
    """One draw of n distinct query sentence ids."""

    seed: int
    query_ids: tuple[int, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.query_ids)


def _dedup(texts: Iterable[str], source: str) -> Corpus:
    seen: set[str] = set()
    sentences: list[Sentence] = []
    for text in texts:
        if text in seen:
            continue
        seen.add(text)
        sentences.append(Sentence(len(sentences), text))
    if not sentences:
        raise DataFormatError(f"{source}: corpus is empty after deduplication")
    return Corpus(sentences, content_hash_of(s.text for s in sentences), source)


def load_corpus(path: str | Path, format: str = "lines") -> Corpus:
    """Load and deduplicate a corpus file.

    ``lines``: one sentence per line, UTF-8, LF-terminated.  ``jsonl``: one
    JSON object per line with a required "text" field.  Exact duplicate
    texts keep their first occurrence; blank sentences are skipped; ids are
    assigned in input order after dedup.
    """
    path = Path(path)
    if format not in ("lines", "jsonl"):
        raise ConfigError(f"unknown corpus format {format!r} (expected lines or jsonl)")
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as e:
        raise DataFormatError(f"cannot read corpus file {path}: {e}") from e
    except UnicodeDecodeError as e:
        raise DataFormatError(f"{path} is not valid UTF-8: {e}") from e

    texts: list[str] = []
    if format == "lines":
        for line in raw.splitlines():
            if line.strip():
                texts.append(line)
    else:
        for lineno, line in enumerate(raw.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataFormatError(f"{path}:{lineno}: malformed JSON record: {e}") from e
            if not isinstance(record, dict) or "text" not in record:
                raise DataFormatError(f'{path}:{lineno}: record has no "text" field')
            text = record["text"]
            if not isinstance(text, str):
                raise DataFormatError(f'{path}:{lineno}: "text" is not a string')
            if text.strip():
                texts.append(text)
    return _dedup(texts, str(path))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back out in ``lines`` format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as f:
        for sentence in corpus.sentences:
            f.write(sentence.text)
            f.write("\n")


def sample_queries(
    corpus: Corpus, n: int, seed: int, exclude: Iterable[int] = ()
) -> QuerySample:
    """Draw n distinct sentence ids uniformly without replacement.

    Deterministic for a fixed (corpus, n, seed).  ``exclude`` removes ids
    from candidacy (e.g. sentences some embedder cannot embed); the draw
    is uniform over the remaining ids.
    """
    excluded = frozenset(exclude)
    eligible = np.array(
        [s.id for s in corpus.sentences if s.id not in excluded], dtype=np.int64
    )
    if n < 1:
        raise ConfigError(f"query sample size must be >= 1, got {n}")
    if n > eligible.size:
        raise ConfigError(
            f"cannot sample {n} queries from {eligible.size} eligible sentences"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    picked = rng.choice(eligible, size=n, replace=False)
    return QuerySample(seed=seed, query_ids=tuple(int(i) for i in picked))


def derive_sample_seed(master_seed: int, sample_index: int) -> int:
    """Per-sample seed from one master seed; reproducible fan-out."""
    h = hashlib.sha256()
    h.update(b"n2o-sample")
    h.update(int(master_seed).to_bytes(8, "little", signed=False))
    h.update(int(sample_index).to_bytes(8, "little", signed=False))
    return int.from_bytes(h.digest()[:8], "little")
