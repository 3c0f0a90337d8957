"""Run manifest: everything needed to reproduce a run byte-for-byte.

The manifest records the corpus (path and content hash), each embedder
with its matrix file, and the sampling parameters.  Loading validates
that referenced files still exist and, given a corpus, that the hash
still matches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ._version import __version__
from .corpus import Corpus
from .errors import ConfigError, DataFormatError


@dataclass
class EmbedderEntry:
    name: str
    spec: str
    matrix_path: str


@dataclass
class RunManifest:
    corpus_path: str
    corpus_format: str
    corpus_hash: int
    out_dir: str
    embedders: list[EmbedderEntry] = field(default_factory=list)
    k: int | None = None
    n: int | None = None
    n_samples: int | None = None
    master_seed: int | None = None
    sample_seeds: list[int] = field(default_factory=list)
    version: str = __version__

    def upsert_embedder(self, entry: EmbedderEntry) -> None:
        for i, existing in enumerate(self.embedders):
            if existing.name == entry.name:
                self.embedders[i] = entry
                return
        self.embedders.append(entry)

    def to_dict(self) -> dict:
        return {
            "corpus": {
                "path": self.corpus_path,
                "format": self.corpus_format,
                "content_hash": f"{self.corpus_hash:016x}",
            },
            "embedders": [
                {"name": e.name, "spec": e.spec, "matrix": e.matrix_path}
                for e in self.embedders
            ],
            "k": self.k,
            "n": self.n,
            "n_samples": self.n_samples,
            "master_seed": self.master_seed,
            "sample_seeds": self.sample_seeds,
            "out_dir": self.out_dir,
            "version": self.version,
        }

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, ensure_ascii=False, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "RunManifest":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: malformed manifest: {exc}") from exc
        try:
            corpus = payload["corpus"]
            manifest = cls(
                corpus_path=corpus["path"],
                corpus_format=corpus.get("format", "lines"),
                corpus_hash=int(corpus["content_hash"], 16),
                out_dir=payload["out_dir"],
                embedders=[
                    EmbedderEntry(name=e["name"], spec=e["spec"],
                                  matrix_path=e["matrix"])
                    for e in payload.get("embedders", [])
                ],
                k=payload.get("k"),
                n=payload.get("n"),
                n_samples=payload.get("n_samples"),
                master_seed=payload.get("master_seed"),
                sample_seeds=list(payload.get("sample_seeds", [])),
                version=payload.get("version", __version__),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataFormatError(f"{path}: malformed manifest: {exc}") from exc
        return manifest

    def validate(self, corpus: Corpus | None = None) -> None:
        """Check referenced files exist and the corpus hash matches."""
        missing = [e.matrix_path for e in self.embedders
                   if not Path(e.matrix_path).exists()]
        if missing:
            raise ConfigError(
                "manifest references missing matrix files: "
                + ", ".join(missing)
            )
        if corpus is not None and corpus.content_hash != self.corpus_hash:
            raise DataFormatError(
                f"manifest corpus hash {self.corpus_hash:016x} does not "
                f"match loaded corpus {corpus.content_hash:016x}"
            )
