"""The N2OE binary matrix format.

Little-endian layout: magic ``N2OE``; u16 version = 1; u8 dtype code;
u8 reserved; u64 corpus content hash; u64 row count N; u32 dimension d;
then the payload.  Dtype 1 (float32 dense) is N*d float32 values
row-major.  Dtype 2 (float32 sparse CSR, used for the native tf-idf
matrix) is u64 nnz, (N+1) u64 row offsets, nnz u32 column indices, nnz
float32 values.

The embedder name travels in the filename (``<embedder>.n2oe``) and in
the run manifest, not in the binary.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .corpus import Corpus
from .embedders import EmbeddingMatrix, check_embedder_name, detect_zero_rows
from .errors import DataFormatError

MAGIC = b"N2OE"
VERSION = 1
DTYPE_DENSE_F32 = 1
DTYPE_SPARSE_CSR_F32 = 2

_HEADER = struct.Struct("<4sHBBQQI")
HEADER_SIZE = _HEADER.size


def write_matrix(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Serialize an EmbeddingMatrix; round trips are bit-exact."""
    path = Path(path)
    with path.open("wb") as f:
        dtype = DTYPE_SPARSE_CSR_F32 if matrix.is_sparse else DTYPE_DENSE_F32
        f.write(
            _HEADER.pack(
                MAGIC,
                VERSION,
                dtype,
                0,
                matrix.corpus_hash,
                matrix.n_rows,
                matrix.dim,
            )
        )
        if matrix.is_sparse:
            rows = matrix.rows
            f.write(struct.pack("<Q", int(rows.nnz)))
            f.write(np.asarray(rows.indptr, dtype="<u8").tobytes())
            f.write(np.asarray(rows.indices, dtype="<u4").tobytes())
            f.write(np.asarray(rows.data, dtype="<f4").tobytes())
        else:
            f.write(np.ascontiguousarray(matrix.rows, dtype="<f4").tobytes())


def read_matrix(
    path: str | Path,
    corpus: Corpus | None = None,
    embedder: str | None = None,
) -> EmbeddingMatrix:
    """Read an N2OE file, validating format and corpus provenance.

    When ``corpus`` is given, the header's row count and content hash
    must match it; a hash mismatch signals embeddings built on a
    different corpus.
    """
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < HEADER_SIZE:
        raise DataFormatError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, version, dtype, _reserved, corpus_hash, n_rows, dim = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataFormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    if corpus is not None:
        if n_rows != len(corpus):
            raise DataFormatError(
                f"{path}: row count {n_rows} does not match corpus size {len(corpus)}"
            )
        if corpus_hash != corpus.content_hash:
            raise DataFormatError(
                f"{path}: corpus hash {corpus_hash:#018x} does not match loaded corpus "
                f"{corpus.content_hash:#018x} (embeddings built on a different corpus?)"
            )

    body = blob[HEADER_SIZE:]
    if dtype == DTYPE_DENSE_F32:
        expected = n_rows * dim * 4
        if len(body) != expected:
            raise DataFormatError(
                f"{path}: payload is {len(body)} bytes, expected {expected}"
            )
        rows = np.frombuffer(body, dtype="<f4").reshape(n_rows, dim).copy()
    elif dtype == DTYPE_SPARSE_CSR_F32:
        if len(body) < 8:
            raise DataFormatError(f"{path}: truncated sparse payload")
        (nnz,) = struct.unpack_from("<Q", body)
        off = 8
        expected = 8 + (n_rows + 1) * 8 + nnz * 4 + nnz * 4
        if len(body) != expected:
            raise DataFormatError(
                f"{path}: payload is {len(body)} bytes, expected {expected}"
            )
        indptr = np.frombuffer(body, dtype="<u8", count=n_rows + 1, offset=off)
        off += (n_rows + 1) * 8
        indices = np.frombuffer(body, dtype="<u4", count=nnz, offset=off)
        off += nnz * 4
        data = np.frombuffer(body, dtype="<f4", count=nnz, offset=off)
        rows = sp.csr_matrix(
            (data.copy(), indices.astype(np.int64), indptr.astype(np.int64)),
            shape=(n_rows, dim),
            dtype=np.float32,
        )
    else:
        raise DataFormatError(f"{path}: unknown dtype code {dtype}")

    name = embedder if embedder is not None else path.stem
    check_embedder_name(name)
    return EmbeddingMatrix(
        embedder=name,
        dim=int(dim),
        rows=rows,
        corpus_hash=int(corpus_hash),
        zero_rows=detect_zero_rows(rows),
    )


def import_matrix(path: str | Path, corpus: Corpus) -> EmbeddingMatrix:
    """Read an externally produced N2OE file against its governing corpus."""
    return read_matrix(path, corpus=corpus)
