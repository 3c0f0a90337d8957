"""Dense and sparse vector primitives plus the cosine kernel.

Dense vectors are float32 numpy arrays; dot products accumulate in
float64 so long (vocabulary-length) vectors do not lose precision.
All operations here are pure; inputs are never mutated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ZERO_NORM_EPS = 1e-12


def _as_dense(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float32)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"expected a 1-d vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("vector contains NaN or Inf")
    return arr


def cosine(a, b) -> float:
    """Cosine similarity of two dense vectors, in [-1, 1].

    Raises on dimension mismatch and on zero-norm operands (a zero vector
    marks an unembeddable sentence; callers must exclude it).
    """
    va, vb = _as_dense(a), _as_dense(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.size} vs {vb.size}")
    a64 = va.astype(np.float64)
    b64 = vb.astype(np.float64)
    na = float(np.sqrt(np.dot(a64, a64)))
    nb = float(np.sqrt(np.dot(b64, b64)))
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        raise ValueError("cosine is undefined for zero-norm vectors")
    # Rounding can push |dot| marginally past the norm product.
    return float(min(1.0, max(-1.0, np.dot(a64, b64) / (na * nb))))


def l2_normalize(a) -> np.ndarray:
    """Scale a dense vector to unit length (float32 result)."""
    va = _as_dense(a)
    norm = float(np.sqrt(np.dot(va.astype(np.float64), va.astype(np.float64))))
    if norm < ZERO_NORM_EPS:
        raise ValueError("cannot normalize a zero-norm vector")
    return (va.astype(np.float64) / norm).astype(np.float32)


@dataclass(frozen=True)
class SparseVector:
    """Sparse vector over a fixed vocabulary-sized dimension.

    ``indices`` are sorted distinct term ids; ``weights`` the matching
    float32 values.
    """

    indices: np.ndarray
    weights: np.ndarray
    dim: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        w = np.asarray(self.weights, dtype=np.float32)
        if idx.ndim != 1 or w.ndim != 1 or idx.size != w.size:
            raise ValueError("indices and weights must be 1-d and the same length")
        if idx.size and (np.any(np.diff(idx) <= 0)):
            raise ValueError("indices must be strictly increasing")
        if idx.size and (idx[0] < 0 or idx[-1] >= self.dim):
            raise ValueError(f"indices must lie in [0, {self.dim})")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights contain NaN or Inf")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "weights", w)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def norm(self) -> float:
        w = self.weights.astype(np.float64)
        return float(np.sqrt(np.dot(w, w)))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dim, dtype=np.float32)
        out[self.indices] = self.weights
        return out


def sparse_dot(a: SparseVector, b: SparseVector) -> float:
    """Dot product of two sparse vectors via merge-join over sorted ids."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    shared_a = np.isin(a.indices, b.indices)
    shared_b = np.isin(b.indices, a.indices)
    wa = a.weights[shared_a].astype(np.float64)
    wb = b.weights[shared_b].astype(np.float64)
    return float(np.dot(wa, wb))
