"""Immutable sparse vector and labeled dataset types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Hashable, Iterable, Sequence

import numpy as np
from scipy import sparse


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SparseVector:
    """Nonnegative vector stored as strictly increasing term ids with positive values."""

    indices: np.ndarray
    values: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64).copy()
        val = np.asarray(self.values, dtype=np.float64).copy()
        if idx.ndim != 1 or idx.shape != val.shape:
            raise ValueError("indices and values must be 1-d arrays of equal length")
        if self.dim < 0:
            raise ValueError(f"negative dimensionality {self.dim}")
        if idx.size:
            if idx[0] < 0 or idx[-1] >= self.dim:
                raise ValueError(f"term id out of range [0, {self.dim})")
            if np.any(np.diff(idx) <= 0):
                raise ValueError("term ids must be strictly increasing")
            if not np.all(np.isfinite(val)) or np.any(val <= 0):
                raise ValueError("stored values must be finite and positive")
        object.__setattr__(self, "indices", _readonly(idx))
        object.__setattr__(self, "values", _readonly(val))

    @classmethod
    def from_entries(cls, entries: Iterable[tuple[int, float]], dim: int) -> SparseVector:
        pairs = list(entries)
        idx = [int(i) for i, _ in pairs]
        val = [float(v) for _, v in pairs]
        return cls(np.array(idx, dtype=np.int64), np.array(val, dtype=np.float64), dim)

    @classmethod
    def zero(cls, dim: int) -> SparseVector:
        return cls(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64), dim)

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def is_zero(self) -> bool:
        return self.indices.size == 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SparseVector):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"SparseVector(dim={self.dim}, entries={self.entries})"


def make_sparse(dense: Sequence[float], dim: int) -> SparseVector:
    """Build a SparseVector from a dense list, keeping only the nonzero positions."""
    if len(dense) != dim:
        raise ValueError(f"expected {dim} components, got {len(dense)}")
    for i, v in enumerate(dense):
        v = float(v)
        if not math.isfinite(v):
            raise ValueError(f"non-finite value at index {i}")
        if v < 0:
            raise ValueError(f"negative value at index {i}")
    arr = np.asarray(dense, dtype=np.float64).reshape(dim)
    nz = np.flatnonzero(arr)
    return SparseVector(nz, arr[nz], dim)


def densify(v: SparseVector) -> np.ndarray:
    out = np.zeros(v.dim, dtype=np.float64)
    out[v.indices] = v.values
    return out


@dataclass(frozen=True)
class MetricSpec:
    """Exponent p of the angular Minkowski distance and whether the outer root is dropped."""

    p: float
    rootless: bool = False

    def __post_init__(self) -> None:
        p = float(self.p)
        if not (p > 0 and math.isfinite(p)):
            raise ValueError(f"p must be a positive finite real, got {self.p!r}")
        object.__setattr__(self, "p", p)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Labeled sparse count vectors sharing one vocabulary.

    The rows live in a canonical CSR matrix (sorted indices, no stored
    zeros). ``vectors`` materializes SparseVector views on demand.
    """

    matrix: sparse.csr_matrix
    labels: tuple[Hashable, ...]
    vocabulary: tuple[str, ...] | None = field(default=None)

    def __post_init__(self) -> None:
        mat = sparse.csr_matrix(self.matrix, dtype=np.float64, copy=True)
        mat.sum_duplicates()
        mat.eliminate_zeros()
        mat.sort_indices()
        labels = tuple(self.labels)
        if mat.shape[0] < 1:
            raise ValueError("dataset must contain at least one vector")
        if mat.shape[0] != len(labels):
            raise ValueError(f"{mat.shape[0]} vectors but {len(labels)} labels")
        if mat.nnz and (np.any(mat.data < 0) or not np.all(np.isfinite(mat.data))):
            raise ValueError("dataset values must be finite and nonnegative")
        if self.vocabulary is not None and len(self.vocabulary) != mat.shape[1]:
            raise ValueError("vocabulary size does not match dimensionality")
        for arr in (mat.data, mat.indices, mat.indptr):
            arr.setflags(write=False)
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_vectors(
        cls,
        vectors: Sequence[SparseVector],
        labels: Sequence[Hashable],
        vocabulary: Sequence[str] | None = None,
    ) -> LabeledDataset:
        if not vectors:
            raise ValueError("dataset must contain at least one vector")
        dim = vectors[0].dim
        if any(v.dim != dim for v in vectors):
            raise ValueError("all vectors must share one dimensionality")
        indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
        indptr[1:] = np.cumsum([v.nnz for v in vectors])
        indices = np.concatenate([v.indices for v in vectors]) if indptr[-1] else np.empty(0, np.int64)
        data = np.concatenate([v.values for v in vectors]) if indptr[-1] else np.empty(0)
        mat = sparse.csr_matrix((data, indices, indptr), shape=(len(vectors), dim))
        vocab = tuple(vocabulary) if vocabulary is not None else None
        return cls(mat, tuple(labels), vocab)

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @cached_property
    def classes(self) -> tuple[Hashable, ...]:
        return tuple(sorted(set(self.labels)))

    @cached_property
    def label_codes(self) -> np.ndarray:
        """Position of each row's label within ``classes``."""
        lookup = {c: i for i, c in enumerate(self.classes)}
        return _readonly(np.array([lookup[lab] for lab in self.labels], dtype=np.int64))

    def class_members(self, cls: Hashable) -> np.ndarray:
        """Ascending row indexes labeled ``cls``."""
        try:
            code = self.classes.index(cls)
        except ValueError:
            raise KeyError(f"class {cls!r} not present in dataset") from None
        return np.flatnonzero(self.label_codes == code)

    def vector(self, i: int) -> SparseVector:
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return SparseVector(self.matrix.indices[lo:hi], self.matrix.data[lo:hi], self.dim)

    @cached_property
    def vectors(self) -> tuple[SparseVector, ...]:
        return tuple(self.vector(i) for i in range(len(self)))

    def restrict_columns(self, m: int) -> LabeledDataset:
        """Keep only term ids below ``m`` (prefix of the vocabulary)."""
        m = min(m, self.dim)
        vocab = self.vocabulary[:m] if self.vocabulary is not None else None
        return LabeledDataset(self.matrix[:, :m], self.labels, vocab)
