"""Minkowski p-sizes and rooted/rootless angular Minkowski p-distance.

Two evaluation routes are provided. ``angular_distance`` is the direct dense
definition. The sparse route normalizes each vector once and uses

    sum_i |x_i - y_i|^p = |x|^p + |y|^p - sum_{i in both} (x_i^p + y_i^p - |x_i - y_i|^p)

so only the shared support of two vectors contributes work. ``NormalizedPool``
applies the same identity to a whole dataset at once through its column
(inverted) index.

Both routes treat componentwise differences below ``REL_TOL`` (relative to the
larger component) as exact zeros. Proportional count vectors normalize to
values a few ulps apart, and |a - b|^p inflates such noise badly for small p
((1e-16)^0.1 is about 0.03). Distinct count directions differ by far more.
When two vectors share the same support the distance is summed directly,
avoiding the cancellation in the identity above.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .vectorspace import LabeledDataset, MetricSpec, SparseVector, densify

REL_TOL = 1e-11
# unit-mass vectors are at most 2 apart before the root; rounding can overshoot by an ulp
MAX_ROOTLESS = 2.0


def _check_p(p: float) -> float:
    p = float(p)
    if not (p > 0 and math.isfinite(p)):
        raise ValueError(f"p must be a positive finite real, got {p!r}")
    return p


def power(a: np.ndarray, p: float) -> np.ndarray:
    """Elementwise a**p for a >= 0, multiplying out the small integer exponents exactly."""
    if p == 1.0:
        return a
    if p == 2.0:
        return a * a
    if p == 3.0:
        return a * a * a
    if p == 4.0:
        sq = a * a
        return sq * sq
    return np.power(a, p)


def root(a: np.ndarray | float, p: float) -> np.ndarray | float:
    """Inverse of ``power``: a**(1/p)."""
    if p == 1.0:
        return a
    if p == 2.0:
        return np.sqrt(a)
    return np.power(a, 1.0 / p)


def _seq_sum(a: np.ndarray) -> float:
    # left-to-right, matching np.bincount in the batch route
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def diff_power(a: np.ndarray, b: np.ndarray, p: float) -> np.ndarray:
    """|a - b|^p for nonnegative a, b, with rounding-level differences snapped to zero."""
    d = np.abs(a - b)
    d[d <= REL_TOL * np.maximum(a, b)] = 0.0
    return power(d, p)


def rootless_p_size(v: SparseVector, p: float) -> float:
    p = _check_p(p)
    return _seq_sum(power(v.values, p))


def p_size(v: SparseVector, p: float) -> float:
    p = _check_p(p)
    return float(root(rootless_p_size(v, p), p))


@dataclass(frozen=True, eq=False)
class NormalizedVector:
    """A vector scaled to unit p-size, with its p-th powers precomputed.

    ``mass`` is the stored sum of ``powered``: 1 up to rounding, or 0 for the
    zero vector.
    """

    indices: np.ndarray
    values: np.ndarray
    powered: np.ndarray
    p: float
    dim: int

    @cached_property
    def mass(self) -> float:
        return _seq_sum(self.powered)

    def is_zero(self) -> bool:
        return self.indices.size == 0

    @property
    def entries(self) -> list[tuple[int, float]]:
        return [(int(i), float(v)) for i, v in zip(self.indices, self.values)]


def p_normalize(v: SparseVector, p: float) -> NormalizedVector:
    """Divide by the p-size. The zero vector maps to itself."""
    p = _check_p(p)
    if v.is_zero():
        values = v.values
    else:
        values = v.values / p_size(v, p)
    return NormalizedVector(v.indices, values, power(values, p), p, v.dim)


def _normalize_dense(x: np.ndarray, p: float) -> np.ndarray:
    size = root(np.sum(power(np.abs(x), p)), p)
    return x / size if size > 0 else x


def angular_distance(x: SparseVector, y: SparseVector, spec: MetricSpec) -> float:
    """Minkowski p-distance (or its p-th power when rootless) between x/|x|_p and y/|y|_p.

    Evaluated densely and literally; this is the reference route.
    """
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    p = spec.p
    total = float(np.sum(diff_power(_normalize_dense(densify(y), p), _normalize_dense(densify(x), p), p)))
    total = min(total, MAX_ROOTLESS)
    return total if spec.rootless else float(root(total, p))


def cosine_dissimilarity(x: SparseVector, y: SparseVector) -> float:
    """1 - cos(angle between x and y), via the dot product."""
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    if x.is_zero() or y.is_zero():
        raise ValueError("cosine dissimilarity is undefined for the zero vector")
    _, ix, iy = np.intersect1d(x.indices, y.indices, assume_unique=True, return_indices=True)
    dot = float(np.dot(x.values[ix], y.values[iy]))
    return 1.0 - dot / (math.sqrt(np.dot(x.values, x.values)) * math.sqrt(np.dot(y.values, y.values)))


def angular_distance_sparse_fast(x: NormalizedVector, y: NormalizedVector, spec: MetricSpec) -> float:
    """Angular p-distance from two pre-normalized vectors, touching only their shared support."""
    if x.p != spec.p or y.p != spec.p:
        raise ValueError(f"vectors normalized under p={x.p}, {y.p} but metric uses p={spec.p}")
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")
    p = spec.p
    _, ix, iy = np.intersect1d(x.indices, y.indices, assume_unique=True, return_indices=True)
    diff = _seq_sum(diff_power(x.values[ix], y.values[iy], p))
    if ix.size == x.indices.size == y.indices.size:
        total = diff
    else:
        exclusive = (x.mass + y.mass) - _seq_sum(x.powered[ix] + y.powered[iy])
        total = min(max(exclusive + diff, 0.0), MAX_ROOTLESS)
    return total if spec.rootless else float(root(total, p))


class NormalizedPool:
    """Every row of a dataset normalized under one p, indexed by column for batch queries."""

    def __init__(self, dataset: LabeledDataset, p: float):
        p = _check_p(p)
        mat = dataset.matrix
        n = mat.shape[0]
        row_of = np.repeat(np.arange(n), np.diff(mat.indptr))
        powered_raw = power(mat.data, p)
        sizes = root(np.bincount(row_of, weights=powered_raw, minlength=n), p)
        safe = np.where(sizes > 0, sizes, 1.0)
        values = mat.data / safe[row_of]
        powered = power(values, p)

        self.p = p
        self.n = n
        self.dim = mat.shape[1]
        self.indptr = mat.indptr
        self.indices = mat.indices
        self.values = values
        self.powered = powered
        self.mass = np.bincount(row_of, weights=powered, minlength=n)
        self.nnz = np.diff(mat.indptr)

        order = np.argsort(mat.indices, kind="stable")
        self.col_ptr = np.zeros(self.dim + 1, dtype=np.int64)
        np.cumsum(np.bincount(mat.indices, minlength=self.dim), out=self.col_ptr[1:])
        self.col_rows = row_of[order]
        self.col_values = values[order]
        self.col_powered = powered[order]

    def row(self, i: int) -> NormalizedVector:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return NormalizedVector(
            self.indices[lo:hi], self.values[lo:hi], self.powered[lo:hi], self.p, self.dim
        )

    def row_parts(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.values[lo:hi], self.powered[lo:hi], float(self.mass[i])

    def rootless_distances(
        self, q_idx: np.ndarray, q_val: np.ndarray, q_pow: np.ndarray, q_mass: float
    ) -> np.ndarray:
        """Rootless angular p-distance from one normalized query to every row."""
        starts = self.col_ptr[q_idx]
        lens = self.col_ptr[q_idx + 1] - starts
        total = int(lens.sum())
        if not total:
            return np.minimum(self.mass + q_mass, MAX_ROOTLESS)
        offsets = np.repeat(starts - (np.cumsum(lens) - lens), lens)
        pos = offsets + np.arange(total)
        rows = self.col_rows[pos]
        shared_mass = np.bincount(
            rows, weights=self.col_powered[pos] + np.repeat(q_pow, lens), minlength=self.n
        )
        diff = np.bincount(
            rows,
            weights=diff_power(self.col_values[pos], np.repeat(q_val, lens), self.p),
            minlength=self.n,
        )
        exclusive = (self.mass + q_mass) - shared_mass
        n_shared = np.bincount(rows, minlength=self.n)
        exclusive[(n_shared == self.nnz) & (n_shared == q_idx.size)] = 0.0
        out = exclusive + diff
        np.clip(out, 0.0, MAX_ROOTLESS, out=out)
        return out

    def distances(self, query: NormalizedVector, rootless: bool) -> np.ndarray:
        if query.p != self.p:
            raise ValueError(f"query normalized under p={query.p}, pool under p={self.p}")
        if query.dim != self.dim:
            raise ValueError(f"dimension mismatch: {query.dim} vs {self.dim}")
        d = self.rootless_distances(query.indices, query.values, query.powered, query.mass)
        return d if rootless else root(d, self.p)


_POOLS: weakref.WeakKeyDictionary = weakref.WeakKeyDictionary()


def normalized_pool(dataset: LabeledDataset, p: float) -> NormalizedPool:
    """Cached ``NormalizedPool`` per (dataset, p)."""
    p = _check_p(p)
    per_dataset = _POOLS.setdefault(dataset, {})
    pool = per_dataset.get(p)
    if pool is None:
        pool = per_dataset[p] = NormalizedPool(dataset, p)
    return pool
