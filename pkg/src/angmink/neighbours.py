"""Exact k-nearest-neighbour retrieval under angular Minkowski p-distance.

Ordering is always by (distance, training index) ascending, so results do not
depend on evaluation order.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Hashable, Literal

import numpy as np

from .metric import normalized_pool, p_normalize, root
from .vectorspace import LabeledDataset, MetricSpec, SparseVector

Restrict = Literal["all", "in", "out"]


@dataclass(frozen=True, eq=False)
class NeighbourList:
    distances: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return int(self.indices.size)

    @property
    def items(self) -> list[tuple[float, int]]:
        return [(float(d), int(i)) for d, i in zip(self.distances, self.indices)]

    def prefix(self, k: int) -> NeighbourList:
        return NeighbourList(self.distances[:k], self.indices[:k])


def select_smallest(
    distances: np.ndarray, k: int, candidates: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """The k smallest entries of ``distances`` as (values, positions), ties to the lower position.

    ``candidates`` (ascending positions) restricts the search; returned positions
    index into ``distances`` either way.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if candidates is None:
        candidates = np.arange(distances.size)
    sub = distances[candidates]
    if k < sub.size:
        kth = np.partition(sub, k - 1)[k - 1]
        keep = np.flatnonzero(sub <= kth)
    else:
        keep = np.arange(sub.size)
    # ``keep`` ascends, so a stable sort leaves equal distances in index order
    keep = keep[np.argsort(sub[keep], kind="stable")][:k]
    return sub[keep], candidates[keep]


def _pool_candidates(pool: LabeledDataset, restrict: Restrict, cls: Hashable | None) -> np.ndarray | None:
    if restrict == "all":
        return None
    if restrict not in ("in", "out"):
        raise ValueError(f"unknown restriction {restrict!r}")
    if cls not in pool.classes:
        raise ValueError(f"class {cls!r} has no training members")
    members = pool.class_members(cls)
    if restrict == "in":
        return members
    outside = np.setdiff1d(np.arange(len(pool)), members, assume_unique=True)
    if outside.size == 0:
        raise ValueError(f"complement of class {cls!r} is empty")
    return outside


def query_distances(query: SparseVector, pool: LabeledDataset, spec: MetricSpec) -> np.ndarray:
    """Distance from ``query`` to every pool vector, via the normalized column index."""
    if query.dim != pool.dim:
        raise ValueError(f"dimension mismatch: query {query.dim} vs pool {pool.dim}")
    return normalized_pool(pool, spec.p).distances(p_normalize(query, spec.p), spec.rootless)


def top_k(
    query: SparseVector,
    pool: LabeledDataset,
    k: int,
    spec: MetricSpec,
    restrict: Restrict = "all",
    cls: Hashable | None = None,
) -> NeighbourList:
    """Exact k nearest pool members, optionally only inside (``"in"``) or outside (``"out"``) ``cls``.

    A k larger than the searched pool yields the whole pool.
    """
    candidates = _pool_candidates(pool, restrict, cls)
    dist, idx = select_smallest(query_distances(query, pool, spec), k, candidates)
    return NeighbourList(dist, idx)


@dataclass(frozen=True, eq=False)
class NeighbourTables:
    """k_max-length neighbour lists for every test query, ready for prefix truncation.

    ``all_*`` has shape (n_queries, min(k_max, n_train)); ``in_dist[c]`` and
    ``out_dist[c]`` hold the in-class and out-of-class lists for class position c,
    each truncated to the available pool size.
    """

    all_dist: np.ndarray | None
    all_codes: np.ndarray | None
    in_dist: list[np.ndarray] | None
    out_dist: list[np.ndarray] | None


def _empty_tables(n: int, k_all: int, k_in: list[int], k_out: list[int], need_all, need_in, need_out):
    return NeighbourTables(
        np.empty((n, k_all)) if need_all else None,
        np.empty((n, k_all), dtype=np.int64) if need_all else None,
        [np.empty((n, k)) for k in k_in] if need_in else None,
        [np.empty((n, k)) for k in k_out] if need_out else None,
    )


def batch_neighbours(
    test: LabeledDataset,
    train: LabeledDataset,
    p: float,
    rootless_options: tuple[bool, ...],
    k_max: int,
    *,
    need_all: bool = True,
    need_in: bool = True,
    need_out: bool = True,
    threads: int = 1,
    rows: np.ndarray | None = None,
) -> dict[bool, NeighbourTables]:
    """Neighbour tables for the test queries ``rows`` (default: all), one set per rootless flag.

    The rootless distances to the whole training set are computed once per
    query; rooted distances are their 1/p-th power. Out-of-class lists come
    from a global prefix of length k_max + (largest class size), which always
    holds the k_max nearest non-members of any class.
    """
    if test.dim != train.dim:
        raise ValueError(f"dimension mismatch: test {test.dim} vs train {train.dim}")
    if k_max < 1:
        raise ValueError(f"k must be >= 1, got {k_max}")
    n_train = len(train)
    codes = train.label_codes
    members = [train.class_members(c) for c in train.classes]
    k_all = min(k_max, n_train)
    k_in = [min(k_max, m.size) for m in members]
    k_out = [min(k_max, n_train - m.size) for m in members]
    if need_out and min(k_out) == 0:
        raise ValueError("training data has a single class; out-of-class neighbours are undefined")
    prefix_len = k_all
    if need_out:
        prefix_len = min(n_train, k_max + max(m.size for m in members))

    train_pool = normalized_pool(train, p)
    test_pool = normalized_pool(test, p)
    rows = np.arange(len(test)) if rows is None else np.asarray(rows, dtype=np.int64)
    tables = {
        r: _empty_tables(rows.size, k_all, k_in, k_out, need_all, need_in, need_out)
        for r in rootless_options
    }

    def work(qi: int) -> None:
        rootless_d = train_pool.rootless_distances(*test_pool.row_parts(int(rows[qi])))
        for r in rootless_options:
            d = rootless_d if r else root(rootless_d, p)
            t = tables[r]
            if need_all or need_out:
                gd, gi = select_smallest(d, prefix_len)
                if need_all:
                    t.all_dist[qi] = gd[:k_all]
                    t.all_codes[qi] = codes[gi[:k_all]]
                if need_out:
                    gc = codes[gi]
                    for c, k in enumerate(k_out):
                        t.out_dist[c][qi] = gd[gc != c][:k]
            if need_in:
                for c, k in enumerate(k_in):
                    t.in_dist[c][qi] = select_smallest(d, k, members[c])[0]

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(work, range(rows.size)))
    else:
        for qi in range(rows.size):
            work(qi)
    return tables
