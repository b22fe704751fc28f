"""Weighted nearest-neighbour (NN) and fuzzy-rough nearest-neighbour (FRNN) class scores."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Hashable, Literal, Sequence

import numpy as np

from .neighbours import NeighbourTables, batch_neighbours, top_k
from .vectorspace import LabeledDataset, MetricSpec, SparseVector

Family = Literal["nn", "frnn-upper", "frnn-lower", "frnn-mean"]
WeightKind = Literal["linear", "reciprocal"]

FAMILIES: tuple[str, ...] = ("nn", "frnn-upper", "frnn-lower", "frnn-mean")
WEIGHT_KINDS: tuple[str, ...] = ("linear", "reciprocal")

# floor applied to distances before taking reciprocals
RECIPROCAL_EPS = 1e-12


@dataclass(frozen=True)
class WeightScheme:
    kind: WeightKind
    context: Literal["nn-distance", "frnn-rank"]

    def __post_init__(self) -> None:
        if self.kind not in WEIGHT_KINDS:
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.context not in ("nn-distance", "frnn-rank"):
            raise ValueError(f"unknown weight context {self.context!r}")


@dataclass(frozen=True)
class ClassifierSpec:
    family: Family
    k: int
    weights: WeightScheme
    metric: MetricSpec

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown classifier family {self.family!r}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        expected = "nn-distance" if self.family == "nn" else "frnn-rank"
        if self.weights.context != expected:
            raise ValueError(f"{self.family} requires {expected} weights, got {self.weights.context}")

    @classmethod
    def build(
        cls, family: Family, k: int, kind: WeightKind, p: float, rootless: bool = False
    ) -> ClassifierSpec:
        context = "nn-distance" if family == "nn" else "frnn-rank"
        return cls(family, k, WeightScheme(kind, context), MetricSpec(p, rootless))


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    values: np.ndarray
    classes: tuple[Hashable, ...]
    instance_ids: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != len(self.classes):
            raise ValueError(f"score shape {values.shape} does not match {len(self.classes)} classes")
        if not np.all(np.isfinite(values)):
            raise ValueError("scores must be finite")
        ids = tuple(self.instance_ids) or tuple(str(i) for i in range(values.shape[0]))
        if len(ids) != values.shape[0]:
            raise ValueError("one instance id per row required")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "classes", tuple(self.classes))
        object.__setattr__(self, "instance_ids", ids)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def predict(self) -> list[Hashable]:
        """Highest-scoring class per row; ties go to the earliest class."""
        return [self.classes[j] for j in np.argmax(self.values, axis=1)]

    def to_csv(self, path: str | Path | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["instance_id", *map(str, self.classes)])
        for iid, row in zip(self.instance_ids, self.values):
            w.writerow([iid, *(f"{v:.9g}" for v in row)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, path: str | Path) -> ScoreMatrix:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0][:1] != ["instance_id"]:
            raise ValueError(f"{path}: missing instance_id header")
        classes = tuple(rows[0][1:])
        ids = tuple(r[0] for r in rows[1:])
        values = np.array([[float(v) for v in r[1:]] for r in rows[1:]]).reshape(len(ids), len(classes))
        return cls(values, classes, ids)


def _nn_weight_rows(dist: np.ndarray, kind: WeightKind) -> np.ndarray:
    """Row-wise NN weights for ascending distance rows of shape (n, k)."""
    if kind == "reciprocal":
        return 1.0 / np.maximum(dist, RECIPROCAL_EPS)
    if kind != "linear":
        raise ValueError(f"unknown weight kind {kind!r}")
    if dist.shape[1] == 1:
        return np.ones_like(dist)
    d1 = dist[:, :1]
    dk = dist[:, -1:]
    spread = dk - d1
    flat = spread <= 0
    # all k distances equal: uniform vote
    w = (dk - dist) / np.where(flat, 1.0, spread)
    return np.where(flat, 1.0, w)


def nn_weights(distances: Sequence[float], kind: WeightKind) -> list[float]:
    """Linear (d_k - d_i)/(d_k - d_1) or reciprocal 1/d_i weights for ascending distances."""
    d = np.asarray(distances, dtype=np.float64).reshape(1, -1)
    if d.shape[1] < 1:
        raise ValueError("at least one distance required")
    return _nn_weight_rows(d, kind)[0].tolist()


def frnn_weights(k: int, kind: WeightKind) -> list[float]:
    """Rank-based OWA weights summing to 1."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if kind == "linear":
        denom = k * (k + 1)
        return [2 * (k + 1 - i) / denom for i in range(1, k + 1)]
    if kind == "reciprocal":
        harmonic = sum(1.0 / j for j in range(1, k + 1))
        return [1.0 / (i * harmonic) for i in range(1, k + 1)]
    raise ValueError(f"unknown weight kind {kind!r}")


def _truncated_frnn_weights(k: int, available: int, kind: WeightKind) -> np.ndarray:
    w = np.array(frnn_weights(k, kind))
    if available >= k:
        return w
    w = w[:available]
    return w / w.sum()


def _nn_scores(dist: np.ndarray, codes: np.ndarray, n_classes: int, kind: WeightKind) -> np.ndarray:
    w = _nn_weight_rows(dist, kind)
    total = w.sum(axis=1)
    out = np.empty((dist.shape[0], n_classes))
    for c in range(n_classes):
        out[:, c] = np.where(codes == c, w, 0.0).sum(axis=1) / total
    return out


def _upper(in_dist: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.clip(1.0 - in_dist / 2.0, 0.0, 1.0) @ w


def _lower(out_dist: np.ndarray, w: np.ndarray) -> np.ndarray:
    return np.clip(out_dist / 2.0, 0.0, 1.0) @ w


def nn_score(query: SparseVector, train: LabeledDataset, cls: Hashable, spec: ClassifierSpec) -> float:
    """Share of neighbour weight (among the k nearest in the whole training set) held by ``cls``."""
    if spec.family != "nn":
        raise ValueError(f"nn_score needs the nn family, got {spec.family}")
    nl = top_k(query, train, spec.k, spec.metric)
    w = _nn_weight_rows(nl.distances.reshape(1, -1), spec.weights.kind)[0]
    hit = np.array([train.labels[i] == cls for i in nl.indices])
    return float(w[hit].sum() / w.sum())


def frnn_upper(query: SparseVector, train: LabeledDataset, cls: Hashable, spec: ClassifierSpec) -> float:
    """Upper approximation: weighted closeness to the k nearest members of ``cls``."""
    if spec.family not in ("frnn-upper", "frnn-mean"):
        raise ValueError(f"upper approximation needs frnn-upper or frnn-mean, got {spec.family}")
    nl = top_k(query, train, spec.k, spec.metric, "in", cls)
    w = _truncated_frnn_weights(spec.k, len(nl), spec.weights.kind)
    return float(_upper(nl.distances, w))


def frnn_lower(query: SparseVector, train: LabeledDataset, cls: Hashable, spec: ClassifierSpec) -> float:
    """Lower approximation: weighted remoteness from the k nearest non-members of ``cls``."""
    if spec.family not in ("frnn-lower", "frnn-mean"):
        raise ValueError(f"lower approximation needs frnn-lower or frnn-mean, got {spec.family}")
    nl = top_k(query, train, spec.k, spec.metric, "out", cls)
    w = _truncated_frnn_weights(spec.k, len(nl), spec.weights.kind)
    return float(_lower(nl.distances, w))


def frnn_mean(query: SparseVector, train: LabeledDataset, cls: Hashable, spec: ClassifierSpec) -> float:
    if spec.family != "frnn-mean":
        raise ValueError(f"mean approximation needs frnn-mean, got {spec.family}")
    return (frnn_upper(query, train, cls, spec) + frnn_lower(query, train, cls, spec)) / 2.0


def scores_from_tables(
    tables: NeighbourTables, family: Family, k: int, kind: WeightKind, n_classes: int
) -> np.ndarray:
    """Score matrix for one (family, k, weights) cell from k_max-length neighbour tables."""
    if family == "nn":
        return _nn_scores(tables.all_dist[:, :k], tables.all_codes[:, :k], n_classes, kind)
    if family not in ("frnn-upper", "frnn-lower", "frnn-mean"):
        raise ValueError(f"unknown classifier family {family!r}")
    n = (tables.in_dist or tables.out_dist)[0].shape[0]
    out = np.zeros((n, n_classes))
    for c in range(n_classes):
        if family in ("frnn-upper", "frnn-mean"):
            d = tables.in_dist[c][:, :k]
            out[:, c] += _upper(d, _truncated_frnn_weights(k, d.shape[1], kind))
        if family in ("frnn-lower", "frnn-mean"):
            d = tables.out_dist[c][:, :k]
            out[:, c] += _lower(d, _truncated_frnn_weights(k, d.shape[1], kind))
    if family == "frnn-mean":
        out /= 2.0
    return out


def tables_needed(families: Sequence[str]) -> dict[str, bool]:
    return {
        "need_all": "nn" in families,
        "need_in": any(f in ("frnn-upper", "frnn-mean") for f in families),
        "need_out": any(f in ("frnn-lower", "frnn-mean") for f in families),
    }


def score_all(
    test: LabeledDataset, train: LabeledDataset, spec: ClassifierSpec, threads: int = 1
) -> ScoreMatrix:
    """Scores for every (test instance, training class) pair."""
    if test.dim != train.dim:
        raise ValueError(f"dimension mismatch: test {test.dim} vs train {train.dim}")
    rootless = spec.metric.rootless
    tables = batch_neighbours(
        test, train, spec.metric.p, (rootless,), spec.k, threads=threads,
        **tables_needed([spec.family]),
    )[rootless]
    values = scores_from_tables(tables, spec.family, spec.k, spec.weights.kind, len(train.classes))
    return ScoreMatrix(values, train.classes)
