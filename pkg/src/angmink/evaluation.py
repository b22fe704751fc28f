"""Binary AUC (rank form) and multiclass AUROC by pairwise averaging."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Sequence

import numpy as np
from scipy.stats import rankdata

from .classifiers import ScoreMatrix


def binary_auc(scores: Sequence[float], positives: Sequence[bool]) -> float:
    """P(positive outranks negative) + 0.5 P(tie), from midranks (Mann-Whitney U)."""
    s = np.asarray(scores, dtype=np.float64)
    pos = np.asarray(positives, dtype=bool)
    if s.shape != pos.shape:
        raise ValueError("scores and positives differ in length")
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("binary AUC needs at least one positive and one negative")
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class EvaluationResult:
    auroc: float
    per_pair: dict[tuple[Hashable, Hashable], float] = field(default_factory=dict)


def _label_array(scores: ScoreMatrix, labels: Sequence[Hashable]) -> np.ndarray:
    if len(labels) != scores.shape[0]:
        raise ValueError(f"{len(labels)} labels for {scores.shape[0]} score rows")
    lookup = {c: j for j, c in enumerate(scores.classes)}
    missing = sorted({str(lab) for lab in labels if lab not in lookup})
    if missing:
        raise ValueError(f"labels without a score column: {', '.join(missing)}")
    return np.array([lookup[lab] for lab in labels], dtype=np.int64)


def multiclass_auroc(scores: ScoreMatrix, labels: Sequence[Hashable]) -> EvaluationResult:
    """Mean over unordered class pairs of (A(i|j) + A(j|i)) / 2.

    A(i|j) is the AUC of class i's score column among instances labeled i or j.
    Classes without labeled instances are skipped.
    """
    codes = _label_array(scores, labels)
    present = [j for j in range(len(scores.classes)) if np.any(codes == j)]
    if len(present) < 2:
        raise ValueError("multiclass AUROC needs at least two populated classes")
    per_pair = {}
    for i, j in combinations(present, 2):
        rows = (codes == i) | (codes == j)
        is_i = codes[rows] == i
        a_ij = binary_auc(scores.values[rows, i], is_i)
        a_ji = binary_auc(scores.values[rows, j], ~is_i)
        per_pair[(scores.classes[i], scores.classes[j])] = (a_ij + a_ji) / 2.0
    return EvaluationResult(float(np.mean(list(per_pair.values()))), per_pair)


def ovr_macro_auroc(scores: ScoreMatrix, labels: Sequence[Hashable]) -> float:
    """Unweighted mean of one-vs-rest AUCs over the populated classes."""
    codes = _label_array(scores, labels)
    present = [j for j in range(len(scores.classes)) if np.any(codes == j)]
    if len(present) < 2:
        raise ValueError("one-vs-rest AUROC needs at least two populated classes")
    return float(np.mean([binary_auc(scores.values[:, j], codes == j) for j in present]))
