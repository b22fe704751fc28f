"""Acceptance criteria, one test each; the first docstring line is the reported criterion."""

import os
import random
from pathlib import Path

import numpy as np
import pytest

from angmink.classifiers import FAMILIES, ClassifierSpec, ScoreMatrix, frnn_weights, score_all
from angmink.corpus import CountedCorpus, ingest, load_counted
from angmink.evaluation import binary_auc, multiclass_auroc
from angmink.harness import SweepConfig, best_cells, run_sweep
from angmink.metric import angular_distance, angular_distance_sparse_fast, cosine_dissimilarity, p_normalize
from angmink.neighbours import query_distances, top_k
from angmink.vectorspace import LabeledDataset, MetricSpec, make_sparse

from oracles import dense_angular, family_score, hand_till
from toy import TOY_LABELS, TOY_QUERIES, TOY_TRAIN, synthetic_corpus, toy_test, toy_train


def random_sparse(rng, dim, density):
    while True:
        dense = rng.integers(1, 10, dim) * (rng.random(dim) < density)
        if dense.any():
            return dense.tolist()


def test_cosine_identity():
    """cosine identity: 1000 random sparse pairs (dim <= 64), cosine = 1/2 rootless angular 2-distance within 1e-9"""
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        dim = int(rng.integers(1, 65))
        density = rng.uniform(0.05, 1.0)
        x = make_sparse(random_sparse(rng, dim, density), dim)
        y = make_sparse(random_sparse(rng, dim, density), dim)
        worst = max(worst, abs(cosine_dissimilarity(x, y) - 0.5 * angular_distance(x, y, MetricSpec(2.0, True))))
    assert worst <= 1e-9


@pytest.mark.parametrize(
    "p, rootless", [(1.0, False), (1.5, False), (2.0, False), (3.0, False), (4.0, False),
                    (0.3, True), (0.5, True), (1.0, True)],
)
def test_triangle_inequality(p, rootless):
    """metric axioms: 10000 random triples satisfy the triangle inequality (rooted p>=1, rootless p<=1), slack 1e-12"""
    rng = np.random.default_rng(int(p * 100) + rootless)
    spec = MetricSpec(p, rootless)
    violations = 0
    for _ in range(10_000):
        dim = int(rng.integers(1, 9))
        # zeros allowed: the zero vector sits at distance 1 from everything
        x, y, z = (p_normalize(make_sparse(rng.integers(0, 4, dim).tolist(), dim), p) for _ in range(3))
        d = lambda a, b: angular_distance_sparse_fast(a, b, spec)
        if d(x, z) > d(x, y) + d(y, z) + 1e-12:
            violations += 1
    assert violations == 0


@pytest.mark.parametrize("p", [0.5, 1.0, 2.0, 3.7])
def test_fast_path_oracle(p):
    """fast-path oracle: sparse fast distance vs dense evaluation, 1000 random pairs per p, max abs error <= 1e-9"""
    rng = np.random.default_rng(int(p * 10))
    worst = 0.0
    for n in range(1000):
        dim = int(rng.integers(1, 65))
        density = rng.uniform(0.05, 0.8)
        xs = (rng.integers(0, 10, dim) * (rng.random(dim) < density)).tolist()
        ys = (rng.integers(0, 10, dim) * (rng.random(dim) < density)).tolist()
        rootless = bool(n % 2)
        got = angular_distance_sparse_fast(
            p_normalize(make_sparse(xs, dim), p), p_normalize(make_sparse(ys, dim), p), MetricSpec(p, rootless)
        )
        worst = max(worst, abs(got - dense_angular(xs, ys, p, rootless)))
    assert worst <= 1e-9


def test_neighbour_search_oracle():
    """neighbour search: top_k equals a full sort on 100 random instances (pool 200, k in {1,5,16}), ties included"""
    rng = np.random.default_rng(7)
    for _ in range(100):
        dim = int(rng.integers(2, 7))
        dense = rng.integers(0, 3, size=(200, dim))
        labels = [f"c{j}" for j in rng.integers(0, 3, 200)]
        pool = LabeledDataset.from_vectors([make_sparse(r.tolist(), dim) for r in dense], labels)
        query = make_sparse(rng.integers(0, 3, dim).tolist(), dim)
        spec = MetricSpec(float(rng.choice([0.5, 1.0, 2.0])), bool(rng.integers(0, 2)))
        d = query_distances(query, pool, spec)
        order = sorted(range(200), key=lambda i: (d[i], i))
        for k in (1, 5, 16):
            assert top_k(query, pool, k, spec).indices.tolist() == order[:k]
            for cls in pool.classes:
                inside = [i for i in order if labels[i] == cls]
                outside = [i for i in order if labels[i] != cls]
                assert top_k(query, pool, k, spec, "in", cls).indices.tolist() == inside[:k]
                assert top_k(query, pool, k, spec, "out", cls).indices.tolist() == outside[:k]


def test_weight_normalization():
    """weight normalization: rank weights sum to 1 within 1e-12 for k=1..256; k=3 linear exact, reciprocal within 1e-15"""
    for kind in ("linear", "reciprocal"):
        for k in range(1, 257):
            assert abs(sum(frnn_weights(k, kind)) - 1.0) <= 1e-12
    assert frnn_weights(3, "linear") == [1 / 2, 1 / 3, 1 / 6]
    got = frnn_weights(3, "reciprocal")
    assert max(abs(a - b) for a, b in zip(got, [6 / 11, 3 / 11, 2 / 11])) <= 1e-15


# Scores of the three toy queries at k=2, class order (a, b, c), computed with the scalar oracle.
FROZEN = {
    (1.5, False, "linear"): {
        "nn": [[0, 0, 1], [1, 0, 0], [0, 0, 1]],
        "frnn-upper": [
            [0.6464363126846232, 0.4675867187956818, 0.6667166738373935],
            [0.6225249669969162, 0.5786968626883149, 0.41189335558330414],
            [0.630738774535174, 0.5035896922050624, 0.6948190305477319],
        ],
        "frnn-lower": [
            [0.3332833261626065, 0.32250377183472795, 0.3535636873153768],
            [0.42130313731168495, 0.3774750330030838, 0.3774750330030838],
            [0.3051809694522681, 0.3051809694522681, 0.3692612254648259],
        ],
        "frnn-mean": [
            [0.48985981942361484, 0.3950452453152049, 0.5101401805763852],
            [0.5219140521543005, 0.47808594784569935, 0.394684194293194],
            [0.467959871993721, 0.40438533082866523, 0.5320401280062789],
        ],
    },
    (0.5, True, "reciprocal"): {
        "nn": [
            [0.5111456552468048, 0.0, 0.4888543447531953],
            [0.49824024501926134, 0.5017597549807387, 0.0],
            [0.4945789024376973, 0.0, 0.5054210975623028],
        ],
        "frnn-upper": [
            [0.6073512846492133, 0.4415181469694429, 0.5939946338129514],
            [0.51720736924238, 0.51869314617007, 0.3786987630715469],
            [0.578296618831424, 0.4535190711650213, 0.5999112566902987],
        ],
        "frnn-lower": [
            [0.40600536618704863, 0.381490271184844, 0.3926487153507867],
            [0.48130685382992994, 0.48279263075761997, 0.4768389859478348],
            [0.40008874330970123, 0.39259644603836796, 0.4217033811685759],
        ],
        "frnn-mean": [
            [0.506678325418131, 0.41150420907714347, 0.49332167458186904],
            [0.49925711153615493, 0.500742888463845, 0.4277688745096908],
            [0.48919268107056263, 0.42305775860169464, 0.5108073189294373],
        ],
    },
}


def test_classifier_oracle():
    """classifier oracle: batch scores on the 12-document toy corpus match scalar evaluation at k=2 within 1e-12"""
    train, test = toy_train(), toy_test()
    queries = slice(len(TOY_TRAIN), None)
    for (p, rootless, kind), table in FROZEN.items():
        for family, want in table.items():
            sm = score_all(test, train, ClassifierSpec.build(family, 2, kind, p, rootless))
            assert np.max(np.abs(sm.values[queries] - np.array(want))) <= 1e-12
    for p in (0.5, 1.0, 2.0, 3.0):
        for rootless in (False, True):
            for kind in ("linear", "reciprocal"):
                for family in FAMILIES:
                    sm = score_all(test, train, ClassifierSpec.build(family, 2, kind, p, rootless))
                    for qi, q in enumerate(TOY_QUERIES):
                        for j, cls in enumerate("abc"):
                            want = family_score(family, q, TOY_TRAIN, TOY_LABELS, cls, 2, p, rootless, kind)
                            assert abs(sm.values[len(TOY_TRAIN) + qi, j] - want) <= 1e-12


def test_auroc_oracle():
    """AUROC oracle: 50 random 3-class instances match pair counting within 1e-12; perfect -> 1.0; all ties -> 0.5"""
    rng = np.random.default_rng(13)
    for _ in range(50):
        labels = [f"c{j}" for j in rng.permutation(np.arange(30) % 3)]
        values = np.round(rng.random((30, 3)), 2)
        sm = ScoreMatrix(values, ("c0", "c1", "c2"))
        want = hand_till(values.tolist(), labels, ["c0", "c1", "c2"])
        assert abs(multiclass_auroc(sm, labels).auroc - want) <= 1e-12
    assert binary_auc([0.9, 0.8, 0.3, 0.2], [True, True, False, False]) == 1.0
    assert binary_auc([0.4] * 6, [True, False] * 3) == 0.5


def test_sweep_determinism(tmp_path):
    """sweep determinism: two toy sweeps give identical CSV apart from wall_ms; p=1 rooted and rootless rows agree"""
    pair = ingest(synthetic_corpus(seed=0, split="train"), synthetic_corpus(n_per_class=5, seed=1, split="test"))
    cfg = dict(p_grid=(0.5, 1.0, 2.0), m_grid=(8, 16), k_grid=(1, 2, 4))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run_sweep(SweepConfig(**cfg, out=a), *pair)
    rows = run_sweep(SweepConfig(**cfg, threads=2, out=b), *pair)
    strip = lambda path: [line.rsplit(",", 1)[0] for line in path.read_text().splitlines()]
    assert strip(a) == strip(b)
    cells = {(r.family, r.weights, r.rootless, r.m, r.k): r for r in rows if r.p == 1.0}
    for (fam, w, rootless, m, k), r in cells.items():
        twin = cells[(fam, w, not rootless, m, k)]
        assert (r.auroc, r.auroc_ovr) == (twin.auroc, twin.auroc_ovr)


CORPUS = os.environ.get("ANGMINK_CORPUS")
needs_corpus = pytest.mark.skipif(
    not CORPUS, reason="set ANGMINK_CORPUS to an ingested newsgroup dataset file to run"
)

REFERENCE_BEST = {"nn": (4.0, 0.731), "frnn-lower": (3.9, 0.725), "frnn-mean": (0.9, 0.788), "frnn-upper": (1.1, 0.777)}


@pytest.mark.slow
@needs_corpus
def test_best_p_reproduction():
    """reproduction: best-p AUROC per family at m=4096, k=256, linear, rooted within 0.02 AUROC and 0.3 in p"""
    cfg = SweepConfig(m_grid=(4096,), k_grid=(256,), weight_kinds=("linear",), rootless=(False,),
                      threads=os.cpu_count() or 1, data=Path(CORPUS))
    best = {c.family: c for c in best_cells(run_sweep(cfg))}
    for family, (p, auroc) in REFERENCE_BEST.items():
        assert abs(best[family].auroc - auroc) <= 0.02, (family, best[family])
        assert abs(best[family].p - p) <= 0.3 + 1e-9, (family, best[family])


def _subsample(corpus: CountedCorpus, n: int, seed: int) -> CountedCorpus:
    idx = sorted(random.Random(seed).sample(range(len(corpus)), min(n, len(corpus))))
    return CountedCorpus(tuple(corpus.counts[i] for i in idx), tuple(corpus.labels[i] for i in idx), corpus.split)


@pytest.mark.slow
@needs_corpus
def test_desk_scale_claims():
    """desk scale: FRNN-mean beats p=2 at p=1 (m=1024, k=64) and best-p AUROC grows with m over 256, 512, 1024"""
    train, test = load_counted(CORPUS)
    train, test = _subsample(train, 2000, 0), _subsample(test, 1000, 1)
    threads = os.cpu_count() or 1
    cfg = SweepConfig(m_grid=(256, 512, 1024), k_grid=(64,), weight_kinds=("linear",), rootless=(False,),
                      threads=threads)
    rows = run_sweep(cfg, train, test)
    mean = {r.p: r.auroc for r in rows if r.family == "frnn-mean" and r.m == 1024}
    assert mean[1.0] > mean[2.0]
    for family in FAMILIES:
        per_m = [best_cells(rows, k=64, m=m, families=[family])[0].auroc for m in (256, 512, 1024)]
        assert per_m == sorted(per_m), (family, per_m)
