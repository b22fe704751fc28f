"""Token-frequency classification with rooted and rootless angular Minkowski p-distance."""

from .classifiers import (
    ClassifierSpec,
    ScoreMatrix,
    WeightScheme,
    frnn_lower,
    frnn_mean,
    frnn_upper,
    frnn_weights,
    nn_score,
    nn_weights,
    score_all,
)
from .corpus import (
    CountedCorpus,
    RawCorpus,
    Vocabulary,
    build_vocabulary,
    dataset_pair,
    ingest,
    load_corpus,
    load_counted,
    save_counted,
    tokenize,
    vectorize,
)
from .evaluation import EvaluationResult, binary_auc, multiclass_auroc, ovr_macro_auroc
from .harness import SweepConfig, SweepRow, best_cells, run_sweep
from .metric import (
    NormalizedVector,
    angular_distance,
    angular_distance_sparse_fast,
    cosine_dissimilarity,
    p_normalize,
    p_size,
    rootless_p_size,
)
from .neighbours import NeighbourList, top_k
from .vectorspace import LabeledDataset, MetricSpec, SparseVector, densify, make_sparse

__version__ = "0.1.0"
