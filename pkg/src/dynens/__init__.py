"""Dynamic-ensemble architecture performance prediction and predictor-guided
search over tabular benchmarks, on a small numpy autodiff core."""

from .autodiff import Tensor, concat, constant, embedding_lookup, parameter
from .data import (
    ArchitectureRecord,
    BenchmarkTable,
    gen_synthetic,
    load_benchmark,
    make_split,
    restrict_lf,
    save_benchmark,
)
from .encoder import MlpHead, SequenceEncoder
from .ensemble import DynamicEnsemblePredictor, ExpertPredictor, GatingNetwork
from .metrics import RankReport, diagnostics, kd, kendall_tau, weighted_score_std
from .optim import Adam, ParameterSet
from .search import (
    SearchConfig,
    SearchHistory,
    run_search,
    topk_select,
    tournament_step,
)
from .training import (
    TrainConfig,
    finetune_ensemble,
    hinge_ranking_loss,
    pretrain_experts,
    train_baseline,
    train_dynamic,
)

__version__ = "0.1.0"
