"""Hinge pairwise ranking loss, the two-step training procedure and the
baseline training modes (vanilla, single-proxy transfer, uniform / simple /
equal-weight ensembles)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, constant
from .data import BenchmarkTable
from .ensemble import DynamicEnsemblePredictor, ExpertPredictor, GatingNetwork
from .optim import Adam, ParameterSet
from .seeding import stream

MODES = ("dynamic", "vanilla", "single_lf", "uniform", "simple_avg", "equal_weight")


@dataclass
class TrainConfig:
    margin: float = 0.1
    learning_rate: float = 1e-3
    epochs_pretrain: int = 200
    epochs_finetune: int = 200
    batch_size: int | None = None  # None: 512 for tables >= 5000 records, else 128
    seed: int = 0
    mode: str = "dynamic"

    def __post_init__(self):
        if self.margin <= 0:
            raise ValueError(f"margin must be positive, got {self.margin}")
        if self.epochs_pretrain < 1 or self.epochs_finetune < 1:
            raise ValueError("epoch counts must be >= 1")
        if self.batch_size is not None and self.batch_size < 2:
            raise ValueError("batch_size must be >= 2 (pairs need >= 2 items)")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")

    def effective_batch_size(self, table: BenchmarkTable) -> int:
        if self.batch_size is not None:
            return self.batch_size
        return 512 if len(table) >= 5000 else 128


def _pair_indices(targets: np.ndarray):
    """Index arrays (ii, jj) of ordered pairs with targets_i > targets_j."""
    return np.nonzero(targets[:, None] > targets[None, :])


def hinge_ranking_loss(scores, targets, margin: float = 0.1) -> Tensor:
    """Mean over pairs with targets_i > targets_j of max(0, margin - (s_i - s_j)).

    Pairs with equal targets are excluded; with no valid pair the loss is 0.
    """
    targets = np.asarray(targets, dtype=np.float64)
    if not isinstance(scores, Tensor):
        scores = constant(np.asarray(scores, dtype=np.float64))
    if scores.data.ndim == 2 and scores.data.shape[1] == 1:
        scores = scores.reshape(-1)
    if scores.data.ndim != 1 or scores.data.shape[0] != targets.shape[0]:
        raise ValueError(
            f"scores/targets length mismatch: {scores.data.shape} vs {targets.shape}")
    if targets.size < 2:
        raise ValueError(f"need at least 2 items, got {targets.size}")
    ii, jj = _pair_indices(targets)
    if ii.size == 0:
        return constant(0.0)
    diffs = scores.take(ii) - scores.take(jj)
    return (margin - diffs).maximum(0.0).mean()


def _minibatches(n: int, batch_size: int, rng: np.random.Generator):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        chunk = perm[start:start + batch_size]
        if chunk.size >= 2:  # a singleton batch has no ranking pairs
            yield chunk


def _fit(score_fn, params: ParameterSet, tokens: np.ndarray, targets: np.ndarray,
         epochs: int, config: TrainConfig, batch_size: int,
         shuffle_rng: np.random.Generator, dropout_rng: np.random.Generator
         ) -> list:
    """Generic ranking-loss loop; returns the per-epoch mean loss curve."""
    optimizer = Adam(params, lr=config.learning_rate)
    curve = []
    for _ in range(epochs):
        losses = []
        for idx in _minibatches(tokens.shape[0], batch_size, shuffle_rng):
            scores = score_fn(tokens[idx], dropout_rng)
            loss = hinge_ranking_loss(scores, targets[idx], config.margin)
            if loss._parents:  # skip gradient step on all-tied batches
                loss.backward()
                optimizer.step()
            losses.append(loss.item())
        curve.append(float(np.mean(losses)) if losses else 0.0)
    return curve


# ---------------------------------------------------------------------------
# Step one: expert pretraining on proxy columns.
# ---------------------------------------------------------------------------

def fit_expert(vocab_size: int, tokens: np.ndarray, targets: np.ndarray,
               lf_name: str, config: TrainConfig, expert_index: int = 0,
               batch_size: int | None = None, log: dict | None = None
               ) -> ExpertPredictor:
    """Train a fresh expert on explicit (tokens, targets) ranking data."""
    if tokens.shape[0] == 0:
        raise ValueError(f"no training records carry LF column {lf_name!r}")
    expert = ExpertPredictor(
        vocab_size, lf_name,
        stream(config.seed, "init", "expert", expert_index),
        name=f"expert{expert_index}")
    curve = _fit(
        lambda tok, rng: expert.score_tensor(tok, training=True, rng=rng),
        expert.params, tokens, targets, config.epochs_pretrain, config,
        batch_size if batch_size is not None else (512 if tokens.shape[0] >= 5000 else 128),
        stream(config.seed, "batching", "expert", expert_index),
        stream(config.seed, "dropout", "expert", expert_index))
    if log is not None:
        log[f"pretrain_loss.{lf_name}"] = curve
    return expert


def pretrain_one_expert(table: BenchmarkTable, lf_name: str, config: TrainConfig,
                        expert_index: int = 0, log: dict | None = None
                        ) -> ExpertPredictor:
    idx = table.lf_available_indices(lf_name)
    if idx.size == 0:
        raise ValueError(f"no training records carry LF column {lf_name!r}")
    return fit_expert(
        table.vocab_size, table.tokens_matrix(idx), table.lf_array(lf_name, idx),
        lf_name, config, expert_index=expert_index,
        batch_size=config.effective_batch_size(table), log=log)


def pretrain_experts(table: BenchmarkTable, config: TrainConfig,
                     log: dict | None = None) -> list:
    """Train one independent expert per LF column, in lf_names order."""
    return [
        pretrain_one_expert(table, name, config, expert_index=i, log=log)
        for i, name in enumerate(table.lf_names)
    ]


# ---------------------------------------------------------------------------
# Step two: joint finetuning of experts + gate on ground truth.
# ---------------------------------------------------------------------------

def _finetune_data(table: BenchmarkTable):
    idx = table.finetune_indices()
    if idx.size == 0:
        raise ValueError("empty finetune subset; call make_split first")
    return table.tokens_matrix(idx), table.gt_array(idx)


def fit_ensemble(experts: list, vocab_size: int, tokens: np.ndarray,
                 targets: np.ndarray, config: TrainConfig,
                 batch_size: int | None = None, log: dict | None = None
                 ) -> DynamicEnsemblePredictor:
    """Joint finetuning of experts plus a fresh gate on explicit gt data.

    The optimizer is created fresh here, independent of any pretraining state.
    """
    if tokens.shape[0] == 0:
        raise ValueError("empty finetune subset")
    gate = GatingNetwork(vocab_size, len(experts),
                         stream(config.seed, "init", "gate"))
    predictor = DynamicEnsemblePredictor(experts, gate)
    curve = _fit(
        lambda tok, rng: predictor.ensemble_score_tensor(tok, training=True, rng=rng),
        predictor.params, tokens, targets, config.epochs_finetune, config,
        batch_size if batch_size is not None else (512 if tokens.shape[0] >= 5000 else 128),
        stream(config.seed, "batching", "finetune"),
        stream(config.seed, "dropout", "finetune"))
    if log is not None:
        log["finetune_loss"] = curve
    return predictor


def finetune_ensemble(experts: list, table: BenchmarkTable, config: TrainConfig,
                      log: dict | None = None) -> DynamicEnsemblePredictor:
    """Build the ensemble with a fresh gate and jointly finetune everything."""
    tokens, targets = _finetune_data(table)
    return fit_ensemble(experts, table.vocab_size, tokens, targets, config,
                        batch_size=config.effective_batch_size(table), log=log)


def finetune_on_gt(model, score_fn, tokens: np.ndarray, targets: np.ndarray,
                   epochs: int, config: TrainConfig, batch_size: int,
                   seed_path: tuple = ("search-finetune",)) -> None:
    """Continue finetuning a model on given gt data in place, with a fresh
    optimizer (used per search stage).  `score_fn(tokens, rng)` must build
    the training-mode score tensor from `model`'s parameters."""
    _fit(score_fn, model.params, tokens, targets, epochs, config, batch_size,
         stream(config.seed, "batching", *seed_path),
         stream(config.seed, "dropout", *seed_path))


# ---------------------------------------------------------------------------
# Baseline ensembles and predictors.
# ---------------------------------------------------------------------------

class SingleScorer:
    """A plain encoder+head predictor (vanilla or single-proxy transfer)."""

    def __init__(self, expert: ExpertPredictor):
        self.model = expert

    def predict_batch(self, tokens) -> np.ndarray:
        return self.model.score_batch(tokens)


class UniformEnsemble:
    """Experts fused by one global learnable logit vector (softmaxed)."""

    def __init__(self, experts: list, logits: np.ndarray | None = None):
        self.experts = list(experts)
        self.params = ParameterSet()
        for expert in self.experts:
            self.params.merge(expert.params)
        init = np.zeros(len(experts)) if logits is None else logits
        self.logits = self.params.add("uniform.gate_logits", init.reshape(1, -1))

    def coefficients(self) -> np.ndarray:
        return self.logits.softmax(axis=1).data[0]

    def score_tensor(self, tokens, training=False, rng=None) -> Tensor:
        from .autodiff import concat
        scores = concat([e.score_tensor(tokens, training=training, rng=rng)
                         for e in self.experts], axis=1)
        weights = self.logits.softmax(axis=1)
        ones = constant(np.ones((len(self.experts), 1)))
        return ((scores * weights) @ ones).reshape(-1).sigmoid()

    def predict_batch(self, tokens) -> np.ndarray:
        return self.score_tensor(tokens).data


class FixedWeightEnsemble:
    """Experts fused with coefficients frozen at 1/N (simple / equal-weight).

    simple_avg scores with the unweighted mean of raw expert outputs;
    equal_weight wraps the same mean in the fused sigmoid.  Both train the
    experts jointly on ground truth with the ranking loss.
    """

    def __init__(self, experts: list, fused_sigmoid: bool):
        self.experts = list(experts)
        self.fused_sigmoid = fused_sigmoid
        self.params = ParameterSet()
        for expert in self.experts:
            self.params.merge(expert.params)

    def score_tensor(self, tokens, training=False, rng=None) -> Tensor:
        from .autodiff import concat
        scores = concat([e.score_tensor(tokens, training=training, rng=rng)
                         for e in self.experts], axis=1)
        mean = scores.mean(axis=1)
        return mean.sigmoid() if self.fused_sigmoid else mean

    def predict_batch(self, tokens) -> np.ndarray:
        return self.score_tensor(tokens).data


def train_baseline(table: BenchmarkTable, config: TrainConfig,
                   lf_name: str | None = None, experts: list | None = None,
                   log: dict | None = None):
    """Train one of the baseline modes; returns a scorer with predict_batch.

    For the ensemble baselines, pretrained `experts` may be supplied to
    reuse step-one training across modes; otherwise they are pretrained here.
    """
    mode = config.mode
    batch_size = config.effective_batch_size(table)

    if mode == "vanilla":
        tokens, targets = _finetune_data(table)
        model = ExpertPredictor(table.vocab_size, "gt",
                                stream(config.seed, "init", "vanilla"),
                                name="vanilla")
        curve = _fit(
            lambda tok, rng: model.score_tensor(tok, training=True, rng=rng),
            model.params, tokens, targets, config.epochs_finetune, config,
            batch_size,
            stream(config.seed, "batching", "vanilla"),
            stream(config.seed, "dropout", "vanilla"))
        if log is not None:
            log["finetune_loss"] = curve
        return SingleScorer(model)

    if mode == "single_lf":
        if lf_name is None:
            raise ValueError("single_lf mode needs an LF name")
        if lf_name not in table.lf_names:
            raise ValueError(f"unknown LF name {lf_name!r}")
        model = pretrain_one_expert(table, lf_name, config, log=log)
        tokens, targets = _finetune_data(table)
        curve = _fit(
            lambda tok, rng: model.score_tensor(tok, training=True, rng=rng),
            model.params, tokens, targets, config.epochs_finetune, config,
            batch_size,
            stream(config.seed, "batching", "finetune"),
            stream(config.seed, "dropout", "finetune"))
        if log is not None:
            log["finetune_loss"] = curve
        return SingleScorer(model)

    if mode in ("uniform", "simple_avg", "equal_weight"):
        if experts is None:
            experts = pretrain_experts(table, config, log=log)
        if mode == "uniform":
            model = UniformEnsemble(experts)
        else:
            model = FixedWeightEnsemble(experts, fused_sigmoid=(mode == "equal_weight"))
        tokens, targets = _finetune_data(table)
        curve = _fit(
            lambda tok, rng: model.score_tensor(tok, training=True, rng=rng),
            model.params, tokens, targets, config.epochs_finetune, config,
            batch_size,
            stream(config.seed, "batching", "finetune"),
            stream(config.seed, "dropout", "finetune"))
        if log is not None:
            log["finetune_loss"] = curve
        return model

    raise ValueError(f"unknown mode {mode!r}")


def train_dynamic(table: BenchmarkTable, config: TrainConfig,
                  experts: list | None = None, log: dict | None = None
                  ) -> DynamicEnsemblePredictor:
    """The full two-step procedure: pretrain experts, then joint finetuning."""
    if experts is None:
        experts = pretrain_experts(table, config, log=log)
    return finetune_ensemble(experts, table, config, log=log)
