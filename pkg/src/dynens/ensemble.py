"""Dynamic ensemble predictor: low-fidelity experts fused by a gating network.

The fused score for an architecture is sigmoid(sum_i k_i) where
k_i = (raw score of expert i) * (softmax gate weight i).
"""

from __future__ import annotations

import json

import numpy as np

from .autodiff import Tensor, concat, constant
from .encoder import MlpHead, SequenceEncoder
from .optim import CHECKPOINT_VERSION, ParameterSet


class ExpertPredictor:
    """One encoder + scalar head, pretrained on a single proxy signal."""

    def __init__(self, vocab_size: int, lf_name: str, rng: np.random.Generator,
                 name: str = "expert"):
        self.lf_name = lf_name
        self._name = name
        self.encoder = SequenceEncoder(vocab_size, rng, name=f"{name}.enc")
        self.head = MlpHead(rng, out_dim=1, name=f"{name}.head")
        self.params = ParameterSet()
        self.params.merge(self.encoder.params)
        self.params.merge(self.head.params)

    def score_tensor(self, tokens, training: bool = False,
                     rng: np.random.Generator | None = None) -> Tensor:
        h = self.encoder.forward(tokens, training=training, rng=rng)
        return self.head.forward(h)

    def score_batch(self, tokens) -> np.ndarray:
        return self.score_tensor(tokens).data[:, 0]

    def clone(self) -> "ExpertPredictor":
        """Deep-copy the expert (fresh tensors, same parameter values)."""
        other = ExpertPredictor(self.encoder.vocab_size, self.lf_name,
                                np.random.default_rng(0), name=self._name)
        for (_, src), (_, dst) in zip(self.params.items(), other.params.items()):
            dst.data = src.data.copy()
        return other


class GatingNetwork:
    """Same encoder/head construction as an expert, with N gate logits.

    The final head layer starts at zero so an untrained gate yields exactly
    uniform weights and the fresh ensemble coincides with uniform fusion.
    """

    def __init__(self, vocab_size: int, n_experts: int, rng: np.random.Generator,
                 name: str = "gate"):
        self.n_experts = n_experts
        self.encoder = SequenceEncoder(vocab_size, rng, name=f"{name}.enc")
        self.head = MlpHead(rng, out_dim=n_experts, name=f"{name}.head",
                            zero_final=True)
        self.params = ParameterSet()
        self.params.merge(self.encoder.params)
        self.params.merge(self.head.params)

    def logits_tensor(self, tokens, training: bool = False,
                      rng: np.random.Generator | None = None) -> Tensor:
        h = self.encoder.forward(tokens, training=training, rng=rng)
        return self.head.forward(h)


class DynamicEnsemblePredictor:
    """N experts plus a gating network; expert order matches lf_names order."""

    def __init__(self, experts: list, gate: GatingNetwork):
        if not experts:
            raise ValueError("ensemble needs at least one expert")
        if gate.n_experts != len(experts):
            raise ValueError(
                f"gate outputs {gate.n_experts} logits for {len(experts)} experts")
        self.experts = list(experts)
        self.gate = gate
        self.params = ParameterSet()
        for expert in self.experts:
            self.params.merge(expert.params)
        self.params.merge(gate.params)

    @property
    def lf_names(self):
        return [e.lf_name for e in self.experts]

    # -- batched graph-building forward passes -----------------------------

    def expert_scores_tensor(self, tokens, training: bool = False,
                             rng: np.random.Generator | None = None) -> Tensor:
        cols = [e.score_tensor(tokens, training=training, rng=rng)
                for e in self.experts]
        return concat(cols, axis=1)

    def gate_weights_tensor(self, tokens, training: bool = False,
                            rng: np.random.Generator | None = None) -> Tensor:
        return self.gate.logits_tensor(tokens, training=training, rng=rng).softmax(axis=1)

    def weighted_scores_tensor(self, tokens, training: bool = False,
                               rng: np.random.Generator | None = None) -> Tensor:
        scores = self.expert_scores_tensor(tokens, training=training, rng=rng)
        weights = self.gate_weights_tensor(tokens, training=training, rng=rng)
        return scores * weights

    def logit_tensor(self, tokens, training: bool = False,
                     rng: np.random.Generator | None = None) -> Tensor:
        weighted = self.weighted_scores_tensor(tokens, training=training, rng=rng)
        ones = constant(np.ones((len(self.experts), 1)))
        return (weighted @ ones).reshape(-1)

    def ensemble_score_tensor(self, tokens, training: bool = False,
                              rng: np.random.Generator | None = None) -> Tensor:
        return self.logit_tensor(tokens, training=training, rng=rng).sigmoid()

    # -- eval-mode numpy views ---------------------------------------------

    def expert_scores_batch(self, tokens) -> np.ndarray:
        return self.expert_scores_tensor(tokens).data

    def gate_weights_batch(self, tokens) -> np.ndarray:
        return self.gate_weights_tensor(tokens).data

    def weighted_scores_batch(self, tokens) -> np.ndarray:
        return self.weighted_scores_tensor(tokens).data

    def ensemble_score_batch(self, tokens) -> np.ndarray:
        return self.ensemble_score_tensor(tokens).data

    predict_batch = ensemble_score_batch

    # -- single-architecture convenience -----------------------------------

    def _one(self, tokens) -> np.ndarray:
        return np.asarray(tokens, dtype=np.intp).reshape(1, -1)

    def expert_scores(self, tokens) -> np.ndarray:
        return self.expert_scores_batch(self._one(tokens))[0]

    def gate_weights(self, tokens) -> np.ndarray:
        return self.gate_weights_batch(self._one(tokens))[0]

    def weighted_scores(self, tokens) -> np.ndarray:
        return self.weighted_scores_batch(self._one(tokens))[0]

    def ensemble_score(self, tokens) -> float:
        return float(self.ensemble_score_batch(self._one(tokens))[0])

    # -- checkpointing -----------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "version": CHECKPOINT_VERSION,
            "kind": "dynamic-ensemble",
            "n_experts": len(self.experts),
            "lf_names": self.lf_names,
            "vocab_size": self.gate.encoder.vocab_size,
            "params": self.params.state_dict(),
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.state_dict(), fh)

    @classmethod
    def create(cls, vocab_size: int, lf_names, rng: np.random.Generator
               ) -> "DynamicEnsemblePredictor":
        experts = [
            ExpertPredictor(vocab_size, name_, rng, name=f"expert{i}")
            for i, name_ in enumerate(lf_names)
        ]
        gate = GatingNetwork(vocab_size, len(experts), rng)
        return cls(experts, gate)

    @classmethod
    def load(cls, path) -> "DynamicEnsemblePredictor":
        with open(path) as fh:
            state = json.load(fh)
        if state.get("kind") != "dynamic-ensemble":
            raise ValueError(f"not a dynamic-ensemble checkpoint: {state.get('kind')!r}")
        predictor = cls.create(
            state["vocab_size"], state["lf_names"], np.random.default_rng(0))
        predictor.params.load_state_dict(state["params"])
        return predictor
