"""Two-phase predictor-guided search with tournament evolution, plus the
random-sample and gt-evolution baselines, over a tabular benchmark oracle."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .data import BenchmarkTable
from .seeding import stream
from .training import TrainConfig, finetune_on_gt, fit_ensemble, fit_expert

SEARCH_MODES = ("dynamic", "vanilla-predictor", "random", "evolution")


@dataclass
class SearchConfig:
    n0: int = 20            # initial gt queries
    m_lf: int = 7813        # records sampled for proxy evaluation
    stages: int = 5         # predictor-based stages (T_p)
    evo_steps: int = 50     # evolution steps per inner run (T_pe)
    queries_per_stage: int = 5   # gt queries per stage (N_p)
    population: int = 20    # evolution population size
    tournament: int = 5     # tournament size
    finetune_epochs: int = 100   # per-stage finetune epochs (K)
    seed: int = 0
    flops_limit: float | None = None
    train: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        for name in ("n0", "m_lf", "stages", "evo_steps", "queries_per_stage",
                     "population", "tournament", "finetune_epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.tournament > self.population:
            raise ValueError("tournament size cannot exceed population size")

    @property
    def budget(self) -> int:
        return self.n0 + self.stages * self.queries_per_stage


class SearchHistory:
    """Append-only log of gt queries with the best-so-far curve."""

    def __init__(self):
        self.entries = []  # dicts: stage, arch_id, predicted, gt, best_so_far
        self._best = -np.inf

    def record(self, stage: int, arch_id: str, predicted: float | None,
               gt: float) -> None:
        self._best = max(self._best, gt)
        self.entries.append({
            "stage": stage,
            "arch_id": arch_id,
            "predicted": predicted,
            "gt": gt,
            "best_so_far": self._best,
        })

    @property
    def best_gt(self) -> float:
        return self._best

    @property
    def best_id(self) -> str:
        return max(self.entries, key=lambda e: e["gt"])["arch_id"]

    def n_queries(self) -> int:
        return len({e["arch_id"] for e in self.entries})

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["stage", "arch_id", "predicted", "gt", "best_so_far"])
            writer.writeheader()
            writer.writerows(self.entries)


def mutate_tokens(tokens, vocab_size: int, rng: np.random.Generator) -> tuple:
    """Replace one token position with a uniformly random different token."""
    tokens = list(tokens)
    pos = int(rng.integers(len(tokens)))
    choices = [t for t in range(vocab_size) if t != tokens[pos]]
    tokens[pos] = int(choices[int(rng.integers(len(choices)))])
    return tuple(tokens)


def tournament_step(population, score_fn, mu: int, rng: np.random.Generator,
                    vocab_size: int) -> tuple:
    """Pick the best-scored of mu sampled members and mutate one token.

    `population` is a list of token tuples; returns the child's tokens.
    """
    if mu > len(population):
        raise ValueError(f"tournament size {mu} exceeds population {len(population)}")
    picks = rng.choice(len(population), size=mu, replace=False)
    scores = score_fn(np.array([population[i] for i in picks], dtype=np.intp))
    parent = population[picks[int(np.argmax(scores))]]
    return mutate_tokens(parent, vocab_size, rng)


class _Oracle:
    """Table wrapper: eligibility filtering, token lookup, gt queries."""

    def __init__(self, table: BenchmarkTable, flops_limit: float | None):
        self.table = table
        self.eligible = []
        for i, record in enumerate(table.records):
            if flops_limit is not None:
                if record.flops is None or record.flops > flops_limit:
                    continue
            if record.gt_accuracy is None:
                continue
            self.eligible.append(i)
        if not self.eligible:
            raise ValueError("constraint excludes every record in the table")
        self.by_tokens = {}
        for i in self.eligible:
            self.by_tokens.setdefault(table.records[i].tokens, i)
        self.queried = {}  # arch_id -> gt

    def lookup(self, tokens) -> int | None:
        return self.by_tokens.get(tuple(tokens))

    def is_queried(self, index: int) -> bool:
        return self.table.records[index].id in self.queried

    def query(self, index: int) -> float:
        record = self.table.records[index]
        if record.id in self.queried:
            raise ValueError(f"architecture {record.id!r} gt-queried twice")
        self.queried[record.id] = record.gt_accuracy
        return record.gt_accuracy

    def sample_unqueried(self, count: int, rng: np.random.Generator) -> list:
        pool = [i for i in self.eligible if not self.is_queried(i)]
        if count > len(pool):
            raise ValueError(
                f"budget needs {count} more records but only {len(pool)} remain")
        picks = rng.choice(len(pool), size=count, replace=False)
        return [pool[int(p)] for p in picks]


def _evolution_proposal(oracle: _Oracle, score_fn, config: SearchConfig,
                        rng: np.random.Generator) -> tuple[int, float]:
    """One inner evolution run; returns (table index, predicted score) of the
    best-predicted unqueried candidate encountered."""
    table = oracle.table
    queried_ids = set(oracle.queried)
    seed_pool = [i for i in oracle.eligible
                 if table.records[i].id in queried_ids] or list(oracle.eligible)
    picks = rng.choice(len(seed_pool), size=config.population,
                       replace=len(seed_pool) < config.population)
    population = [table.records[seed_pool[int(p)]].tokens for p in picks]

    best_index, best_score = None, -np.inf
    for _ in range(config.evo_steps):
        child = tournament_step(population, score_fn, config.tournament, rng,
                                table.vocab_size)
        population.pop(0)          # age-based replacement: drop the oldest
        population.append(child)
        index = oracle.lookup(child)
        if index is None or oracle.is_queried(index):
            continue
        score = float(score_fn(np.array([child], dtype=np.intp))[0])
        if score > best_score:
            best_index, best_score = index, score
    if best_index is None:
        best_index = oracle.sample_unqueried(1, rng)[0]
        tokens = np.array([table.records[best_index].tokens], dtype=np.intp)
        best_score = float(score_fn(tokens)[0])
    return best_index, best_score


def _phase_one_predictor(table: BenchmarkTable, oracle: _Oracle,
                         config: SearchConfig, mode: str,
                         init_indices: list, rng: np.random.Generator):
    """Train the initial predictor from N0 gt points (+ M proxy points)."""
    tcfg = config.train
    gt_tokens = table.tokens_matrix(np.array(init_indices, dtype=np.intp))
    gt_values = np.array([table.records[i].gt_accuracy for i in init_indices])

    if mode == "vanilla-predictor":
        model = fit_expert(table.vocab_size, gt_tokens, gt_values, "gt",
                           TrainConfig(
                               margin=tcfg.margin, learning_rate=tcfg.learning_rate,
                               epochs_pretrain=tcfg.epochs_finetune,
                               epochs_finetune=tcfg.epochs_finetune,
                               batch_size=tcfg.batch_size, seed=tcfg.seed),
                           expert_index=0)
        return model, (lambda tok: model.score_batch(tok))

    lf_pool = [i for i in oracle.eligible
               if all(name in table.records[i].lf_values for name in table.lf_names)]
    m = min(config.m_lf, len(lf_pool))
    picks = rng.choice(len(lf_pool), size=m, replace=False)
    lf_idx = np.array([lf_pool[int(p)] for p in picks], dtype=np.intp)
    lf_tokens = table.tokens_matrix(lf_idx)
    experts = [
        fit_expert(table.vocab_size, lf_tokens, table.lf_array(name, lf_idx),
                   name, tcfg, expert_index=i)
        for i, name in enumerate(table.lf_names)
    ]
    predictor = fit_ensemble(experts, table.vocab_size, gt_tokens, gt_values, tcfg)
    return predictor, (lambda tok: predictor.ensemble_score_batch(tok))


def run_search(table: BenchmarkTable, config: SearchConfig, mode: str
               ) -> SearchHistory:
    """Run one search; returns the full gt-query history.

    All modes consume exactly n0 + stages * queries_per_stage distinct gt
    queries.  The reported result is the best-gt architecture queried.
    """
    if mode not in SEARCH_MODES:
        raise ValueError(f"unknown search mode {mode!r}")
    oracle = _Oracle(table, config.flops_limit)
    if config.budget > len(oracle.eligible):
        raise ValueError(
            f"budget {config.budget} exceeds the {len(oracle.eligible)} "
            "eligible records in the table")
    rng = stream(config.seed, "search", mode)
    history = SearchHistory()

    init_indices = oracle.sample_unqueried(config.n0, rng)
    for i in init_indices:
        history.record(0, table.records[i].id, None, oracle.query(i))

    if mode == "random":
        for stage in range(1, config.stages + 1):
            for i in oracle.sample_unqueried(config.queries_per_stage, rng):
                history.record(stage, table.records[i].id, None, oracle.query(i))
        return history

    if mode == "evolution":
        def gt_score(tokens_batch):
            values = []
            for tok in tokens_batch:
                index = oracle.lookup(tok)
                record = table.records[index] if index is not None else None
                values.append(record.gt_accuracy if record is not None
                              and record.id in oracle.queried else -np.inf)
            return np.array(values)

        for stage in range(1, config.stages + 1):
            for _ in range(config.queries_per_stage):
                index, _score = _evolution_proposal(oracle, gt_score, config, rng)
                history.record(stage, table.records[index].id, None,
                               oracle.query(index))
        return history

    model, score_fn = _phase_one_predictor(table, oracle, config, mode,
                                           init_indices, rng)
    known = list(init_indices)
    for stage in range(1, config.stages + 1):
        for _ in range(config.queries_per_stage):
            index, predicted = _evolution_proposal(oracle, score_fn, config, rng)
            history.record(stage, table.records[index].id, predicted,
                           oracle.query(index))
            known.append(index)
        known_idx = np.array(known, dtype=np.intp)
        tokens = table.tokens_matrix(known_idx)
        targets = np.array([table.records[i].gt_accuracy for i in known_idx])
        batch = min(len(known), 512)
        if mode == "dynamic":
            finetune_on_gt(
                model,
                lambda tok, drng: model.ensemble_score_tensor(tok, training=True,
                                                              rng=drng),
                tokens, targets, config.finetune_epochs, config.train, batch,
                seed_path=("search-finetune", stage))
        else:
            finetune_on_gt(
                model,
                lambda tok, drng: model.score_tensor(tok, training=True, rng=drng),
                tokens, targets, config.finetune_epochs, config.train, batch,
                seed_path=("search-finetune", stage))
    return history


def topk_select(score_fn, table: BenchmarkTable, k: int,
                flops_limit: float | None = None) -> list:
    """Score every eligible record and return the k highest-scored ids."""
    oracle_like = []
    for record in table.records:
        if flops_limit is not None:
            if record.flops is None or record.flops > flops_limit:
                continue
        oracle_like.append(record)
    if k > len(oracle_like):
        raise ValueError(f"k={k} exceeds the {len(oracle_like)} eligible records")
    tokens = np.array([r.tokens for r in oracle_like], dtype=np.intp)
    scores = score_fn(tokens)
    order = np.argsort(-scores, kind="stable")[:k]
    return [oracle_like[int(i)].id for i in order]
