"""Predictor-guided architecture search under an exact query budget.

The search alternates tournament evolution on predicted scores with small
batches of ground-truth queries; the predictor is refinetuned on everything
queried so far after each stage.  Total gt queries are exactly
``n0 + stages * queries_per_stage`` in every mode, which makes comparisons
between strategies fair by construction.

Run: ``python3 demos/04_search.py``  (a few minutes)
"""

from dataclasses import replace

import numpy as np

from dynens.data import gen_synthetic
from dynens.search import SearchConfig, run_search
from dynens.training import TrainConfig

table = gen_synthetic(seed=100, size=5000, seq_len=6, vocab_size=4)
gt_max = max(r.gt_accuracy for r in table.records)
print(f"search space: {len(table.records)} architectures, best gt {gt_max:.4f}\n")


def config(seed):
    return SearchConfig(
        n0=10, m_lf=800, stages=3, queries_per_stage=5, evo_steps=20,
        population=16, tournament=4, finetune_epochs=30, seed=seed,
        train=TrainConfig(epochs_pretrain=5, epochs_finetune=30,
                          learning_rate=1e-2, batch_size=128, seed=seed))


budget = config(0).budget
print(f"budget: {budget} gt queries per run\n")
print(f"{'mode':<20}{'best gt':>9}{'queries':>9}")
for mode in ("dynamic", "vanilla-predictor", "evolution", "random"):
    history = run_search(table, config(0), mode)
    assert history.n_queries() == budget
    print(f"{mode:<20}{history.best_gt:>9.4f}{history.n_queries():>9}")

print("\nWith a flops limit, every queried architecture must satisfy it:")
limit = float(np.median([r.flops for r in table.records]))
constrained = replace(config(0), flops_limit=limit)
history = run_search(table, constrained, "dynamic")
worst = max(table.record_by_id(e["arch_id"]).flops for e in history.entries)
print(f"flops limit {limit:.1f}, max queried flops {worst:.1f}, "
      f"best gt {history.best_gt:.4f}")
