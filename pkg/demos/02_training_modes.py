"""Train the dynamic ensemble and its baselines on a small benchmark.

Two-step recipe:

1. Pretrain one expert per LF column with the hinge pairwise ranking loss
   on the (cheap, plentiful) proxy values.
2. Finetune the whole ensemble — experts plus a per-architecture gating
   network — on a tiny set of ground-truth accuracies.

Baselines reuse the same pretrained experts where applicable:

* ``vanilla``      — a single predictor trained on ground truth only;
* ``single_lf``    — one expert for one chosen proxy, then gt finetuning;
* ``uniform``      — global (architecture-independent) learned weights;
* ``simple_avg``   — fixed equal weights, no gate.

Run: ``python3 demos/02_training_modes.py``  (about a minute)
"""

from dynens.data import gen_synthetic, make_split
from dynens.metrics import kd
from dynens.training import (TrainConfig, finetune_ensemble,
                             pretrain_experts, train_baseline)

table = make_split(gen_synthetic(seed=0, size=600), gt_fraction=0.05)
print(f"{len(table.finetune_indices())} gt records for finetuning, "
      f"{len(table.validation_indices())} held out for validation\n")

pre = TrainConfig(epochs_pretrain=20, learning_rate=1e-2, seed=0)
fine = TrainConfig(epochs_finetune=60, learning_rate=1e-3, batch_size=4, seed=0)

experts = pretrain_experts(table, pre)
val = table.validation_indices()
tokens, gt = table.tokens_matrix(val), table.gt_array(val)

print("pretrained experts (validation KD vs ground truth):")
for expert in experts:
    print(f"  {expert.lf_name:<14}{kd(expert.score_batch(tokens), gt):>7.3f}")

ensemble = finetune_ensemble([e.clone() for e in experts], table, fine)
print(f"\n{'dynamic':<14}{kd(ensemble.predict_batch(tokens), gt):>7.3f}")

for mode in ("uniform", "simple_avg", "vanilla"):
    config = TrainConfig(mode=mode, epochs_finetune=60, learning_rate=1e-3,
                         batch_size=4, seed=0)
    shared = None if mode == "vanilla" else [e.clone() for e in experts]
    model = train_baseline(table, config, experts=shared)
    print(f"{mode:<14}{kd(model.predict_batch(tokens), gt):>7.3f}")
