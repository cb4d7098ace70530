"""Per-expert diagnostics: who does the gate trust, and should it?

For a trained ensemble, ``diagnostics`` reports for every expert:

* ``kd_raw_vs_own_lf``    — how well the expert learned its own proxy;
* ``kd_weighted_vs_gt``   — how useful its gated contribution is;
* ``gate_weight_mean``    — how much weight the gate gives it on average;
* ``weighted_score_std``  — how much its contribution actually varies.

Run: ``python3 demos/03_diagnostics.py``  (about a minute)
"""

import json

from dynens.data import gen_synthetic, make_split
from dynens.metrics import diagnostics
from dynens.training import TrainConfig, finetune_ensemble, pretrain_experts

table = make_split(gen_synthetic(seed=1, size=600), gt_fraction=0.05)
experts = pretrain_experts(
    table, TrainConfig(epochs_pretrain=20, learning_rate=1e-2, seed=1))
ensemble = finetune_ensemble(
    experts, table,
    TrainConfig(epochs_finetune=60, learning_rate=1e-3, batch_size=4, seed=1))

report = diagnostics(ensemble, table)
print(json.dumps(report, indent=2))

print("\nReading guide: a healthy gate gives higher mean weight to experts "
      "whose\nkd_weighted_vs_gt is high, and proxy_noise / proxy_adverse "
      "should earn\nlittle trust.  The same report is available from the "
      "command line via\n`dynens analyze --checkpoint ... --data ... --out "
      "report.json`.")
