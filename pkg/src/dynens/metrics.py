"""Rank-correlation metrics and diagnostic analyses of trained predictors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class RankReport:
    kd: float
    n: int
    concordant: int
    discordant: int
    tied: int


def kendall_tau(pred, gt, variant: str = "a") -> RankReport:
    """Kendall rank correlation over all unordered pairs.

    The default tau-a counts pairs tied in either vector as neither
    concordant nor discordant and divides by n(n-1)/2.  Pass variant="b"
    for the tie-adjusted denominator.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape or pred.ndim != 1:
        raise ValueError(f"expected equal-length 1-d vectors, got {pred.shape} vs {gt.shape}")
    n = pred.size
    if n < 2:
        raise ValueError(f"need at least 2 items, got {n}")

    iu = np.triu_indices(n, k=1)
    sp = np.sign(pred[:, None] - pred[None, :])[iu]
    sg = np.sign(gt[:, None] - gt[None, :])[iu]
    product = sp * sg
    concordant = int(np.count_nonzero(product > 0))
    discordant = int(np.count_nonzero(product < 0))
    total = n * (n - 1) // 2
    tied = total - concordant - discordant
    if variant == "a":
        denom = total
    elif variant == "b":
        tie_p = total - int(np.count_nonzero(sp))
        tie_g = total - int(np.count_nonzero(sg))
        denom = np.sqrt((total - tie_p) * (total - tie_g))
        if denom == 0:
            denom = np.nan
    else:
        raise ValueError(f"unknown tau variant {variant!r}")
    kd = (concordant - discordant) / denom
    return RankReport(kd=float(kd), n=n, concordant=concordant,
                      discordant=discordant, tied=tied)


def kd(pred, gt) -> float:
    """Shorthand: tau-a coefficient only."""
    return kendall_tau(pred, gt).kd


def weighted_score_std(predictor, tokens_batch) -> np.ndarray:
    """Population std of each expert's weighted contribution across archs."""
    tokens_batch = np.asarray(tokens_batch, dtype=np.intp)
    if tokens_batch.shape[0] < 2:
        raise ValueError("need at least 2 architectures")
    contributions = predictor.weighted_scores_batch(tokens_batch)
    return contributions.std(axis=0)


def diagnostics(predictor, table) -> dict:
    """Per-expert and ensemble ranking diagnostics on the validation split."""
    val_idx = table.validation_indices()
    if len(val_idx) < 2:
        raise ValueError("validation split too small for diagnostics")
    tokens = table.tokens_matrix(val_idx)
    gt = table.gt_array(val_idx)  # raises if gt missing

    weighted = predictor.weighted_scores_batch(tokens)
    gate = predictor.gate_weights_batch(tokens)
    raw = predictor.expert_scores_batch(tokens)
    ensemble = predictor.ensemble_score_batch(tokens)

    experts = []
    for i, expert in enumerate(predictor.experts):
        entry = {
            "lf_name": expert.lf_name,
            "kd_weighted_vs_gt": kd(weighted[:, i], gt),
            "gate_weight_mean": float(gate[:, i].mean()),
            "weighted_score_std": float(weighted[:, i].std()),
        }
        try:
            own_lf = table.lf_array(expert.lf_name, val_idx)
            entry["kd_raw_vs_own_lf"] = kd(raw[:, i], own_lf)
        except KeyError:
            entry["kd_raw_vs_own_lf"] = None
        experts.append(entry)

    return {
        "n_validation": int(len(val_idx)),
        "ensemble_kd_vs_gt": kd(ensemble, gt),
        "experts": experts,
    }
