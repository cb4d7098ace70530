"""Kendall's Tau against a brute-force oracle, plus diagnostics structure."""

import numpy as np
import pytest

from dynens.ensemble import DynamicEnsemblePredictor
from dynens.metrics import diagnostics, kd, kendall_tau, weighted_score_std


def brute_force_tau(pred, gt):
    """Direct pair-count oracle, python loops, tau-a definition."""
    n = len(pred)
    concordant = discordant = 0
    for i in range(n):
        for j in range(i + 1, n):
            dp = pred[i] - pred[j]
            dg = gt[i] - gt[j]
            if dp * dg > 0:
                concordant += 1
            elif dp * dg < 0:
                discordant += 1
    total = n * (n - 1) // 2
    return concordant, discordant, (concordant - discordant) / total


@pytest.mark.parametrize("with_ties", [False, True])
def test_tau_matches_brute_force_oracle(with_ties):
    rng = np.random.default_rng(42 if with_ties else 43)
    for _ in range(50):
        n = int(rng.integers(2, 200))
        if with_ties:
            pred = rng.integers(0, 5, size=n).astype(float)
            gt = rng.integers(0, 5, size=n).astype(float)
        else:
            pred = rng.normal(size=n)
            gt = rng.normal(size=n)
        concordant, discordant, tau = brute_force_tau(pred, gt)
        report = kendall_tau(pred, gt)
        assert report.concordant == concordant
        assert report.discordant == discordant
        assert report.kd == pytest.approx(tau, abs=0)
        assert report.tied == n * (n - 1) // 2 - concordant - discordant


def test_tau_perfect_and_reversed():
    x = np.arange(10, dtype=float)
    assert kd(x, x) == 1.0
    assert kd(-x, x) == -1.0


def test_tau_monotone_invariance():
    rng = np.random.default_rng(7)
    pred = rng.normal(size=50)
    gt = rng.normal(size=50)
    base = kd(pred, gt)
    assert kd(2 * pred + 1, gt) == pytest.approx(base, abs=0)
    assert kd(pred ** 3, gt) == pytest.approx(base, abs=0)


def test_tau_antisymmetry():
    rng = np.random.default_rng(8)
    pred = rng.normal(size=50)
    gt = rng.normal(size=50)
    assert kd(-pred, gt) == pytest.approx(-kd(pred, gt), abs=0)


def test_tau_b_with_ties_matches_definition():
    pred = np.array([1.0, 1.0, 2.0, 3.0])
    gt = np.array([1.0, 2.0, 3.0, 4.0])
    # pairs: (0,1) tied in pred; all others concordant -> C=5, D=0, total=6
    report = kendall_tau(pred, gt, variant="b")
    assert report.concordant == 5
    assert report.discordant == 0
    assert report.kd == pytest.approx(5 / np.sqrt(5 * 6))


def test_tau_input_validation():
    with pytest.raises(ValueError):
        kendall_tau(np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        kendall_tau(np.ones(3), np.ones(4))
    with pytest.raises(ValueError):
        kendall_tau(np.ones(3), np.ones(3), variant="c")


def test_tau_runtime_vectorized():
    # n=2000 should finish far under a second; a python-loop version would not.
    import time
    rng = np.random.default_rng(0)
    pred, gt = rng.normal(size=2000), rng.normal(size=2000)
    start = time.time()
    kendall_tau(pred, gt)
    assert time.time() - start < 2.0


# -- predictor diagnostics ---------------------------------------------------

@pytest.fixture(scope="module")
def tiny_predictor():
    rng = np.random.default_rng(0)
    return DynamicEnsemblePredictor.create(4, ["lf_x", "lf_y"], rng)


def test_weighted_score_std_shape(tiny_predictor):
    rng = np.random.default_rng(1)
    tokens = rng.integers(0, 4, size=(6, 4))
    stds = weighted_score_std(tiny_predictor, tokens)
    assert stds.shape == (2,)
    assert np.all(stds >= 0)
    with pytest.raises(ValueError):
        weighted_score_std(tiny_predictor, tokens[:1])


def test_diagnostics_structure(tiny_predictor, small_table):
    report = diagnostics(tiny_predictor, small_table)
    assert report["n_validation"] == 10
    assert -1.0 <= report["ensemble_kd_vs_gt"] <= 1.0
    assert [e["lf_name"] for e in report["experts"]] == ["lf_x", "lf_y"]
    for entry in report["experts"]:
        assert set(entry) == {"lf_name", "kd_weighted_vs_gt", "kd_raw_vs_own_lf",
                              "gate_weight_mean", "weighted_score_std"}
        assert 0.0 <= entry["gate_weight_mean"] <= 1.0
    total = sum(e["gate_weight_mean"] for e in report["experts"])
    assert total == pytest.approx(1.0, abs=1e-9)
