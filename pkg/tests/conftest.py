"""Shared fixtures: small benchmark tables for fast unit tests."""

import numpy as np
import pytest

from dynens.data import (
    TRAIN,
    VALIDATION,
    ArchitectureRecord,
    BenchmarkTable,
    gen_synthetic,
    make_split,
)


def build_table(n=20, seq_len=4, vocab_size=4, lf_names=("lf_x", "lf_y"),
                seed=0, with_flops=True):
    """A small deterministic table with gt and all LF columns present."""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        tokens = tuple(int(t) for t in rng.integers(0, vocab_size, size=seq_len))
        gt = float(rng.random())
        records.append(ArchitectureRecord(
            id=f"arch-{i}",
            tokens=tokens,
            gt_accuracy=gt,
            lf_values={name: float(rng.random()) for name in lf_names},
            flops=float(100 + 10 * i) if with_flops else None,
        ))
    half = n // 2
    split = tuple(TRAIN if i < half else VALIDATION for i in range(n))
    return BenchmarkTable(records=tuple(records), seq_len=seq_len,
                         vocab_size=vocab_size, lf_names=tuple(lf_names),
                         split=split)


@pytest.fixture
def small_table():
    return build_table()


@pytest.fixture
def small_split_table():
    return make_split(build_table(), gt_fraction=0.5)


@pytest.fixture(scope="session")
def synthetic_table():
    return make_split(gen_synthetic(seed=0, size=200), gt_fraction=0.1)
