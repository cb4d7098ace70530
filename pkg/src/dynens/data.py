"""Benchmark data model: records, JSONL ingestion, splits and a synthetic
search-space generator with controllable region-dependent proxy signals."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

TRAIN = "train"
VALIDATION = "validation"

# Frozen noise scales for the synthetic proxy columns.  Tuned once so the
# regional/global rank-correlation bands hold for every generator seed 0..9.
_REGIONAL_NOISE = 0.03
_GLOBAL_NOISE = 0.12
_ADVERSE_NOISE = 0.25

SYNTHETIC_LF_NAMES = [
    "proxy_a",
    "proxy_b",
    "proxy_global",
    "proxy_adverse",
    "proxy_noise",
]


@dataclass(frozen=True)
class ArchitectureRecord:
    """One architecture: token encoding, optional ground truth, proxy values."""

    id: str
    tokens: tuple
    gt_accuracy: float | None = None
    lf_values: dict = field(default_factory=dict)
    flops: float | None = None


@dataclass(frozen=True)
class BenchmarkTable:
    """A search space as an immutable table of records plus split tags."""

    records: tuple
    seq_len: int
    vocab_size: int
    lf_names: tuple
    split: tuple  # per-record TRAIN / VALIDATION
    finetune_mask: tuple = ()  # per-record bool; marked ground-truth subset

    def __post_init__(self):
        ids = [r.id for r in self.records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate record ids in table")
        if len(self.split) != len(self.records):
            raise ValueError("split tags must cover all records")
        for tag in self.split:
            if tag not in (TRAIN, VALIDATION):
                raise ValueError(f"unknown split tag {tag!r}")

    def __len__(self):
        return len(self.records)

    # -- index helpers -----------------------------------------------------

    def indices(self, split: str) -> np.ndarray:
        return np.array([i for i, tag in enumerate(self.split) if tag == split],
                        dtype=np.intp)

    def train_indices(self) -> np.ndarray:
        return self.indices(TRAIN)

    def validation_indices(self) -> np.ndarray:
        return self.indices(VALIDATION)

    def finetune_indices(self) -> np.ndarray:
        if not self.finetune_mask:
            return np.array([], dtype=np.intp)
        return np.array([i for i, m in enumerate(self.finetune_mask) if m],
                        dtype=np.intp)

    def tokens_matrix(self, indices=None) -> np.ndarray:
        if indices is None:
            indices = np.arange(len(self.records))
        return np.array([self.records[i].tokens for i in indices], dtype=np.intp)

    def gt_array(self, indices) -> np.ndarray:
        values = []
        for i in indices:
            gt = self.records[i].gt_accuracy
            if gt is None:
                raise ValueError(f"record {self.records[i].id!r} has no gt_accuracy")
            values.append(gt)
        return np.array(values)

    def lf_array(self, name: str, indices) -> np.ndarray:
        return np.array([self.records[i].lf_values[name] for i in indices])

    def lf_available_indices(self, name: str, split: str = TRAIN) -> np.ndarray:
        return np.array(
            [i for i in self.indices(split) if name in self.records[i].lf_values],
            dtype=np.intp,
        )

    def record_by_id(self, arch_id: str) -> ArchitectureRecord:
        for record in self.records:
            if record.id == arch_id:
                return record
        raise KeyError(arch_id)


def _validate_record(record: ArchitectureRecord, seq_len: int, vocab_size: int,
                     where: str) -> None:
    if len(record.tokens) != seq_len:
        raise ValueError(f"{where}: token length {len(record.tokens)} != {seq_len}")
    for tok in record.tokens:
        if not (0 <= tok < vocab_size):
            raise ValueError(f"{where}: token {tok} out of range [0, {vocab_size})")
    if record.gt_accuracy is not None and not (0.0 <= record.gt_accuracy <= 1.0):
        raise ValueError(f"{where}: gt_accuracy {record.gt_accuracy} outside [0,1]")
    if record.flops is not None and record.flops < 0:
        raise ValueError(f"{where}: negative flops {record.flops}")


def load_benchmark(path) -> BenchmarkTable:
    """Load a JSONL benchmark file (header line, then one record per line).

    Records keep file order.  Lines may carry an optional "split" tag; records
    without one fall back to first-half train, second-half validation.
    """
    with open(path) as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path}: empty benchmark file")
    header = json.loads(lines[0])
    for key in ("seq_len", "vocab_size", "lf_names"):
        if key not in header:
            raise ValueError(f"{path}: header missing required field {key!r}")
    seq_len = int(header["seq_len"])
    vocab_size = int(header["vocab_size"])
    lf_names = tuple(header["lf_names"])
    if not lf_names:
        raise ValueError(f"{path}: lf_names must be non-empty")

    records, splits, seen = [], [], set()
    for lineno, line in enumerate(lines[1:], start=2):
        raw = json.loads(line)
        where = f"{path}:{lineno}"
        for key in ("id", "tokens"):
            if key not in raw:
                raise ValueError(f"{where}: missing required field {key!r}")
        if raw["id"] in seen:
            raise ValueError(f"{where}: duplicate id {raw['id']!r}")
        seen.add(raw["id"])
        record = ArchitectureRecord(
            id=str(raw["id"]),
            tokens=tuple(int(t) for t in raw["tokens"]),
            gt_accuracy=None if raw.get("gt") is None else float(raw["gt"]),
            lf_values={k: float(v) for k, v in (raw.get("lf") or {}).items()},
            flops=None if raw.get("flops") is None else float(raw["flops"]),
        )
        for name in record.lf_values:
            if name not in lf_names:
                raise ValueError(f"{where}: unknown LF column {name!r}")
        _validate_record(record, seq_len, vocab_size, where)
        records.append(record)
        splits.append(raw.get("split"))

    if any(s is not None for s in splits):
        for lineno, s in enumerate(splits, start=2):
            if s not in (TRAIN, VALIDATION):
                raise ValueError(f"{path}:{lineno}: bad split tag {s!r}")
        split = tuple(splits)
    else:
        half = len(records) // 2
        split = tuple(TRAIN if i < half else VALIDATION for i in range(len(records)))
    return BenchmarkTable(
        records=tuple(records), seq_len=seq_len, vocab_size=vocab_size,
        lf_names=lf_names, split=split,
    )


def save_benchmark(table: BenchmarkTable, path) -> None:
    with open(path, "w") as fh:
        header = {
            "seq_len": table.seq_len,
            "vocab_size": table.vocab_size,
            "lf_names": list(table.lf_names),
        }
        fh.write(json.dumps(header) + "\n")
        for record, tag in zip(table.records, table.split):
            fh.write(json.dumps({
                "id": record.id,
                "tokens": list(record.tokens),
                "gt": record.gt_accuracy,
                "lf": record.lf_values,
                "flops": record.flops,
                "split": tag,
            }) + "\n")


def make_split(table: BenchmarkTable, gt_fraction: float,
               mode: str = "by-index", seed: int = 0) -> BenchmarkTable:
    """Mark ceil(gt_fraction * |train|) training records as the finetune subset."""
    if not (0.0 < gt_fraction <= 1.0):
        raise ValueError(f"gt_fraction must lie in (0, 1], got {gt_fraction}")
    train_idx = table.train_indices()
    count = math.ceil(gt_fraction * len(train_idx))
    if mode == "by-index":
        chosen = train_idx[:count]
    elif mode == "random":
        rng = np.random.default_rng(seed)
        chosen = rng.choice(train_idx, size=count, replace=False)
    else:
        raise ValueError(f"unknown split mode {mode!r}")
    chosen = set(int(i) for i in chosen)
    mask = tuple(i in chosen for i in range(len(table.records)))
    return replace(table, finetune_mask=mask)


def restrict_lf(table: BenchmarkTable, lf_fraction: float,
                mode: str = "by-index", seed: int = 0) -> BenchmarkTable:
    """Keep LF values only on a fraction of the training split.

    Supports the proportion-of-proxy-data study; validation records keep
    their LF values untouched (they are never used as training targets).
    """
    if not (0.0 <= lf_fraction <= 1.0):
        raise ValueError(f"lf_fraction must lie in [0, 1], got {lf_fraction}")
    train_idx = table.train_indices()
    count = math.ceil(lf_fraction * len(train_idx))
    if mode == "by-index":
        keep = set(int(i) for i in train_idx[:count])
    elif mode == "random":
        rng = np.random.default_rng(seed)
        keep = set(int(i) for i in rng.choice(train_idx, size=count, replace=False))
    else:
        raise ValueError(f"unknown split mode {mode!r}")
    records = []
    for i, record in enumerate(table.records):
        if table.split[i] == TRAIN and i not in keep and record.lf_values:
            records.append(replace(record, lf_values={}))
        else:
            records.append(record)
    return replace(table, records=tuple(records))


def _minmax(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def gen_synthetic(seed: int, size: int, seq_len: int = 8,
                  vocab_size: int = 8) -> BenchmarkTable:
    """Generate a synthetic benchmark with five proxy columns.

    Ground truth is a smooth mixture-of-tanh function of the tokens.  Two
    proxies are accurate only inside one half of the space (even / odd first
    token), one is a noisy monotone transform of the ground truth, one is
    anti-correlated with it, and one is pure noise.
    """
    if size < 100:
        raise ValueError(f"size must be >= 100, got {size}")
    if vocab_size < 2:
        raise ValueError(f"vocab_size must be >= 2, got {vocab_size}")
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD5]))

    tokens = rng.integers(0, vocab_size, size=(size, seq_len))

    # Smooth landscape: mixture of tanh units over per-position token tables.
    n_units = 3
    mix = rng.uniform(0.5, 1.5, size=n_units)
    gt_raw = np.zeros(size)
    for k in range(n_units):
        table_k = rng.normal(0.0, 1.0, size=(seq_len, vocab_size))
        scores = table_k[np.arange(seq_len), tokens].sum(axis=1) / np.sqrt(seq_len)
        gt_raw += mix[k] * np.tanh(scores)
    gt = _minmax(gt_raw)
    scale = gt.std()

    region_a = tokens[:, 0] % 2 == 0

    proxy_a = np.where(
        region_a,
        gt + rng.normal(0.0, _REGIONAL_NOISE * scale / 0.2, size=size),
        rng.uniform(0.0, 1.0, size=size),
    )
    proxy_b = np.where(
        ~region_a,
        gt + rng.normal(0.0, _REGIONAL_NOISE * scale / 0.2, size=size),
        rng.uniform(0.0, 1.0, size=size),
    )
    proxy_global = gt ** 1.5 + rng.normal(0.0, _GLOBAL_NOISE, size=size)
    proxy_adverse = -gt + rng.normal(0.0, _ADVERSE_NOISE, size=size)
    proxy_noise = rng.uniform(0.0, 1.0, size=size)

    flops = _minmax((tokens + 1.0) @ rng.uniform(0.5, 1.5, size=seq_len))

    columns = {
        "proxy_a": _minmax(proxy_a),
        "proxy_b": _minmax(proxy_b),
        "proxy_global": _minmax(proxy_global),
        "proxy_adverse": _minmax(proxy_adverse),
        "proxy_noise": _minmax(proxy_noise),
    }

    records = []
    for i in range(size):
        records.append(ArchitectureRecord(
            id=f"syn-{i:06d}",
            tokens=tuple(int(t) for t in tokens[i]),
            gt_accuracy=float(gt[i]),
            lf_values={name: float(col[i]) for name, col in columns.items()},
            flops=float(flops[i]),
        ))
    half = size // 2
    split = tuple(TRAIN if i < half else VALIDATION for i in range(size))
    return BenchmarkTable(
        records=tuple(records), seq_len=seq_len, vocab_size=vocab_size,
        lf_names=tuple(SYNTHETIC_LF_NAMES), split=split,
    )
