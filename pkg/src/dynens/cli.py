"""Command-line entry point: data generation, training, analysis, search and
cross-run report aggregation.  Every command echoes its effective
configuration to `<output>.config.json` for reproducibility."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import gen_synthetic, load_benchmark, make_split, restrict_lf, save_benchmark
from .ensemble import DynamicEnsemblePredictor
from .metrics import diagnostics, kd
from .search import SearchConfig, run_search, topk_select
from .training import TrainConfig, train_baseline, train_dynamic


def _echo_config(output_path: str, command: str, params: dict) -> None:
    path = Path(str(output_path) + ".config.json")
    path.write_text(json.dumps(
        {"command": command, "version": __version__, "params": params},
        indent=2, default=str))


# -- gen-synthetic ----------------------------------------------------------

def _cmd_gen_synthetic(args) -> int:
    table = gen_synthetic(seed=args.seed, size=args.size,
                          seq_len=args.seq_len, vocab_size=args.vocab_size)
    save_benchmark(table, args.out)
    _echo_config(args.out, "gen-synthetic", {
        "seed": args.seed, "size": args.size,
        "seq_len": args.seq_len, "vocab_size": args.vocab_size,
        "out": args.out,
    })
    print(f"wrote {len(table)} records to {args.out}")
    return 0


# -- train ------------------------------------------------------------------

def _cmd_train(args) -> int:
    table = load_benchmark(args.data)
    table = make_split(table, args.gt_fraction, mode=args.split_mode,
                       seed=args.seed)
    if args.lf_fraction < 1.0:
        table = restrict_lf(table, args.lf_fraction, seed=args.seed)
    config = TrainConfig(
        margin=args.margin, learning_rate=args.lr,
        epochs_pretrain=args.epochs_pretrain, epochs_finetune=args.epochs_finetune,
        batch_size=args.batch_size, seed=args.seed, mode=args.mode)
    log: dict = {}
    if args.mode == "dynamic":
        model = train_dynamic(table, config, log=log)
        predict = model.ensemble_score_batch
    else:
        model = train_baseline(table, config, lf_name=args.lf_name, log=log)
        predict = model.predict_batch

    val_idx = table.validation_indices()
    val_kd = kd(predict(table.tokens_matrix(val_idx)), table.gt_array(val_idx))

    effective = dataclasses.asdict(config)
    effective.update({
        "data": args.data, "gt_fraction": args.gt_fraction,
        "lf_fraction": args.lf_fraction, "lf_name": args.lf_name,
        "split_mode": args.split_mode,
        "effective_batch_size": config.effective_batch_size(table),
        "init": "uniform(+-1/sqrt(fan_in)), zero biases, forget-gate bias 1",
        "mlp_nonlinearity": "relu",
    })
    report = {
        "mode": args.mode,
        "lf_name": args.lf_name,
        "gt_fraction": args.gt_fraction,
        "lf_fraction": args.lf_fraction,
        "seed": args.seed,
        "kd_validation": val_kd,
        "n_validation": int(len(val_idx)),
        "loss_curves": log,
        "config": effective,
    }
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2))
        _echo_config(args.report, "train", effective)
    if args.out_checkpoint:
        if args.mode == "dynamic":
            model.save(args.out_checkpoint)
        else:
            state = model.params.state_dict()
            state["kind"] = f"baseline-{args.mode}"
            Path(args.out_checkpoint).write_text(json.dumps(state))
    print(f"mode={args.mode} seed={args.seed} validation KD={val_kd:.4f}")
    return 0


# -- analyze ----------------------------------------------------------------

def _cmd_analyze(args) -> int:
    predictor = DynamicEnsemblePredictor.load(args.checkpoint)
    table = load_benchmark(args.data)
    report = diagnostics(predictor, table)
    Path(args.out).write_text(json.dumps(report, indent=2))
    csv_path = Path(args.out).with_suffix(".csv")
    with open(csv_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=[
            "lf_name", "kd_weighted_vs_gt", "kd_raw_vs_own_lf",
            "gate_weight_mean", "weighted_score_std"])
        writer.writeheader()
        writer.writerows(report["experts"])
    _echo_config(args.out, "analyze", {
        "checkpoint": args.checkpoint, "data": args.data, "out": args.out})
    print(f"ensemble validation KD={report['ensemble_kd_vs_gt']:.4f} "
          f"({csv_path} has per-expert rows)")
    return 0


# -- search -----------------------------------------------------------------

def _load_search_config(path: str | None, seed: int) -> SearchConfig:
    raw = json.loads(Path(path).read_text()) if path else {}
    train_raw = raw.pop("train", {})
    train_raw.setdefault("seed", seed)
    raw["train"] = TrainConfig(**train_raw)
    raw["seed"] = seed
    return SearchConfig(**raw)


def _cmd_search(args) -> int:
    table = load_benchmark(args.data)
    config = _load_search_config(args.config, args.seed)
    history = run_search(table, config, args.mode)
    history.to_csv(args.out)
    _echo_config(args.out, "search", {
        "data": args.data, "mode": args.mode, "seed": args.seed,
        "config": dataclasses.asdict(config),
    })
    print(f"mode={args.mode} queries={history.n_queries()} "
          f"best gt={history.best_gt:.4f} ({history.best_id})")
    return 0


# -- report -----------------------------------------------------------------

def _collect_reports(run_dirs) -> list:
    reports = []
    for run_dir in run_dirs:
        path = Path(run_dir)
        candidates = [path] if path.is_file() else sorted(path.glob("*.json"))
        for candidate in candidates:
            if candidate.name.endswith(".config.json"):
                continue
            try:
                data = json.loads(candidate.read_text())
            except (OSError, json.JSONDecodeError) as exc:
                print(f"warning: skipping {candidate}: {exc}", file=sys.stderr)
                continue
            if isinstance(data, dict) and "kd_validation" in data:
                reports.append(data)
            else:
                print(f"warning: skipping {candidate}: not a training report",
                      file=sys.stderr)
    return reports


def _cmd_report(args) -> int:
    reports = _collect_reports(args.run_dirs)
    if not reports:
        print("error: no usable training reports found", file=sys.stderr)
        return 1
    groups: dict = {}
    for report in reports:
        key = (report["mode"], report.get("lf_name") or "",
               report["gt_fraction"])
        groups.setdefault(key, []).append(report["kd_validation"])
    rows = []
    for (mode, lf_name, gt_fraction), values in sorted(groups.items()):
        arr = np.array(values)
        rows.append({
            "mode": mode, "lf_name": lf_name, "gt_fraction": gt_fraction,
            "seeds": len(values),
            "kd_mean": round(float(arr.mean()), 4),
            "kd_std": round(float(arr.std()), 4),
            "kd": f"{arr.mean():.4f} ({arr.std():.4f})",
        })
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    for row in rows:
        print(f"{row['mode']:<14} {row['lf_name']:<14} "
              f"gt={row['gt_fraction']:<6} n={row['seeds']} kd={row['kd']}")
    return 0


# -- dispatch ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dynens",
        description="Dynamic-ensemble performance prediction and search")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic benchmark")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--seq-len", type=int, default=8)
    p.add_argument("--vocab-size", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_synthetic)

    p = sub.add_parser("train", help="train a predictor")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", required=True,
                   choices=["dynamic", "vanilla", "single_lf", "uniform",
                            "simple_avg", "equal_weight"])
    p.add_argument("--lf-name", default=None, help="LF column for single_lf mode")
    p.add_argument("--gt-fraction", type=float, default=0.01)
    p.add_argument("--lf-fraction", type=float, default=1.0)
    p.add_argument("--split-mode", choices=["by-index", "random"],
                   default="by-index")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--margin", type=float, default=0.1)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs-pretrain", type=int, default=200)
    p.add_argument("--epochs-finetune", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--out-checkpoint", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("analyze", help="per-expert diagnostics of a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("search", help="run a budgeted architecture search")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", required=True,
                   choices=["dynamic", "vanilla-predictor", "random", "evolution"])
    p.add_argument("--config", default=None, help="search config JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("report", help="aggregate training reports across runs")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_report)
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
