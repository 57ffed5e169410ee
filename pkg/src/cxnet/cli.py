"""Command-line entry point.

Subcommands: simulate, train, cv, features, params, sim1-grid, sim2-table.
Global flags: --seed, --config <key=value file>, --out <dir>, --smoke.
Outputs are CSV files plus a manifest capturing config, seed, and revision.
Exit codes: 0 ok, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys

import numpy as np

from . import __version__, harness
from .data import LabeledDataset, dump_dataset_csv
from .errors import CxnetError, InvalidInputError
from .features import FULL_MASK
from .harness import (
    CVPlan,
    SIM_TASKS,
    TASK_NAMES,
    UCI_TASKS,
    build_sim_task,
    cross_validate,
    load_uci_csv,
    make_task,
    method_config,
    run_sim1_grid,
    run_sim2_table,
)
from .model import build_model, count_params, format_param_table, save_checkpoint, train

SMOKE_MAX_EPOCHS = 15
SMOKE_REPEATS = 1


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def read_config_file(path) -> dict[str, str]:
    """Flat key=value lines; blank lines and # comments ignored."""
    if not os.path.exists(path):
        raise InvalidInputError(f"config file not found: {path}")
    out: dict[str, str] = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise InvalidInputError(f"config line is not key=value: {line!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


class Settings:
    """Merged view of defaults, config file, and CLI flags (flags win)."""

    def __init__(self, args):
        self.file = read_config_file(args.config) if args.config else {}
        self.seed = args.seed if args.seed is not None else int(self.file.get("seed", 0))
        self.smoke = args.smoke or self.file.get("smoke", "0") == "1"
        self.out_dir = args.out

    def get(self, key: str, default=None) -> str | None:
        return self.file.get(key, default)

    def get_int(self, key: str, default: int) -> int:
        return int(self.file.get(key, default))

    def get_float(self, key: str, default: float) -> float:
        return float(self.file.get(key, default))

    def model_overrides(self) -> dict:
        out: dict = {}
        for key in ("lr",):
            if key in self.file:
                out[key] = float(self.file[key])
        for key in ("batch_size", "max_epochs", "pad_to", "fc1", "seed"):
            if key in self.file:
                out[key if key != "fc1" else "fc1"] = int(self.file[key])
        if "fc1" in out:
            out["fc"] = (out.pop("fc1"), 32)
        if "dtype" in self.file:
            out["dtype"] = self.file["dtype"]
        if self.smoke:
            out.setdefault("max_epochs", SMOKE_MAX_EPOCHS)
        return out


def git_revision() -> str:
    try:
        result = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5
        )
        if result.returncode == 0:
            return result.stdout.strip()
    except OSError:
        pass
    return "unknown"


def write_manifest(settings: Settings, path, extra: dict) -> None:
    lines = [f"cxnet {__version__}", f"revision {git_revision()}"]
    lines.append(f"seed {settings.seed}")
    lines.append(f"smoke {int(settings.smoke)}")
    for key in sorted(extra):
        lines.append(f"{key} {extra[key]}")
    for key in sorted(settings.file):
        lines.append(f"config {key}={settings.file[key]}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def resolve_data_path(args) -> str:
    if getattr(args, "data", None):
        return args.data
    return os.environ.get("CXNET_UCI_CSV", os.path.join("data", "uci_epilepsy.csv"))


def stratified_subsample(dataset: LabeledDataset, fraction: float, rng) -> LabeledDataset:
    keep: list[int] = []
    for label in range(dataset.n_classes):
        idx = np.flatnonzero(dataset.labels == label)
        count = max(2, int(round(idx.size * fraction)))
        chosen = rng.choice(idx, size=min(count, idx.size), replace=False)
        keep.extend(sorted(chosen))
    return dataset.subset(np.array(sorted(keep)))


def load_task(args, settings: Settings) -> LabeledDataset:
    name = args.task.lower()
    if name in UCI_TASKS:
        dataset = load_uci_csv(resolve_data_path(args))
        task = make_task(dataset, name)
        if settings.smoke:
            rng = np.random.default_rng(np.random.SeedSequence([settings.seed, 424242]))
            task = stratified_subsample(task, 0.1, rng)
        return task
    if name in SIM_TASKS:
        per_class = settings.file.get("per_class")
        snr = settings.file.get("snr_weight")
        return build_sim_task(
            name,
            settings.seed,
            smoke=settings.smoke,
            per_class=int(per_class) if per_class else None,
            snr_weight=float(snr) if snr else None,
        )
    raise InvalidInputError(f"unknown task {args.task!r}; choose from {', '.join(TASK_NAMES)}")


def write_report_csv(report, path) -> None:
    lines = [
        f"# task={report.task} method={report.method} fingerprint={report.fingerprint}",
        "# std convention: population std over all repeat*fold accuracies",
        "repeat,fold,accuracy,best_epoch",
    ]
    repeats, k = report.accuracies.shape
    for r in range(repeats):
        for f in range(k):
            lines.append(f"{r},{f},{fmt(report.accuracies[r, f])},{report.best_epochs[r, f]}")
    lines.append(f"summary,mean,{fmt(report.mean)},")
    lines.append(f"summary,std,{fmt(report.std)},")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_confusion_csv(confusion, class_names, path) -> None:
    lines = ["true\\pred," + ",".join(class_names)]
    for name, row in zip(class_names, confusion):
        lines.append(name + "," + ",".join(str(int(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------


def cmd_simulate(args, settings: Settings) -> int:
    name = args.task.lower()
    if name not in SIM_TASKS:
        raise InvalidInputError(f"simulate handles {', '.join(SIM_TASKS)}; got {args.task!r}")
    dataset = load_task(args, settings)
    out = os.path.join(settings.out_dir, f"{name}.csv")
    dump_dataset_csv(dataset, out, config_note=f"task={name} seed={settings.seed}")
    write_manifest(settings, os.path.join(settings.out_dir, "manifest.txt"),
                   {"command": "simulate", "task": name, "samples": len(dataset)})
    print(f"wrote {out} ({len(dataset)} samples)")
    return 0


def cmd_train(args, settings: Settings) -> int:
    task = load_task(args, settings)
    overrides = settings.model_overrides()
    config = method_config(args.method, task, overrides)
    rng = np.random.default_rng(np.random.SeedSequence([settings.seed, 7]))
    order = rng.permutation(len(task))
    split = max(1, int(0.8 * len(task)))
    train_set, valid_set = task.subset(order[:split]), task.subset(order[split:])
    model = build_model(config, rng)
    history, best_epoch = train(model, train_set, valid_set, config, rng)
    hist_path = os.path.join(settings.out_dir, "history.csv")
    with open(hist_path, "w") as fh:
        fh.write("epoch,train_loss,valid_accuracy\n")
        for epoch, loss, acc in history:
            fh.write(f"{epoch},{fmt(loss)},{fmt(acc)}\n")
    ckpt_path = os.path.join(settings.out_dir, "model.ckpt")
    save_checkpoint(model, ckpt_path)
    write_manifest(settings, os.path.join(settings.out_dir, "manifest.txt"),
                   {"command": "train", "task": args.task, "method": args.method,
                    "best_epoch": best_epoch})
    print(f"best epoch {best_epoch}; wrote {hist_path} and {ckpt_path}")
    return 0


def cmd_cv(args, settings: Settings) -> int:
    task = load_task(args, settings)
    repeats = args.repeats or settings.get_int("repeats", CVPlan.repeats)
    if settings.smoke:
        repeats = SMOKE_REPEATS if args.repeats is None else repeats
    plan = CVPlan(k=settings.get_int("k", 5), repeats=repeats, seed=settings.seed)
    report = cross_validate(
        task, args.method, plan, task_name=args.task.lower(),
        model_overrides=settings.model_overrides(),
        feature_mask=settings.get_int("feature_mask", FULL_MASK),
    )
    write_report_csv(report, os.path.join(settings.out_dir, "report.csv"))
    write_confusion_csv(report.confusion, task.class_names,
                        os.path.join(settings.out_dir, "confusion.csv"))
    write_manifest(settings, os.path.join(settings.out_dir, "manifest.txt"),
                   {"command": "cv", "task": args.task, "method": args.method,
                    "repeats": plan.repeats, "k": plan.k})
    print(f"{args.task} {args.method}: mean={report.mean:.4f} std={report.std:.4f}")
    return 0


def cmd_features(args, settings: Settings) -> int:
    task = load_task(args, settings)
    repeats = SMOKE_REPEATS if settings.smoke else settings.get_int("repeats", 10)
    plan = CVPlan(k=5, repeats=repeats, seed=settings.seed)
    if args.masks:
        masks = [int(m) for m in args.masks.split(",")]
    else:
        masks = list(range(1, FULL_MASK + 1))
    rows = []
    for mask in masks:
        report = cross_validate(task, "features", plan,
                                task_name=args.task.lower(), feature_mask=mask)
        rows.append((mask, report.mean, report.std))
    rows.sort(key=lambda r: -r[1])
    out = os.path.join(settings.out_dir, "features.csv")
    with open(out, "w") as fh:
        fh.write("mask,mean_accuracy,std\n")
        for mask, mean, std in rows:
            fh.write(f"{mask},{fmt(mean)},{fmt(std)}\n")
    write_manifest(settings, os.path.join(settings.out_dir, "manifest.txt"),
                   {"command": "features", "task": args.task, "masks": len(masks)})
    best = rows[0]
    print(f"best mask {best[0]}: mean={best[1]:.4f} std={best[2]:.4f}; wrote {out}")
    return 0


def cmd_params(args, settings: Settings) -> int:
    rng = np.random.default_rng(0)
    hybrid = build_model(
        method_config("hybrid", _params_task(178), {"fc": (128, 32)}), rng
    )
    baseline = build_model(method_config("time", _params_task(178), {}), rng)
    _, hybrid_total = count_params(hybrid)
    _, baseline_total = count_params(baseline)
    text = "\n".join([
        "hybrid (half-spectrum input, 90 bins)",
        format_param_table(hybrid),
        "",
        "reference real-valued network (time input, 178 samples)",
        format_param_table(baseline),
        "",
        f"hybrid/baseline parameter ratio: {hybrid_total / baseline_total:.4f}",
    ])
    print(text)
    out = os.path.join(settings.out_dir, "params.txt")
    with open(out, "w") as fh:
        fh.write(text + "\n")
    write_manifest(settings, os.path.join(settings.out_dir, "manifest.txt"),
                   {"command": "params"})
    return 0


def _params_task(signal_len: int) -> LabeledDataset:
    from .dsp import Signal

    signals = [Signal(np.ones(signal_len), fs=173.61) for _ in range(6)]
    return LabeledDataset(signals, np.array([0, 1, 2, 0, 1, 2]), ["a", "b", "c"])


def cmd_sim1_grid(args, settings: Settings) -> int:
    if settings.smoke:
        beta1_values, var_values = [0.5], [0.5]
        per_class = settings.get_int("per_class", 40)
        repeats = SMOKE_REPEATS
    else:
        beta1_values = [round(0.1 * i, 1) for i in range(1, 10)]
        var_values = list(beta1_values)
        per_class = settings.get_int("per_class", harness.SIM1_PER_CLASS)
        repeats = settings.get_int("repeats", 10)
    methods = args.methods.split(",") if args.methods else ["hybrid", "time", "phase", "features"]
    plan = CVPlan(k=5, repeats=repeats, seed=settings.seed)
    grids = run_sim1_grid(beta1_values, var_values, per_class, methods, plan,
                          model_overrides=settings.model_overrides())
    for method, grid in grids.items():
        out = os.path.join(settings.out_dir, f"grid_{method.replace('/', '-')}.csv")
        with open(out, "w") as fh:
            fh.write("beta1\\noise_var," + ",".join(fmt(v) for v in var_values) + "\n")
            for b1, row in zip(beta1_values, grid):
                fh.write(fmt(b1) + "," + ",".join(fmt(v) for v in row) + "\n")
    write_manifest(settings, os.path.join(settings.out_dir, "manifest.txt"),
                   {"command": "sim1-grid", "methods": ",".join(methods),
                    "cells": len(beta1_values) * len(var_values), "per_class": per_class})
    print(f"wrote {len(grids)} grids to {settings.out_dir}")
    return 0


def cmd_sim2_table(args, settings: Settings) -> int:
    tasks = args.tasks.split(",") if args.tasks else list(SIM_TASKS[1:])
    methods = args.methods.split(",") if args.methods else [
        "features", "phase", "amplitude", "time", "re", "im", "reim", "hybrid"
    ]
    repeats = SMOKE_REPEATS if settings.smoke else settings.get_int("repeats", 10)
    plan = CVPlan(k=5, repeats=repeats, seed=settings.seed)
    per_class = settings.file.get("per_class")
    masks = settings.file.get("feature_masks")
    rows = run_sim2_table(
        tasks, methods, plan, smoke=settings.smoke,
        per_class=int(per_class) if per_class else None,
        model_overrides=settings.model_overrides(),
        feature_masks=[int(m) for m in masks.split(",")] if masks else ([FULL_MASK] if settings.smoke else None),
    )
    out = os.path.join(settings.out_dir, "table.csv")
    with open(out, "w") as fh:
        fh.write("task,method,mean_accuracy,std\n")
        for row in rows:
            fh.write(f"{row['task']},{row['method']},{fmt(row['mean'])},{fmt(row['std'])}\n")
    write_manifest(settings, os.path.join(settings.out_dir, "manifest.txt"),
                   {"command": "sim2-table", "tasks": ",".join(tasks)})
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cxnet",
        description="Spectrum-based signal classification toolkit",
    )
    parser.add_argument("--seed", type=int, default=None, help="overrides any config-file seed")
    parser.add_argument("--config", default=None, help="flat key=value settings file")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--smoke", action="store_true",
                        help="scaled-down run: counts/10, 1 repeat, 15 epochs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a simulated dataset as CSV")
    p.add_argument("--task", required=True)

    for name, help_text in (("train", "single-split training run"),
                            ("cv", "repeated k-fold cross-validation")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--task", required=True)
        p.add_argument("--method", default="hybrid")
        p.add_argument("--data", default=None, help="recorded-data CSV path")
        if name == "cv":
            p.add_argument("--repeats", type=int, default=None)

    p = sub.add_parser("features", help="feature-combination sweep")
    p.add_argument("--task", required=True)
    p.add_argument("--data", default=None)
    p.add_argument("--masks", default=None, help="comma-separated masks (default: all 127)")

    sub.add_parser("params", help="parameter accounting tables")

    p = sub.add_parser("sim1-grid", help="accuracy grid over the AR(1) lattice")
    p.add_argument("--methods", default=None)

    p = sub.add_parser("sim2-table", help="accuracy table for the ERP-style tasks")
    p.add_argument("--tasks", default=None)
    p.add_argument("--methods", default=None)

    return parser


COMMANDS = {
    "simulate": cmd_simulate,
    "train": cmd_train,
    "cv": cmd_cv,
    "features": cmd_features,
    "params": cmd_params,
    "sim1-grid": cmd_sim1_grid,
    "sim2-table": cmd_sim2_table,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = Settings(args)
        os.makedirs(settings.out_dir, exist_ok=True)
        return COMMANDS[args.command](args, settings)
    except CxnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
