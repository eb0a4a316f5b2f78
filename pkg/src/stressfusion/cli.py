"""Command-line entry point: ``stressfusion {synth,train,evaluate,predict,timeline,crossval}``."""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

import numpy as np
import yaml

from . import synth as synth_mod
from .data.ingest import align, load_manifest_frames
from .data.schema import PHYSIOLOGY, read_manifest
from .data.split import SplitSpec, kfold, split_indices
from .exceptions import ConfigError
from .fusion.bundle import dump_json, load_bundle, save_bundle
from .pipeline import (
    MODES,
    Recipe,
    StageError,
    comparison_rows,
    evaluate_bundle,
    fit_recipe,
    normalized_for_bundle,
    rows_for_keys,
    stage,
    training_history,
)
from .timeline import (
    PersistencePolicy,
    apply_persistence,
    check_increasing,
    export_alerts,
    export_timeline,
    render_timeline,
    run_timeline,
)

logger = logging.getLogger("stressfusion")

DEFAULTS = {
    "manifest": None,
    "bundle": None,
    "out_dir": ".",
    "seed": 0,
    "mode": None,
    "epochs": 200,
    "lr": 0.01,
    "batch": 32,
    "split": 0.7,
    "k": 5,
    "min_run": 5,
    "with_tlx": False,
    "preset": "paper-shape",
    "rows": None,
    "subset": "test",
}


def _add_common(p, *names):
    opts = {
        "manifest": lambda: p.add_argument("--manifest", help="schema manifest (YAML/JSON)"),
        "bundle": lambda: p.add_argument("--bundle", help="model bundle directory"),
        "out_dir": lambda: p.add_argument("--out-dir", dest="out_dir", help="output directory"),
        "seed": lambda: p.add_argument("--seed", type=int),
        "mode": lambda: p.add_argument("--mode", choices=["early", "late", "both"]),
        "epochs": lambda: p.add_argument("--epochs", type=int),
        "lr": lambda: p.add_argument("--lr", type=float),
        "batch": lambda: p.add_argument("--batch", type=int),
        "split": lambda: p.add_argument("--split", type=float, help="train fraction"),
        "k": lambda: p.add_argument("--k", type=int, help="number of folds"),
        "min_run": lambda: p.add_argument("--min-run", dest="min_run", type=int),
        "with_tlx": lambda: p.add_argument("--with-tlx", dest="with_tlx", action="store_true", default=None),
    }
    p.add_argument("--config", help="structured config file; flags override its values")
    p.add_argument("-v", "--verbose", action="store_true")
    for n in names:
        opts[n]()


def build_parser():
    parser = argparse.ArgumentParser(prog="stressfusion", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic multimodal dataset")
    _add_common(p, "out_dir", "seed")
    p.add_argument("--preset", choices=sorted(synth_mod.PRESETS))
    p.add_argument("--rows", type=int)

    p = sub.add_parser("train", help="train encoders, fusion heads and optional TLX regressor")
    _add_common(p, "manifest", "bundle", "out_dir", "seed", "mode", "epochs", "lr", "batch", "split", "with_tlx")

    p = sub.add_parser("evaluate", help="evaluate a bundle")
    _add_common(p, "manifest", "bundle", "out_dir", "mode")
    p.add_argument("--subset", choices=["test", "all"], help="rows to evaluate (default: bundle's test split)")

    p = sub.add_parser("predict", help="per-record stress probabilities")
    _add_common(p, "manifest", "bundle", "out_dir", "mode")

    p = sub.add_parser("timeline", help="stress timeline, alerts and plot")
    _add_common(p, "manifest", "bundle", "out_dir", "mode", "min_run")

    p = sub.add_parser("crossval", help="k-fold cross-validation of the full recipe")
    _add_common(p, "manifest", "out_dir", "seed", "mode", "epochs", "lr", "batch", "k", "with_tlx")
    return parser


def resolve_config(args) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
        unknown = set(doc) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config field(s): {sorted(unknown)}")
        cfg.update(doc)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    cfg["command"] = args.command
    return cfg


def _modes(cfg, default=MODES):
    mode = cfg.get("mode")
    if mode in (None, "both"):
        return tuple(default)
    if mode not in MODES:
        raise ConfigError(f"mode must be early, late or both, got {mode!r}")
    return (mode,)


def _require(cfg, *keys):
    for key in keys:
        if not cfg.get(key):
            raise ConfigError(f"--{key.replace('_', '-')} is required")
    for key in keys:
        if key in ("manifest", "bundle") and not os.path.exists(cfg[key]):
            raise ConfigError(f"{key} path does not exist: {cfg[key]}")


def _recipe(cfg, modes):
    try:
        return Recipe(
            epochs=int(cfg["epochs"]),
            learning_rate=float(cfg["lr"]),
            batch_size=int(cfg["batch"]),
            seed=int(cfg["seed"]),
            modes=modes,
            with_tlx=bool(cfg["with_tlx"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_aligned(manifest_path, modalities=None):
    with stage("ingest"):
        manifest = read_manifest(manifest_path)
        frames = load_manifest_frames(manifest, modalities)
    with stage("align"):
        dataset, report = align(frames, manifest.labels_source, manifest.tlx_source)
    return dataset, report, frames


def _write_csv(path, rows, columns):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=columns)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in columns})


def _write_history(path, history):
    names = list(history)
    n = max(len(v) for v in history.values())
    rows = []
    for i in range(n):
        row = {"epoch": i + 1}
        row.update({k: repr(history[k][i]) if i < len(history[k]) else None for k in names})
        rows.append(row)
    _write_csv(path, rows, ["epoch"] + names)


def _write_reports(out_dir, reports):
    dump_json(reports, os.path.join(out_dir, "evaluation.json"))
    _write_csv(
        os.path.join(out_dir, "comparison.csv"),
        comparison_rows(reports),
        ["model", "accuracy", "precision", "recall", "f1", "auc"],
    )


def cmd_synth(cfg):
    cfg_obj = synth_mod.preset(cfg["preset"], seed=int(cfg["seed"]),
                               **({"rows": int(cfg["rows"])} if cfg.get("rows") else {}))
    with stage("synth"):
        path = synth_mod.write_synth(synth_mod.generate(cfg_obj), cfg["out_dir"])
    print(path)


def cmd_train(cfg):
    _require(cfg, "manifest")
    recipe = _recipe(cfg, _modes(cfg))
    with stage("config"):
        spec = SplitSpec(float(cfg["split"]), int(cfg["seed"]), stratified=True)
    out_dir = cfg["out_dir"]
    bundle_dir = cfg.get("bundle") or os.path.join(out_dir, "bundle")
    os.makedirs(out_dir, exist_ok=True)

    dataset, align_report, _ = _load_aligned(cfg["manifest"])
    with stage("split"):
        train_idx, test_idx = split_indices(dataset.labels, spec)
    bundle, data = fit_recipe(dataset, train_idx, recipe)
    bundle.split_keys = {
        "train": [str(k) for k in dataset.keys[train_idx]],
        "test": [str(k) for k in dataset.keys[test_idx]],
    }
    bundle.config["split"] = spec.train_fraction
    with stage("evaluate"):
        reports = evaluate_bundle(bundle, data.subset(test_idx))
    with stage("export"):
        save_bundle(bundle, bundle_dir)
        dump_json(align_report.to_dict(), os.path.join(out_dir, "alignment_report.json"))
        _write_history(os.path.join(out_dir, "history.csv"), training_history(bundle))
        _write_reports(out_dir, reports)
    for row in comparison_rows(reports):
        print(f"{row['model']:>6}: accuracy={row['accuracy']:.4f} f1={row['f1']:.4f}")
    if reports["tlx"]:
        print(f"   tlx: rmse={reports['tlx']['rmse_normalized']:.4f} (0-1), "
              f"{reports['tlx']['rmse_raw']:.3f} (0-100)")


def _bundle_and_data(cfg):
    _require(cfg, "manifest", "bundle")
    with stage("load-bundle"):
        bundle = load_bundle(cfg["bundle"])
    dataset, report, frames = _load_aligned(cfg["manifest"], list(bundle.encoders) + [PHYSIOLOGY])
    with stage("normalize"):
        data = normalized_for_bundle(bundle, dataset)
    return bundle, data, frames


def cmd_evaluate(cfg):
    bundle, data, _ = _bundle_and_data(cfg)
    modes = [m for m in _modes(cfg, bundle.modes)]
    missing = set(modes) - set(bundle.modes)
    if missing:
        raise StageError("config", ConfigError(f"bundle has no {sorted(missing)} head"))
    with stage("evaluate"):
        if cfg["subset"] == "test" and bundle.split_keys:
            idx = rows_for_keys(data, bundle.split_keys["test"])
            if len(idx) == 0:
                raise ValueError("none of the bundle's test keys are present in this data")
            data = data.subset(idx)
        reports = evaluate_bundle(bundle, data, modes)
    os.makedirs(cfg["out_dir"], exist_ok=True)
    with stage("export"):
        _write_reports(cfg["out_dir"], reports)
    for row in comparison_rows(reports):
        print(f"{row['model']:>6}: accuracy={row['accuracy']:.4f} f1={row['f1']:.4f}")


def _single_mode(cfg, bundle):
    mode = cfg.get("mode") or ("early" if "early" in bundle.modes else bundle.modes[0])
    if mode not in bundle.models:
        raise StageError("config", ConfigError(f"bundle has no {mode!r} head"))
    return mode


def cmd_predict(cfg):
    bundle, data, _ = _bundle_and_data(cfg)
    model = bundle.models[_single_mode(cfg, bundle)]
    with stage("predict"):
        proba = model.predict_proba(data.X)[:, 1]
        tlx = bundle.tlx.predict(data.X) if bundle.tlx is not None else None
    rows = [
        {
            "key": str(k),
            "probability": repr(float(p)),
            "label": int(p >= model.threshold),
            "tlx_score": None if tlx is None else repr(float(tlx[i])),
        }
        for i, (k, p) in enumerate(zip(data.keys, proba))
    ]
    os.makedirs(cfg["out_dir"], exist_ok=True)
    _write_csv(os.path.join(cfg["out_dir"], "predictions.csv"), rows, ["key", "probability", "label", "tlx_score"])


def cmd_timeline(cfg):
    bundle, data, frames = _bundle_and_data(cfg)
    model = bundle.models[_single_mode(cfg, bundle)]
    with stage("timeline"):
        for name, frame in frames.items():
            try:
                check_increasing([float(k) for k in frame.keys])
            except Exception as exc:
                raise type(exc)(f"{name}: {exc}") from None
        policy = PersistencePolicy(int(cfg["min_run"]))
        timeline = apply_persistence(run_timeline(model, bundle.tlx, data), policy)
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    with stage("export"):
        export_timeline(timeline, os.path.join(out, "timeline.csv"), "table")
        export_timeline(timeline, os.path.join(out, "timeline.json"), "structured")
        export_alerts(timeline, os.path.join(out, "alerts.csv"))
        if len(timeline):
            render_timeline(timeline, os.path.join(out, "timeline.svg"), title="Stress state over time")
    print(f"{len(timeline)} entries, {len(timeline.alerts)} alert span(s)")


def _aggregate(fold_reports):
    agg = {}
    for mode in fold_reports[0]["fusion"]:
        agg[mode] = {}
        for metric in ("accuracy", "precision", "recall", "f1"):
            vals = np.array([f["fusion"][mode]["metrics"][metric] for f in fold_reports])
            agg[mode][metric] = {"mean": float(vals.mean()), "std": float(vals.std(ddof=1)),
                                 "values": vals.tolist()}
    if all(f.get("tlx") for f in fold_reports):
        vals = np.array([f["tlx"]["rmse_normalized"] for f in fold_reports])
        agg["tlx"] = {"rmse_normalized": {"mean": float(vals.mean()), "std": float(vals.std(ddof=1)),
                                          "values": vals.tolist()}}
    return agg


def cmd_crossval(cfg):
    _require(cfg, "manifest")
    recipe = _recipe(cfg, _modes(cfg))
    dataset, _, _ = _load_aligned(cfg["manifest"])
    with stage("split"):
        folds = kfold(dataset, int(cfg["k"]), int(cfg["seed"]))
    out = cfg["out_dir"]
    os.makedirs(out, exist_ok=True)
    fold_reports = []
    for i, (tr, va) in enumerate(folds, start=1):
        logger.info("fold %d/%d", i, len(folds))
        bundle, data = fit_recipe(dataset, tr, recipe)
        with stage("evaluate"):
            rep = evaluate_bundle(bundle, data.subset(va))
        rep["fold"] = i
        rep["validation_keys"] = [str(k) for k in dataset.keys[va]]
        fold_reports.append(rep)
        dump_json(rep, os.path.join(out, f"fold_{i}.json"))
    aggregate = _aggregate(fold_reports)
    dump_json({"k": len(folds), "aggregate": aggregate}, os.path.join(out, "crossval_aggregate.json"))
    for mode, stats in aggregate.items():
        if mode in MODES:
            a = stats["accuracy"]
            print(f"{mode:>6}: accuracy {a['mean']:.4f} +/- {a['std']:.4f}")


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "predict": cmd_predict,
    "timeline": cmd_timeline,
    "crossval": cmd_crossval,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"stressfusion {args.command}: error [config]: {exc}", file=sys.stderr)
        return 2
    except StageError as exc:
        print(f"stressfusion {args.command}: error {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
