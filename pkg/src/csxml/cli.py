"""Pipeline orchestration: prep -> train -> evaluate -> explain -> report.

Each run writes into one output directory. All stages are deterministic
given (dataset file, config); wall-clock timings go to a separate
timings.log so reports stay byte-identical across identical runs.
"""

import argparse
import dataclasses
import json
import os
import sys
import time

import numpy as np

from . import __version__, cart, dataio, explain, gam_boost, linear, metrics, persist
from .errors import (
    ConfigError,
    CsxmlError,
    DataError,
    IncompleteRun,
    NoSuchSample,
    TrainingError,
)

CLASSIFY = "classify"
REGRESS = "regress"
ALL_MODELS = ("ebm", "dt", "lr", "lir")

# Hyperparameter presets matching the reported experimental setup for the
# two public datasets (boosting learning rate 0.001, patience 30, tree
# depth 3, L2-regularized logistic regression).
PROFILES = {
    "repro-physiological": {
        "provenance": "physiological", "split_fraction": 0.7,
        "ebm_learning_rate": 0.001, "ebm_patience": 30, "dt_max_depth": 3,
        "lr_l2": 1.0,
    },
    "repro-gameplay": {
        "provenance": "gameplay", "split_fraction": 0.7,
        "ebm_learning_rate": 0.001, "ebm_patience": 30, "dt_max_depth": 3,
        "lr_l2": 1.0,
    },
}


@dataclasses.dataclass
class RunConfig:
    dataset: str = ""
    schema: str = ""
    provenance: str = "synthetic"
    task: str = CLASSIFY
    models: tuple = ("ebm", "dt", "lr")
    label_column: str = "label"
    label_kind: str = ""  # default: "class" for classify, "fms" for regress
    split_fraction: float = 0.7
    seed_split: int = 0
    seed_oversample: int = 1
    seed_model: int = 2
    window: int = 5
    out: str = ""
    ebm_learning_rate: float = 0.01
    ebm_max_rounds: int = 5000
    ebm_patience: int = 30
    ebm_val_fraction: float = 0.15
    ebm_max_bins: int = 256
    ebm_max_leaves: int = 3
    ebm_interactions: int = 0
    dt_max_depth: int = 3
    lr_l2: float = 1.0
    lr_max_iters: int = 1000
    lr_tolerance: float = 1e-6
    lir_ridge: float = 1e-8

    def validate(self):
        if not self.dataset:
            raise ConfigError("--dataset is required")
        if not self.schema:
            raise ConfigError("--schema is required")
        if self.task not in (CLASSIFY, REGRESS):
            raise ConfigError(f"unknown task: {self.task}")
        if not self.models:
            raise ConfigError("model set must be non-empty")
        for m in self.models:
            if m not in ALL_MODELS:
                raise ConfigError(f"unknown model: {m}")
        if "lir" in self.models and self.task != REGRESS:
            raise ConfigError("lir is valid only with --task regress")
        if "lr" in self.models and self.task != CLASSIFY:
            raise ConfigError("lr is valid only with --task classify")
        if not 0.0 < self.split_fraction < 1.0:
            raise ConfigError("split fraction must be in (0, 1)")

    def resolved_label_kind(self):
        if self.label_kind:
            return self.label_kind
        return "class" if self.task == CLASSIFY else "fms"

    def ebm_hyper(self):
        return gam_boost.EbmHyper(
            self.ebm_learning_rate, self.ebm_max_rounds, self.ebm_patience,
            self.ebm_val_fraction, self.ebm_max_bins, self.ebm_max_leaves,
            self.seed_model, self.ebm_interactions)


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _read_json(path, stage):
    if not os.path.exists(path):
        raise IncompleteRun(stage)
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _prep_dir(cfg):
    return os.path.join(cfg.out, "prep")


def _load_prepared(cfg):
    pdir = _prep_dir(cfg)
    meta = _read_json(os.path.join(pdir, "meta.json"), "prep")
    schema = [dataio.FeatureColumn(n, k) for n, k in
              zip(meta["feature_names"], meta["feature_kinds"])]
    parts = {}
    for part in ("train", "test"):
        X = np.load(os.path.join(pdir, f"{part}_X.npy"))
        y = np.load(os.path.join(pdir, f"{part}_y.npy"))
        tags = np.full(len(y), part, dtype=object)
        parts[part] = dataio.Dataset(schema, X, y, meta["label_kind"],
                                     meta["provenance"], meta["codes"], tags)
    return parts["train"], parts["test"], meta


def cmd_prep(cfg: RunConfig):
    """Load, relabel, window (regression), split, and oversample (classification)."""
    schema = dataio.read_schema(cfg.schema)
    ds = dataio.load_dataset(cfg.dataset, schema, cfg.label_column,
                             cfg.resolved_label_kind(), cfg.provenance)
    n_loaded = ds.n_rows
    if cfg.task == REGRESS:
        ds = dataio.make_windows(ds, cfg.window).dataset
    train, test = dataio.split(ds, cfg.split_fraction, cfg.seed_split)
    class_counts = {}
    if cfg.task == CLASSIFY:
        before = [int((train.labels == c).sum()) for c in (0, 1)]
        train = dataio.oversample(train, cfg.seed_oversample)
        after = [int((train.labels == c).sum()) for c in (0, 1)]
        class_counts = {"train_before_oversample": before,
                        "train_after_oversample": after,
                        "test": [int((test.labels == c).sum()) for c in (0, 1)]}

    pdir = _prep_dir(cfg)
    os.makedirs(pdir, exist_ok=True)
    np.save(os.path.join(pdir, "train_X.npy"), train.X)
    np.save(os.path.join(pdir, "train_y.npy"), train.labels)
    np.save(os.path.join(pdir, "test_X.npy"), test.X)
    np.save(os.path.join(pdir, "test_y.npy"), test.labels)
    rng = np.random.default_rng(cfg.seed_split)
    perm = rng.permutation(ds.n_rows)
    n_train = int(np.floor(ds.n_rows * cfg.split_fraction))
    meta = {
        "feature_names": ds.feature_names,
        "feature_kinds": ds.feature_kinds(),
        "codes": ds.codes,
        "label_kind": ds.label_kind,
        "provenance": cfg.provenance,
        "task": cfg.task,
        "n_loaded_rows": n_loaded,
        "n_rejected_rows": ds.n_rejected_rows,
        "window": cfg.window if cfg.task == REGRESS else None,
        "seeds": {"split": cfg.seed_split, "oversample": cfg.seed_oversample,
                  "model": cfg.seed_model},
        "split_fraction": cfg.split_fraction,
        "train_row_indices": [int(i) for i in perm[:n_train]],
        "test_row_indices": [int(i) for i in perm[n_train:]],
        "class_counts": class_counts,
    }
    _write_json(os.path.join(pdir, "meta.json"), meta)
    return meta


def cmd_train(cfg: RunConfig):
    """Train every requested model on the prepared training split."""
    train, _, _ = _load_prepared(cfg)
    mdir = os.path.join(cfg.out, "models")
    os.makedirs(mdir, exist_ok=True)
    task = (gam_boost.CLASSIFICATION if cfg.task == CLASSIFY
            else gam_boost.REGRESSION)
    paths = {}
    for name in cfg.models:
        if name == "ebm":
            model = gam_boost.train_ebm(train, cfg.ebm_hyper(), task)
        elif name == "dt":
            model = cart.train_tree(train, cfg.dt_max_depth, task)
        elif name == "lr":
            model = linear.train_logistic(train, cfg.lr_l2, cfg.lr_max_iters,
                                          cfg.lr_tolerance)
        else:  # lir
            model = linear.train_linear(train, cfg.lir_ridge)
        path = os.path.join(mdir, f"{name}.json")
        persist.save_model(model, path)
        paths[name] = path
    return paths


def _model_scores(name, model, X):
    if name == "ebm":
        return gam_boost.predict_ebm(model, X)
    if name == "dt":
        return cart.predict_tree(model, X)
    return linear.predict_linear(model, X)


def cmd_evaluate(cfg: RunConfig):
    """Metrics per model on the untouched test split; ROC for classification."""
    _, test, _ = _load_prepared(cfg)
    result = {"task": cfg.task, "models": {}}
    for name in cfg.models:
        model = persist.load_model(os.path.join(cfg.out, "models", f"{name}.json"))
        scores = _model_scores(name, model, test.X)
        if cfg.task == CLASSIFY:
            pred = (scores >= 0.5).astype(int)
            cm = metrics.confusion(pred, test.labels)
            entry = metrics.classification_metrics(cm)
            entry["confusion"] = {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn}
            roc = metrics.roc_auc(scores, test.labels)
            entry["auc"] = roc.auc
            roc_path = os.path.join(cfg.out, f"roc_{name}.csv")
            with open(roc_path, "w", encoding="utf-8") as fh:
                fh.write("fpr,tpr,threshold\n")
                for f, t, thr in zip(roc.fpr, roc.tpr, roc.thresholds):
                    fh.write(f"{f!r},{t!r},{thr!r}\n")
        else:
            entry = metrics.regression_metrics(scores, test.labels)
            clipped = metrics.regression_metrics(np.clip(scores, 0.0, 10.0),
                                                 test.labels)
            entry["clipped_to_fms_range"] = {k: v for k, v in clipped.items()
                                             if k != "degenerate"}
        result["models"][name] = entry
    _write_json(os.path.join(cfg.out, "evaluate.json"), result)
    return result


def _local_to_dict(le):
    prob_cs, prob_no = le.class_probabilities
    return {
        "sample_index": le.sample_index,
        "status": le.status,
        "true_label": le.true_label,
        "predicted_label": le.predicted_label,
        "intercept": le.intercept,
        "summed_logits": le.summed_logits,
        "class_probability_cybersickness": prob_cs,
        "class_probability_no_cybersickness": prob_no,
        "contributions": [{"feature": n, "logit": v} for n, v in le.ranked()],
    }


def cmd_explain(cfg: RunConfig, sample_index=None):
    """Global explanation per model; EBM local explanations for selected samples.

    Default selection mirrors the four classification outcomes: the first
    TP, TN, FP, and FN in test order (absent outcomes reported as null).
    """
    train, test, _ = _load_prepared(cfg)
    edir = os.path.join(cfg.out, "explain")
    os.makedirs(edir, exist_ok=True)
    for name in cfg.models:
        model = persist.load_model(os.path.join(cfg.out, "models", f"{name}.json"))
        ge = explain.global_explain(model, train)
        with open(os.path.join(edir, f"global_{name}.csv"), "w", encoding="utf-8") as fh:
            fh.write("feature,importance\n")
            for fname, imp in ge.importances:
                fh.write(f"{fname},{imp!r}\n")
        if name == "ebm":
            with open(os.path.join(edir, "ebm_shape_curves.csv"), "w",
                      encoding="utf-8") as fh:
                fh.write("feature,bin,edge,score,density\n")
                for det in ge.details:
                    edges = list(det.edges) + [""]
                    for b, (score, dens) in enumerate(zip(det.scores, det.density)):
                        edge = edges[b] if b < len(det.edges) else ""
                        fh.write(f"{det.name},{b},{edge},{score!r},{dens}\n")

    if "ebm" not in cfg.models or cfg.task != CLASSIFY:
        return
    model = persist.load_model(os.path.join(cfg.out, "models", "ebm.json"))
    locals_out = {}
    if sample_index is not None:
        if not 0 <= sample_index < test.n_rows:
            raise NoSuchSample(f"test sample index {sample_index} out of range")
        le = explain.local_explain(model, test.X[sample_index],
                                   test.labels[sample_index], sample_index)
        locals_out[f"index_{sample_index}"] = _local_to_dict(le)
    else:
        wanted = ["TP", "TN", "FP", "FN"]
        for i in range(test.n_rows):
            if not wanted:
                break
            le = explain.local_explain(model, test.X[i], test.labels[i], i)
            if le.status in wanted:
                wanted.remove(le.status)
                locals_out[le.status] = _local_to_dict(le)
        for status in ("TP", "TN", "FP", "FN"):
            locals_out.setdefault(status, None)
    _write_json(os.path.join(edir, "local_ebm.json"), locals_out)


def _fmt_table(headers, rows):
    widths = [max(len(str(h)), *(len(str(r[i])) for r in rows)) if rows else len(str(h))
              for i, h in enumerate(headers)]
    def line(cells):
        return "  ".join(str(c).ljust(w) for c, w in zip(cells, widths)).rstrip()
    return "\n".join([line(headers)] + [line(r) for r in rows])


def cmd_report(cfg: RunConfig):
    """Consolidate evaluate + explain outputs into one structured report."""
    meta = _read_json(os.path.join(_prep_dir(cfg), "meta.json"), "prep")
    ev = _read_json(os.path.join(cfg.out, "evaluate.json"), "evaluate")
    edir = os.path.join(cfg.out, "explain")
    if not os.path.isdir(edir):
        raise IncompleteRun("explain")

    lines = []
    lines.append("cybersickness run report")
    lines.append(f"toolkit version: {__version__}")
    lines.append("")
    lines.append("## configuration")
    for k, v in sorted(dataclasses.asdict(cfg).items()):
        if k == "out":  # implied by the report's own location
            continue
        lines.append(f"{k}: {v}")
    lines.append(f"seeds: {meta['seeds']}")
    lines.append(f"loaded rows: {meta['n_loaded_rows']} "
                 f"(rejected: {meta['n_rejected_rows']})")
    lines.append("split row indices: prep/meta.json "
                 "(train_row_indices / test_row_indices)")
    if meta["class_counts"]:
        lines.append(f"class counts: {meta['class_counts']}")
    lines.append("")
    lines.append("## metrics (untouched test split)")
    if ev["task"] == CLASSIFY:
        rows = []
        for name in cfg.models:
            m = ev["models"][name]
            rows.append([name.upper(), f"{100 * m['precision']:.2f}",
                         f"{100 * m['recall']:.2f}", f"{100 * m['f1']:.2f}",
                         f"{100 * m['accuracy']:.2f}", f"{m['auc']:.4f}"])
        lines.append(_fmt_table(
            ["model", "Precision%", "Recall%", "F1-Score%", "Acc.%", "AUC"], rows))
        lines.append("")
        lines.append("roc series: roc_<model>.csv (fpr, tpr, threshold)")
    else:
        rows = []
        for name in cfg.models:
            m = ev["models"][name]
            rows.append([name.upper(), f"{m['mse']:.4f}", f"{m['rmse']:.4f}",
                         f"{m['r2']:.4f}", f"{m['mae']:.4f}"])
        lines.append(_fmt_table(["model", "MSE", "RMSE", "R2", "MAE"], rows))
        lines.append("")
        lines.append("metrics use raw predictions; [0,10]-clipped variants are in "
                     "evaluate.json under clipped_to_fms_range")
    lines.append("")
    lines.append("## global explanations")
    for name in cfg.models:
        path = os.path.join(edir, f"global_{name}.csv")
        if not os.path.exists(path):
            raise IncompleteRun("explain")
        with open(path, encoding="utf-8") as fh:
            top = fh.read().strip().splitlines()[1:6]
        lines.append(f"{name.upper()} top features (see explain/global_{name}.csv):")
        for row in top:
            fname, imp = row.split(",")
            lines.append(f"  {fname}: {float(imp):.6g}")
    local_path = os.path.join(edir, "local_ebm.json")
    if os.path.exists(local_path):
        lines.append("")
        lines.append("## local explanations (EBM)")
        lines.append("glossary: per-sample values are class probabilities through "
                     "the logistic link; MAS refers only to the global "
                     "mean-absolute-score ranking")
        locals_out = _read_json(local_path, "explain")
        for status in ("TP", "TN", "FP", "FN"):
            entry = locals_out.get(status)
            if entry is None:
                if status in locals_out:
                    lines.append(f"{status}: absent (no such outcome in test split)")
                continue
            lines.append(
                f"{status}: sample {entry['sample_index']}, "
                f"p(cybersickness)={entry['class_probability_cybersickness']:.4f}, "
                f"p(no cybersickness)="
                f"{entry['class_probability_no_cybersickness']:.4f}")
            for c in entry["contributions"][:5]:
                lines.append(f"  {c['feature']}: {c['logit']:+.4f}")
    lines.append("")
    report = "\n".join(lines)
    with open(os.path.join(cfg.out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report)
    return report


STAGES = {"prep": cmd_prep, "train": cmd_train, "evaluate": cmd_evaluate,
          "explain": cmd_explain, "report": cmd_report}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="csxml",
        description="Interpretable cybersickness classification/regression pipeline")
    parser.add_argument("command",
                        choices=["prep", "train", "evaluate", "explain", "report", "run"])
    parser.add_argument("--dataset", help="input CSV file")
    parser.add_argument("--schema", help="schema file (name: kind per line)")
    parser.add_argument("--provenance",
                        choices=["physiological", "gameplay", "synthetic"])
    parser.add_argument("--task", choices=[CLASSIFY, REGRESS])
    parser.add_argument("--models", help="comma-separated subset of ebm,dt,lr,lir")
    parser.add_argument("--label-column")
    parser.add_argument("--label-kind", choices=["class", "binary", "fms"])
    parser.add_argument("--split-fraction", type=float)
    parser.add_argument("--seed-split", type=int)
    parser.add_argument("--seed-oversample", type=int)
    parser.add_argument("--seed-model", type=int)
    parser.add_argument("--window", type=int, help="regression window length")
    parser.add_argument("--out", help="run output directory "
                        "(default under $CSXML_OUT_ROOT)")
    parser.add_argument("--config", help="JSON config file (flags override it)")
    parser.add_argument("--profile", choices=sorted(PROFILES))
    parser.add_argument("--sample-index", type=int,
                        help="explain: local explanation for one test sample")
    for field in dataclasses.fields(RunConfig):
        if field.name.startswith(("ebm_", "dt_", "lr_", "lir_")):
            flag = "--" + field.name.replace("_", "-")
            parser.add_argument(flag, type=type(field.default))
    return parser


def resolve_config(args) -> RunConfig:
    """defaults < profile < config file < command-line flags"""
    values = {}
    if args.profile:
        values.update(PROFILES[args.profile])
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values.update(json.load(fh))
    for field in dataclasses.fields(RunConfig):
        v = getattr(args, field.name, None)
        if v is not None:
            values[field.name] = v
    if "models" in values and isinstance(values["models"], str):
        values["models"] = tuple(m.strip() for m in values["models"].split(",") if m.strip())
    elif "models" in values:
        values["models"] = tuple(values["models"])
    unknown = set(values) - {f.name for f in dataclasses.fields(RunConfig)}
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    cfg = RunConfig(**values)
    if not cfg.out:
        root = os.environ.get("CSXML_OUT_ROOT", "runs")
        cfg.out = os.path.join(root, "run")
    if cfg.task == REGRESS and cfg.models == ("ebm", "dt", "lr"):
        cfg.models = ("ebm", "dt", "lir")  # default model set per task
    cfg.validate()
    return cfg


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        os.makedirs(cfg.out, exist_ok=True)
        _write_json(os.path.join(cfg.out, "config.json"), dataclasses.asdict(cfg))
        stages = (["prep", "train", "evaluate", "explain", "report"]
                  if args.command == "run" else [args.command])
        timings = []
        for stage in stages:
            t0 = time.perf_counter()
            if stage == "explain":
                cmd_explain(cfg, args.sample_index)
            else:
                STAGES[stage](cfg)
            timings.append((stage, time.perf_counter() - t0))
            print(f"{stage}: done ({timings[-1][1]:.2f}s)")
        with open(os.path.join(cfg.out, "timings.log"), "a", encoding="utf-8") as fh:
            for stage, dt in timings:
                fh.write(f"{stage}\t{dt:.4f}\n")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except TrainingError as exc:
        print(f"training error: {exc}", file=sys.stderr)
        return 3
    except CsxmlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
