import filecmp
import json
import os

import numpy as np
import pytest

from csxml import cli
from csxml.cli import RunConfig


def write_classify_inputs(tmp_path, n=400, seed=0):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    sick = (x1 + 0.2 * rng.normal(size=n)) > 0.4  # imbalanced
    csv_path = tmp_path / "data.csv"
    with open(csv_path, "w") as fh:
        fh.write("PC_HR,PC_GSR,label\n")
        for a, b, s in zip(x1, x2, sick):
            name = "moderate sickness" if s else "low sickness"
            fh.write(f"{float(a)!r},{float(b)!r},{name}\n")
    schema_path = tmp_path / "schema.txt"
    schema_path.write_text("PC_HR: continuous\nPC_GSR: continuous\n")
    return csv_path, schema_path


def write_regress_inputs(tmp_path, n=300, seed=0):
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    fms = np.clip(5 + 3 * np.sin(t / 25.0) + 0.1 * rng.normal(size=n), 0, 10)
    hr = fms * 2 + rng.normal(size=n)
    csv_path = tmp_path / "series.csv"
    with open(csv_path, "w") as fh:
        fh.write("PC_HR,label\n")
        for h, f in zip(hr, fms):
            fh.write(f"{float(h)!r},{float(f)!r}\n")
    schema_path = tmp_path / "schema.txt"
    schema_path.write_text("PC_HR: continuous\n")
    return csv_path, schema_path


def classify_config(tmp_path, out, **kw):
    csv_path, schema_path = write_classify_inputs(tmp_path)
    defaults = dict(dataset=str(csv_path), schema=str(schema_path),
                    provenance="physiological", task="classify",
                    models=("ebm", "dt", "lr"), out=str(out),
                    ebm_max_rounds=150, ebm_max_bins=32)
    defaults.update(kw)
    cfg = RunConfig(**defaults)
    cfg.validate()
    return cfg


def tree_bytes(root, skip=("timings.log",)):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            if f in skip:
                continue
            p = os.path.join(dirpath, f)
            out[os.path.relpath(p, root)] = open(p, "rb").read()
    return out


class TestPrep:
    def test_classify_oversamples_train_only(self, tmp_path):
        cfg = classify_config(tmp_path, tmp_path / "run")
        meta = cli.cmd_prep(cfg)
        after = meta["class_counts"]["train_after_oversample"]
        assert after[0] == after[1]
        before = meta["class_counts"]["train_before_oversample"]
        assert before[0] != before[1]
        # test split untouched
        y_test = np.load(tmp_path / "run" / "prep" / "test_y.npy")
        assert len(y_test) == 400 - int(0.7 * 400)

    def test_regress_no_oversample_targets_in_range(self, tmp_path):
        csv_path, schema_path = write_regress_inputs(tmp_path)
        cfg = RunConfig(dataset=str(csv_path), schema=str(schema_path),
                        task="regress", models=("lir",), window=5,
                        out=str(tmp_path / "run"))
        meta = cli.cmd_prep(cfg)
        assert meta["class_counts"] == {}
        assert meta["window"] == 5
        y = np.load(tmp_path / "run" / "prep" / "train_y.npy")
        assert y.min() >= 0.0 and y.max() <= 10.0

    def test_byte_identical_reruns(self, tmp_path):
        cfg_a = classify_config(tmp_path, tmp_path / "a")
        cfg_b = classify_config(tmp_path, tmp_path / "b")
        cli.cmd_prep(cfg_a)
        cli.cmd_prep(cfg_b)
        a, b = tree_bytes(tmp_path / "a"), tree_bytes(tmp_path / "b")
        assert a.keys() == b.keys() and all(a[k] == b[k] for k in a)


class TestTrainEvaluate:
    def test_three_model_files(self, tmp_path):
        cfg = classify_config(tmp_path, tmp_path / "run")
        cli.cmd_prep(cfg)
        paths = cli.cmd_train(cfg)
        assert sorted(paths) == ["dt", "ebm", "lr"]
        assert all(os.path.exists(p) for p in paths.values())

    def test_evaluate_metrics_shape(self, tmp_path):
        cfg = classify_config(tmp_path, tmp_path / "run")
        cli.cmd_prep(cfg)
        cli.cmd_train(cfg)
        result = cli.cmd_evaluate(cfg)
        for name in cfg.models:
            m = result["models"][name]
            assert {"accuracy", "precision", "recall", "f1", "auc"} <= set(m)
            assert os.path.exists(tmp_path / "run" / f"roc_{name}.csv")

    def test_evaluate_deterministic(self, tmp_path):
        cfg = classify_config(tmp_path, tmp_path / "run")
        cli.cmd_prep(cfg)
        cli.cmd_train(cfg)
        a = cli.cmd_evaluate(cfg)
        b = cli.cmd_evaluate(cfg)
        assert a == b

    def test_regress_pipeline(self, tmp_path):
        csv_path, schema_path = write_regress_inputs(tmp_path)
        cfg = RunConfig(dataset=str(csv_path), schema=str(schema_path),
                        task="regress", models=("ebm", "dt", "lir"), window=5,
                        out=str(tmp_path / "run"), ebm_max_rounds=100)
        cli.cmd_prep(cfg)
        cli.cmd_train(cfg)
        result = cli.cmd_evaluate(cfg)
        for name in cfg.models:
            m = result["models"][name]
            assert {"mse", "rmse", "mae", "r2", "clipped_to_fms_range"} <= set(m)


class TestExplainReport:
    def run_all(self, tmp_path, out="run"):
        cfg = classify_config(tmp_path, tmp_path / out)
        cli.cmd_prep(cfg)
        cli.cmd_train(cfg)
        cli.cmd_evaluate(cfg)
        cli.cmd_explain(cfg)
        cli.cmd_report(cfg)
        return cfg

    def test_outputs_exist(self, tmp_path):
        cfg = self.run_all(tmp_path)
        edir = tmp_path / "run" / "explain"
        for name in cfg.models:
            assert (edir / f"global_{name}.csv").exists()
        assert (edir / "ebm_shape_curves.csv").exists()
        locals_out = json.loads((edir / "local_ebm.json").read_text())
        assert set(locals_out) == {"TP", "TN", "FP", "FN"}
        assert (tmp_path / "run" / "report.txt").exists()

    def test_local_statuses_or_absent(self, tmp_path):
        self.run_all(tmp_path)
        locals_out = json.loads(
            (tmp_path / "run" / "explain" / "local_ebm.json").read_text())
        for status, entry in locals_out.items():
            if entry is not None:
                assert entry["status"] == status
                p = entry["class_probability_cybersickness"]
                q = entry["class_probability_no_cybersickness"]
                assert p + q == 1.0

    def test_sample_index_selector(self, tmp_path):
        cfg = classify_config(tmp_path, tmp_path / "run")
        cli.cmd_prep(cfg)
        cli.cmd_train(cfg)
        cli.cmd_explain(cfg, sample_index=0)
        locals_out = json.loads(
            (tmp_path / "run" / "explain" / "local_ebm.json").read_text())
        assert "index_0" in locals_out
        assert locals_out["index_0"]["status"] in ("TP", "TN", "FP", "FN")

    def test_report_requires_evaluate(self, tmp_path):
        cfg = classify_config(tmp_path, tmp_path / "run")
        cli.cmd_prep(cfg)
        cli.cmd_train(cfg)
        from csxml.errors import IncompleteRun
        with pytest.raises(IncompleteRun) as exc:
            cli.cmd_report(cfg)
        assert exc.value.stage == "evaluate"

    def test_reports_byte_identical(self, tmp_path):
        self.run_all(tmp_path, "a")
        self.run_all(tmp_path, "b")
        ra = (tmp_path / "a" / "report.txt").read_bytes()
        rb = (tmp_path / "b" / "report.txt").read_bytes()
        assert ra == rb


class TestMainEntry:
    def test_full_run_exit_zero(self, tmp_path, capsys):
        csv_path, schema_path = write_classify_inputs(tmp_path)
        rc = cli.main(["run", "--dataset", str(csv_path),
                       "--schema", str(schema_path),
                       "--provenance", "physiological",
                       "--models", "ebm,dt,lr",
                       "--ebm-max-rounds", "60", "--ebm-max-bins", "16",
                       "--out", str(tmp_path / "run")])
        assert rc == 0
        assert (tmp_path / "run" / "report.txt").exists()
        assert (tmp_path / "run" / "timings.log").exists()

    def test_validation_error_exit_1(self, tmp_path):
        csv_path, schema_path = write_classify_inputs(tmp_path)
        rc = cli.main(["train", "--dataset", str(csv_path),
                       "--schema", str(schema_path),
                       "--models", "lir", "--task", "classify",
                       "--out", str(tmp_path / "run")])
        assert rc == 1

    def test_data_error_exit_2(self, tmp_path):
        _, schema_path = write_classify_inputs(tmp_path)
        missing = tmp_path / "missing.csv"
        missing.write_text("wrong,header\n1,2\n")
        rc = cli.main(["prep", "--dataset", str(missing),
                       "--schema", str(schema_path),
                       "--out", str(tmp_path / "run")])
        assert rc == 2

    def test_profile_sets_reproduction_hypers(self, tmp_path):
        csv_path, schema_path = write_classify_inputs(tmp_path)
        args = cli.build_parser().parse_args(
            ["prep", "--profile", "repro-physiological",
             "--dataset", str(csv_path), "--schema", str(schema_path),
             "--out", str(tmp_path / "run")])
        cfg = cli.resolve_config(args)
        assert cfg.ebm_learning_rate == 0.001
        assert cfg.ebm_patience == 30
        assert cfg.dt_max_depth == 3
        assert cfg.provenance == "physiological"

    def test_flags_override_config_file(self, tmp_path):
        csv_path, schema_path = write_classify_inputs(tmp_path)
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"seed_split": 42, "dt_max_depth": 2}))
        args = cli.build_parser().parse_args(
            ["prep", "--config", str(cfg_file), "--dt-max-depth", "4",
             "--dataset", str(csv_path), "--schema", str(schema_path),
             "--out", str(tmp_path / "run")])
        cfg = cli.resolve_config(args)
        assert cfg.seed_split == 42 and cfg.dt_max_depth == 4

    def test_unknown_config_key_rejected(self, tmp_path):
        csv_path, schema_path = write_classify_inputs(tmp_path)
        cfg_file = tmp_path / "cfg.json"
        cfg_file.write_text(json.dumps({"learning": 1}))
        rc = cli.main(["prep", "--config", str(cfg_file),
                       "--dataset", str(csv_path), "--schema", str(schema_path),
                       "--out", str(tmp_path / "run")])
        assert rc == 1
