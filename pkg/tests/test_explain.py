import math

import numpy as np
import pytest

from csxml import cart, explain, gam_boost, linear
from csxml.errors import NonFinite, SchemaMismatch
from csxml.gam_boost import BinMap, EbmHyper, EbmModel

from conftest import make_dataset


def trained_ebm(rng, n=800):
    X = rng.normal(size=(n, 3))
    y = (X[:, 0] - 0.5 * X[:, 1] > 0).astype(float)
    ds = make_dataset(X, y)
    model = gam_boost.train_ebm(ds, EbmHyper(max_rounds=150, seed=3), "classification")
    return model, ds


class TestLogisticLink:
    def test_midpoint(self):
        assert explain.logistic_link(0.0) == 0.5

    def test_ln3_gives_three_quarters(self):
        assert explain.logistic_link(math.log(3.0)) == pytest.approx(0.75, abs=1e-15)

    def test_symmetry(self, rng):
        for x in rng.normal(scale=3, size=50):
            assert explain.logistic_link(x) + explain.logistic_link(-x) == pytest.approx(1.0, abs=1e-15)

    def test_strictly_increasing_in_unit_interval(self, rng):
        xs = np.sort(rng.normal(scale=5, size=30))
        ys = [explain.logistic_link(x) for x in xs]
        assert all(0.0 < y < 1.0 for y in ys)
        assert all(a < b for a, b in zip(ys, ys[1:]))

    def test_non_finite(self):
        with pytest.raises(NonFinite):
            explain.logistic_link(float("nan"))


class TestGlobalExplain:
    def test_zero_shapes_zero_mas(self, rng):
        bins = [BinMap(0, "continuous", cuts=np.array([0.0]))]
        model = EbmModel("classification", 0.0, [np.zeros(2)], bins, ["f0"],
                         ["continuous"], EbmHyper())
        ds = make_dataset(rng.normal(size=(50, 1)), rng.integers(0, 2, 50))
        ge = explain.global_explain(model, ds)
        assert ge.importances == [("f0", 0.0)]

    def test_alternating_shape_gives_mas_c(self):
        # 4 equally populated bins, scores +-c, other feature all zero
        c = 0.7
        X = np.column_stack([np.tile([0.0, 1.0, 2.0, 3.0], 25), np.zeros(100)])
        ds = make_dataset(X, np.zeros(100))
        bins = [BinMap(0, "continuous", cuts=np.array([0.5, 1.5, 2.5])),
                BinMap(1, "continuous", cuts=np.array([]))]
        shapes = [np.array([c, -c, c, -c]), np.zeros(1)]
        model = EbmModel("classification", 0.0, shapes, bins, ["f0", "f1"],
                         ["continuous", "continuous"], EbmHyper())
        ge = explain.global_explain(model, ds)
        assert dict(ge.importances) == {"f0": pytest.approx(c), "f1": 0.0}

    def test_mas_equals_mean_abs_local_contribution(self, rng):
        model, ds = trained_ebm(rng)
        ge = explain.global_explain(model, ds)
        terms, _ = gam_boost.decompose(model, ds.X)
        for f, name in enumerate(ds.feature_names):
            assert dict(ge.importances)[name] == pytest.approx(
                np.mean(np.abs(terms[:, f])), abs=1e-9)

    def test_rank_stable_under_row_duplication(self, rng):
        model, ds = trained_ebm(rng, n=400)
        dup = make_dataset(np.vstack([ds.X, ds.X]),
                           np.concatenate([ds.labels, ds.labels]))
        a = [n for n, _ in explain.global_explain(model, ds).importances]
        b = [n for n, _ in explain.global_explain(model, dup).importances]
        assert a == b

    def test_lr_importance_is_abs_coefficient(self, rng):
        X = rng.normal(size=(200, 2))
        y = (2 * X[:, 0] - 0.2 * X[:, 1] > 0).astype(float)
        ds = make_dataset(X, y)
        model = linear.train_logistic(ds, lam=0.1)
        ge = explain.global_explain(model, ds)
        assert ge.model_kind == "lr"
        assert ge.importances[0][0] == "f0"
        assert ge.importances[0][1] == pytest.approx(abs(model.weights[0]))

    def test_dt_importance_normalized(self, rng):
        X = rng.normal(size=(200, 3))
        y = (X[:, 1] > 0).astype(float)
        ds = make_dataset(X, y)
        tree = cart.train_tree(ds, 3, "classification")
        ge = explain.global_explain(tree, ds)
        total = sum(v for _, v in ge.importances)
        assert total == pytest.approx(1.0)
        assert ge.importances[0][0] == "f1"

    def test_schema_mismatch(self, rng):
        model, _ = trained_ebm(rng, n=100)
        wrong = make_dataset(rng.normal(size=(10, 2)), rng.integers(0, 2, 10))
        with pytest.raises(SchemaMismatch):
            explain.global_explain(model, wrong)


class TestLocalExplain:
    def test_zero_model_all_zero(self):
        bins = [BinMap(0, "continuous", cuts=np.array([0.0]))]
        model = EbmModel("classification", 0.0, [np.zeros(2)], bins, ["f0"],
                         ["continuous"], EbmHyper())
        le = explain.local_explain(model, [1.0], true_label=0)
        assert le.contributions == [("f0", 0.0)]
        assert le.probability == 0.5

    def test_probability_matches_prediction_bitwise(self, rng):
        model, ds = trained_ebm(rng)
        probs = gam_boost.predict_ebm(model, ds.X)
        for i in range(0, ds.n_rows, 37):
            le = explain.local_explain(model, ds.X[i], ds.labels[i], i)
            assert le.probability == probs[i]

    def test_summed_logits_identity_and_link(self, rng):
        model, ds = trained_ebm(rng, n=200)
        le = explain.local_explain(model, ds.X[0], ds.labels[0])
        total = model.intercept + np.asarray([v for _, v in le.contributions]).sum()
        assert le.summed_logits == total
        assert le.probability == explain.logistic_link(le.summed_logits)

    def test_class_probabilities_sum_to_one(self, rng):
        model, ds = trained_ebm(rng, n=200)
        for i in range(5):
            le = explain.local_explain(model, ds.X[i], ds.labels[i], i)
            p, q = le.class_probabilities
            assert p + q == 1.0

    def test_status_classification(self, rng):
        model, ds = trained_ebm(rng)
        probs = gam_boost.predict_ebm(model, ds.X)
        for i in range(20):
            le = explain.local_explain(model, ds.X[i], ds.labels[i], i)
            pred = 1 if probs[i] >= 0.5 else 0
            expected = {(1, 1): "TP", (0, 0): "TN", (1, 0): "FP", (0, 1): "FN"}
            assert le.status == expected[(pred, int(ds.labels[i]))]

    def test_ranked_sorted_by_magnitude(self, rng):
        model, ds = trained_ebm(rng, n=200)
        le = explain.local_explain(model, ds.X[0], ds.labels[0])
        mags = [abs(v) for _, v in le.ranked()]
        assert mags == sorted(mags, reverse=True)


class TestDensityCurve:
    def test_uniform_bins_equal_counts(self):
        ds = make_dataset(np.arange(1.0, 101.0).reshape(-1, 1), np.zeros(100))
        bm = gam_boost.build_bins(ds, 4)[0]
        counts = explain.density_curve(ds, 0, bm)
        assert list(counts) == [25, 25, 25, 25]

    def test_mass_conservation(self, rng):
        ds = make_dataset(rng.normal(size=(123, 1)), np.zeros(123))
        bm = gam_boost.build_bins(ds, 8)[0]
        assert explain.density_curve(ds, 0, bm).sum() == 123

    def test_constant_feature_single_bin(self):
        ds = make_dataset(np.full((40, 1), 3.0), np.zeros(40))
        bm = gam_boost.build_bins(ds, 8)[0]
        counts = explain.density_curve(ds, 0, bm)
        assert list(counts) == [40]

    def test_schema_mismatch(self, rng):
        ds = make_dataset(rng.normal(size=(10, 1)), np.zeros(10))
        bm = gam_boost.build_bins(ds, 4)[0]
        with pytest.raises(SchemaMismatch):
            explain.density_curve(ds, 1, bm)


class TestBeyondAdditiveLocals:
    def test_tree_decision_path(self, rng):
        X = rng.normal(size=(100, 2))
        y = (X[:, 0] > 0).astype(float)
        tree = cart.train_tree(make_dataset(X, y), 3, "classification")
        path, value = explain.local_explain_tree(tree, X[0])
        assert path and path[0][0] == "f0"

    def test_linear_terms_sum_to_score(self, rng):
        X = rng.normal(size=(50, 3))
        y = (X[:, 0] > 0).astype(float)
        ds = make_dataset(X, y)
        model = linear.train_logistic(ds, lam=0.1)
        terms, score = explain.local_explain_linear(model, X[0])
        assert score == pytest.approx(model.bias + sum(v for _, v in terms))
