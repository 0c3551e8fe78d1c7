"""Additive model trained by cyclic, feature-at-a-time gradient boosting.

The model is intercept + sum of per-feature shape functions over binned
inputs; classification passes the summed score through the logistic link.
Each boosting round visits every feature in schema order and fits a small
regression tree (at most `max_leaves` contiguous bin segments) to the
current loss gradients for that feature alone.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataio import Dataset, assert_train_only
from .errors import ArityMismatch, DegenerateTargets
from .linear import sigmoid

CLASSIFICATION = "classification"
REGRESSION = "regression"


@dataclass
class BinMap:
    """Discretization of one feature.

    Continuous features carry strictly increasing cut points (value <= cut
    falls left); categorical features carry their sorted observed codes.
    Out-of-range values clamp to the first/last bin.
    """

    feature: int
    kind: str
    cuts: np.ndarray | None = None
    categories: np.ndarray | None = None

    @property
    def n_bins(self):
        if self.kind == "categorical":
            return len(self.categories)
        return len(self.cuts) + 1

    def assign(self, values):
        if self.kind == "categorical":
            idx = np.searchsorted(self.categories, values)
            return np.clip(idx, 0, len(self.categories) - 1).astype(np.int32)
        return np.searchsorted(self.cuts, values, side="left").astype(np.int32)


@dataclass
class EbmHyper:
    learning_rate: float = 0.01
    max_rounds: int = 5000
    patience: int = 30
    val_fraction: float = 0.15
    max_bins: int = 256
    max_leaves: int = 3
    seed: int = 0
    interactions: int = 0

    def validate(self):
        if self.learning_rate <= 0 or self.max_rounds <= 0 or self.patience <= 0:
            raise ValueError("learning_rate, max_rounds, patience must be positive")
        if not 0.0 < self.val_fraction <= 0.5:
            raise ValueError("val_fraction must be in (0, 0.5]")
        if self.max_bins < 1 or self.max_leaves < 2:
            raise ValueError("max_bins >= 1 and max_leaves >= 2 required")
        if self.interactions:
            raise NotImplementedError("pairwise interaction terms are not supported")


@dataclass
class EbmModel:
    task: str
    intercept: float
    shapes: list  # per-feature np.ndarray of per-bin additive scores
    bins: list  # per-feature BinMap
    feature_names: list
    feature_kinds: list
    hyper: EbmHyper
    training_log: list = field(default_factory=list)  # per-epoch validation loss
    best_epoch: int = 0
    codes: dict = field(default_factory=dict)

    @property
    def n_features(self):
        return len(self.shapes)


def build_bins(train: Dataset, max_bins):
    """Equal-frequency bins per continuous feature, one bin per categorical code.

    Cut points sit midway between the values flanking each quantile
    boundary; duplicate cuts merge, so a constant column yields one bin.
    """
    assert_train_only(train, "build_bins")
    if train.n_rows == 0:
        raise ValueError("cannot bin an empty dataset")
    maps = []
    for f, kind in enumerate(train.feature_kinds()):
        col = train.X[:, f]
        if kind == "categorical":
            maps.append(BinMap(f, kind, categories=np.unique(col)))
            continue
        v = np.sort(col)
        n = len(v)
        k = min(max_bins, n)
        cuts = []
        for i in range(1, k):
            p = n * i // k
            if p <= 0 or p >= n:
                continue
            c = 0.5 * (v[p - 1] + v[p])
            if v[p - 1] < v[p] and (not cuts or c > cuts[-1]):
                cuts.append(c)
        maps.append(BinMap(f, kind, cuts=np.asarray(cuts)))
    return maps


def bin_matrix(X, bins):
    B = np.empty(X.shape, dtype=np.int32)
    for bm in bins:
        B[:, bm.feature] = bm.assign(X[:, bm.feature])
    return B


def _check_targets(y, task):
    if task == CLASSIFICATION:
        if (y == 1).sum() < 2 or (y == 0).sum() < 2:
            raise DegenerateTargets("need at least 2 samples per class")
    elif task == REGRESSION:
        if len(np.unique(y)) < 2:
            raise DegenerateTargets("need at least 2 distinct targets")
    else:
        raise ValueError(f"unknown task: {task}")


def _val_loss(y, score, task):
    if task == CLASSIFICATION:
        return float(np.mean(np.logaddexp(0.0, score) - y * score))
    return float(np.mean((y - score) ** 2))


def train_ebm(train: Dataset, hyper: EbmHyper, task) -> EbmModel:
    """Cyclic gradient boosting of per-feature shape functions.

    A seed-controlled validation slice of the training rows drives early
    stopping: training stops after `patience` epochs without improvement
    and the best epoch's shapes are restored. Shapes are then centered on
    the training distribution with the means folded into the intercept.
    """
    hyper.validate()
    assert_train_only(train, "train_ebm")
    y = train.labels.astype(np.float64)
    _check_targets(y, task)

    rng = np.random.default_rng(hyper.seed)
    n = train.n_rows
    perm = rng.permutation(n)
    n_val = max(1, int(np.floor(n * hyper.val_fraction)))
    val_idx, fit_idx = perm[:n_val], perm[n_val:]
    if len(fit_idx) == 0:
        raise DegenerateTargets("no rows left after validation carve")

    bins = build_bins(train, hyper.max_bins)
    B = bin_matrix(train.X, bins)
    n_features = train.n_features

    y_fit = y[fit_idx]
    if task == CLASSIFICATION:
        n_pos, n_neg = float((y_fit == 1).sum()), float((y_fit == 0).sum())
        if n_pos > 0 and n_neg > 0:
            intercept = float(np.log(n_pos / n_neg))
        else:
            p = (n_pos + 1.0) / (len(y_fit) + 2.0)
            intercept = float(np.log(p / (1.0 - p)))
    else:
        intercept = float(np.mean(y_fit))

    shapes = [np.zeros(bm.n_bins) for bm in bins]
    score = np.full(n, intercept)
    lr = hyper.learning_rate

    log = []
    best_loss = np.inf
    best_epoch = -1
    best_shapes = None
    stale = 0
    for epoch in range(hyper.max_rounds):
        for f in range(n_features):
            codes = B[fit_idx, f]
            if task == CLASSIFICATION:
                grad = y_fit - sigmoid(score[fit_idx])
            else:
                grad = y_fit - score[fit_idx]
            sums, counts, sq = kernels.bin_gradient_stats(codes, grad, bins[f].n_bins)
            update = lr * kernels.segment_updates(sums, counts, sq, hyper.max_leaves)
            shapes[f] += update
            score += update[B[:, f]]
        loss = _val_loss(y[val_idx], score[val_idx], task)
        log.append(loss)
        if loss < best_loss:
            best_loss = loss
            best_epoch = epoch
            best_shapes = [s.copy() for s in shapes]
            stale = 0
        else:
            stale += 1
            if stale >= hyper.patience:
                break

    if best_shapes is not None:
        shapes = best_shapes

    # center each shape on the training distribution; fold means into intercept
    for f in range(n_features):
        m = float(np.mean(shapes[f][B[:, f]]))
        shapes[f] = shapes[f] - m
        intercept += m

    return EbmModel(task, intercept, shapes, bins, list(train.feature_names),
                    train.feature_kinds(), hyper, log, best_epoch, dict(train.codes))


def decompose(model: EbmModel, X):
    """Per-feature additive terms and the summed pre-link score.

    The prediction and explanation paths both call this, so their sums share
    one floating-point expression order.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ArityMismatch(f"expected {model.n_features} features, got {X.shape[1]}")
    terms = np.empty(X.shape)
    for bm in model.bins:
        terms[:, bm.feature] = model.shapes[bm.feature][bm.assign(X[:, bm.feature])]
    score = model.intercept + terms.sum(axis=1)
    return terms, score


def predict_ebm(model: EbmModel, X):
    """Pre-link score (regression) or positive-class probability (classification)."""
    _, score = decompose(model, X)
    if model.task == CLASSIFICATION:
        return sigmoid(score)
    return score
