"""Global and local explanations.

Global importance is the mean absolute score (MAS) of each additive
term over the training set; logistic/linear models rank by absolute
standardized coefficient and trees by normalized impurity decrease.
Local explanations decompose a single prediction into per-feature logits
whose sum passes through the logistic link.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .cart import DecisionTree, TreeNode, _route
from .dataio import Dataset
from .errors import NonFinite, SchemaMismatch
from .gam_boost import CLASSIFICATION, BinMap, EbmModel, decompose
from .linear import LOGISTIC, LinearModel, decompose_linear, sigmoid


def logistic_link(summed_logits):
    """1 / (1 + e^-x); strictly increasing, output in (0, 1).

    Shares the exact floating-point path of model prediction so local
    probabilities match predictions bitwise.
    """
    x = float(summed_logits)
    if not math.isfinite(x):
        raise NonFinite("summed logits must be finite")
    return float(sigmoid(np.asarray([x]))[0])


@dataclass
class FeatureDetail:
    """Plot-ready detail for one feature of an additive model."""

    name: str
    edges: list  # bin cut points (continuous) or category codes
    scores: list  # per-bin additive score
    density: list  # per-bin training-sample counts


@dataclass
class GlobalExplanation:
    model_kind: str
    importances: list  # (feature name, importance) sorted descending
    details: list = field(default_factory=list)  # FeatureDetail per feature (EBM)


@dataclass
class LocalExplanation:
    sample_index: int
    contributions: list  # (feature name, logit contribution), input order
    intercept: float
    summed_logits: float
    probability: float
    predicted_label: int
    true_label: int
    status: str  # TP | TN | FP | FN

    @property
    def class_probabilities(self):
        """(cybersickness, no cybersickness); sums to 1 exactly."""
        return self.probability, 1.0 - self.probability

    def ranked(self, top=15):
        return sorted(self.contributions, key=lambda c: -abs(c[1]))[:top]


def _sorted_importances(names, values):
    order = sorted(range(len(names)), key=lambda i: (-values[i], i))
    return [(names[i], float(values[i])) for i in order]


def density_curve(train: Dataset, feature, bin_map: BinMap):
    """Per-bin training-sample counts aligned with the feature's bins."""
    if feature >= train.n_features or feature != bin_map.feature:
        raise SchemaMismatch("feature index does not match the bin map")
    codes = bin_map.assign(train.X[:, feature])
    return np.bincount(codes, minlength=bin_map.n_bins)


def global_explain(model, train: Dataset) -> GlobalExplanation:
    """MAS ranking (EBM), |standardized coefficient| (LR/LIR), or normalized
    impurity decrease (DT)."""
    if isinstance(model, EbmModel):
        if train.n_features != model.n_features:
            raise SchemaMismatch("dataset arity does not match the model")
        terms, _ = decompose(model, train.X)
        mas = np.mean(np.abs(terms), axis=0)
        details = []
        for bm in model.bins:
            edges = bm.categories if bm.kind == "categorical" else bm.cuts
            details.append(FeatureDetail(
                model.feature_names[bm.feature],
                [float(e) for e in edges],
                [float(s) for s in model.shapes[bm.feature]],
                [int(c) for c in density_curve(train, bm.feature, bm)],
            ))
        return GlobalExplanation("ebm", _sorted_importances(model.feature_names, mas),
                                 details)
    if isinstance(model, LinearModel):
        if train.n_features != model.n_features:
            raise SchemaMismatch("dataset arity does not match the model")
        return GlobalExplanation(
            "lr" if model.task == LOGISTIC else "lir",
            _sorted_importances(model.feature_names, np.abs(model.weights)))
    if isinstance(model, DecisionTree):
        if train.n_features != model.n_features:
            raise SchemaMismatch("dataset arity does not match the model")
        drop = np.zeros(model.n_features)
        total = model.root.n_samples

        def walk(node: TreeNode):
            if node.is_leaf:
                return
            dec = (node.n_samples * node.impurity
                   - node.left.n_samples * node.left.impurity
                   - node.right.n_samples * node.right.impurity)
            drop[node.feature] += dec / total
            walk(node.left)
            walk(node.right)

        walk(model.root)
        if drop.sum() > 0:
            drop = drop / drop.sum()
        return GlobalExplanation("dt", _sorted_importances(model.feature_names, drop))
    raise SchemaMismatch(f"unsupported model type: {type(model).__name__}")


def _status(predicted, true):
    return {(1, 1): "TP", (0, 0): "TN", (1, 0): "FP", (0, 1): "FN"}[(predicted, true)]


def local_explain(model: EbmModel, sample, true_label, index=0) -> LocalExplanation:
    """Per-feature logit decomposition for one sample, through the link.

    The probability is the model prediction itself (same decomposition,
    same summation order), not a re-derivation.
    """
    terms, score = decompose(model, sample)
    total = float(score[0])
    probability = logistic_link(total) if model.task == CLASSIFICATION else total
    if model.task == CLASSIFICATION:
        predicted = 1 if probability >= 0.5 else 0
    else:
        predicted = int(round(total))
    true_label = int(true_label)
    status = _status(predicted, true_label) if model.task == CLASSIFICATION else ""
    return LocalExplanation(
        index,
        list(zip(model.feature_names, (float(t) for t in terms[0]))),
        model.intercept, total, probability, predicted, true_label, status)


def local_explain_tree(tree: DecisionTree, sample):
    """Decision-path trace for one sample (beyond the additive-model story)."""
    x = np.asarray(sample, dtype=np.float64)
    path = []
    node = tree.root
    while not node.is_leaf:
        went_left = x[node.feature] <= node.threshold
        path.append((tree.feature_names[node.feature], node.threshold,
                     "<=" if went_left else ">"))
        node = node.left if went_left else node.right
    leaf = _route(tree.root, x)
    return path, leaf.value


def local_explain_linear(model: LinearModel, sample):
    """Per-feature w_i * x~_i terms for one sample."""
    terms, score = decompose_linear(model, sample)
    return list(zip(model.feature_names, (float(t) for t in terms[0]))), float(score[0])
