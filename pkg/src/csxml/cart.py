"""Depth-limited CART trees for classification (Gini splits) and regression.

Candidate thresholds are midpoints between consecutive distinct sorted
values; classification minimizes weighted child Gini, regression weighted
child variance. Information gain (base-2 entropy) is recorded at every
node so split narratives can report both criteria.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataio import Dataset
from .errors import (
    ArityMismatch,
    EmptyDataset,
    EmptyNode,
    InvalidDistribution,
    PartitionMismatch,
)

CLASSIFICATION = "classification"
REGRESSION = "regression"


def entropy(probabilities):
    """Base-2 entropy with the 0*log2(0) = 0 convention."""
    p = np.asarray(probabilities, dtype=np.float64)
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise InvalidDistribution("probabilities must be >= 0 and sum to 1")
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def information_gain(parent_counts, children_counts):
    """Parent entropy minus the observation-weighted mean of child entropies."""
    parent = np.asarray(parent_counts, dtype=np.float64)
    children = [np.asarray(c, dtype=np.float64) for c in children_counts]
    if not np.array_equal(parent, sum(children)):
        raise PartitionMismatch("children must partition the parent's observations")
    n = parent.sum()
    if n <= 0:
        raise EmptyNode("parent has no observations")
    gain = entropy(parent / n)
    for c in children:
        nc = c.sum()
        if nc > 0:
            gain -= nc / n * entropy(c / nc)
    return max(gain, 0.0)


def gini(class_counts):
    """1 - sum of squared class proportions."""
    c = np.asarray(class_counts, dtype=np.float64)
    if np.any(c < 0) or c.sum() <= 0:
        raise EmptyNode("counts must be >= 0 with a positive total")
    p = c / c.sum()
    return float(1.0 - (p * p).sum())


@dataclass
class TreeNode:
    depth: int
    n_samples: int
    impurity: float  # Gini (classification) or variance (regression)
    class_counts: np.ndarray | None = None
    value: object = None  # class-probability vector or mean target
    info_gain: float | None = None  # recorded for reporting at internal nodes
    feature: int | None = None
    threshold: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self):
        return self.feature is None


@dataclass
class DecisionTree:
    task: str
    root: TreeNode
    max_depth: int
    feature_names: list
    n_classes: int = 2
    codes: dict = field(default_factory=dict)

    @property
    def n_features(self):
        return len(self.feature_names)


def _node_impurity(y, task, n_classes):
    if task == CLASSIFICATION:
        counts = np.bincount(y.astype(int), minlength=n_classes).astype(np.float64)
        return gini(counts), counts
    return float(np.var(y)), None


def _best_split(X, y, task, n_classes):
    """Scan every (feature, midpoint) candidate; lowest feature index, then
    lowest threshold, wins ties."""
    best = None  # (impurity, feature, threshold)
    for f in range(X.shape[1]):
        order = np.argsort(X[:, f], kind="stable")
        v = X[order, f]
        if task == CLASSIFICATION:
            thr, imp, found = kernels.gini_split_scan(v, y[order].astype(np.int64),
                                                      n_classes)
        else:
            thr, imp, found = kernels.variance_split_scan(v, y[order])
        if found and (best is None or imp < best[0] - 1e-12):
            best = (imp, f, thr)
    return best


def _grow(X, y, depth, max_depth, min_samples_split, task, n_classes):
    imp, counts = _node_impurity(y, task, n_classes)
    if task == CLASSIFICATION:
        value = counts / counts.sum()
    else:
        value = float(np.mean(y))
    node = TreeNode(depth, len(y), imp, counts, value)
    if depth >= max_depth or len(y) < min_samples_split or imp <= 0.0:
        return node
    best = _best_split(X, y, task, n_classes)
    if best is None or best[0] >= imp - 1e-12:  # zero-gain nodes become leaves
        return node
    _, f, thr = best
    mask = X[:, f] <= thr
    node.feature = f
    node.threshold = float(thr)
    if task == CLASSIFICATION:
        left_counts = np.bincount(y[mask].astype(int), minlength=n_classes)
        node.info_gain = information_gain(counts, [left_counts, counts - left_counts])
    node.left = _grow(X[mask], y[mask], depth + 1, max_depth,
                      min_samples_split, task, n_classes)
    node.right = _grow(X[~mask], y[~mask], depth + 1, max_depth,
                       min_samples_split, task, n_classes)
    return node


def train_tree(train: Dataset, max_depth=3, task=CLASSIFICATION,
               min_samples_split=2) -> DecisionTree:
    """Greedy recursive construction down to max_depth."""
    if train.n_rows == 0:
        raise EmptyDataset("cannot train on an empty dataset")
    y = train.labels.astype(np.float64)
    n_classes = 2 if task == CLASSIFICATION else 0
    root = _grow(train.X, y, 0, max_depth, min_samples_split, task, n_classes)
    return DecisionTree(task, root, max_depth, list(train.feature_names),
                        n_classes, dict(train.codes))


def _route(node: TreeNode, x):
    while not node.is_leaf:
        node = node.left if x[node.feature] <= node.threshold else node.right
    return node


def predict_tree(tree: DecisionTree, X):
    """Class-1 probability (classification) or mean target (regression).

    Classification probability ties resolve toward class 1 downstream
    (0.5 threshold predicts positive).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != tree.n_features:
        raise ArityMismatch(f"expected {tree.n_features} features, got {X.shape[1]}")
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        leaf = _route(tree.root, X[i])
        out[i] = leaf.value[1] if tree.task == CLASSIFICATION else leaf.value
    return out


def render_tree(tree: DecisionTree):
    """Indented plain-text rendering: feature, threshold, impurity, #Obs."""
    lines = []

    def fmt_counts(node):
        if node.class_counts is not None:
            return "(" + ", ".join(str(int(c)) for c in node.class_counts) + ")"
        return f"mean={node.value:.6g}"

    def walk(node, indent):
        pad = "  " * indent
        if node.is_leaf:
            lines.append(f"{pad}leaf impurity={node.impurity:.4f} "
                         f"#Obs={node.n_samples} {fmt_counts(node)}")
        else:
            gain = f" gain={node.info_gain:.4f}" if node.info_gain is not None else ""
            lines.append(f"{pad}{tree.feature_names[node.feature]} <= "
                         f"{node.threshold:.6g} impurity={node.impurity:.4f}{gain} "
                         f"#Obs={node.n_samples} {fmt_counts(node)}")
            walk(node.left, indent + 1)
            walk(node.right, indent + 1)

    walk(tree.root, 0)
    return "\n".join(lines)
