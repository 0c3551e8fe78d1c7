"""Logistic regression (cross-entropy + L2) and ordinary linear regression.

Both fit on standardized features; constant features are excluded from
standardization and get weight 0. Logistic training is full-batch gradient
descent with backtracking line search, deterministic from zero init.
"""

from dataclasses import dataclass, field

import numpy as np

from .dataio import Dataset, assert_train_only
from .errors import ArityMismatch, NonFinite, SingleClassDataset

LOGISTIC = "logistic"
LINEAR = "linear"


def sigmoid(z):
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class LinearModel:
    task: str  # "logistic" | "linear"
    weights: np.ndarray  # standardized-space coefficients
    bias: float
    mean: np.ndarray
    std: np.ndarray  # 1.0 for constant (excluded) features
    l2: float = 0.0
    feature_names: list = field(default_factory=list)
    loss_history: list = field(default_factory=list)

    @property
    def n_features(self):
        return len(self.weights)

    def original_coefficients(self):
        """(weights, bias) expressed in original feature units."""
        w = self.weights / self.std
        b = self.bias - float(np.dot(w, self.mean))
        return w, b


def _standardize(X):
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    constant = sd == 0.0
    sd = np.where(constant, 1.0, sd)
    return (X - mu) / sd, mu, sd, constant


def _loss_grad(Xs, y, w, b, lam):
    z = Xs @ w + b
    p = sigmoid(z)
    n = len(y)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z)) + 0.5 * lam * float(w @ w)
    gw = Xs.T @ (p - y) / n + lam * w
    gb = float(np.mean(p - y))
    return loss, gw, gb


def train_logistic(train: Dataset, lam=1.0, max_iters=1000, tolerance=1e-6):
    """Minimize mean cross-entropy + lam*||w||^2/2 (bias unpenalized)."""
    assert_train_only(train, "train_logistic")
    y = train.labels.astype(np.float64)
    if (y == 1).sum() == 0 or (y == 0).sum() == 0:
        raise SingleClassDataset("both classes must be present")
    Xs, mu, sd, constant = _standardize(train.X)
    n_features = train.n_features
    w = np.zeros(n_features)
    b = 0.0
    history = []
    loss, gw, gb = _loss_grad(Xs, y, w, b, lam)
    for _ in range(max_iters):
        if not np.isfinite(loss) or not np.all(np.isfinite(gw)):
            raise NonFinite("loss or gradient overflow")
        gw = np.where(constant, 0.0, gw)
        history.append(loss)
        gnorm = max(np.max(np.abs(gw)), abs(gb)) if n_features else abs(gb)
        if gnorm < tolerance:
            break
        step = 1.0
        g2 = float(gw @ gw) + gb * gb
        while True:
            w_new = w - step * gw
            b_new = b - step * gb
            loss_new, gw_new, gb_new = _loss_grad(Xs, y, w_new, b_new, lam)
            if loss_new <= loss - 1e-4 * step * g2 or step < 1e-12:
                break
            step *= 0.5
        if loss_new > loss:  # no descent possible at machine precision
            break
        w, b, loss, gw, gb = w_new, b_new, loss_new, gw_new, gb_new
    history.append(loss)
    return LinearModel(LOGISTIC, w, float(b), mu, sd, lam,
                       list(train.feature_names), history)


def train_linear(train: Dataset, ridge=1e-8):
    """Normal equations on standardized features with a tiny ridge."""
    assert_train_only(train, "train_linear")
    if train.n_rows == 0:
        raise NonFinite("empty training data")
    y = train.labels.astype(np.float64)
    Xs, mu, sd, constant = _standardize(train.X)
    Xs = np.where(constant, 0.0, Xs)
    k = train.n_features
    A = Xs.T @ Xs + ridge * np.eye(k)
    rhs = Xs.T @ (y - y.mean())
    w = np.linalg.solve(A, rhs) if k else np.zeros(0)
    w = np.where(constant, 0.0, w)
    b = float(y.mean())
    if not (np.all(np.isfinite(w)) and np.isfinite(b)):
        raise NonFinite("non-finite coefficients")
    return LinearModel(LINEAR, w, b, mu, sd, 0.0, list(train.feature_names))


def decompose_linear(model: LinearModel, X):
    """Per-feature terms w_i * x~_i and the summed pre-link score."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.n_features:
        raise ArityMismatch(f"expected {model.n_features} features, got {X.shape[1]}")
    terms = (X - model.mean) / model.std * model.weights
    score = model.bias + terms.sum(axis=1)
    return terms, score


def predict_linear(model: LinearModel, X):
    """Probability (logistic task) or predicted value (linear task)."""
    _, score = decompose_linear(model, X)
    if model.task == LOGISTIC:
        return sigmoid(score)
    return score
