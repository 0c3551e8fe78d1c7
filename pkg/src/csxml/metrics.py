"""Classification and regression metrics, plus ROC/AUC.

ROC threshold semantics: a sample is predicted positive when its score is
>= the threshold, so tied scores flip together.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyCounts, EmptyInput, LengthMismatch, SingleClassLabels


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def confusion(predicted, actual):
    predicted = np.asarray(predicted).astype(int)
    actual = np.asarray(actual).astype(int)
    if predicted.shape != actual.shape:
        raise LengthMismatch("predicted and actual lengths differ")
    return ConfusionCounts(
        tp=int(((predicted == 1) & (actual == 1)).sum()),
        fp=int(((predicted == 1) & (actual == 0)).sum()),
        tn=int(((predicted == 0) & (actual == 0)).sum()),
        fn=int(((predicted == 0) & (actual == 1)).sum()),
    )


def classification_metrics(c: ConfusionCounts):
    """Accuracy, precision, recall, F1 for the positive class.

    Zero denominators yield 0 with a degeneracy flag.
    """
    if c.total <= 0:
        raise EmptyCounts("no observations")
    degenerate = []
    accuracy = (c.tp + c.tn) / c.total
    if c.tp + c.fp > 0:
        precision = c.tp / (c.tp + c.fp)
    else:
        precision = 0.0
        degenerate.append("precision")
    if c.tp + c.fn > 0:
        recall = c.tp / (c.tp + c.fn)
    else:
        recall = 0.0
        degenerate.append("recall")
    if precision + recall > 0:
        f1 = 2 * precision * recall / (precision + recall)
    else:
        f1 = 0.0
        degenerate.append("f1")
    return {"accuracy": accuracy, "precision": precision, "recall": recall,
            "f1": f1, "degenerate": degenerate}


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float


def roc_auc(scores, labels) -> RocCurve:
    """ROC by sweeping distinct scores (descending) plus sentinels; AUC by
    trapezoidal integration."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(int)
    if scores.shape != labels.shape:
        raise LengthMismatch("scores and labels lengths differ")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise SingleClassLabels("both classes must be present")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    # group tied scores: cumulative counts at the last index of each distinct score
    distinct = np.flatnonzero(np.diff(s) != 0)
    ends = np.concatenate([distinct, [len(s) - 1]])
    cum_tp = np.cumsum(y == 1)[ends]
    cum_fp = np.cumsum(y == 0)[ends]
    tpr = np.concatenate([[0.0], cum_tp / n_pos])
    fpr = np.concatenate([[0.0], cum_fp / n_neg])
    thresholds = np.concatenate([[np.inf], s[ends]])
    trapezoid = getattr(np, "trapezoid", None) or np.trapz
    auc = float(trapezoid(tpr, fpr))
    return RocCurve(fpr, tpr, thresholds, auc)


def regression_metrics(predictions, targets):
    """MSE, RMSE, MAE, R^2; constant targets flag R^2 as undefined."""
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise LengthMismatch("predictions and targets lengths differ")
    if p.size == 0:
        raise EmptyInput("empty input")
    resid = t - p
    mse = float(np.mean(resid ** 2))
    out = {"mse": mse, "rmse": float(np.sqrt(mse)),
           "mae": float(np.mean(np.abs(resid))), "degenerate": []}
    ss_tot = float(((t - t.mean()) ** 2).sum())
    if ss_tot == 0.0:
        out["r2"] = float("nan")
        out["degenerate"].append("r2")
    else:
        out["r2"] = 1.0 - float((resid ** 2).sum()) / ss_tot
    return out
