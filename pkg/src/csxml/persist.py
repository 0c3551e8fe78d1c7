"""Versioned JSON persistence for trained models.

Floats serialize via Python's repr round-trip, so save -> load -> predict
is bit-identical.
"""

import dataclasses
import json

import numpy as np

from .cart import DecisionTree, TreeNode
from .errors import ConfigError
from .gam_boost import BinMap, EbmHyper, EbmModel
from .linear import LinearModel

FORMAT_VERSION = 1


def _arr(a):
    return [float(x) for x in a]


def _node_to_dict(node: TreeNode):
    d = {"depth": node.depth, "n_samples": node.n_samples,
         "impurity": node.impurity,
         "class_counts": _arr(node.class_counts) if node.class_counts is not None else None,
         "value": _arr(node.value) if isinstance(node.value, np.ndarray) else node.value,
         "info_gain": node.info_gain, "feature": node.feature,
         "threshold": node.threshold}
    if node.feature is not None:
        d["left"] = _node_to_dict(node.left)
        d["right"] = _node_to_dict(node.right)
    return d


def _node_from_dict(d):
    counts = np.asarray(d["class_counts"]) if d["class_counts"] is not None else None
    value = d["value"]
    if isinstance(value, list):
        value = np.asarray(value)
    node = TreeNode(d["depth"], d["n_samples"], d["impurity"], counts, value,
                    d["info_gain"], d["feature"], d["threshold"])
    if node.feature is not None:
        node.left = _node_from_dict(d["left"])
        node.right = _node_from_dict(d["right"])
    return node


def model_to_dict(model):
    if isinstance(model, EbmModel):
        return {
            "format_version": FORMAT_VERSION, "kind": "ebm",
            "task": model.task, "intercept": model.intercept,
            "shapes": [_arr(s) for s in model.shapes],
            "bins": [{"feature": b.feature, "kind": b.kind,
                      "cuts": _arr(b.cuts) if b.cuts is not None else None,
                      "categories": _arr(b.categories) if b.categories is not None else None}
                     for b in model.bins],
            "feature_names": model.feature_names,
            "feature_kinds": model.feature_kinds,
            "hyper": dataclasses.asdict(model.hyper),
            "training_log": model.training_log,
            "best_epoch": model.best_epoch,
            "codes": model.codes,
        }
    if isinstance(model, LinearModel):
        return {
            "format_version": FORMAT_VERSION, "kind": "linear",
            "task": model.task, "weights": _arr(model.weights),
            "bias": model.bias, "mean": _arr(model.mean), "std": _arr(model.std),
            "l2": model.l2, "feature_names": model.feature_names,
            "loss_history": model.loss_history,
        }
    if isinstance(model, DecisionTree):
        return {
            "format_version": FORMAT_VERSION, "kind": "tree",
            "task": model.task, "max_depth": model.max_depth,
            "feature_names": model.feature_names, "n_classes": model.n_classes,
            "codes": model.codes, "root": _node_to_dict(model.root),
        }
    raise ConfigError(f"cannot persist model type {type(model).__name__}")


def model_from_dict(d):
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported model format version: {version}")
    kind = d["kind"]
    if kind == "ebm":
        bins = [BinMap(b["feature"], b["kind"],
                       np.asarray(b["cuts"]) if b["cuts"] is not None else None,
                       np.asarray(b["categories"]) if b["categories"] is not None else None)
                for b in d["bins"]]
        return EbmModel(d["task"], d["intercept"],
                        [np.asarray(s) for s in d["shapes"]], bins,
                        d["feature_names"], d["feature_kinds"],
                        EbmHyper(**d["hyper"]), d["training_log"],
                        d["best_epoch"], d["codes"])
    if kind == "linear":
        return LinearModel(d["task"], np.asarray(d["weights"]), d["bias"],
                           np.asarray(d["mean"]), np.asarray(d["std"]), d["l2"],
                           d["feature_names"], d["loss_history"])
    if kind == "tree":
        return DecisionTree(d["task"], _node_from_dict(d["root"]), d["max_depth"],
                            d["feature_names"], d["n_classes"], d["codes"])
    raise ConfigError(f"unknown model kind: {kind}")


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
