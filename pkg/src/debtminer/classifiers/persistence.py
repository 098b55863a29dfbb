"""Flat-file model persistence.

Versioned plain-text format: a header naming the family, the training
params, and the label set, followed by named numeric blocks.  Floats are
written with ``repr`` so a reloaded model predicts bit-identically.
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import DataValidationError, MissingArtifactError
from .forest import RandomForest
from .logistic import MultinomialLogit
from .neural import NeuralNetClassifier, TunedNeuralNet

FORMAT = "debtminer-model"
VERSION = 1

_LR_ARRAYS = ("coef",)
_NET_ARRAYS = ("mean", "sd", "w1", "b1", "w2", "b2")
_FOREST_ARRAYS = (
    "features", "thresholds", "lefts", "rights", "leaves", "offsets",
    "importances",
)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _emit(lines, name, arr):
    arr = np.asarray(arr)
    kind = "int" if np.issubdtype(arr.dtype, np.integer) else "float"
    dims = " ".join(str(s) for s in arr.shape)
    lines.append(f"array {name} {kind} {dims}")
    lines.append(" ".join(_fmt(v) for v in arr.ravel()))


def save_model(model, path) -> None:
    """Write a fitted classifier to ``path``."""
    if isinstance(model, TunedNeuralNet):
        model = model.model
    lines = [f"{FORMAT} v{VERSION}"]
    if isinstance(model, MultinomialLogit):
        family = "multinomial-lr"
    elif isinstance(model, RandomForest):
        family = "random-forest"
    elif isinstance(model, NeuralNetClassifier):
        family = "neural-net"
    else:
        raise DataValidationError(f"cannot persist {type(model).__name__}")
    if not hasattr(model, "classes_"):
        raise DataValidationError("fit the model before saving")
    lines.append(f"family {family}")
    lines.append("params " + json.dumps(model.get_params(), sort_keys=True))
    lines.append("labels " + json.dumps(list(model.classes_)))

    if family == "multinomial-lr":
        _emit(lines, "coef", model.coef_)
    elif family == "neural-net":
        w1, b1, w2, b2 = model.weights_
        for name, arr in zip(_NET_ARRAYS, (model.mean_, model.sd_, w1, b1, w2, b2)):
            _emit(lines, name, arr)
    else:
        blocks = (
            model.features_, model.thresholds_, model.lefts_, model.rights_,
            model.leaves_, model.offsets_, model.feature_importances_,
        )
        for name, arr in zip(_FOREST_ARRAYS, blocks):
            _emit(lines, name, arr)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_arrays(lines, expected):
    arrays = {}
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if head[0] != "array":
            raise DataValidationError(f"unexpected line: {lines[i][:60]}")
        name, kind = head[1], head[2]
        shape = tuple(int(s) for s in head[3:])
        if kind == "int":
            flat = np.array([int(v) for v in lines[i + 1].split()], dtype=np.int64)
        else:
            flat = np.array([float(v) for v in lines[i + 1].split()], dtype=np.float64)
        arrays[name] = flat.reshape(shape)
        i += 2
    missing = [n for n in expected if n not in arrays]
    if missing:
        raise DataValidationError(f"model file missing blocks: {missing}")
    return arrays


def load_model(path):
    """Reload a model saved by :func:`save_model`."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except FileNotFoundError:
        raise MissingArtifactError(f"model file not found: {path}") from None
    if not lines or not lines[0].startswith(FORMAT):
        raise DataValidationError(f"{path}: not a model file")
    if lines[0] != f"{FORMAT} v{VERSION}":
        raise DataValidationError(f"{path}: unsupported version {lines[0]!r}")
    if len(lines) < 4:
        raise DataValidationError(f"{path}: truncated model file")
    family = lines[1].split(" ", 1)[1]
    params = json.loads(lines[2].split(" ", 1)[1])
    labels = tuple(json.loads(lines[3].split(" ", 1)[1]))
    body = [ln for ln in lines[4:] if ln]

    if family == "multinomial-lr":
        arrays = _parse_arrays(body, _LR_ARRAYS)
        model = MultinomialLogit(**params)
        model.classes_ = labels
        model.coef_ = arrays["coef"]
        return model
    if family == "neural-net":
        arrays = _parse_arrays(body, _NET_ARRAYS)
        model = NeuralNetClassifier(**params)
        model.classes_ = labels
        model.mean_ = arrays["mean"]
        model.sd_ = arrays["sd"]
        model.weights_ = [arrays[k] for k in ("w1", "b1", "w2", "b2")]
        return model
    if family == "random-forest":
        arrays = _parse_arrays(body, _FOREST_ARRAYS)
        model = RandomForest(**params)
        model.classes_ = labels
        model.features_ = arrays["features"]
        model.thresholds_ = arrays["thresholds"]
        model.lefts_ = arrays["lefts"]
        model.rights_ = arrays["rights"]
        model.leaves_ = arrays["leaves"]
        model.offsets_ = arrays["offsets"]
        model.feature_importances_ = arrays["importances"]
        model._inbag = np.zeros((len(arrays["offsets"]) - 1, 1), dtype=np.int64)
        model.oob_score_ = None
        return model
    raise DataValidationError(f"{path}: unknown family {family!r}")
