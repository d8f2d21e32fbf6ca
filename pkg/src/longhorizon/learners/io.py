"""Versioned JSON persistence for fitted models."""

from __future__ import annotations

import json

import numpy as np

from ..errors import ConfigError
from .base import FittedClassifier, FittedRegressor
from .boosting import GbtBinaryModel, GbtRegressionModel
from .encoding import FeatureSchema
from .linear import LogisticModel, RidgeModel
from .neighbors import KnnModel
from .spec import LearnerSpec

__all__ = ["model_to_dict", "model_from_dict", "save_model", "load_model"]

FORMAT_VERSION = 1


def _payload_to_json(model) -> dict:
    if isinstance(model, tuple) and model[0] == "constant":
        return {"kind": "constant", "class_index": model[1]}
    if isinstance(model, tuple) and model[0] == "ovr":
        return {"kind": "ovr", "members": [_payload_to_json(m) for m in model[1]]}
    if isinstance(model, RidgeModel):
        return {"kind": "ridge", **model.params_to_json()}
    if isinstance(model, LogisticModel):
        return {"kind": "logistic", **model.params_to_json()}
    if isinstance(model, GbtRegressionModel):
        return {"kind": "gbt_regression", **model.params_to_json()}
    if isinstance(model, GbtBinaryModel):
        return {"kind": "gbt_binary", **model.params_to_json()}
    if isinstance(model, KnnModel):
        return {"kind": "knn", **model.params_to_json()}
    if isinstance(model, dict):
        return {"kind": "tree", "tree": model}
    raise ConfigError(f"cannot serialize model payload {type(model)!r}")


def _payload_from_json(payload: dict):
    kind = payload["kind"]
    if kind == "constant":
        return ("constant", payload["class_index"])
    if kind == "ovr":
        return ("ovr", [_payload_from_json(m) for m in payload["members"]])
    if kind == "ridge":
        return RidgeModel.params_from_json(payload)
    if kind == "logistic":
        return LogisticModel.params_from_json(payload)
    if kind == "gbt_regression":
        return GbtRegressionModel.params_from_json(payload)
    if kind == "gbt_binary":
        return GbtBinaryModel.params_from_json(payload)
    if kind == "knn":
        return KnnModel.params_from_json(payload)
    if kind == "tree":
        return payload["tree"]
    raise ConfigError(f"unknown model payload kind {kind!r}")


def model_to_dict(model) -> dict:
    doc = {
        "format_version": FORMAT_VERSION,
        "family": model.spec.family,
        "hyperparameters": dict(model.spec.hyperparameters),
        "seed": model.spec.seed,
        "feature_schema": model.feature_schema.to_json(),
        "parameters": _payload_to_json(model.model),
    }
    if isinstance(model, FittedClassifier):
        doc["model_type"] = "classifier"
        doc["labels"] = [int(c) for c in model.labels]
    else:
        doc["model_type"] = "regressor"
    return doc


def model_from_dict(doc: dict):
    if doc.get("format_version") != FORMAT_VERSION:
        raise ConfigError(
            f"unsupported model format_version {doc.get('format_version')!r}"
        )
    spec = LearnerSpec(
        family=doc["family"],
        hyperparameters=dict(doc.get("hyperparameters", {})),
        seed=int(doc.get("seed", 0)),
    )
    schema = FeatureSchema.from_json(doc["feature_schema"])
    payload = _payload_from_json(doc["parameters"])
    if doc["model_type"] == "classifier":
        return FittedClassifier(
            spec=spec,
            feature_schema=schema,
            labels=np.asarray(doc["labels"], dtype=np.int64),
            model=payload,
        )
    return FittedRegressor(spec=spec, feature_schema=schema, model=payload)


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
