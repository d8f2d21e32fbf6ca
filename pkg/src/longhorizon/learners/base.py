"""Fit/predict facade over the learner families."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..data import Table
from ..errors import ConfigError, SchemaError
from .boosting import (
    GbtBinaryModel,
    GbtRegressionModel,
    fit_gbt_binary,
    fit_gbt_regression,
)
from .encoding import FeatureSchema, encode, schema_from_table
from .linear import LogisticModel, RidgeModel, fit_logistic_binary, fit_ridge
from .neighbors import KnnModel, fit_knn
from .spec import LearnerSpec
from .tree import (
    fit_tree_classification,
    fit_tree_regression,
    tree_class_scores,
    tree_predict,
)

__all__ = ["FittedRegressor", "FittedClassifier", "fit_regressor", "fit_classifier", "predict", "predict_scores"]


@dataclass
class FittedRegressor:
    spec: LearnerSpec
    feature_schema: FeatureSchema
    model: object  # family-specific parameters


@dataclass
class FittedClassifier:
    spec: LearnerSpec
    feature_schema: FeatureSchema
    labels: np.ndarray  # sorted class ids retained at fit time
    model: object


def _check_fit_inputs(features: Table, targets, weights):
    targets = np.asarray(targets, dtype=np.float64)
    n = features.n_rows
    if n == 0:
        raise ConfigError("cannot fit on an empty dataset")
    if targets.shape != (n,):
        raise ConfigError(f"targets must have length {n}, got {targets.shape}")
    if not np.all(np.isfinite(targets)):
        raise ConfigError("targets contain non-finite values")
    if weights is None:
        weights = np.ones(n)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n,):
            raise ConfigError("weights must have one entry per row")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ConfigError("weights must be finite and nonnegative")
        if weights.sum() <= 0:
            raise ConfigError("weights sum to zero")
    return targets, weights


def fit_regressor(
    spec: LearnerSpec, features: Table, targets, weights=None
) -> FittedRegressor:
    """Fit a weighted regression model of the chosen family."""
    targets, weights = _check_fit_inputs(features, targets, weights)
    schema = schema_from_table(features)
    X = encode(features, schema)
    hp = spec.resolved()
    if spec.family == "ridge_linear":
        model = fit_ridge(X, targets, weights, hp["l2_penalty"])
    elif spec.family == "cart_tree":
        root, _, _ = fit_tree_regression(
            X, targets, weights, hp["depth"], hp["min_samples_leaf"]
        )
        model = root
    elif spec.family == "gradient_boosted_trees":
        model = fit_gbt_regression(
            X,
            targets,
            weights,
            hp["n_trees"],
            hp["depth"],
            hp["learning_rate"],
            hp["min_samples_leaf"],
        )
    elif spec.family == "knn":
        model = fit_knn(X, targets, weights, hp["k"])
    else:
        raise ConfigError(f"family {spec.family!r} does not support regression")
    return FittedRegressor(spec=spec, feature_schema=schema, model=model)


def fit_classifier(
    spec: LearnerSpec, features: Table, labels, weights=None
) -> FittedClassifier:
    """Fit a weighted classifier; classes with zero total weight are dropped."""
    labels = np.asarray(labels)
    targets, weights = _check_fit_inputs(features, labels.astype(np.float64), weights)
    labels = labels.astype(np.int64)
    schema = schema_from_table(features)
    X = encode(features, schema)
    hp = spec.resolved()

    all_classes = np.unique(labels)
    kept = []
    for c in all_classes:
        if weights[labels == c].sum() > 0:
            kept.append(int(c))
        else:
            warnings.warn(f"class {c} has zero total weight and was dropped")
    if not kept:
        raise ConfigError("all classes have zero total weight")
    keep_mask = np.isin(labels, kept)
    X, labels, weights = X[keep_mask], labels[keep_mask], weights[keep_mask]
    classes = np.asarray(kept, dtype=np.int64)
    index_of = {c: i for i, c in enumerate(kept)}
    label_index = np.asarray([index_of[c] for c in labels], dtype=np.int64)

    if classes.size == 1:
        model = ("constant", 0)
        return FittedClassifier(spec, schema, classes, model)

    if spec.family == "logistic":
        if classes.size == 2:
            model = fit_logistic_binary(
                X,
                (label_index == 1).astype(np.float64),
                weights,
                hp["l2_penalty"],
                hp["max_iter"],
            )
        else:
            model = (
                "ovr",
                [
                    fit_logistic_binary(
                        X,
                        (label_index == i).astype(np.float64),
                        weights,
                        hp["l2_penalty"],
                        hp["max_iter"],
                    )
                    for i in range(classes.size)
                ],
            )
    elif spec.family == "cart_tree":
        model = fit_tree_classification(
            X, label_index, weights, classes.size, hp["depth"], hp["min_samples_leaf"]
        )
    elif spec.family == "gradient_boosted_trees":
        if classes.size == 2:
            model = fit_gbt_binary(
                X,
                (label_index == 1).astype(np.float64),
                weights,
                hp["n_trees"],
                hp["depth"],
                hp["learning_rate"],
                hp["min_samples_leaf"],
            )
        else:
            model = (
                "ovr",
                [
                    fit_gbt_binary(
                        X,
                        (label_index == i).astype(np.float64),
                        weights,
                        hp["n_trees"],
                        hp["depth"],
                        hp["learning_rate"],
                        hp["min_samples_leaf"],
                    )
                    for i in range(classes.size)
                ],
            )
    elif spec.family == "knn":
        model = fit_knn(X, label_index, weights, hp["k"], n_classes=classes.size)
    else:
        raise ConfigError(f"family {spec.family!r} does not support classification")
    return FittedClassifier(spec, schema, classes, model)


def _scores_for(classifier: FittedClassifier, X: np.ndarray) -> np.ndarray:
    """(n, C) class scores; argmax with ties to the lower class index."""
    model = classifier.model
    n_classes = classifier.labels.size
    if isinstance(model, tuple) and model[0] == "constant":
        scores = np.zeros((X.shape[0], n_classes))
        scores[:, model[1]] = 1.0
        return scores
    if isinstance(model, tuple) and model[0] == "ovr":
        cols = [m.prob(X) for m in model[1]]
        return np.column_stack(cols)
    if isinstance(model, (LogisticModel, GbtBinaryModel)):
        p1 = model.prob(X)
        return np.column_stack([1.0 - p1, p1])
    if isinstance(model, KnnModel):
        return model.class_scores(X)
    if isinstance(model, dict):  # classification tree
        return tree_class_scores(model, X, n_classes)
    raise ConfigError(f"unsupported classifier payload {type(model)!r}")


def predict(model, features: Table) -> np.ndarray:
    """Predict targets (regressor) or class ids (classifier)."""
    X = encode(features, model.feature_schema)
    if isinstance(model, FittedRegressor):
        inner = model.model
        if isinstance(inner, (RidgeModel, GbtRegressionModel, KnnModel)):
            out = inner.predict(X)
        elif isinstance(inner, dict):
            out = tree_predict(inner, X)
        else:
            raise ConfigError(f"unsupported regressor payload {type(inner)!r}")
        if out.size and not np.all(np.isfinite(out)):
            raise SchemaError("model produced non-finite predictions")
        return out
    if isinstance(model, FittedClassifier):
        scores = _scores_for(model, X)
        return model.labels[np.argmax(scores, axis=1)]
    raise ConfigError(f"cannot predict with {type(model)!r}")


def predict_scores(classifier: FittedClassifier, features: Table) -> np.ndarray:
    """(n, C) class scores aligned with ``classifier.labels``."""
    X = encode(features, classifier.feature_schema)
    return _scores_for(classifier, X)
