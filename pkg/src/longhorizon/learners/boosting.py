"""Gradient-boosted trees with exact splits.

Squared loss for regression; logistic loss with per-leaf Newton steps for
binary classification. Multi-class classification is handled one-vs-rest
by the facade layer.
"""

from __future__ import annotations

import numpy as np

from .tree import fit_tree_regression, tree_predict

__all__ = ["GbtRegressionModel", "GbtBinaryModel", "fit_gbt_regression", "fit_gbt_binary"]

_EPS = 1e-12


class GbtRegressionModel:
    def __init__(self, base_score, learning_rate, trees):
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.trees = list(trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        pred = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            pred += self.learning_rate * tree_predict(tree, X)
        return pred

    def params_to_json(self):
        return {
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "trees": self.trees,
        }

    @classmethod
    def params_from_json(cls, payload):
        return cls(payload["base_score"], payload["learning_rate"], payload["trees"])


def fit_gbt_regression(X, y, w, n_trees, depth, learning_rate, min_leaf=1):
    total = w.sum()
    base = float(np.sum(w * y) / total) if total > _EPS else float(np.mean(y))
    pred = np.full(X.shape[0], base)
    trees = []
    for _ in range(n_trees):
        residual = y - pred
        root, _, _ = fit_tree_regression(X, residual, w, depth, min_leaf)
        step = tree_predict(root, X)
        pred += learning_rate * step
        trees.append(root)
    return GbtRegressionModel(base, learning_rate, trees)


class GbtBinaryModel:
    """Boosted logistic scores for the positive class."""

    def __init__(self, base_score, learning_rate, trees):
        self.base_score = float(base_score)
        self.learning_rate = float(learning_rate)
        self.trees = list(trees)

    def decision(self, X: np.ndarray) -> np.ndarray:
        raw = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            raw += self.learning_rate * tree_predict(tree, X)
        return raw

    def prob(self, X: np.ndarray) -> np.ndarray:
        z = np.clip(self.decision(X), -35.0, 35.0)
        return 1.0 / (1.0 + np.exp(-z))

    def params_to_json(self):
        return {
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "trees": self.trees,
        }

    @classmethod
    def params_from_json(cls, payload):
        return cls(payload["base_score"], payload["learning_rate"], payload["trees"])


def fit_gbt_binary(X, y01, w, n_trees, depth, learning_rate, min_leaf=1):
    total = w.sum()
    mean = float(np.sum(w * y01) / total) if total > _EPS else float(np.mean(y01))
    mean = min(max(mean, 1e-7), 1.0 - 1e-7)
    base = float(np.log(mean / (1.0 - mean)))
    raw = np.full(X.shape[0], base)
    trees = []
    for _ in range(n_trees):
        prob = 1.0 / (1.0 + np.exp(-np.clip(raw, -35.0, 35.0)))
        gradient = y01 - prob
        root, leaf_of_row, leaves = fit_tree_regression(
            X, gradient, w, depth, min_leaf
        )
        # Newton leaf values: sum(w*g) / sum(w*p*(1-p)) per leaf
        hess = w * prob * (1.0 - prob)
        for leaf_id, leaf in enumerate(leaves):
            rows = leaf_of_row == leaf_id
            denom = hess[rows].sum()
            num = (w[rows] * gradient[rows]).sum()
            leaf["value"] = float(num / max(denom, _EPS))
        raw += learning_rate * tree_predict(root, X)
        trees.append(root)
    return GbtBinaryModel(base, learning_rate, trees)
