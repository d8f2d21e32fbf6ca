"""K-nearest-neighbor regression and classification (exact, brute force)."""

from __future__ import annotations

import numpy as np

__all__ = ["KnnModel", "fit_knn"]

_EPS = 1e-12


class KnnModel:
    def __init__(self, points, targets, weights, k, n_classes=None):
        self.points = np.asarray(points, dtype=np.float64)
        self.targets = np.asarray(targets, dtype=np.float64)
        self.weights = np.asarray(weights, dtype=np.float64)
        self.k = int(k)
        self.n_classes = n_classes

    def _neighbor_ids(self, X: np.ndarray) -> np.ndarray:
        k = min(self.k, self.points.shape[0])
        ids = np.empty((X.shape[0], k), dtype=np.int64)
        for i in range(X.shape[0]):
            d2 = np.sum((self.points - X[i]) ** 2, axis=1)
            # stable sort: distance ties resolve to the lower training row
            ids[i] = np.argsort(d2, kind="stable")[:k]
        return ids

    def predict(self, X: np.ndarray) -> np.ndarray:
        ids = self._neighbor_ids(X)
        w = self.weights[ids]
        t = self.targets[ids]
        totals = w.sum(axis=1)
        out = np.where(
            totals > _EPS,
            (w * t).sum(axis=1) / np.maximum(totals, _EPS),
            t.mean(axis=1),
        )
        return out

    def class_scores(self, X: np.ndarray) -> np.ndarray:
        ids = self._neighbor_ids(X)
        scores = np.zeros((X.shape[0], self.n_classes))
        for c in range(self.n_classes):
            scores[:, c] = np.sum(self.weights[ids] * (self.targets[ids] == c), axis=1)
        totals = scores.sum(axis=1, keepdims=True)
        uniform = np.full_like(scores, 1.0 / self.n_classes)
        return np.where(totals > _EPS, scores / np.maximum(totals, _EPS), uniform)

    def params_to_json(self):
        return {
            "points": self.points.tolist(),
            "targets": self.targets.tolist(),
            "weights": self.weights.tolist(),
            "k": self.k,
            "n_classes": self.n_classes,
        }

    @classmethod
    def params_from_json(cls, payload):
        return cls(
            payload["points"],
            payload["targets"],
            payload["weights"],
            payload["k"],
            payload.get("n_classes"),
        )


def fit_knn(X, targets, w, k, n_classes=None):
    return KnnModel(X, targets, w, k, n_classes=n_classes)
