"""Weighted ridge regression and logistic classification."""

from __future__ import annotations

import numpy as np

__all__ = ["RidgeModel", "LogisticModel", "fit_ridge", "fit_logistic_binary"]


def _normalize_weights(w: np.ndarray) -> np.ndarray:
    # Total-weight normalization keeps the penalized objective invariant to
    # rescaling all weights and makes row duplication equal weight doubling.
    return w / w.sum()


class RidgeModel:
    def __init__(self, intercept: float, coefficients: np.ndarray):
        self.intercept = float(intercept)
        self.coefficients = np.asarray(coefficients, dtype=np.float64)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.coefficients

    def params_to_json(self):
        return {
            "intercept": self.intercept,
            "coefficients": self.coefficients.tolist(),
        }

    @classmethod
    def params_from_json(cls, payload):
        return cls(payload["intercept"], np.asarray(payload["coefficients"]))


def fit_ridge(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, l2_penalty: float
) -> RidgeModel:
    """Minimize sum(w_i * (y_i - b0 - x_i'b)^2) / sum(w) + l2 * |b|^2.

    The intercept is unpenalized. With zero penalty the minimum-norm
    least-squares solution is used, which is deterministic even under
    collinearity.
    """
    n, p = X.shape
    w = _normalize_weights(np.asarray(w, dtype=np.float64))
    Z = np.hstack([np.ones((n, 1)), X])
    if l2_penalty == 0.0:
        sw = np.sqrt(w)
        beta, *_ = np.linalg.lstsq(Z * sw[:, None], y * sw, rcond=None)
    else:
        G = Z.T @ (Z * w[:, None])
        G[np.arange(1, p + 1), np.arange(1, p + 1)] += l2_penalty
        beta = np.linalg.solve(G, Z.T @ (w * y))
    return RidgeModel(beta[0], beta[1:])


class LogisticModel:
    """Binary logistic scores; stores the coefficient vector for class 1."""

    def __init__(self, intercept: float, coefficients: np.ndarray):
        self.intercept = float(intercept)
        self.coefficients = np.asarray(coefficients, dtype=np.float64)

    def decision(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.coefficients

    def prob(self, X: np.ndarray) -> np.ndarray:
        z = np.clip(self.decision(X), -35.0, 35.0)
        return 1.0 / (1.0 + np.exp(-z))

    def params_to_json(self):
        return {
            "intercept": self.intercept,
            "coefficients": self.coefficients.tolist(),
        }

    @classmethod
    def params_from_json(cls, payload):
        return cls(payload["intercept"], np.asarray(payload["coefficients"]))


def fit_logistic_binary(
    X: np.ndarray,
    y01: np.ndarray,
    w: np.ndarray,
    l2_penalty: float,
    max_iter: int = 100,
    tol: float = 1e-10,
) -> LogisticModel:
    """Newton (IRLS) fit of weighted logistic loss with an unpenalized intercept."""
    n, p = X.shape
    w = _normalize_weights(np.asarray(w, dtype=np.float64))
    Z = np.hstack([np.ones((n, 1)), X])
    beta = np.zeros(p + 1)
    pen = np.full(p + 1, l2_penalty)
    pen[0] = 0.0
    for _ in range(max_iter):
        z = np.clip(Z @ beta, -35.0, 35.0)
        prob = 1.0 / (1.0 + np.exp(-z))
        grad = Z.T @ (w * (prob - y01)) + pen * beta
        if np.max(np.abs(grad)) < tol:
            break
        curv = np.maximum(w * prob * (1.0 - prob), 1e-12 * w)
        H = Z.T @ (Z * curv[:, None])
        H[np.arange(p + 1), np.arange(p + 1)] += np.maximum(pen, 1e-12)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(H, grad, rcond=None)
        beta = beta - step
        if np.max(np.abs(step)) < tol:
            break
    return LogisticModel(beta[0], beta[1:])
