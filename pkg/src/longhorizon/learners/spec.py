"""Learner specifications, hyperparameter validation, and CV selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import Table, make_folds
from ..errors import ConfigError

FAMILIES = ("ridge_linear", "cart_tree", "gradient_boosted_trees", "knn", "logistic")

# Per-family hyperparameter names and defaults.
_DEFAULTS = {
    "ridge_linear": {"l2_penalty": 0.0},
    "logistic": {"l2_penalty": 1e-6, "max_iter": 100},
    "cart_tree": {"depth": 3, "min_samples_leaf": 1},
    "gradient_boosted_trees": {
        "n_trees": 100,
        "depth": 3,
        "learning_rate": 0.1,
        "min_samples_leaf": 1,
    },
    "knn": {"k": 5},
}


@dataclass(frozen=True)
class LearnerSpec:
    """A learner family plus validated hyperparameters and a seed."""

    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigError(
                f"unknown learner family {self.family!r}; choose from {FAMILIES}"
            )
        known = _DEFAULTS[self.family]
        for key in self.hyperparameters:
            if key not in known:
                raise ConfigError(
                    f"unknown hyperparameter {key!r} for family {self.family!r}"
                )
        hp = self.resolved()
        if self.family in ("ridge_linear", "logistic") and hp["l2_penalty"] < 0:
            raise ConfigError("l2_penalty must be >= 0")
        if self.family == "logistic" and hp["max_iter"] < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.family in ("cart_tree", "gradient_boosted_trees"):
            if hp["depth"] < 1:
                raise ConfigError("depth must be >= 1")
            if hp["min_samples_leaf"] < 1:
                raise ConfigError("min_samples_leaf must be >= 1")
        if self.family == "gradient_boosted_trees":
            if hp["n_trees"] < 1:
                raise ConfigError("n_trees must be >= 1")
            if not 0.0 < hp["learning_rate"] <= 1.0:
                raise ConfigError("learning_rate must be in (0, 1]")
        if self.family == "knn" and hp["k"] < 1:
            raise ConfigError("k must be >= 1")

    def resolved(self) -> dict:
        """Hyperparameters with family defaults filled in."""
        out = dict(_DEFAULTS[self.family])
        out.update(self.hyperparameters)
        return out

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "hyperparameters": dict(self.hyperparameters),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "LearnerSpec":
        return cls(
            family=payload["family"],
            hyperparameters=dict(payload.get("hyperparameters", {})),
            seed=int(payload.get("seed", 0)),
        )


def _complexity_key(spec: LearnerSpec):
    """Sort key for tie-breaking toward the simpler model.

    Fewer trees, then smaller depth, then larger penalty, then smaller k.
    """
    hp = spec.resolved()
    return (
        hp.get("n_trees", 0),
        hp.get("depth", 0),
        -hp.get("l2_penalty", 0.0),
        hp.get("k", 0),
    )


def default_spec_grid(task: str = "regression", seed: int = 0):
    """The documented default hyperparameter grid for CV tuning."""
    linear_family = "ridge_linear" if task == "regression" else "logistic"
    grid = [
        LearnerSpec(linear_family, {"l2_penalty": pen}, seed=seed)
        for pen in (0.0, 0.01, 1.0)
    ]
    if task != "regression":
        # logistic with exactly zero penalty can diverge on separable data
        grid = [
            LearnerSpec("logistic", {"l2_penalty": pen}, seed=seed)
            for pen in (1e-6, 0.01, 1.0)
        ]
    grid += [LearnerSpec("cart_tree", {"depth": d}, seed=seed) for d in (2, 3, 4)]
    grid += [
        LearnerSpec(
            "gradient_boosted_trees",
            {"depth": d, "n_trees": t, "learning_rate": lr},
            seed=seed,
        )
        for d in (2, 3, 4)
        for t in (50, 200)
        for lr in (0.1, 0.3)
    ]
    return grid


def select_spec(
    candidates,
    features: Table,
    targets: np.ndarray,
    task: str = "regression",
    n_folds: int = 3,
    seed: int = 0,
    weights: np.ndarray | None = None,
):
    """Pick the candidate with minimal mean validation loss.

    Loss is MSE for regression and weighted misclassification rate for
    classification. Exact ties break toward the simpler model, then toward
    the earlier candidate.
    """
    from .base import fit_classifier, fit_regressor, predict

    candidates = list(candidates)
    if not candidates:
        raise ConfigError("no candidate specs given")
    targets = np.asarray(targets)
    n = features.n_rows
    if weights is None:
        weights = np.ones(n)
    folds = make_folds(n, n_folds, seed)
    losses = []
    for spec in candidates:
        fold_losses = []
        for f in range(n_folds):
            tr, va = folds.units_not_in(f), folds.units_in(f)
            if task == "regression":
                model = fit_regressor(
                    spec, features.take(tr), targets[tr], weights[tr]
                )
                pred = predict(model, features.take(va))
                fold_losses.append(float(np.mean((pred - targets[va]) ** 2)))
            else:
                model = fit_classifier(
                    spec, features.take(tr), targets[tr], weights[tr]
                )
                pred = predict(model, features.take(va))
                wrong = (pred != targets[va]).astype(float)
                wv = weights[va]
                denom = wv.sum() if wv.sum() > 0 else 1.0
                fold_losses.append(float(np.sum(wrong * wv) / denom))
        losses.append(float(np.mean(fold_losses)))
    order = sorted(
        range(len(candidates)),
        key=lambda i: (losses[i], _complexity_key(candidates[i]), i),
    )
    best = order[0]
    return candidates[best], dict(zip(range(len(candidates)), losses))
