"""Off-policy value estimation.

Horvitz-Thompson (unnormalized), Hajek (normalized), and doubly-robust
estimators with cross-fitted outcome models, percentile-bootstrap
confidence intervals, and IPW ATE/ATT estimation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import ExperimentalDataset, Table, make_folds
from .errors import ConfigError, DataError, NoOverlapError, PositivityError
from .learners import LearnerSpec, fit_regressor, predict
from .seeds import derive_seed

__all__ = [
    "PolicySnapshot",
    "ValueEstimate",
    "CrossFitOutcomeModel",
    "value_ht",
    "value_hajek",
    "value_dr",
    "fit_crossfit_outcome_model",
    "bootstrap_ci",
    "estimate_ate_att",
]

ROW_SUM_TOL = 1e-9


@dataclass
class PolicySnapshot:
    """A policy evaluated on a dataset: per-unit action probabilities.

    Deterministic policies are one-hot rows; there is no special-casing
    in the estimators.
    """

    kind: str  # "deterministic" | "stochastic"
    probs: np.ndarray  # (n, K)

    def __post_init__(self):
        if self.kind not in ("deterministic", "stochastic"):
            raise ConfigError(f"unknown snapshot kind {self.kind!r}")
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2:
            raise DataError("snapshot probabilities must be a 2-d array")
        if np.any(self.probs < 0.0) or np.any(self.probs > 1.0):
            raise DataError("snapshot probabilities must lie in [0, 1]")
        sums = self.probs.sum(axis=1)
        if sums.size and np.max(np.abs(sums - 1.0)) > ROW_SUM_TOL:
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise DataError(
                f"snapshot rows must sum to 1 +/- {ROW_SUM_TOL}; "
                f"row {worst} sums to {sums[worst]!r}"
            )
        if self.kind == "deterministic":
            if not np.all(np.isin(self.probs, (0.0, 1.0))):
                raise DataError("deterministic snapshot rows must be one-hot")

    @classmethod
    def from_actions(cls, actions, k_actions: int) -> "PolicySnapshot":
        actions = np.asarray(actions, dtype=np.int64)
        probs = np.zeros((actions.size, k_actions))
        probs[np.arange(actions.size), actions] = 1.0
        return cls(kind="deterministic", probs=probs)

    @classmethod
    def constant(cls, action: int, n_units: int, k_actions: int) -> "PolicySnapshot":
        return cls.from_actions(np.full(n_units, action, dtype=np.int64), k_actions)

    @property
    def n_units(self) -> int:
        return self.probs.shape[0]

    @property
    def k_actions(self) -> int:
        return self.probs.shape[1]

    def actions(self) -> np.ndarray:
        """Argmax action per unit (ties to the lower action id)."""
        return np.argmax(self.probs, axis=1)


@dataclass
class ValueEstimate:
    """A point estimate with optional bootstrap uncertainty."""

    point: float
    estimator: str
    n_effective: float
    std_error: float | None = None
    ci_low: float | None = None
    ci_high: float | None = None
    ci_level: float | None = None
    dropped_replicates: int = 0

    def __post_init__(self):
        if self.ci_low is not None and self.ci_high is not None:
            if not (self.ci_low <= self.point <= self.ci_high):
                # percentile intervals are widened, never shifted, so the
                # invariant ci_low <= point <= ci_high always holds
                self.ci_low = min(self.ci_low, self.point)
                self.ci_high = max(self.ci_high, self.point)

    def to_dict(self) -> dict:
        out = {
            "estimator": self.estimator,
            "point": self.point,
            "n_effective": self.n_effective,
            "dropped_replicates": self.dropped_replicates,
        }
        if self.std_error is not None:
            out["std_error"] = self.std_error
        if self.ci_low is not None:
            out["ci"] = [self.ci_low, self.ci_high]
            out["ci_level"] = self.ci_level
        return out


def _check_alignment(exp: ExperimentalDataset, outcomes, target: PolicySnapshot):
    outcomes = np.asarray(outcomes, dtype=np.float64)
    if outcomes.shape != (exp.n_units,):
        raise DataError(f"outcomes must have length {exp.n_units}")
    if not np.all(np.isfinite(outcomes)):
        raise DataError("outcomes contain non-finite values")
    if target.n_units != exp.n_units or target.k_actions != exp.k_actions:
        raise DataError(
            f"target snapshot shape {target.probs.shape} does not match "
            f"dataset ({exp.n_units}, {exp.k_actions})"
        )
    return outcomes


def importance_weights(exp: ExperimentalDataset, target: PolicySnapshot) -> np.ndarray:
    """w_i = pi_P(A_i | X_i) / pi_D(A_i | X_i)."""
    observed = exp.observed_propensity()
    if np.any(observed <= 0.0):
        raise PositivityError("observed design propensity is not strictly positive")
    rows = np.arange(exp.n_units)
    return target.probs[rows, exp.actions] / observed


def _kish_n_effective(w: np.ndarray) -> float:
    s2 = float(np.sum(w * w))
    if s2 == 0.0:
        return 0.0
    return float(np.sum(w)) ** 2 / s2


def value_ht(
    exp: ExperimentalDataset, outcomes, target: PolicySnapshot
) -> ValueEstimate:
    """Unnormalized Horvitz-Thompson estimate: mean of w_i * y_i."""
    outcomes = _check_alignment(exp, outcomes, target)
    w = importance_weights(exp, target)
    if np.sum(w) == 0.0:
        warnings.warn(
            "target policy puts zero probability on every observed action; "
            "the Horvitz-Thompson estimate is 0 with no effective sample"
        )
    return ValueEstimate(
        point=float(np.mean(w * outcomes)),
        estimator="ht",
        n_effective=_kish_n_effective(w),
    )


def value_hajek(
    exp: ExperimentalDataset, outcomes, target: PolicySnapshot
) -> ValueEstimate:
    """Normalized importance-weighted average: sum(w*y) / sum(w)."""
    outcomes = _check_alignment(exp, outcomes, target)
    w = importance_weights(exp, target)
    total = float(np.sum(w))
    if total == 0.0:
        raise NoOverlapError(
            "target policy puts zero probability on every observed action"
        )
    return ValueEstimate(
        point=float(np.sum(w * outcomes) / total),
        estimator="hajek",
        n_effective=_kish_n_effective(w),
    )


@dataclass
class CrossFitOutcomeModel:
    """Per-fold outcome regressions mu(X, a) with out-of-fold predictions.

    ``oof_matrix[i, a]`` is the prediction for unit i and action a from
    the model whose training folds exclude i.
    """

    models: list
    folds: object
    k_actions: int
    oof_matrix: np.ndarray
    spec: LearnerSpec

    @property
    def n_units(self) -> int:
        return self.oof_matrix.shape[0]

    def predict_new(self, features: Table) -> np.ndarray:
        """(n, K) predictions for new units: average over fold models."""
        n = features.n_rows
        out = np.zeros((n, self.k_actions))
        for model in self.models:
            for a in range(self.k_actions):
                inputs = _with_action_column(
                    features, np.full(n, a, dtype=np.int64), self.k_actions
                )
                out[:, a] += predict(model, inputs)
        return out / len(self.models)


def _with_action_column(features: Table, actions, k_actions: int) -> Table:
    levels = tuple(str(a) for a in range(k_actions))
    codes = np.asarray(actions, dtype=np.int64)
    action_col = Table([("__action__", "categorical", (codes, levels))])
    return features.hstack(action_col)


def fit_crossfit_outcome_model(
    exp: ExperimentalDataset,
    outcomes,
    spec: LearnerSpec,
    n_folds: int = 3,
    seed: int = 0,
) -> CrossFitOutcomeModel:
    """Cross-fit mu(X, a): one regressor per fold on (X, one-hot action).

    Each unit's predictions come from the model of a fold that does not
    contain it. A fold complement missing an action entirely triggers a
    warning; predictions for that action then extrapolate.
    """
    outcomes = np.asarray(outcomes, dtype=np.float64)
    if outcomes.shape != (exp.n_units,):
        raise DataError(f"outcomes must have length {exp.n_units}")
    if not np.all(np.isfinite(outcomes)):
        raise DataError("outcomes contain non-finite values")
    folds = make_folds(exp.n_units, n_folds, seed)
    oof = np.zeros((exp.n_units, exp.k_actions))
    models = []
    for f in range(n_folds):
        train = folds.units_not_in(f)
        held = folds.units_in(f)
        present = np.unique(exp.actions[train])
        for a in range(exp.k_actions):
            if a not in present:
                warnings.warn(
                    f"training folds for fold {f} have no units with action {a}; "
                    "predictions for that action extrapolate"
                )
        inputs = _with_action_column(
            exp.features.take(train), exp.actions[train], exp.k_actions
        )
        model = fit_regressor(spec, inputs, outcomes[train])
        held_features = exp.features.take(held)
        for a in range(exp.k_actions):
            held_inputs = _with_action_column(
                held_features, np.full(held.size, a, dtype=np.int64), exp.k_actions
            )
            oof[held, a] = predict(model, held_inputs)
        models.append(model)
    return CrossFitOutcomeModel(
        models=models, folds=folds, k_actions=exp.k_actions, oof_matrix=oof, spec=spec
    )


def _mu_matrix(exp: ExperimentalDataset, mu) -> np.ndarray:
    """Accept a CrossFitOutcomeModel or a raw (n, K) array."""
    if isinstance(mu, CrossFitOutcomeModel):
        matrix = mu.oof_matrix
    else:
        matrix = np.asarray(mu, dtype=np.float64)
    if matrix.shape != (exp.n_units, exp.k_actions):
        raise DataError(
            f"outcome-model matrix must be shape ({exp.n_units}, {exp.k_actions})"
        )
    return matrix


def value_dr(
    exp: ExperimentalDataset, outcomes, target: PolicySnapshot, mu
) -> ValueEstimate:
    """Doubly-robust estimate.

    mean over units of: sum_a pi_P(a|X_i) mu(X_i, a)
                        + w_i * (y_i - mu(X_i, A_i)).
    """
    outcomes = _check_alignment(exp, outcomes, target)
    matrix = _mu_matrix(exp, mu)
    w = importance_weights(exp, target)
    base = np.sum(target.probs * matrix, axis=1)
    observed_mu = matrix[np.arange(exp.n_units), exp.actions]
    contributions = base + w * (outcomes - observed_mu)
    return ValueEstimate(
        point=float(np.mean(contributions)),
        estimator="dr",
        n_effective=_kish_n_effective(w),
    )


def _ate_att_terms(exp, outcomes, contrast, estimand):
    a, a_prime = contrast
    if a == a_prime:
        raise ConfigError("contrast actions must differ")
    for act in (a, a_prime):
        if not 0 <= act < exp.k_actions:
            raise ConfigError(f"action {act} outside the action set")
        if not np.any(exp.actions == act):
            raise DataError(f"no units with action {act}")
    props = exp.propensities
    if np.any(props[:, [a, a_prime]] <= 0.0):
        raise PositivityError("propensities must be strictly positive")
    first = exp.actions == a
    second = exp.actions == a_prime
    if estimand == "ate":
        w1 = 1.0 / props[:, a]
        w2 = 1.0 / props[:, a_prime]
    elif estimand == "att":
        w1 = np.ones(exp.n_units)
        w2 = props[:, a] / props[:, a_prime]
    else:
        raise ConfigError(f"estimand must be 'ate' or 'att', got {estimand!r}")
    w1 = np.where(first, w1, 0.0)
    w2 = np.where(second, w2, 0.0)
    return w1, w2


def estimate_ate_att(
    exp: ExperimentalDataset,
    outcomes,
    contrast: tuple = (1, 0),
    estimand: str = "att",
) -> ValueEstimate:
    """IPW-weighted difference in means between two actions.

    ATE weights each group by 1/pi_D(group action | X); ATT keeps treated
    units at weight 1 and reweights comparison units by
    pi_D(a|X)/pi_D(a'|X). Both weighted means are normalized, so with
    uniform propensities the ATE reduces to the simple difference in
    group means.
    """
    outcomes = np.asarray(outcomes, dtype=np.float64)
    if outcomes.shape != (exp.n_units,):
        raise DataError(f"outcomes must have length {exp.n_units}")
    w1, w2 = _ate_att_terms(exp, outcomes, contrast, estimand)
    m1 = float(np.sum(w1 * outcomes) / np.sum(w1))
    m2 = float(np.sum(w2 * outcomes) / np.sum(w2))
    n_eff = min(_kish_n_effective(w1[w1 > 0]), _kish_n_effective(w2[w2 > 0]))
    return ValueEstimate(
        point=m1 - m2, estimator=estimand, n_effective=n_eff
    )


def _replicate_values(kind, arrays, index_matrix):
    """Estimator values on resampled units; NaN marks a dropped replicate."""
    if kind == "ht":
        wy = arrays["w"] * arrays["y"]
        return wy[index_matrix].mean(axis=1)
    if kind == "hajek":
        w = arrays["w"][index_matrix]
        wy = (arrays["w"] * arrays["y"])[index_matrix]
        totals = w.sum(axis=1)
        out = np.full(index_matrix.shape[0], np.nan)
        ok = totals > 0
        out[ok] = wy.sum(axis=1)[ok] / totals[ok]
        return out
    if kind == "dr":
        contrib = arrays["contrib"][index_matrix]
        return contrib.mean(axis=1)
    if kind in ("ate", "att"):
        w1, w2, y = arrays["w1"], arrays["w2"], arrays["y"]
        w1r, w2r = w1[index_matrix], w2[index_matrix]
        yr = y[index_matrix]
        t1, t2 = w1r.sum(axis=1), w2r.sum(axis=1)
        out = np.full(index_matrix.shape[0], np.nan)
        ok = (t1 > 0) & (t2 > 0)
        m1 = (w1r * yr).sum(axis=1)[ok] / t1[ok]
        m2 = (w2r * yr).sum(axis=1)[ok] / t2[ok]
        out[ok] = m1 - m2
        return out
    raise ConfigError(f"unknown estimator {kind!r}")


def bootstrap_ci(
    estimator: str,
    exp: ExperimentalDataset,
    outcomes,
    target: PolicySnapshot | None = None,
    B: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    mu=None,
    contrast: tuple = (1, 0),
) -> ValueEstimate:
    """Percentile bootstrap CI over unit-resampled replicates.

    The point estimate comes from the original data; nuisance models
    (outcome model, imputations) are held fixed across replicates, as in
    evaluation on a test split. Replicates with no overlap are dropped
    and counted in ``dropped_replicates``.
    """
    if B < 100:
        raise ConfigError("B must be >= 100 for confidence intervals")
    if not 0.0 < level < 1.0:
        raise ConfigError("level must be in (0, 1)")
    outcomes = np.asarray(outcomes, dtype=np.float64)
    n = exp.n_units
    if estimator in ("ht", "hajek", "dr"):
        if target is None:
            raise ConfigError("a target snapshot is required for policy values")
        w = importance_weights(exp, target)
        if estimator == "ht":
            point = value_ht(exp, outcomes, target)
            arrays = {"w": w, "y": outcomes}
        elif estimator == "hajek":
            point = value_hajek(exp, outcomes, target)
            arrays = {"w": w, "y": outcomes}
        else:
            if mu is None:
                raise ConfigError("the DR estimator needs an outcome model")
            matrix = _mu_matrix(exp, mu)
            point = value_dr(exp, outcomes, target, matrix)
            base = np.sum(target.probs * matrix, axis=1)
            observed_mu = matrix[np.arange(n), exp.actions]
            arrays = {"contrib": base + w * (outcomes - observed_mu)}
    elif estimator in ("ate", "att"):
        point = estimate_ate_att(exp, outcomes, contrast, estimator)
        w1, w2 = _ate_att_terms(exp, outcomes, contrast, estimator)
        arrays = {"w1": w1, "w2": w2, "y": outcomes}
    else:
        raise ConfigError(f"unknown estimator {estimator!r}")

    rng = np.random.default_rng(derive_seed(seed, "bootstrap", estimator))
    values = np.empty(B)
    chunk = max(1, min(B, int(4e6 // max(n, 1)) or 1))
    done = 0
    while done < B:
        take = min(chunk, B - done)
        index_matrix = rng.integers(0, n, size=(take, n))
        values[done : done + take] = _replicate_values(estimator, arrays, index_matrix)
        done += take
    kept = values[np.isfinite(values)]
    dropped = int(B - kept.size)
    if kept.size == 0:
        raise NoOverlapError("every bootstrap replicate lacked overlap")
    alpha = 1.0 - level
    lo, hi = np.quantile(kept, [alpha / 2.0, 1.0 - alpha / 2.0])
    return ValueEstimate(
        point=point.point,
        estimator=point.estimator,
        n_effective=point.n_effective,
        std_error=float(np.std(kept, ddof=1)) if kept.size > 1 else 0.0,
        ci_low=float(lo),
        ci_high=float(hi),
        ci_level=level,
        dropped_replicates=dropped,
    )
