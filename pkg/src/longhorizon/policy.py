"""Doubly-robust scores, CATE estimation, policy optimization, and regret."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import ExperimentalDataset, Table
from .errors import ConfigError, DataError, PositivityError, SchemaError
from .learners import (
    FittedClassifier,
    LearnerSpec,
    fit_classifier,
    fit_regressor,
    model_from_dict,
    model_to_dict,
    predict,
)
from .learners.encoding import schema_from_table as _schema_of
from .ope import CrossFitOutcomeModel, PolicySnapshot, _mu_matrix

__all__ = [
    "DrScoreMatrix",
    "Policy",
    "CateEstimate",
    "RegretReport",
    "dr_scores",
    "cate",
    "learn_policy_binary",
    "learn_policy_multi",
    "policy_assign",
    "regret",
    "save_policy",
    "load_policy",
]

POLICY_FORMAT_VERSION = 1
TIE_RULE = "lowest_action_id"


@dataclass
class DrScoreMatrix:
    """Per-unit, per-action doubly-robust potential-outcome scores."""

    scores: np.ndarray  # (n, K)
    k_actions: int
    fold_seed: int | None = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 2 or self.scores.shape[1] != self.k_actions:
            raise DataError("scores must be an (n, K) matrix")
        if not np.all(np.isfinite(self.scores)):
            raise DataError("scores contain non-finite entries")

    @property
    def n_units(self) -> int:
        return self.scores.shape[0]


def dr_scores(exp: ExperimentalDataset, outcomes, mu) -> DrScoreMatrix:
    """score[i, a] = mu(X_i, a) + 1{A_i = a} (y_i - mu(X_i, a)) / pi_D(a | X_i)."""
    outcomes = np.asarray(outcomes, dtype=np.float64)
    if outcomes.shape != (exp.n_units,):
        raise DataError(f"outcomes must have length {exp.n_units}")
    matrix = _mu_matrix(exp, mu)
    if np.any(exp.propensities <= 0.0):
        raise PositivityError("propensities must be strictly positive")
    rows = np.arange(exp.n_units)
    scores = matrix.copy()
    observed_p = exp.propensities[rows, exp.actions]
    scores[rows, exp.actions] += (outcomes - matrix[rows, exp.actions]) / observed_p
    fold_seed = mu.folds.seed if isinstance(mu, CrossFitOutcomeModel) else None
    return DrScoreMatrix(scores=scores, k_actions=exp.k_actions, fold_seed=fold_seed)


@dataclass
class CateEstimate:
    """Per-unit treatment effects relative to control (column 0 is zero)."""

    effects: np.ndarray  # (n, K); effects[:, 0] == 0
    smoothed: bool

    def __post_init__(self):
        self.effects = np.asarray(self.effects, dtype=np.float64)
        if np.any(self.effects[:, 0] != 0.0):
            raise DataError("the control column of a CATE estimate must be zero")


def cate(
    scores: DrScoreMatrix,
    smoother: LearnerSpec | None = None,
    features: Table | None = None,
) -> CateEstimate:
    """Per-unit score differences against control, optionally smoothed.

    With a smoother, each non-control column of raw differences is
    regressed on the covariates and replaced by its fitted values, which
    operationalizes conditioning on a covariate profile when covariates
    are continuous.
    """
    if scores.k_actions < 2:
        raise ConfigError("CATE needs at least two actions")
    raw = scores.scores - scores.scores[:, [0]]
    if smoother is None:
        return CateEstimate(effects=raw, smoothed=False)
    if features is None:
        raise ConfigError("smoothing requires the covariates")
    if features.n_rows != scores.n_units:
        raise DataError("covariates do not align with the score matrix")
    out = np.zeros_like(raw)
    for a in range(1, scores.k_actions):
        model = fit_regressor(smoother, features, raw[:, a])
        out[:, a] = predict(model, features)
    return CateEstimate(effects=out, smoothed=True)


@dataclass
class Policy:
    """A learned targeting policy.

    ``deterministic_classifier`` policies carry either a constant action,
    a single classifier over action ids (binary), or one classifier per
    action pair plus majority voting (multi-action).
    ``stochastic_table`` policies carry an explicit per-profile
    probability table aligned with a fixed unit count.
    """

    kind: str
    k_actions: int
    feature_names: tuple = ()
    constant_action: int | None = None
    classifier: FittedClassifier | None = None
    pairwise: list = field(default_factory=list)  # [((a, b), FittedClassifier)]
    table: np.ndarray | None = None
    tie_rule: str = TIE_RULE

    def assign_actions(self, features: Table) -> np.ndarray:
        if self.kind != "deterministic_classifier":
            raise ConfigError("stochastic policies do not assign single actions")
        n = features.n_rows
        if self.constant_action is not None:
            return np.full(n, self.constant_action, dtype=np.int64)
        if self.classifier is not None:
            return predict(self.classifier, features).astype(np.int64)
        votes = np.zeros((n, self.k_actions), dtype=np.int64)
        for (a, b), model in self.pairwise:
            winner = predict(model, features).astype(np.int64)
            votes[np.arange(n), winner] += 1
        # ties break to the lowest action id via argmax
        return np.argmax(votes, axis=1)


def policy_assign(policy: Policy, features: Table) -> PolicySnapshot:
    """Evaluate a policy on covariates, returning per-unit probabilities."""
    if policy.kind == "stochastic_table":
        if policy.table.shape[0] != features.n_rows:
            raise SchemaError(
                "stochastic policy table does not align with the given units"
            )
        return PolicySnapshot(kind="stochastic", probs=policy.table)
    actions = policy.assign_actions(features)
    return PolicySnapshot.from_actions(actions, policy.k_actions)


def _objective(scores: np.ndarray, actions: np.ndarray) -> float:
    """Empirical policy objective: mean DR score at the assigned actions."""
    return float(np.mean(scores[np.arange(scores.shape[0]), actions]))


def _best_constant(scores: np.ndarray) -> tuple[int, float]:
    means = scores.mean(axis=0)
    best = int(np.argmax(means))  # ties to the lower action id
    return best, float(means[best])


def learn_policy_binary(
    scores: DrScoreMatrix, features: Table, classifier: LearnerSpec
) -> Policy:
    """Reduce policy search to weighted binary classification.

    Labels are the sign of the treat-control score gap, weights its
    magnitude. Constant policies (treat none, treat all) always compete;
    the classifier is returned only when it strictly beats the best
    constant on the training objective.
    """
    if scores.k_actions != 2:
        raise ConfigError("learn_policy_binary requires exactly two actions")
    if features.n_rows != scores.n_units:
        raise DataError("covariates do not align with the score matrix")
    gap = scores.scores[:, 1] - scores.scores[:, 0]
    if np.all(gap == 0.0):
        warnings.warn("all score gaps are zero; returning the treat-none policy")
        return Policy(
            kind="deterministic_classifier",
            k_actions=2,
            feature_names=tuple(features.names),
            constant_action=0,
        )
    labels = (gap > 0).astype(np.int64)
    model = fit_classifier(classifier, features, labels, np.abs(gap))
    learned_actions = predict(model, features).astype(np.int64)
    const_action, const_value = _best_constant(scores.scores)
    if _objective(scores.scores, learned_actions) > const_value:
        return Policy(
            kind="deterministic_classifier",
            k_actions=2,
            feature_names=tuple(features.names),
            classifier=model,
        )
    return Policy(
        kind="deterministic_classifier",
        k_actions=2,
        feature_names=tuple(features.names),
        constant_action=const_action,
    )


def learn_policy_multi(
    scores: DrScoreMatrix, features: Table, classifier: LearnerSpec
) -> Policy:
    """Pairwise cost-sensitive tournament over all action pairs.

    Each pair gets a weighted binary classifier (weight = |score gap|);
    a unit's action is the pairwise-vote winner with ties broken toward
    the lower action id. With two actions this reduces exactly to
    ``learn_policy_binary``.
    """
    if scores.k_actions < 3:
        return learn_policy_binary(scores, features, classifier)
    if features.n_rows != scores.n_units:
        raise DataError("covariates do not align with the score matrix")
    if np.all(scores.scores == scores.scores[:, [0]]):
        warnings.warn("all score gaps are zero; returning the treat-none policy")
        return Policy(
            kind="deterministic_classifier",
            k_actions=scores.k_actions,
            feature_names=tuple(features.names),
            constant_action=0,
        )
    pairwise = []
    for a in range(scores.k_actions):
        for b in range(a + 1, scores.k_actions):
            gap = scores.scores[:, b] - scores.scores[:, a]
            if np.all(gap == 0.0):
                # uninformative pair: deterministic vote for the lower id
                model = FittedClassifier(
                    spec=classifier,
                    feature_schema=_schema_of(features),
                    labels=np.asarray([a], dtype=np.int64),
                    model=("constant", 0),
                )
            else:
                labels = np.where(gap > 0, b, a).astype(np.int64)
                model = fit_classifier(classifier, features, labels, np.abs(gap))
            pairwise.append(((a, b), model))
    candidate = Policy(
        kind="deterministic_classifier",
        k_actions=scores.k_actions,
        feature_names=tuple(features.names),
        pairwise=pairwise,
    )
    learned_actions = candidate.assign_actions(features)
    const_action, const_value = _best_constant(scores.scores)
    if _objective(scores.scores, learned_actions) > const_value:
        return candidate
    return Policy(
        kind="deterministic_classifier",
        k_actions=scores.k_actions,
        feature_names=tuple(features.names),
        constant_action=const_action,
    )


@dataclass
class RegretReport:
    """Value lost to disagreeing with the oracle policy."""

    mean_regret: float
    disagreement_rate: float
    per_unit_loss: np.ndarray


def regret(oracle_cates, policy_actions, oracle_actions) -> RegretReport:
    """Mean over units of the oracle CATE gap where actions disagree.

    ``oracle_cates`` holds true per-unit effects relative to control
    (column 0 zero), so the loss for a unit is the effect of the oracle
    action minus the effect of the assigned action.
    """
    oracle_cates = np.asarray(oracle_cates, dtype=np.float64)
    policy_actions = np.asarray(policy_actions, dtype=np.int64)
    oracle_actions = np.asarray(oracle_actions, dtype=np.int64)
    n = oracle_cates.shape[0]
    if policy_actions.shape != (n,) or oracle_actions.shape != (n,):
        raise DataError("action vectors do not align with the oracle CATEs")
    rows = np.arange(n)
    differ = policy_actions != oracle_actions
    loss = np.where(
        differ,
        oracle_cates[rows, oracle_actions] - oracle_cates[rows, policy_actions],
        0.0,
    )
    return RegretReport(
        mean_regret=float(np.mean(loss)),
        disagreement_rate=float(np.mean(differ)),
        per_unit_loss=loss,
    )


def save_policy(policy: Policy, path) -> None:
    doc = {
        "format_version": POLICY_FORMAT_VERSION,
        "kind": policy.kind,
        "k_actions": policy.k_actions,
        "feature_names": list(policy.feature_names),
        "tie_rule": policy.tie_rule,
    }
    if policy.kind == "stochastic_table":
        doc["table"] = policy.table.tolist()
    elif policy.constant_action is not None:
        doc["constant_action"] = policy.constant_action
    elif policy.classifier is not None:
        doc["classifier"] = model_to_dict(policy.classifier)
    else:
        doc["pairwise"] = [
            {"pair": [a, b], "classifier": model_to_dict(m)}
            for (a, b), m in policy.pairwise
        ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)


def load_policy(path) -> Policy:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format_version") != POLICY_FORMAT_VERSION:
        raise ConfigError(f"unsupported policy format_version {doc.get('format_version')!r}")
    common = dict(
        kind=doc["kind"],
        k_actions=int(doc["k_actions"]),
        feature_names=tuple(doc.get("feature_names", ())),
        tie_rule=doc.get("tie_rule", TIE_RULE),
    )
    if doc["kind"] == "stochastic_table":
        return Policy(table=np.asarray(doc["table"], dtype=np.float64), **common)
    if "constant_action" in doc:
        return Policy(constant_action=int(doc["constant_action"]), **common)
    if "classifier" in doc:
        return Policy(classifier=model_from_dict(doc["classifier"]), **common)
    pairwise = [
        ((int(e["pair"][0]), int(e["pair"][1])), model_from_dict(e["classifier"]))
        for e in doc["pairwise"]
    ]
    return Policy(pairwise=pairwise, **common)
