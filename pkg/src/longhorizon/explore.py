"""Exploration layers: bootstrap Thompson sampling, probability clipping,
and the garbled-risk design policy."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .data import ExperimentalDataset
from .errors import ConfigError, NumericError
from .learners import LearnerSpec
from .ope import PolicySnapshot, fit_crossfit_outcome_model
from .policy import dr_scores, learn_policy_binary, learn_policy_multi
from .seeds import derive_seed

__all__ = [
    "BtsConfig",
    "DesignPolicyConfig",
    "PolicyPipeline",
    "bts_policy",
    "clip_probabilities",
    "design_policy_from_risk",
    "export_assignment_csv",
]

_SUM_TOL = 1e-9
# keeps design-policy propensities strictly inside (0, 1)
_POSITIVITY_FLOOR = 1e-6


@dataclass(frozen=True)
class BtsConfig:
    """Bootstrap-Thompson-sampling replication and clipping settings."""

    replicates: int = 100
    floor: float = 0.0
    ceiling: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not 0.0 <= self.floor < self.ceiling <= 1.0:
            raise ConfigError("need 0 <= floor < ceiling <= 1")


@dataclass(frozen=True)
class DesignPolicyConfig:
    """Gaussian garbling of a risk score into treatment probabilities."""

    sigma: float = 0.003
    tau: float = 0.0068
    cap: float = 0.5

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ConfigError("sigma must be positive")
        if not 0.0 < self.cap <= 1.0:
            raise ConfigError("cap must lie in (0, 1]")


@dataclass(frozen=True)
class PolicyPipeline:
    """The score-construction plus policy-learning procedure.

    Used for direct policy learning and rerun on every bootstrap
    replicate by :func:`bts_policy`.
    """

    outcome_spec: LearnerSpec
    classifier_spec: LearnerSpec
    n_folds: int = 3

    def learn(self, exp: ExperimentalDataset, outcomes, seed: int = 0):
        mu = fit_crossfit_outcome_model(
            exp, outcomes, self.outcome_spec, self.n_folds, seed
        )
        scores = dr_scores(exp, outcomes, mu)
        if exp.k_actions == 2:
            return learn_policy_binary(scores, exp.features, self.classifier_spec)
        return learn_policy_multi(scores, exp.features, self.classifier_spec)


def clip_probabilities(row, floor: float, ceiling: float) -> np.ndarray:
    """Clamp a probability row into [floor, ceiling], preserving the sum.

    Water-filling: entries are scaled by a common level and clamped at the
    bounds, with the level chosen so the row still sums to one. Ordering
    of the input probabilities is preserved.
    """
    row = np.asarray(row, dtype=np.float64)
    k = row.size
    if abs(row.sum() - 1.0) > 1e-6:
        raise ConfigError("row must sum to 1 before clipping")
    if not 0.0 <= floor < ceiling <= 1.0 and not (floor == 0.0 and ceiling == 1.0):
        raise ConfigError("need 0 <= floor < ceiling <= 1")
    if k * floor > 1.0 + 1e-12 or k * ceiling < 1.0 - 1e-12:
        raise ConfigError(
            f"infeasible bounds: {k} actions cannot satisfy floor={floor}, "
            f"ceiling={ceiling}"
        )
    if floor == 0.0 and ceiling == 1.0:
        return row.copy()
    positive = row > 1e-12
    # (near-)zero entries can never rise above the floor by scaling alone;
    # when the scaled maximum cannot reach total mass 1, they absorb the
    # deficit in equal shares (each share is <= ceiling under feasibility)
    reachable = positive.sum() * ceiling + (~positive).sum() * floor
    if reachable < 1.0 - 1e-12:
        out = np.where(
            positive, ceiling, (1.0 - positive.sum() * ceiling) / (~positive).sum()
        )
        return out

    def candidate(level: float) -> np.ndarray:
        return np.minimum(np.maximum(level * row, floor), ceiling)

    lo, hi = 0.0, 1.0
    while candidate(hi).sum() < 1.0:
        lo, hi = hi, hi * 2.0
        if hi > 1e18:
            raise NumericError("water level search failed to bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if candidate(mid).sum() < 1.0:
            lo = mid
        else:
            hi = mid
    level = 0.5 * (lo + hi)
    scaled = level * row
    at_floor = scaled <= floor
    at_ceiling = scaled >= ceiling
    interior = ~at_floor & ~at_ceiling
    out = np.where(at_floor, floor, np.where(at_ceiling, ceiling, 0.0))
    residual = 1.0 - out[~interior].sum()
    if interior.any():
        out[interior] = row[interior] * (residual / row[interior].sum())
        out = np.minimum(np.maximum(out, floor), ceiling)
    if abs(out.sum() - 1.0) > 1e-9:
        raise NumericError("probability clipping failed to preserve the sum")
    return out


def bts_policy(
    exp: ExperimentalDataset,
    outcomes,
    pipeline: PolicyPipeline,
    cfg: BtsConfig,
) -> PolicySnapshot:
    """Bootstrap Thompson sampling over the full learning pipeline.

    Each replicate refits the pipeline on a unit-resampled copy of the
    data and records which action it assigns to every original unit; the
    exploration probability of an action is its win fraction across
    replicates, then clipped row-wise to [floor, ceiling].
    """
    outcomes = np.asarray(outcomes, dtype=np.float64)
    n, k = exp.n_units, exp.k_actions
    tallies = np.zeros((n, k), dtype=np.int64)
    succeeded = 0
    dropped = 0
    for r in range(cfg.replicates):
        rng = np.random.default_rng(derive_seed(cfg.seed, "bts", r))
        draw = rng.integers(0, n, size=n)
        try:
            replicate = exp.take(draw)
            learned = pipeline.learn(
                replicate, outcomes[draw], seed=derive_seed(cfg.seed, "bts-fit", r)
            )
            actions = learned.assign_actions(exp.features)
        except Exception as err:  # noqa: BLE001 - replicate failures are counted
            warnings.warn(f"BTS replicate {r} failed and was dropped: {err}")
            dropped += 1
            continue
        tallies[np.arange(n), actions] += 1
        succeeded += 1
    if succeeded == 0:
        raise NumericError(
            f"all {cfg.replicates} BTS replicates failed; no policy available"
        )
    if dropped:
        warnings.warn(f"BTS dropped {dropped} of {cfg.replicates} replicates")
    probs = tallies / succeeded
    clipped = np.vstack(
        [clip_probabilities(row, cfg.floor, cfg.ceiling) for row in probs]
    )
    return PolicySnapshot(kind="stochastic", probs=clipped)


_erf = np.frompyfunc(math.erf, 1, 1)


def normal_cdf(x) -> np.ndarray:
    """Standard normal CDF via erf (double-precision accurate)."""
    x = np.asarray(x, dtype=np.float64)
    erf_vals = np.asarray(_erf(x / math.sqrt(2.0)), dtype=np.float64)
    return 0.5 * (1.0 + erf_vals)


def design_policy_from_risk(risk, cfg: DesignPolicyConfig) -> PolicySnapshot:
    """Treatment probability min(cap, Phi((R_i - tau) / sigma)) per unit.

    Probabilities are clipped into (0, 1) by a 1e-6 floor on both sides,
    which restores strict positivity for downstream IPW.
    """
    risk = np.asarray(risk, dtype=np.float64)
    if np.any(risk <= 0.0) or np.any(risk >= 1.0):
        raise ConfigError("risk scores must lie strictly inside (0, 1)")
    treat = np.minimum(cfg.cap, normal_cdf((risk - cfg.tau) / cfg.sigma))
    treat = np.clip(treat, _POSITIVITY_FLOOR, 1.0 - _POSITIVITY_FLOOR)
    probs = np.column_stack([1.0 - treat, treat])
    return PolicySnapshot(kind="stochastic", probs=probs)


def export_assignment_csv(path, snapshot: PolicySnapshot, sampled_actions, seed: int):
    """Assignment export: unit_id, p0..p{K-1}, sampled_action, seed.

    Written with full float precision so the file round-trips as the next
    experiment's propensity columns.
    """
    sampled_actions = np.asarray(sampled_actions, dtype=np.int64)
    k = snapshot.k_actions
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["unit_id"] + [f"p{a}" for a in range(k)] + ["sampled_action", "seed"]
        )
        for i in range(snapshot.n_units):
            writer.writerow(
                [i]
                + [repr(float(p)) for p in snapshot.probs[i]]
                + [int(sampled_actions[i]), seed]
            )
