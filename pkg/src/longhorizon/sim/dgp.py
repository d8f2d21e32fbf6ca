"""Synthetic data-generating processes with full potential-outcome ground truth.

The causal structure: actions shift surrogates; the long-term outcome is
linear in surrogates with covariate-only nonlinearities (piecewise-linear
plus interaction terms); a latent factor loads on the surrogates and
reaches the outcome through them. With zero direct-effect size and zero
drift, surrogacy and comparability therefore hold by construction. The
direct-effect knob adds an action term to the outcome that bypasses the
surrogates; the drift knob shifts the historical outcome-given-surrogates
mapping.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import ExperimentalDataset, HistoricalDataset, Table
from ..errors import ConfigError, DataError
from ..ope import PolicySnapshot
from ..seeds import derive_seed

__all__ = ["DgpConfig", "SimData", "generate"]

SEGMENT_LEVELS = ("a", "b", "c")
SEGMENT_PROBS = (0.5, 0.3, 0.2)
PROPENSITY_FLOOR = 0.02


@dataclass(frozen=True)
class DgpConfig:
    """Knobs of the synthetic process.

    ``surrogacy_violation`` is the size of the direct action-to-outcome
    effect; ``comparability_drift`` shifts the historical outcome mapping.
    Zero for both means the identifying assumptions hold exactly.
    ``horizon_windows`` switches to the cumulative-window surrogate layout
    used by the validation harness (see sim.validation).
    """

    n_units: int = 2000
    n_historical: int = 2000
    k_actions: int = 2
    dim_x: int = 4
    dim_s: int = 3
    effect_profile: str = "bimodal_gap"  # or "continuous_near_zero"
    effect_gap: float = 1.0
    surrogacy_violation: float = 0.0
    confounder_strength: float = 0.5
    comparability_drift: float = 0.0
    noise_s: float = 1.0
    noise_y: float = 1.0
    seed: int = 0
    horizon_windows: int | None = None

    def __post_init__(self):
        if self.n_units < 10 or self.n_historical < 10:
            raise ConfigError("need at least 10 units in each dataset")
        if self.k_actions < 2:
            raise ConfigError("need at least two actions")
        if self.dim_x < 1 or self.dim_s < 1:
            raise ConfigError("dimensions must be positive")
        if self.effect_profile not in ("bimodal_gap", "continuous_near_zero"):
            raise ConfigError(f"unknown effect profile {self.effect_profile!r}")
        if self.effect_gap < 0 or self.noise_s < 0 or self.noise_y < 0:
            raise ConfigError("scales must be nonnegative")
        if self.surrogacy_violation < 0 or self.confounder_strength < 0:
            raise ConfigError("strengths must be nonnegative")
        if self.horizon_windows is not None and self.horizon_windows < 2:
            raise ConfigError("horizon_windows must be >= 2 when set")


def _feature_table(x: np.ndarray, segment_codes: np.ndarray) -> Table:
    cols = [(f"x{j + 1}", "float", x[:, j]) for j in range(x.shape[1])]
    cols.append(("segment", "categorical", (segment_codes, SEGMENT_LEVELS)))
    return Table(cols)


def _surrogate_table(s: np.ndarray) -> Table:
    return Table([(f"s{j + 1}", "float", s[:, j]) for j in range(s.shape[1])])


def _encode_x(x: np.ndarray, segment_codes: np.ndarray) -> np.ndarray:
    onehot = np.zeros((x.shape[0], len(SEGMENT_LEVELS)))
    onehot[np.arange(x.shape[0]), segment_codes] = 1.0
    return np.hstack([x, onehot])


@dataclass
class Coefficients:
    """All structural coefficients, drawn once from the seeded RNG."""

    surrogate_loadings: np.ndarray  # A_g: (dim_s, dim_enc)
    outcome_loadings: np.ndarray  # c: (dim_s,)
    effect_directions: np.ndarray  # d: (dim_s,), normalized so c.d = 1
    confounder_loadings: np.ndarray  # kappa: (dim_s,)
    baseline_linear: np.ndarray  # theta_m: (dim_enc,)
    baseline_relu: float
    baseline_interaction: float
    propensity_logits: np.ndarray  # (K, 3)
    effect_slopes: np.ndarray  # eta: (K-1, dim_x)
    effect_intercepts: np.ndarray  # (K-1,)
    effect_sign_feature: np.ndarray  # (K-1,) feature index for bimodal sign

    def to_dict(self) -> dict:
        return {k: np.asarray(v).tolist() for k, v in self.__dict__.items()}


def _draw_coefficients(cfg: DgpConfig) -> Coefficients:
    rng = np.random.default_rng(derive_seed(cfg.seed, "coefficients"))
    dim_enc = cfg.dim_x + len(SEGMENT_LEVELS)
    a_g = rng.normal(0.0, 0.4, size=(cfg.dim_s, dim_enc))
    c = 0.3 + np.abs(rng.normal(0.0, 0.35, size=cfg.dim_s))
    d = np.abs(rng.normal(1.0, 0.25, size=cfg.dim_s))
    d = d / float(c @ d)  # unit effect pass-through: c . d == 1
    kappa = cfg.confounder_strength * (0.4 + np.abs(rng.normal(0.0, 0.3, size=cfg.dim_s)))
    theta_m = rng.normal(0.0, 0.4, size=dim_enc)
    relu = float(rng.normal(0.8, 0.2))
    interaction = float(rng.normal(0.5, 0.2)) if cfg.dim_x >= 2 else 0.0
    logits = rng.normal(0.0, 0.4, size=(cfg.k_actions, 3))
    eta = rng.normal(0.0, 0.3, size=(cfg.k_actions - 1, cfg.dim_x))
    intercepts = rng.normal(0.0, 0.15, size=cfg.k_actions - 1)
    sign_feature = np.arange(cfg.k_actions - 1) % cfg.dim_x
    return Coefficients(
        surrogate_loadings=a_g,
        outcome_loadings=c,
        effect_directions=d,
        confounder_loadings=kappa,
        baseline_linear=theta_m,
        baseline_relu=relu,
        baseline_interaction=interaction,
        propensity_logits=logits,
        effect_slopes=eta,
        effect_intercepts=intercepts,
        effect_sign_feature=sign_feature,
    )


def _baseline(coef: Coefficients, x: np.ndarray, x_enc: np.ndarray) -> np.ndarray:
    """Covariate-only outcome component m(x): linear + relu + interaction."""
    out = x_enc @ coef.baseline_linear + coef.baseline_relu * np.maximum(x[:, 0], 0.0)
    if x.shape[1] >= 2:
        out = out + coef.baseline_interaction * x[:, 0] * x[:, 1]
    return out


def _effect_profiles(cfg: DgpConfig, coef: Coefficients, x: np.ndarray) -> np.ndarray:
    """psi[:, a] = treatment effect of action a on the outcome scale (psi[:, 0] = 0)."""
    n = x.shape[0]
    psi = np.zeros((n, cfg.k_actions))
    for a in range(1, cfg.k_actions):
        slope = x @ coef.effect_slopes[a - 1]
        if cfg.effect_profile == "bimodal_gap":
            sign = np.where(x[:, coef.effect_sign_feature[a - 1]] > 0.0, 1.0, -1.0)
            psi[:, a] = sign * (cfg.effect_gap + np.abs(slope))
        else:
            psi[:, a] = slope + coef.effect_intercepts[a - 1]
    return psi


def _design_propensities(cfg: DgpConfig, coef: Coefficients, x: np.ndarray) -> np.ndarray:
    """Softmax logits in (at most) two covariates, floored for positivity."""
    z = np.column_stack([np.ones(x.shape[0]), x[:, : min(2, x.shape[1])]])
    logits = z @ coef.propensity_logits[:, : z.shape[1]].T
    logits -= logits.max(axis=1, keepdims=True)
    raw = np.exp(logits)
    raw /= raw.sum(axis=1, keepdims=True)
    return PROPENSITY_FLOOR + (1.0 - cfg.k_actions * PROPENSITY_FLOOR) * raw


def _drift_shift(s: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Concept-shift direction k(S, X) scaled by the drift knob."""
    return s.mean(axis=1) + 0.5 * x[:, 0]


@dataclass
class SimData:
    """A synthetic experiment with its complete oracle bookkeeping."""

    config: DgpConfig
    coefficients: Coefficients
    historical: HistoricalDataset
    experiment: ExperimentalDataset
    potential_outcomes: np.ndarray  # (n, K)
    potential_surrogates: np.ndarray  # (n, K, dim_s)
    oracle_cates: np.ndarray  # (n, K), column 0 identically zero
    oracle_policy: np.ndarray  # (n,)
    x_continuous: np.ndarray
    x_encoded: np.ndarray

    @property
    def realized_outcomes(self) -> np.ndarray:
        """True long-term outcomes of the experiment (hidden from methods)."""
        rows = np.arange(self.experiment.n_units)
        return self.potential_outcomes[rows, self.experiment.actions]

    def true_policy_value(self, target: PolicySnapshot) -> float:
        """Exact V(pi): schedule average weighted by assignment probabilities."""
        if target.n_units != self.experiment.n_units:
            raise DataError("snapshot does not align with the simulated units")
        if target.k_actions != self.config.k_actions:
            raise DataError("snapshot has the wrong number of actions")
        return float(np.mean(np.sum(target.probs * self.potential_outcomes, axis=1)))

    def oracle_surrogate_outcomes(self) -> np.ndarray:
        """Population E_H[Y | S(a), X] applied to the schedule: (n, K).

        This is the infinite-data surrogate index; it misses any direct
        action effect and inherits any comparability drift.
        """
        coef, cfg = self.coefficients, self.config
        n = self.experiment.n_units
        base = _baseline(coef, self.x_continuous, self.x_encoded)
        out = np.empty((n, cfg.k_actions))
        for a in range(cfg.k_actions):
            s_a = self.potential_surrogates[:, a, :]
            out[:, a] = s_a @ coef.outcome_loadings + base
            if cfg.comparability_drift != 0.0:
                out[:, a] += cfg.comparability_drift * _drift_shift(s_a, self.x_continuous)
        return out

    def oracle_surrogate_cates(self) -> np.ndarray:
        tilde = self.oracle_surrogate_outcomes()
        return tilde - tilde[:, [0]]

    def oracle_bias_bound_per_unit(self) -> np.ndarray:
        """Per-unit conditional bias bound (binary actions).

        sqrt(var(Y|x)/var(A|x) * (1 - R2_{Y|S,x}) * (1 - R2_{A|S,x})),
        computed from the conditional linear-Gaussian structure of the
        experimental arm given covariates.
        """
        cfg, coef = self.config, self.coefficients
        if cfg.k_actions != 2:
            raise ConfigError("the per-unit bound is defined for binary actions")
        n = self.experiment.n_units
        e = self.experiment.propensities[:, 1]
        v_a = e * (1.0 - e)
        psi = self.oracle_cates[:, 1] - cfg.surrogacy_violation
        delta_s = psi[:, None] * coef.effect_directions[None, :]  # (n, dim_s)
        base_cov = np.outer(coef.confounder_loadings, coef.confounder_loadings)
        base_cov = base_cov + (cfg.noise_s**2) * np.eye(cfg.dim_s)
        var_s = (
            v_a[:, None, None] * delta_s[:, :, None] * delta_s[:, None, :]
            + base_cov[None, :, :]
        )
        cov_as = v_a[:, None] * delta_s
        c = coef.outcome_loadings
        delta = cfg.surrogacy_violation
        cov_ys = var_s @ c + delta * cov_as
        rhs = np.stack([delta_s, cov_ys], axis=2)
        solved = np.linalg.solve(var_s, rhs)
        r2_a = v_a * np.einsum("ij,ij->i", delta_s, solved[:, :, 0])
        # var(Y|x) = c' Var(S) c + 2 delta c'Cov(A,S) + delta^2 v_a + noise_y^2
        var_y = (
            np.einsum("j,ijk,k->i", c, var_s, c)
            + 2.0 * delta * (cov_as @ c)
            + delta**2 * v_a
            + cfg.noise_y**2
        )
        r2_y = np.einsum("ij,ij->i", cov_ys, solved[:, :, 1]) / var_y
        r2_a = np.clip(r2_a, 0.0, 1.0)
        r2_y = np.clip(r2_y, 0.0, 1.0)
        return np.sqrt(var_y / v_a * (1.0 - r2_y) * (1.0 - r2_a))

    def export_ground_truth_csv(self, path) -> None:
        """Sidecar CSV: unit_id, y_a0..y_a{K-1}, oracle_action."""
        import csv

        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            k = self.config.k_actions
            writer.writerow(
                ["unit_id"] + [f"y_a{a}" for a in range(k)] + ["oracle_action"]
            )
            for i in range(self.experiment.n_units):
                writer.writerow(
                    [i]
                    + [repr(float(v)) for v in self.potential_outcomes[i]]
                    + [int(self.oracle_policy[i])]
                )


def generate(cfg: DgpConfig) -> SimData:
    """Draw a complete simulated experiment plus matched historical data."""
    if cfg.horizon_windows is not None:
        from .validation import generate_horizon

        return generate_horizon(cfg)
    coef = _draw_coefficients(cfg)
    rng = np.random.default_rng(derive_seed(cfg.seed, "draw"))
    n, k, dim_s = cfg.n_units, cfg.k_actions, cfg.dim_s

    x = rng.normal(size=(n, cfg.dim_x))
    segment = rng.choice(len(SEGMENT_LEVELS), size=n, p=SEGMENT_PROBS)
    x_enc = _encode_x(x, segment)
    u = rng.normal(size=n)
    nu = rng.normal(size=(n, dim_s))
    eps = rng.normal(size=n)

    psi = _effect_profiles(cfg, coef, x)
    s_base = (
        x_enc @ coef.surrogate_loadings.T
        + u[:, None] * coef.confounder_loadings[None, :]
        + cfg.noise_s * nu
    )
    potential_surrogates = (
        s_base[:, None, :] + psi[:, :, None] * coef.effect_directions[None, None, :]
    )
    base = _baseline(coef, x, x_enc)
    direct = np.zeros(k)
    direct[1:] = 1.0
    potential_outcomes = (
        potential_surrogates @ coef.outcome_loadings
        + base[:, None]
        + cfg.surrogacy_violation * direct[None, :]
        + cfg.noise_y * eps[:, None]
    )
    oracle_cates = np.zeros((n, k))
    oracle_cates[:, 1:] = psi[:, 1:] + cfg.surrogacy_violation
    oracle_policy = np.argmax(oracle_cates, axis=1)

    propensities = _design_propensities(cfg, coef, x)
    uniforms = rng.random(n)
    actions = (uniforms[:, None] > np.cumsum(propensities, axis=1)).sum(axis=1)
    actions = np.minimum(actions, k - 1)
    realized_s = potential_surrogates[np.arange(n), actions]

    experiment = ExperimentalDataset(
        features=_feature_table(x, segment),
        actions=actions,
        surrogates=_surrogate_table(realized_s),
        propensities=propensities,
        k_actions=k,
    )

    m = cfg.n_historical
    xh = rng.normal(size=(m, cfg.dim_x))
    seg_h = rng.choice(len(SEGMENT_LEVELS), size=m, p=SEGMENT_PROBS)
    xh_enc = _encode_x(xh, seg_h)
    uh = rng.normal(size=m)
    nuh = rng.normal(size=(m, dim_s))
    eps_h = rng.normal(size=m)
    s_hist = (
        xh_enc @ coef.surrogate_loadings.T
        + uh[:, None] * coef.confounder_loadings[None, :]
        + cfg.noise_s * nuh
    )
    y_hist = (
        s_hist @ coef.outcome_loadings
        + _baseline(coef, xh, xh_enc)
        + cfg.comparability_drift * _drift_shift(s_hist, xh)
        + cfg.noise_y * eps_h
    )
    historical = HistoricalDataset(
        features=_feature_table(xh, seg_h),
        surrogates=_surrogate_table(s_hist),
        outcomes=y_hist,
    )

    return SimData(
        config=cfg,
        coefficients=coef,
        historical=historical,
        experiment=experiment,
        potential_outcomes=potential_outcomes,
        potential_surrogates=potential_surrogates,
        oracle_cates=oracle_cates,
        oracle_policy=oracle_policy,
        x_continuous=x,
        x_encoded=x_enc,
    )
