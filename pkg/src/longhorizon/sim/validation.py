"""Horizon-sweep validation harness.

A dedicated DGP emits two families of cumulative surrogate windows,
engagement and revenue, with the long-term outcome equal to the full-span
cumulative revenue. The treatment hits revenue negatively up front (the
discount) and engagement positively for responders; later revenue flows
from early engagement. Short-horizon revenue is therefore an adversarial
proxy: its treatment effect has the opposite sign of the long-term
effect for responders. At the degenerate horizon the surrogate set
contains the outcome itself, so imputation is exact.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ..data import ExperimentalDataset, HistoricalDataset, Table
from ..errors import ConfigError
from ..learners import LearnerSpec
from ..ope import (
    PolicySnapshot,
    bootstrap_ci,
    fit_crossfit_outcome_model,
    importance_weights,
)
from ..policy import dr_scores, learn_policy_binary, policy_assign
from ..seeds import derive_seed
from ..surrogate import fit_surrogate_index, impute
from .dgp import (
    SEGMENT_LEVELS,
    SEGMENT_PROBS,
    DgpConfig,
    SimData,
    _encode_x,
    _feature_table,
)

__all__ = ["generate_horizon", "validation_experiment", "ValidationReport", "HorizonRow"]

DISCOUNT = 1.0
ENGAGEMENT_LIFT = 2.0


def _window_columns(m_windows: int):
    rev = [f"rev_c{m}" for m in range(1, m_windows + 1)]
    eng = [f"eng_c{m}" for m in range(1, m_windows + 1)]
    return rev, eng


def generate_horizon(cfg: DgpConfig) -> SimData:
    """Simulate cumulative-window surrogates with ground truth (binary actions)."""
    if cfg.k_actions != 2:
        raise ConfigError("the horizon DGP is binary-action")
    m_windows = cfg.horizon_windows
    if m_windows is None:
        raise ConfigError("horizon_windows must be set for the horizon DGP")
    # later-revenue flow per unit of early engagement, sized so responders
    # gain effect_gap*2 net of the 2-window discount cost
    omega = (2.0 * DISCOUNT + 2.0 * cfg.effect_gap) / ((m_windows - 2) * ENGAGEMENT_LIFT)
    rng = np.random.default_rng(derive_seed(cfg.seed, "horizon-draw"))

    def draw_block(n, treated_only_schedule):
        x = rng.normal(size=(n, cfg.dim_x))
        segment = rng.choice(len(SEGMENT_LEVELS), size=n, p=SEGMENT_PROBS)
        u = rng.normal(size=n)
        responder = (x[:, 0] > 0.0).astype(np.float64)
        x2 = x[:, 1] if cfg.dim_x >= 2 else np.zeros(n)
        noise_e = rng.normal(size=(n, m_windows))
        noise_r = rng.normal(size=(n, m_windows))
        eng_inc = np.zeros((n, 2, m_windows))
        rev_inc = np.zeros((n, 2, m_windows))
        for a in (0, 1):
            eng_inc[:, a, 0] = (
                1.0 + 0.4 * x2 + ENGAGEMENT_LIFT * responder * a
                + 0.5 * u + 0.6 * noise_e[:, 0]
            )
            for w in range(1, m_windows):
                eng_inc[:, a, w] = 0.8 + 0.3 * x2 + 0.05 * noise_e[:, w]
            for w in range(m_windows):
                base = 1.0 + 0.2 * x2 + 0.25 * noise_r[:, w]
                if w < 2:
                    rev_inc[:, a, w] = base + 0.4 * u - DISCOUNT * a
                else:
                    rev_inc[:, a, w] = base + omega * eng_inc[:, a, 0]
        eng_cum = np.cumsum(eng_inc, axis=2)
        rev_cum = np.cumsum(rev_inc, axis=2)
        return x, segment, responder, eng_cum, rev_cum

    x, segment, responder, eng_cum, rev_cum = draw_block(cfg.n_units, True)
    potential_surrogates = np.concatenate([rev_cum, eng_cum], axis=2)  # (n, 2, 2M)
    potential_outcomes = rev_cum[:, :, -1].copy()
    oracle_cates = np.zeros((cfg.n_units, 2))
    oracle_cates[:, 1] = potential_outcomes[:, 1] - potential_outcomes[:, 0]
    oracle_policy = np.argmax(oracle_cates, axis=1)

    x2 = x[:, 1] if cfg.dim_x >= 2 else np.zeros(cfg.n_units)
    treat_p = 0.05 + 0.45 / (1.0 + np.exp(-(0.4 * x2 + 0.2 * x[:, 0])))
    propensities = np.column_stack([1.0 - treat_p, treat_p])
    actions = (rng.random(cfg.n_units) < treat_p).astype(np.int64)

    rev_names, eng_names = _window_columns(m_windows)
    names = rev_names + eng_names
    realized = potential_surrogates[np.arange(cfg.n_units), actions]
    surrogates = Table(
        [(names[j], "float", realized[:, j]) for j in range(len(names))]
    )
    experiment = ExperimentalDataset(
        features=_feature_table(x, segment),
        actions=actions,
        surrogates=surrogates,
        propensities=propensities,
        k_actions=2,
    )

    xh, seg_h, _, eng_h, rev_h = draw_block(cfg.n_historical, False)
    hist_s = np.concatenate([rev_h[:, 0, :], eng_h[:, 0, :]], axis=1)
    y_hist = rev_h[:, 0, -1].copy()
    if cfg.comparability_drift != 0.0:
        y_hist = y_hist + cfg.comparability_drift * (
            hist_s.mean(axis=1) + 0.5 * xh[:, 0]
        )
    historical = HistoricalDataset(
        features=_feature_table(xh, seg_h),
        surrogates=Table(
            [(names[j], "float", hist_s[:, j]) for j in range(len(names))]
        ),
        outcomes=y_hist,
    )

    from .dgp import _draw_coefficients

    return SimData(
        config=cfg,
        coefficients=_draw_coefficients(cfg),
        historical=historical,
        experiment=experiment,
        potential_outcomes=potential_outcomes,
        potential_surrogates=potential_surrogates,
        oracle_cates=oracle_cates,
        oracle_policy=oracle_policy,
        x_continuous=x,
        x_encoded=_encode_x(x, segment),
    )


@dataclass
class HorizonRow:
    """Per-horizon panel values of the validation experiment."""

    horizon: int
    att_surrogate: object  # ValueEstimate with CI
    att_true: object
    value_si: object  # DR value of the imputed-outcome policy vs treat-none
    value_si_oracle: float
    value_proxy: object
    value_proxy_oracle: float
    value_diff: object  # imputed-outcome policy minus true-outcome policy
    value_diff_oracle: float
    agreement_rate: float
    set_values_oracle: dict  # {"consumption": v, "revenue": v, "both": v}


@dataclass
class ValidationReport:
    rows: list
    status_quo_value: float
    true_policy_value_oracle: float
    n_units: int
    seed: int

    def write_csv(self, path) -> None:
        header = [
            "horizon",
            "att_si", "att_si_lo", "att_si_hi",
            "att_true", "att_true_lo", "att_true_hi",
            "value_si", "value_si_lo", "value_si_hi", "value_si_oracle",
            "value_proxy", "value_proxy_lo", "value_proxy_hi", "value_proxy_oracle",
            "value_diff", "value_diff_lo", "value_diff_hi", "value_diff_oracle",
            "agreement_rate",
            "set_consumption_oracle", "set_revenue_oracle", "set_both_oracle",
        ]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(header)
            for r in self.rows:
                writer.writerow(
                    [r.horizon]
                    + [repr(v) for v in (
                        r.att_surrogate.point, r.att_surrogate.ci_low, r.att_surrogate.ci_high,
                        r.att_true.point, r.att_true.ci_low, r.att_true.ci_high,
                        r.value_si.point, r.value_si.ci_low, r.value_si.ci_high,
                        r.value_si_oracle,
                        r.value_proxy.point, r.value_proxy.ci_low, r.value_proxy.ci_high,
                        r.value_proxy_oracle,
                        r.value_diff.point, r.value_diff.ci_low, r.value_diff.ci_high,
                        r.value_diff_oracle,
                        r.agreement_rate,
                        r.set_values_oracle["consumption"],
                        r.set_values_oracle["revenue"],
                        r.set_values_oracle["both"],
                    )]
                )


def _dr_contributions(exp, outcomes, snapshot, mu_matrix) -> np.ndarray:
    w = importance_weights(exp, snapshot)
    base = np.sum(snapshot.probs * mu_matrix, axis=1)
    observed = mu_matrix[np.arange(exp.n_units), exp.actions]
    return base + w * (outcomes - observed)


def _diff_ci(contrib_a, contrib_b, B, level, seed) -> "object":
    from ..ope import ValueEstimate

    diff = contrib_a - contrib_b
    point = float(diff.mean())
    rng = np.random.default_rng(derive_seed(seed, "diff-boot"))
    n = diff.size
    reps = np.empty(B)
    chunk = max(1, int(4e6 // max(n, 1)))
    done = 0
    while done < B:
        take = min(chunk, B - done)
        idx = rng.integers(0, n, size=(take, n))
        reps[done : done + take] = diff[idx].mean(axis=1)
        done += take
    alpha = 1.0 - level
    lo, hi = np.quantile(reps, [alpha / 2.0, 1.0 - alpha / 2.0])
    return ValueEstimate(
        point=point,
        estimator="dr",
        n_effective=float(n),
        std_error=float(np.std(reps, ddof=1)),
        ci_low=float(lo),
        ci_high=float(hi),
        ci_level=level,
    )


def _restrict(sim: SimData, columns):
    hist = HistoricalDataset(
        features=sim.historical.features,
        surrogates=sim.historical.surrogates.select(columns),
        outcomes=sim.historical.outcomes,
    )
    exp = ExperimentalDataset(
        features=sim.experiment.features,
        actions=sim.experiment.actions,
        surrogates=sim.experiment.surrogates.select(columns),
        propensities=sim.experiment.propensities,
        k_actions=sim.experiment.k_actions,
    )
    return hist, exp


def validation_experiment(
    cfg: DgpConfig,
    horizons,
    surrogate_spec: LearnerSpec | None = None,
    outcome_spec: LearnerSpec | None = None,
    classifier_spec: LearnerSpec | None = None,
    test_fraction: float = 0.2,
    n_folds: int = 3,
    bootstrap_replicates: int = 400,
    level: float = 0.95,
    seed: int = 0,
) -> ValidationReport:
    """Run the horizon sweep: imputation quality, policy values, agreement.

    For each horizon H the surrogate set is every cumulative revenue and
    engagement window up to H. Policies are learned on a train split and
    evaluated on the test split with the doubly-robust estimator on the
    realized long-term outcome; oracle values use the potential-outcome
    schedule over the full population.
    """
    if cfg.horizon_windows is None:
        raise ConfigError("cfg.horizon_windows must be set for validation")
    horizons = sorted(set(int(h) for h in horizons))
    if horizons[0] < 1 or horizons[-1] > cfg.horizon_windows:
        raise ConfigError(
            f"horizons must lie in 1..{cfg.horizon_windows}, got {horizons}"
        )
    if outcome_spec is None:
        outcome_spec = LearnerSpec("ridge_linear", {"l2_penalty": 1e-8})
    if classifier_spec is None:
        classifier_spec = LearnerSpec("cart_tree", {"depth": 2})

    sim = generate_horizon(cfg)
    exp = sim.experiment
    y_true = sim.realized_outcomes
    n = exp.n_units
    rng = np.random.default_rng(derive_seed(seed, "validation-split"))
    order = rng.permutation(n)
    n_test = int(round(test_fraction * n))
    test_idx, train_idx = order[:n_test], order[n_test:]
    exp_train, exp_test = exp.take(train_idx), exp.take(test_idx)
    y_true_train, y_true_test = y_true[train_idx], y_true[test_idx]

    # evaluation-side nuisance: cross-fit outcome model on the test split
    mu_test = fit_crossfit_outcome_model(
        exp_test, y_true_test, outcome_spec, n_folds, derive_seed(seed, "mu-test")
    ).oof_matrix
    treat_none_test = PolicySnapshot.constant(0, exp_test.n_units, 2)
    none_contrib = _dr_contributions(exp_test, y_true_test, treat_none_test, mu_test)
    status_quo_value = float(np.mean(sim.potential_outcomes[:, 0]))

    def learn_on(outcomes_train, label):
        mu = fit_crossfit_outcome_model(
            exp_train, outcomes_train, outcome_spec, n_folds,
            derive_seed(seed, "mu-train", label),
        )
        scores = dr_scores(exp_train, outcomes_train, mu)
        return learn_policy_binary(scores, exp_train.features, classifier_spec)

    # reference policy learned on the realized long-term outcome
    policy_true = learn_on(y_true_train, "true")
    snap_true_test = policy_assign(policy_true, exp_test.features)
    snap_true_full = policy_assign(policy_true, exp.features)
    true_contrib = _dr_contributions(exp_test, y_true_test, snap_true_test, mu_test)
    true_policy_value_oracle = sim.true_policy_value(snap_true_full)

    rev_names, eng_names = _window_columns(cfg.horizon_windows)
    rows = []
    for h in horizons:
        rev_h, eng_h = rev_names[:h], eng_names[:h]
        both_cols = rev_h + eng_h
        hist_h, exp_h = _restrict(sim, both_cols)
        model = fit_surrogate_index(hist_h, surrogate_spec)
        y_tilde = impute(model, exp_h)

        att_si = bootstrap_ci(
            "att", exp, y_tilde, B=bootstrap_replicates, level=level,
            seed=derive_seed(seed, "att-si", h),
        )
        att_true = bootstrap_ci(
            "att", exp, y_true, B=bootstrap_replicates, level=level,
            seed=derive_seed(seed, "att-true", h),
        )

        policy_si = learn_on(y_tilde[train_idx], f"si-{h}")
        snap_si_test = policy_assign(policy_si, exp_test.features)
        snap_si_full = policy_assign(policy_si, exp.features)
        si_contrib = _dr_contributions(exp_test, y_true_test, snap_si_test, mu_test)
        value_si = _diff_ci(
            si_contrib, none_contrib, bootstrap_replicates, level,
            derive_seed(seed, "vsi", h),
        )
        value_si_oracle = sim.true_policy_value(snap_si_full) - status_quo_value

        proxy = exp.surrogates.column(rev_names[h - 1])
        policy_proxy = learn_on(proxy[train_idx], f"proxy-{h}")
        snap_proxy_test = policy_assign(policy_proxy, exp_test.features)
        snap_proxy_full = policy_assign(policy_proxy, exp.features)
        proxy_contrib = _dr_contributions(
            exp_test, y_true_test, snap_proxy_test, mu_test
        )
        value_proxy = _diff_ci(
            proxy_contrib, none_contrib, bootstrap_replicates, level,
            derive_seed(seed, "vproxy", h),
        )
        value_proxy_oracle = sim.true_policy_value(snap_proxy_full) - status_quo_value

        value_diff = _diff_ci(
            si_contrib, true_contrib, bootstrap_replicates, level,
            derive_seed(seed, "vdiff", h),
        )
        value_diff_oracle = sim.true_policy_value(snap_si_full) - true_policy_value_oracle
        agreement = float(
            np.mean(snap_si_test.actions() == snap_true_test.actions())
        )

        set_values = {}
        for set_name, cols in (
            ("consumption", eng_h),
            ("revenue", rev_h),
            ("both", both_cols),
        ):
            hist_s, exp_s = _restrict(sim, cols)
            m_s = fit_surrogate_index(hist_s, surrogate_spec)
            y_s = impute(m_s, exp_s)
            pol_s = learn_on(y_s[train_idx], f"set-{set_name}-{h}")
            snap_s_full = policy_assign(pol_s, exp.features)
            set_values[set_name] = (
                sim.true_policy_value(snap_s_full) - status_quo_value
            )

        rows.append(
            HorizonRow(
                horizon=h,
                att_surrogate=att_si,
                att_true=att_true,
                value_si=value_si,
                value_si_oracle=value_si_oracle,
                value_proxy=value_proxy,
                value_proxy_oracle=value_proxy_oracle,
                value_diff=value_diff,
                value_diff_oracle=value_diff_oracle,
                agreement_rate=agreement,
                set_values_oracle=set_values,
            )
        )
    return ValidationReport(
        rows=rows,
        status_quo_value=status_quo_value,
        true_policy_value_oracle=true_policy_value_oracle - status_quo_value,
        n_units=n,
        seed=seed,
    )
