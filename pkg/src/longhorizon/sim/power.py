"""Power simulation for churn experiments and the design-vs-uniform study.

Potential outcomes are churn risks/indicators; treatment assignment is
either the garbled-risk design policy or uniform randomization. The test
for the power calculation is a two-sided z-test on the IPW ATT, with the
variance from the standard linearization of the two normalized weighted
means (reported uncertainty elsewhere in the package stays
bootstrap-based; this internal statistic only drives significance calls).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, DataError
from ..explore import DesignPolicyConfig, design_policy_from_risk
from ..seeds import derive_seed

__all__ = [
    "PowerConfig",
    "PowerCell",
    "power_simulation",
    "DesignVsUniformResult",
    "design_vs_uniform",
    "calibrate_threshold",
]

_Z_CLIP = 1e-12


@dataclass(frozen=True)
class PowerConfig:
    """One cell of the power grid."""

    q: float  # fraction targeted
    tau_effect: float  # flip probability for treated churners
    n_reps: int = 100
    alpha: float = 0.05
    assignment: str = "design"  # or "uniform"

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ConfigError("q must be in (0, 1)")
        if not 0.0 <= self.tau_effect <= 1.0:
            raise ConfigError("tau_effect must be in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must be in (0, 1)")
        if self.n_reps < 1:
            raise ConfigError("n_reps must be >= 1")
        if self.assignment not in ("design", "uniform"):
            raise ConfigError("assignment must be 'design' or 'uniform'")


def calibrate_threshold(
    risk: np.ndarray, q: float, sigma: float = 0.003, cap: float = 0.5
) -> DesignPolicyConfig:
    """Find the garbling threshold so the mean treat probability equals q."""
    risk = np.asarray(risk, dtype=np.float64)
    lo, hi = -1.0, 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        cfg = DesignPolicyConfig(sigma=sigma, tau=mid, cap=cap)
        mean_p = design_policy_from_risk(risk, cfg).probs[:, 1].mean()
        if mean_p > q:
            lo = mid
        else:
            hi = mid
    return DesignPolicyConfig(sigma=sigma, tau=0.5 * (lo + hi), cap=cap)


def _weighted_mean_and_var(y: np.ndarray, w: np.ndarray):
    total = w.sum()
    mean = float(np.sum(w * y) / total)
    var = float(np.sum((w * (y - mean)) ** 2) / total**2)
    return mean, var


def _att_z(y: np.ndarray, treated: np.ndarray, p1: np.ndarray) -> float:
    """z statistic of the IPW ATT (treated weight 1, controls p1/(1-p1))."""
    t = treated.astype(bool)
    if t.sum() == 0 or (~t).sum() == 0:
        return 0.0
    m1, v1 = _weighted_mean_and_var(y[t], np.ones(int(t.sum())))
    w0 = p1[~t] / (1.0 - p1[~t])
    m0, v0 = _weighted_mean_and_var(y[~t], w0)
    return (m1 - m0) / max(np.sqrt(v1 + v0), _Z_CLIP)


@dataclass
class PowerCell:
    """Simulated power for one (q, tau) cell."""

    config: PowerConfig
    power: float
    mean_att: float
    true_att: float
    n_treated_mean: float


def power_simulation(
    base_outcomes: np.ndarray,
    risk: np.ndarray,
    cfg: PowerConfig,
    seed: int = 0,
    design_sigma: float = 0.05,
    design_cap: float = 0.5,
) -> PowerCell:
    """Fraction of simulated experiments with a significant IPW ATT.

    Treated churners flip to non-churn with probability ``tau_effect``;
    never-churners stay at zero (the treatment cannot increase churn).
    The potential-outcome schedule is drawn once per cell; each rep
    redraws only the assignment. Flip uniforms are shared across cells
    through the seed chain, so power is monotone in the effect size by
    construction.
    """
    y0 = np.asarray(base_outcomes, dtype=np.float64)
    risk = np.asarray(risk, dtype=np.float64)
    if y0.shape != risk.shape:
        raise DataError("base outcomes and risk scores must align")
    if not np.all(np.isin(y0, (0.0, 1.0))):
        raise DataError("base outcomes must be binary churn indicators")
    if y0.sum() == 0:
        raise DataError("no churners in the base outcomes; power undefined")
    n = y0.size

    flip_rng = np.random.default_rng(derive_seed(seed, "power-flips"))
    flip_u = flip_rng.random(n)
    y1 = np.where((y0 == 1.0) & (flip_u < cfg.tau_effect), 0.0, y0)
    true_att_pool = y1 - y0  # nonpositive by construction

    if cfg.assignment == "design":
        policy_cfg = calibrate_threshold(risk, cfg.q, sigma=design_sigma, cap=design_cap)
        p1 = design_policy_from_risk(risk, policy_cfg).probs[:, 1]
    else:
        p1 = np.full(n, cfg.q)

    z_crit = _normal_quantile(1.0 - cfg.alpha / 2.0)
    significant = 0
    atts, true_atts, n_treated = [], [], []
    for rep in range(cfg.n_reps):
        rng = np.random.default_rng(derive_seed(seed, "power-assign", rep))
        treated = rng.random(n) < p1
        t = treated.astype(bool)
        if not t.any() or t.all():
            continue
        y = np.where(t, y1, y0)
        z = _att_z(y, t, p1)
        if abs(z) > z_crit:
            significant += 1
        m0 = _weighted_mean_and_var(y[~t], p1[~t] / (1.0 - p1[~t]))[0]
        atts.append(float(y[t].mean() - m0))
        true_atts.append(float(true_att_pool[t].mean()))
        n_treated.append(int(t.sum()))
    return PowerCell(
        config=cfg,
        power=significant / cfg.n_reps,
        mean_att=float(np.mean(atts)) if atts else 0.0,
        true_att=float(np.mean(true_atts)) if true_atts else 0.0,
        n_treated_mean=float(np.mean(n_treated)) if n_treated else 0.0,
    )


def _normal_quantile(p: float) -> float:
    """Inverse standard normal CDF (Acklam's rational approximation)."""
    if not 0.0 < p < 1.0:
        raise ConfigError("quantile level must be in (0, 1)")
    a = [-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00]
    b = [-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01]
    c = [-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00]
    d = [7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00]
    p_low = 0.02425
    if p < p_low:
        q = np.sqrt(-2.0 * np.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0
        )
    if p > 1.0 - p_low:
        return -_normal_quantile(1.0 - p)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
        ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    )


@dataclass
class DesignVsUniformResult:
    """Aggregates of the risk-targeting vs uniform assignment comparison."""

    q_negative: float
    n_reps: int
    mean_churn_design: float
    mean_churn_uniform: float
    median_churn_gap: float  # median over reps of (design - uniform)
    ate_error_design: float  # mean over reps of (estimate - true ATE)
    ate_error_uniform: float
    ate_se_design: float  # MC standard error of the mean error
    ate_se_uniform: float
    frac_treated_design: float
    frac_treated_uniform: float


def _hajek_ate(y: np.ndarray, treated: np.ndarray, p1: np.ndarray) -> float:
    t = treated.astype(bool)
    w1 = 1.0 / p1[t]
    w0 = 1.0 / (1.0 - p1[~t])
    return float(np.sum(w1 * y[t]) / w1.sum() - np.sum(w0 * y[~t]) / w0.sum())


def design_vs_uniform(
    risk: np.ndarray,
    q_negative: float,
    n_reps: int = 1000,
    seed: int = 0,
    treat_fraction: float = 0.01,
    positivity_floor: float = 5e-3,
) -> DesignVsUniformResult:
    """Compare risk-proportional and uniform assignment at a fixed budget.

    Per replication the treated potential outcome is drawn uniformly
    below the baseline risk (beneficial) or, with probability
    ``q_negative``, uniformly above it (harmful). Both policies treat
    about ``treat_fraction`` of units; realized churn and Hajek ATE
    estimates are recorded against the schedule's true ATE. The floor on
    design-policy propensities keeps the IPW weights bounded; it nudges
    the treated fraction upward by a fraction of a percent.
    """
    risk = np.asarray(risk, dtype=np.float64)
    if np.any(risk <= 0.0) or np.any(risk >= 1.0):
        raise DataError("risk values must lie strictly inside (0, 1)")
    if not 0.0 <= q_negative <= 1.0:
        raise ConfigError("q_negative must be in [0, 1]")
    n = risk.size
    floor = min(positivity_floor, treat_fraction)
    p_design = np.clip(treat_fraction * risk / risk.mean(), floor, 0.99)
    p_uniform = np.full(n, treat_fraction)

    churn_d, churn_u, err_d, err_u, frac_d, frac_u, gaps = [], [], [], [], [], [], []
    for rep in range(n_reps):
        rng = np.random.default_rng(derive_seed(seed, "design-vs-uniform", rep))
        harmful = rng.random(n) < q_negative
        u = rng.random(n)
        y0 = risk
        y1 = np.where(harmful, y0 + u * (1.0 - y0), u * y0)
        true_ate = float(np.mean(y1 - y0))
        treated_d = rng.random(n) < p_design
        treated_u = rng.random(n) < p_uniform
        yd = np.where(treated_d, y1, y0)
        yu = np.where(treated_u, y1, y0)
        churn_d.append(float(yd.mean()))
        churn_u.append(float(yu.mean()))
        gaps.append(float(yd.mean() - yu.mean()))
        if treated_d.any() and (~treated_d).any():
            err_d.append(_hajek_ate(yd, treated_d, p_design) - true_ate)
        if treated_u.any() and (~treated_u).any():
            err_u.append(_hajek_ate(yu, treated_u, p_uniform) - true_ate)
        frac_d.append(float(treated_d.mean()))
        frac_u.append(float(treated_u.mean()))

    err_d, err_u = np.asarray(err_d), np.asarray(err_u)
    return DesignVsUniformResult(
        q_negative=q_negative,
        n_reps=n_reps,
        mean_churn_design=float(np.mean(churn_d)),
        mean_churn_uniform=float(np.mean(churn_u)),
        median_churn_gap=float(np.median(gaps)),
        ate_error_design=float(err_d.mean()),
        ate_error_uniform=float(err_u.mean()),
        ate_se_design=float(err_d.std(ddof=1) / np.sqrt(err_d.size)),
        ate_se_uniform=float(err_u.std(ddof=1) / np.sqrt(err_u.size)),
        frac_treated_design=float(np.mean(frac_d)),
        frac_treated_uniform=float(np.mean(frac_u)),
    )
