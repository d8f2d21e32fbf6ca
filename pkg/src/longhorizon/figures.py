"""Matplotlib rendering of report series.

Every report subcommand writes its delimited output first; these helpers
render the companion figures next to it. Import is deferred to call time
so headless library use never touches matplotlib.
"""

from __future__ import annotations

import numpy as np

FIGSIZE = (7.0, 4.4)
DPI = 150


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    plt.rcParams.update(
        {
            "figure.figsize": FIGSIZE,
            "axes.grid": True,
            "grid.alpha": 0.3,
            "axes.spines.top": False,
            "axes.spines.right": False,
            "font.size": 10,
        }
    )
    return plt


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    import matplotlib.pyplot as plt

    plt.close(fig)
    return str(path)


def _ci_bars(ax, xs, estimates, color, label):
    points = [e.point for e in estimates]
    lo = [e.point - e.ci_low for e in estimates]
    hi = [e.ci_high - e.point for e in estimates]
    ax.errorbar(
        xs, points, yerr=[lo, hi], fmt="o-", color=color, capsize=3, label=label
    )


def save_validation_panels(report, path) -> str:
    """Four-panel horizon sweep: ATT comparison and policy-value contrasts."""
    plt = _plt()
    rows = report.rows
    xs = [r.horizon for r in rows]
    fig, axes = plt.subplots(2, 2, figsize=(10, 7))

    ax = axes[0, 0]
    _ci_bars(ax, xs, [r.att_surrogate for r in rows], "tab:blue", "imputed outcome")
    last_true = rows[-1].att_true
    ax.axhline(last_true.point, color="tab:gray", lw=1)
    ax.axhline(last_true.ci_low, color="tab:gray", lw=0.8, ls="--")
    ax.axhline(last_true.ci_high, color="tab:gray", lw=0.8, ls="--")
    ax.set_title("(a) ATT: imputed vs true outcome")
    ax.set_xlabel("surrogate horizon")
    ax.legend()

    ax = axes[0, 1]
    _ci_bars(ax, xs, [r.value_si for r in rows], "tab:blue", "estimated")
    ax.plot(xs, [r.value_si_oracle for r in rows], "s--", color="tab:green", label="oracle")
    ax.axhline(0.0, color="tab:gray", lw=1)
    ax.set_title("(b) imputed-outcome policy vs status quo")
    ax.set_xlabel("surrogate horizon")
    ax.legend()

    ax = axes[1, 0]
    _ci_bars(ax, xs, [r.value_proxy for r in rows], "tab:red", "estimated")
    ax.plot(xs, [r.value_proxy_oracle for r in rows], "s--", color="tab:green", label="oracle")
    ax.axhline(0.0, color="tab:gray", lw=1)
    ax.set_title("(c) raw-proxy policy vs status quo")
    ax.set_xlabel("proxy horizon")
    ax.legend()

    ax = axes[1, 1]
    _ci_bars(ax, xs, [r.value_diff for r in rows], "tab:purple", "estimated")
    ax.plot(xs, [r.value_diff_oracle for r in rows], "s--", color="tab:green", label="oracle")
    ax2 = ax.twinx()
    ax2.plot(xs, [r.agreement_rate for r in rows], "^:", color="tab:orange", label="agreement")
    ax2.set_ylim(0.0, 1.05)
    ax2.set_ylabel("action agreement")
    ax.axhline(0.0, color="tab:gray", lw=1)
    ax.set_title("(d) imputed-outcome vs true-outcome policy")
    ax.set_xlabel("surrogate horizon")
    return _save(fig, path)


def save_validation_sets(report, path) -> str:
    """Surrogate-set comparison: consumption-only, revenue-only, both."""
    plt = _plt()
    rows = report.rows
    xs = [r.horizon for r in rows]
    fig, ax = plt.subplots()
    for name, marker in (("consumption", "o"), ("revenue", "s"), ("both", "^")):
        ax.plot(
            xs,
            [r.set_values_oracle[name] for r in rows],
            marker=marker,
            label=f"{name} surrogates",
        )
    ax.axhline(0.0, color="tab:gray", lw=1)
    ax.set_xlabel("surrogate horizon")
    ax.set_ylabel("oracle policy value vs status quo")
    ax.set_title("surrogate-set comparison")
    ax.legend()
    return _save(fig, path)


def save_power_curves(cells, path, power_target: float = 0.8) -> str:
    """Power vs effect size, one line per targeted fraction."""
    plt = _plt()
    fig, ax = plt.subplots()
    by_q = {}
    for cell in cells:
        by_q.setdefault(cell.config.q, []).append(cell)
    for q, group in sorted(by_q.items()):
        group = sorted(group, key=lambda c: c.config.tau_effect)
        ax.plot(
            [c.config.tau_effect for c in group],
            [c.power for c in group],
            "o-",
            label=f"targeted fraction {q:g}",
        )
    if cells:
        ax.axhline(cells[0].config.alpha, color="tab:gray", lw=1, ls=":",
                   label="nominal size")
    ax.axhline(power_target, color="tab:red", lw=1, ls="--", label="power target")
    ax.set_xlabel("effect size (flip probability)")
    ax.set_ylabel("power")
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    return _save(fig, path)


def save_shift_ranges(report, path) -> str:
    """2.5-97.5 percentile ranges per feature for the two datasets."""
    plt = _plt()
    names = list(report.features)
    fig, ax = plt.subplots(figsize=(7.0, max(2.5, 0.45 * len(names) + 1.2)))
    ys = np.arange(len(names), dtype=float)
    for offset, (quantiles, color, label) in enumerate(
        (
            (report.quantiles_d1, "tab:blue", "dataset 1"),
            (report.quantiles_d2, "tab:orange", "dataset 2"),
        )
    ):
        for i, name in enumerate(names):
            lo, hi = quantiles[name]
            ax.plot(
                [lo, hi],
                [ys[i] + 0.12 * (1 - 2 * offset)] * 2,
                color=color,
                lw=3,
                solid_capstyle="butt",
                label=label if i == 0 else None,
            )
    for i, name in enumerate(names):
        if not report.overlap[name]:
            ax.annotate("no overlap", (ax.get_xlim()[1], ys[i]), color="tab:red",
                        fontsize=8, ha="right")
    ax.set_yticks(ys)
    ax.set_yticklabels(names)
    ax.set_xlabel("2.5 to 97.5 percentile range")
    ax.legend(loc="best")
    return _save(fig, path)


def save_design_vs_uniform(results, path) -> str:
    """Mean churn and ATE error under design vs uniform assignment."""
    plt = _plt()
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    qs = [r.q_negative for r in results]
    width = 0.35
    xs = np.arange(len(qs), dtype=float)
    ax1.bar(xs - width / 2, [r.mean_churn_design for r in results], width,
            label="design", color="tab:blue")
    ax1.bar(xs + width / 2, [r.mean_churn_uniform for r in results], width,
            label="uniform", color="tab:orange")
    ax1.set_xticks(xs)
    ax1.set_xticklabels([f"q_neg={q:g}" for q in qs])
    ax1.set_ylabel("mean realized churn")
    ax1.legend()
    ax2.errorbar(xs - 0.05, [r.ate_error_design for r in results],
                 yerr=[3 * r.ate_se_design for r in results], fmt="o",
                 color="tab:blue", capsize=3, label="design")
    ax2.errorbar(xs + 0.05, [r.ate_error_uniform for r in results],
                 yerr=[3 * r.ate_se_uniform for r in results], fmt="s",
                 color="tab:orange", capsize=3, label="uniform")
    ax2.axhline(0.0, color="tab:gray", lw=1)
    ax2.set_xticks(xs)
    ax2.set_xticklabels([f"q_neg={q:g}" for q in qs])
    ax2.set_ylabel("ATE estimation error (3 MC SE bars)")
    ax2.legend()
    return _save(fig, path)


def save_evaluation_bars(estimates: dict, path, title: str = "policy value") -> str:
    """CI bars for named value estimates (e.g. target policy vs baseline)."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    names = list(estimates)
    xs = np.arange(len(names), dtype=float)
    for i, name in enumerate(names):
        est = estimates[name]
        if est.ci_low is not None:
            ax.errorbar(
                [xs[i]], [est.point],
                yerr=[[est.point - est.ci_low], [est.ci_high - est.point]],
                fmt="o", capsize=4, color="tab:blue",
            )
        else:
            ax.plot([xs[i]], [est.point], "o", color="tab:blue")
    ax.set_xticks(xs)
    ax.set_xticklabels(names, rotation=15, ha="right")
    ax.set_title(title)
    return _save(fig, path)
