import numpy as np
import pytest

from longhorizon.errors import ConfigError
from longhorizon.sim import DgpConfig, generate, validation_experiment
from longhorizon.sim.validation import generate_horizon


@pytest.fixture(scope="module")
def horizon_cfg():
    return DgpConfig(
        n_units=4000, n_historical=4000, k_actions=2, dim_x=3,
        horizon_windows=5, seed=5,
    )


@pytest.fixture(scope="module")
def report(horizon_cfg):
    return validation_experiment(
        horizon_cfg, horizons=[1, 2, 3, 5], bootstrap_replicates=200, seed=9
    )


def test_generate_dispatches_on_horizon_windows(horizon_cfg):
    sim = generate(horizon_cfg)
    assert sim.experiment.surrogates.names == tuple(
        [f"rev_c{m}" for m in range(1, 6)] + [f"eng_c{m}" for m in range(1, 6)]
    )
    # the outcome is the final cumulative revenue window, exactly
    rows = np.arange(sim.experiment.n_units)
    realized_last_rev = sim.experiment.surrogates.column("rev_c5")
    np.testing.assert_array_equal(realized_last_rev, sim.realized_outcomes)


def test_horizon_schedule_has_bimodal_cates(horizon_cfg):
    sim = generate_horizon(horizon_cfg)
    cates = sim.oracle_cates[:, 1]
    responders = sim.x_continuous[:, 0] > 0
    assert np.all(cates[responders] > 0)
    assert np.all(cates[~responders] < 0)


def test_degenerate_horizon_policies_identical(report):
    last = report.rows[-1]
    assert last.horizon == 5
    assert last.value_diff_oracle == pytest.approx(0.0, abs=1e-12)
    assert last.agreement_rate == 1.0
    # the surrogate set contains the outcome itself: imputation-based and
    # proxy-based policies coincide with the true-outcome policy
    assert last.value_si_oracle == pytest.approx(last.value_proxy_oracle, abs=1e-12)


def test_adversarial_proxy_strictly_worse_early(report):
    for row in report.rows:
        if row.horizon <= 2:
            assert row.value_si_oracle > row.value_proxy_oracle + 0.3


def test_early_att_biased_then_converges(report):
    by_h = {r.horizon: r for r in report.rows}
    assert abs(by_h[1].att_surrogate.point - by_h[1].att_true.point) > 0.2
    assert abs(by_h[3].att_surrogate.point - by_h[3].att_true.point) < 0.1


def test_value_difference_ci_contains_zero_at_adequate_horizon(report):
    for row in report.rows:
        if row.horizon >= 2:
            assert row.value_diff.ci_low <= 0.0 <= row.value_diff.ci_high


def test_si_policy_beats_status_quo(report):
    for row in report.rows:
        if row.horizon >= 2:
            assert row.value_si_oracle > 0.5
            assert row.value_si.ci_low > 0.0


def test_surrogate_set_comparison_reported(report):
    for row in report.rows:
        assert set(row.set_values_oracle) == {"consumption", "revenue", "both"}


def test_horizon_out_of_range_rejected(horizon_cfg):
    with pytest.raises(ConfigError, match="horizons"):
        validation_experiment(horizon_cfg, horizons=[7], bootstrap_replicates=200)
    with pytest.raises(ConfigError, match="horizons"):
        validation_experiment(horizon_cfg, horizons=[0], bootstrap_replicates=200)


def test_validation_requires_horizon_config():
    with pytest.raises(ConfigError, match="horizon_windows"):
        validation_experiment(DgpConfig(seed=1), horizons=[1])


def test_report_csv_shape(tmp_path, report):
    path = tmp_path / "report.csv"
    report.write_csv(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1 + len(report.rows)
    assert lines[0].startswith("horizon,att_si")
