import numpy as np
import pytest

from longhorizon.data import Table
from longhorizon.errors import ConfigError
from longhorizon.learners import (
    LearnerSpec,
    accumulated_local_effects,
    fit_regressor,
    permutation_importance,
)

from _oracles import ale_of_linear


@pytest.fixture
def linear_model_with_noise_feature():
    rng = np.random.default_rng(13)
    x1 = rng.normal(size=4000)
    x2 = rng.normal(size=4000)  # true coefficient zero
    table = Table([("x1", "float", x1), ("x2", "float", x2)])
    y = 3.0 * x1 + 0.5 * rng.normal(size=4000)
    model = fit_regressor(LearnerSpec("ridge_linear", {"l2_penalty": 1e-8}), table, y)
    return model, table, y, x1


def test_irrelevant_feature_importance_near_zero(linear_model_with_noise_feature):
    model, table, y, _ = linear_model_with_noise_feature
    imp = permutation_importance(model, table, y, "mse", n_repeats=20, seed=1)
    # fitted coefficient on x2 is O(1/sqrt(n)); permuting it moves the MSE by
    # ~2*coef^2*var(x2), far below 3 MC standard errors of the x1 effect
    assert abs(imp["x2"]) < 0.01
    assert imp["x1"] > 1.0


def test_constant_column_importance_exactly_zero():
    rng = np.random.default_rng(2)
    x = rng.normal(size=100)
    const = np.full(100, 7.0)
    table = Table([("x", "float", x), ("c", "float", const)])
    y = x.copy()
    model = fit_regressor(LearnerSpec("ridge_linear"), table, y)
    imp = permutation_importance(model, table, y, "mse", n_repeats=5, seed=3)
    assert imp["c"] == 0.0


def test_single_feature_importance_matches_analytic_increase():
    # for y = x fit perfectly, E[(x_perm - x)^2] = 2 var(x), so the MSE
    # increase after permutation concentrates near 2 var(x)
    rng = np.random.default_rng(5)
    x = rng.normal(size=6000)
    table = Table([("x", "float", x)])
    model = fit_regressor(LearnerSpec("ridge_linear", {"l2_penalty": 0.0}), table, x)
    imp = permutation_importance(model, table, x, "mse", n_repeats=30, seed=7)
    assert imp["x"] == pytest.approx(2.0 * np.var(x), rel=0.05)
    assert imp["x"] > 0.0


def test_importance_requires_positive_repeats(linear_model_with_noise_feature):
    model, table, y, _ = linear_model_with_noise_feature
    with pytest.raises(ConfigError):
        permutation_importance(model, table, y, "mse", n_repeats=0, seed=0)


def test_misclassification_metric():
    from longhorizon.learners import fit_classifier

    rng = np.random.default_rng(11)
    x = rng.normal(size=500)
    noise = rng.normal(size=500)
    table = Table([("x", "float", x), ("z", "float", noise)])
    labels = (x > 0).astype(int)
    model = fit_classifier(LearnerSpec("logistic"), table, labels)
    imp = permutation_importance(model, table, labels, "misclassification", 10, seed=2)
    assert imp["x"] > 0.2
    assert abs(imp["z"]) < 0.05


def test_ale_linear_function_slope(xy_table):
    table, x1, x2 = xy_table
    model = fit_regressor(LearnerSpec("ridge_linear", {"l2_penalty": 0.0}), table, 3.0 * x1)
    centers, values = accumulated_local_effects(model, table, "x1", n_bins=10)
    slope = np.polyfit(centers, values, 1)[0]
    assert slope == pytest.approx(3.0, abs=1e-8)
    # full curve matches the analytic centered ALE
    counts = np.histogram(x1, np.quantile(x1, np.linspace(0, 1, 11)))[0]
    np.testing.assert_allclose(values, ale_of_linear(3.0, centers, counts), atol=1e-8)


def test_ale_of_irrelevant_feature_is_flat(xy_table):
    table, x1, x2 = xy_table
    model = fit_regressor(LearnerSpec("ridge_linear", {"l2_penalty": 0.0}), table, 3.0 * x1)
    _, values = accumulated_local_effects(model, table, "x2", n_bins=10)
    np.testing.assert_allclose(values, 0.0, atol=1e-10)


def test_ale_is_count_weighted_centered(xy_table):
    table, x1, _ = xy_table
    rng = np.random.default_rng(1)
    y = np.maximum(x1, 0.0) + 0.1 * rng.normal(size=table.n_rows)
    model = fit_regressor(LearnerSpec("cart_tree", {"depth": 4}), table, y)
    centers, values = accumulated_local_effects(model, table, "x1", n_bins=8)
    edges = np.unique(np.quantile(x1, np.linspace(0, 1, 9)))
    counts = np.histogram(x1, edges)[0]
    assert float(np.sum(counts * values)) == pytest.approx(0.0, abs=1e-9)


def test_ale_rejects_constant_focal_feature():
    table = Table([("x", "float", np.zeros(50)), ("z", "float", np.arange(50.0))])
    model = fit_regressor(LearnerSpec("ridge_linear"), table, np.arange(50.0))
    with pytest.raises(ConfigError, match="distinct|zero-width"):
        accumulated_local_effects(model, table, "x", n_bins=4)
