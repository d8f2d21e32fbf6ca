import json

import numpy as np
import pytest

from longhorizon.data import Table
from longhorizon.errors import ConfigError
from longhorizon.learners import (
    LearnerSpec,
    fit_classifier,
    fit_regressor,
    model_from_dict,
    model_to_dict,
    predict,
    predict_scores,
    select_spec,
)

from _oracles import best_stump

ALL_REG_FAMILIES = ["ridge_linear", "cart_tree", "gradient_boosted_trees", "knn"]
ALL_CLF_FAMILIES = ["logistic", "cart_tree", "gradient_boosted_trees", "knn"]


def _linear_table(n=40, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=n)
    return Table([("x", "float", x)]), x


def test_spec_validation():
    with pytest.raises(ConfigError):
        LearnerSpec("nope")
    with pytest.raises(ConfigError):
        LearnerSpec("cart_tree", {"depth": 0})
    with pytest.raises(ConfigError):
        LearnerSpec("gradient_boosted_trees", {"learning_rate": 1.5})
    with pytest.raises(ConfigError):
        LearnerSpec("knn", {"k": 0})
    with pytest.raises(ConfigError):
        LearnerSpec("ridge_linear", {"l2_penalty": -1.0})
    with pytest.raises(ConfigError):
        LearnerSpec("ridge_linear", {"bogus": 1})


def test_ridge_recovers_noiseless_slope():
    table, x = _linear_table()
    model = fit_regressor(LearnerSpec("ridge_linear", {"l2_penalty": 0.0}), table, 2 * x)
    np.testing.assert_allclose(model.model.coefficients, [2.0], atol=1e-9)
    np.testing.assert_allclose(predict(model, table), 2 * x, atol=1e-9)


@pytest.mark.parametrize("family", ALL_REG_FAMILIES)
def test_constant_target_fits_constant(family):
    table, _ = _linear_table()
    model = fit_regressor(LearnerSpec(family), table, np.full(40, 3.25))
    np.testing.assert_allclose(predict(model, table), 3.25, atol=1e-12)


def test_cart_fits_indicator_exactly():
    x = np.array([-1.0, -1.0, -1.0, 1.0, 1.0, 1.0])
    table = Table([("x", "float", x)])
    y = (x > 0).astype(float)
    model = fit_regressor(LearnerSpec("cart_tree", {"depth": 8}), table, y)
    np.testing.assert_allclose(predict(model, table), y, atol=0)
    # the learned split agrees with the exhaustive single-split oracle
    thr, left_m, right_m, _ = best_stump(x, y)
    node = model.model
    assert node["threshold"] == pytest.approx(thr)
    assert node["left"]["value"] == pytest.approx(left_m)
    assert node["right"]["value"] == pytest.approx(right_m)


def test_empty_and_nonfinite_inputs_rejected():
    table = Table([("x", "float", [])])
    with pytest.raises(ConfigError, match="empty"):
        fit_regressor(LearnerSpec("ridge_linear"), table, [])
    table2, x = _linear_table()
    bad = 2 * x
    bad[0] = np.nan
    with pytest.raises(ConfigError, match="finite"):
        fit_regressor(LearnerSpec("ridge_linear"), table2, bad)


def test_predict_on_empty_table_returns_empty():
    table, x = _linear_table()
    model = fit_regressor(LearnerSpec("ridge_linear"), table, x)
    empty = Table([("x", "float", [])])
    assert predict(model, empty).shape == (0,)


def test_predict_is_name_keyed_not_order_keyed():
    rng = np.random.default_rng(3)
    a, b = rng.normal(size=30), rng.normal(size=30)
    table = Table([("a", "float", a), ("b", "float", b)])
    y = 2 * a - b
    model = fit_regressor(LearnerSpec("ridge_linear"), table, y)
    reordered = Table([("b", "float", b), ("a", "float", a)])
    np.testing.assert_allclose(predict(model, reordered), predict(model, table))


def test_logistic_separable_reaches_full_accuracy():
    table = Table([("x", "float", [-2.0, -1.5, -1.0, 1.0, 1.5, 2.0])])
    labels = np.array([0, 0, 0, 1, 1, 1])
    model = fit_classifier(LearnerSpec("logistic"), table, labels)
    assert np.mean(predict(model, table) == labels) == 1.0


def test_all_weight_on_one_unit_forces_its_label():
    table = Table([("x", "float", [0.0, 1.0, 2.0, 3.0])])
    labels = np.array([1, 0, 1, 0])
    weights = np.array([0.0, 1.0, 0.0, 0.0])
    with pytest.warns(UserWarning):
        model = fit_classifier(LearnerSpec("logistic"), table, labels, weights)
    single = Table([("x", "float", [1.0])])
    assert predict(model, single)[0] == 0


@pytest.mark.parametrize("family", ["logistic", "cart_tree", "gradient_boosted_trees"])
def test_weight_rescaling_leaves_classifier_unchanged(family):
    rng = np.random.default_rng(5)
    x = rng.normal(size=60)
    table = Table([("x", "float", x)])
    labels = (x + 0.3 * rng.normal(size=60) > 0).astype(int)
    w = rng.uniform(0.5, 2.0, size=60)
    m1 = fit_classifier(LearnerSpec(family), table, labels, w)
    m2 = fit_classifier(LearnerSpec(family), table, labels, 2.0 * w)
    assert json.dumps(model_to_dict(m1), sort_keys=True) == json.dumps(
        model_to_dict(m2), sort_keys=True
    )


@pytest.mark.parametrize("family", ["ridge_linear", "logistic"])
def test_duplicated_row_equals_doubled_weight(family):
    rng = np.random.default_rng(9)
    x = rng.normal(size=25)
    table_dup = Table([("x", "float", np.append(x, x[0]))])
    table_w = Table([("x", "float", x)])
    if family == "ridge_linear":
        y = 1.5 * x + rng.normal(size=25) * 0.1
        m_dup = fit_regressor(
            LearnerSpec(family, {"l2_penalty": 0.3}), table_dup, np.append(y, y[0])
        )
        w = np.ones(25)
        w[0] = 2.0
        m_w = fit_regressor(LearnerSpec(family, {"l2_penalty": 0.3}), table_w, y, w)
        np.testing.assert_allclose(
            m_dup.model.coefficients, m_w.model.coefficients, rtol=1e-10
        )
        np.testing.assert_allclose(m_dup.model.intercept, m_w.model.intercept, rtol=1e-10)
    else:
        labels = (x > 0).astype(int)
        m_dup = fit_classifier(
            LearnerSpec(family, {"l2_penalty": 0.5}),
            table_dup,
            np.append(labels, labels[0]),
        )
        w = np.ones(25)
        w[0] = 2.0
        m_w = fit_classifier(LearnerSpec(family, {"l2_penalty": 0.5}), table_w, labels, w)
        np.testing.assert_allclose(
            m_dup.model.coefficients, m_w.model.coefficients, rtol=1e-8
        )


def test_tree_split_criterion_matches_weighted_duplication():
    # duplicating a row and doubling its weight yield the same stump
    x = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    y = np.array([0.0, 0.1, 0.2, 2.0, 2.2])
    w = np.ones(5)
    w[3] = 2.0
    spec = LearnerSpec("cart_tree", {"depth": 1})
    m_w = fit_regressor(spec, Table([("x", "float", x)]), y, w)
    m_dup = fit_regressor(
        spec,
        Table([("x", "float", np.append(x, x[3]))]),
        np.append(y, y[3]),
    )
    assert m_w.model["threshold"] == m_dup.model["threshold"]
    assert m_w.model["left"]["value"] == pytest.approx(m_dup.model["left"]["value"])


def test_boosting_training_mse_nonincreasing():
    rng = np.random.default_rng(11)
    x = rng.normal(size=80)
    y = np.sin(2 * x) + 0.2 * rng.normal(size=80)
    table = Table([("x", "float", x)])
    losses = []
    for n_trees in (1, 5, 20, 60):
        model = fit_regressor(
            LearnerSpec(
                "gradient_boosted_trees",
                {"n_trees": n_trees, "depth": 2, "learning_rate": 0.3},
            ),
            table,
            y,
        )
        losses.append(float(np.mean((predict(model, table) - y) ** 2)))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


@pytest.mark.parametrize("family", ALL_REG_FAMILIES)
def test_determinism_bit_identical_models(family):
    rng = np.random.default_rng(2)
    x = rng.normal(size=50)
    y = x**2 + rng.normal(size=50)
    table = Table([("x", "float", x)])
    spec = LearnerSpec(family, seed=7)
    d1 = json.dumps(model_to_dict(fit_regressor(spec, table, y)), sort_keys=True)
    d2 = json.dumps(model_to_dict(fit_regressor(spec, table, y)), sort_keys=True)
    assert d1 == d2


@pytest.mark.parametrize("family", ALL_REG_FAMILIES)
def test_model_json_roundtrip_regression(family):
    rng = np.random.default_rng(4)
    x = rng.normal(size=40)
    y = 0.5 * x + rng.normal(size=40) * 0.1
    table = Table([("x", "float", x)])
    model = fit_regressor(LearnerSpec(family), table, y)
    back = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
    np.testing.assert_allclose(predict(back, table), predict(model, table), rtol=1e-12)


@pytest.mark.parametrize("family", ALL_CLF_FAMILIES)
def test_model_json_roundtrip_classification(family):
    rng = np.random.default_rng(4)
    x = rng.normal(size=40)
    labels = (x > 0.2).astype(int)
    table = Table([("x", "float", x)])
    model = fit_classifier(LearnerSpec(family), table, labels)
    back = model_from_dict(json.loads(json.dumps(model_to_dict(model))))
    np.testing.assert_array_equal(predict(back, table), predict(model, table))
    np.testing.assert_allclose(
        predict_scores(back, table), predict_scores(model, table), rtol=1e-12
    )


def test_categorical_features_one_hot_inside_learners():
    rng = np.random.default_rng(8)
    seg = rng.choice(["a", "b", "c"], size=90)
    bump = np.where(seg == "a", 1.0, np.where(seg == "b", -1.0, 0.0))
    x = rng.normal(size=90)
    table = Table([("x", "float", x), ("seg", "categorical", seg)])
    y = 2 * x + bump
    model = fit_regressor(LearnerSpec("ridge_linear"), table, y)
    np.testing.assert_allclose(predict(model, table), y, atol=1e-8)


def test_select_spec_prefers_simpler_on_ties():
    table, x = _linear_table(n=60)
    y = 1.0 * x
    specs = [
        LearnerSpec("gradient_boosted_trees", {"n_trees": 50, "depth": 3}),
        LearnerSpec("gradient_boosted_trees", {"n_trees": 50, "depth": 2}),
    ]
    # exact tie is hard to force with boosting; check the key directly instead
    from longhorizon.learners.spec import _complexity_key

    assert _complexity_key(specs[1]) < _complexity_key(specs[0])
    best, losses = select_spec(
        [LearnerSpec("ridge_linear"), LearnerSpec("cart_tree", {"depth": 3})],
        table,
        y,
        task="regression",
        n_folds=3,
        seed=1,
    )
    assert best.family == "ridge_linear"  # noiseless linear data
    assert len(losses) == 2
