import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longhorizon.data import (
    ExperimentalDataset,
    HistoricalDataset,
    Table,
    load_csv,
    make_folds,
    save_csv,
)
from longhorizon.errors import ConfigError, DataError, SchemaError


def test_load_csv_parses_declared_kinds(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x1,a\n1.5,0\n2.5,1\n-3.25,0\n")
    table = load_csv(path, [("x1", "float"), ("a", "int")])
    assert table.n_rows == 3
    assert table.schema == (("x1", "float"), ("a", "int"))
    np.testing.assert_allclose(table.column("x1"), [1.5, 2.5, -3.25])


def test_load_csv_missing_column_names_it(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x2,a\n1.0,0\n")
    with pytest.raises(SchemaError, match="x1"):
        load_csv(path, [("x1", "float"), ("a", "int")])


def test_load_csv_unparseable_cell_reports_location(tmp_path):
    path = tmp_path / "d.csv"
    path.write_text("x1,a\n1.0,0\noops,1\n")
    with pytest.raises(DataError, match="row 1.*x1"):
        load_csv(path, [("x1", "float"), ("a", "int")])


def test_csv_roundtrip_is_lossless(tmp_path):
    rng = np.random.default_rng(0)
    table = Table(
        [
            ("f", "float", rng.normal(size=50) * 1e-7),
            ("i", "int", rng.integers(-5, 5, size=50)),
            ("c", "categorical", rng.choice(["low", "mid", "high"], size=50)),
        ]
    )
    path = tmp_path / "t.csv"
    save_csv(table, path)
    back = load_csv(path, [("f", "float"), ("i", "int"), ("c", "categorical")])
    assert back.equals(table, float_tol=1e-12)
    assert back.equals(table, float_tol=0.0)  # repr() round-trips exactly


def test_table_rejects_nan_floats():
    with pytest.raises(DataError, match="NaN"):
        Table([("x", "float", [1.0, float("nan")])])


def test_make_folds_balanced_and_deterministic():
    f1 = make_folds(10, 3, seed=5)
    f2 = make_folds(10, 3, seed=5)
    sizes = sorted(np.bincount(f1.fold_of_unit, minlength=3))
    assert sizes == [3, 3, 4]
    np.testing.assert_array_equal(f1.fold_of_unit, f2.fold_of_unit)
    f3 = make_folds(9, 3, seed=5)
    assert sorted(np.bincount(f3.fold_of_unit)) == [3, 3, 3]


def test_make_folds_argument_errors():
    with pytest.raises(ConfigError):
        make_folds(2, 3, seed=0)
    with pytest.raises(ConfigError):
        make_folds(10, 1, seed=0)


@settings(max_examples=60, deadline=None)
@given(
    n=st.integers(min_value=2, max_value=200),
    k=st.integers(min_value=2, max_value=7),
    seed=st.integers(min_value=0, max_value=2**32 - 1),
)
def test_fold_partition_property(n, k, seed):
    if n < k:
        return
    folds = make_folds(n, k, seed)
    parts = [set(folds.units_in(f).tolist()) for f in range(k)]
    union = set().union(*parts)
    assert union == set(range(n))
    assert sum(len(p) for p in parts) == n  # pairwise disjoint
    assert max(len(p) for p in parts) - min(len(p) for p in parts) <= 1


def test_experimental_dataset_validation():
    feats = Table([("x1", "float", [0.0, 1.0])])
    surr = Table([("s1", "float", [0.0, 1.0])])
    with pytest.raises(DataError, match="sum to 1"):
        ExperimentalDataset(feats, [0, 1], surr, [[0.5, 0.4], [0.5, 0.5]], 2)
    with pytest.raises(DataError, match="inside"):
        ExperimentalDataset(feats, [0, 1], surr, [[1.0, 0.0], [0.5, 0.5]], 2)
    with pytest.raises(DataError, match="action"):
        ExperimentalDataset(feats, [0, 2], surr, [[0.5, 0.5], [0.5, 0.5]], 2)


def test_schema_compatibility_rejects_renamed_surrogate():
    feats = Table([("x1", "float", [0.0, 1.0])])
    hist = HistoricalDataset(
        features=feats,
        surrogates=Table([("s1", "float", [0.0, 1.0])]),
        outcomes=[1.0, 2.0],
    )
    exp = ExperimentalDataset(
        features=feats,
        actions=[0, 1],
        surrogates=Table([("s_renamed", "float", [0.0, 1.0])]),
        propensities=[[0.5, 0.5], [0.5, 0.5]],
        k_actions=2,
    )
    with pytest.raises(SchemaError, match="s1"):
        hist.check_compatible(exp)


def test_historical_rejects_missing_outcomes():
    feats = Table([("x1", "float", [0.0, 1.0])])
    surr = Table([("s1", "float", [0.0, 1.0])])
    with pytest.raises(DataError):
        HistoricalDataset(feats, surr, [1.0, float("inf")])
