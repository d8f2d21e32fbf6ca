import numpy as np
import pytest

from longhorizon.data import ExperimentalDataset, HistoricalDataset, Table


@pytest.fixture
def xy_table():
    rng = np.random.default_rng(7)
    x1 = rng.normal(size=200)
    x2 = rng.normal(size=200)
    return Table([("x1", "float", x1), ("x2", "float", x2)]), x1, x2


def make_experiment(actions, design_probs, x=None, surrogates=None):
    """Tiny hand-built experimental dataset for estimator tests."""
    actions = np.asarray(actions, dtype=np.int64)
    design_probs = np.asarray(design_probs, dtype=np.float64)
    n, k = design_probs.shape
    if x is None:
        x = np.arange(n, dtype=np.float64)
    if surrogates is None:
        surrogates = np.linspace(0.0, 1.0, n)
    return ExperimentalDataset(
        features=Table([("x1", "float", x)]),
        actions=actions,
        surrogates=Table([("s1", "float", surrogates)]),
        propensities=design_probs,
        k_actions=k,
    )


def make_historical(x, s, y):
    return HistoricalDataset(
        features=Table([("x1", "float", x)]),
        surrogates=Table([("s1", "float", s)]),
        outcomes=np.asarray(y, dtype=np.float64),
    )
