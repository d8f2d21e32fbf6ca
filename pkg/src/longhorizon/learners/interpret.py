"""Model interpretation: permutation importance and accumulated local effects."""

from __future__ import annotations

import numpy as np

from ..data import Table
from ..errors import ConfigError
from .base import predict

__all__ = ["permutation_importance", "accumulated_local_effects"]


def _metric(kind: str, predictions: np.ndarray, targets: np.ndarray) -> float:
    if kind == "mse":
        return float(np.mean((predictions - targets) ** 2))
    if kind == "misclassification":
        return float(np.mean(predictions != targets))
    raise ConfigError(f"metric must be 'mse' or 'misclassification', got {kind!r}")


def _with_column(table: Table, name: str, values) -> Table:
    cols = []
    for col, kind in table.schema:
        if col == name:
            vals = values
            if kind == "categorical":
                vals = (values, table.levels(col))
        else:
            vals = table.column(col)
            if kind == "categorical":
                vals = (vals, table.levels(col))
        cols.append((col, kind, vals))
    return Table(cols)


def permutation_importance(
    model, features: Table, targets, metric: str, n_repeats: int, seed: int
) -> dict:
    """Mean metric increase after within-column permutation, per feature.

    Returns a dict mapping column name to importance. A constant column
    has importance exactly zero because every permutation of it is the
    identity on values.
    """
    if n_repeats < 1:
        raise ConfigError(f"n_repeats must be >= 1, got {n_repeats}")
    targets = np.asarray(targets)
    baseline = _metric(metric, predict(model, features), targets)
    rng = np.random.default_rng(seed)
    importance = {}
    for name in features.names:
        increases = []
        values = features.column(name)
        for _ in range(n_repeats):
            perm = rng.permutation(features.n_rows)
            shuffled = _with_column(features, name, values[perm])
            increases.append(_metric(metric, predict(model, shuffled), targets) - baseline)
        importance[name] = float(np.mean(increases))
    return importance


def accumulated_local_effects(
    model, features: Table, focal_feature: str, n_bins: int
):
    """ALE curve of a float feature, centered to zero count-weighted mean.

    Bin edges are equal-frequency quantiles. Within each bin the model is
    evaluated at the bin's two edges for the rows falling in the bin; the
    mean differences accumulate into the curve, reported at bin centers.
    """
    if n_bins < 2:
        raise ConfigError(f"n_bins must be >= 2, got {n_bins}")
    if features.kind_of(focal_feature) != "float":
        raise ConfigError(f"focal feature {focal_feature!r} must be float kind")
    values = features.column(focal_feature)
    edges = np.unique(np.quantile(values, np.linspace(0.0, 1.0, n_bins + 1)))
    if edges.size < 3:
        raise ConfigError(
            f"focal feature {focal_feature!r} has too few distinct values "
            "(zero-width bins)"
        )
    n_eff = edges.size - 1
    bin_of_row = np.digitize(values, edges[1:-1], right=True)
    mean_diffs = np.zeros(n_eff)
    counts = np.zeros(n_eff)
    for k in range(n_eff):
        rows = np.flatnonzero(bin_of_row == k)
        counts[k] = rows.size
        if rows.size == 0:
            continue
        subset = features.take(rows)
        hi = predict(model, _with_column(subset, focal_feature, np.full(rows.size, edges[k + 1])))
        lo = predict(model, _with_column(subset, focal_feature, np.full(rows.size, edges[k])))
        mean_diffs[k] = float(np.mean(hi - lo))
    at_edges = np.concatenate([[0.0], np.cumsum(mean_diffs)])
    per_bin = 0.5 * (at_edges[:-1] + at_edges[1:])
    centers = 0.5 * (edges[:-1] + edges[1:])
    centered = per_bin - np.sum(counts * per_bin) / counts.sum()
    return centers, centered
