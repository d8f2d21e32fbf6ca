"""Columnar datasets, CSV ingestion, schema validation, and fold assignment."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, SchemaError

__all__ = [
    "Table",
    "ExperimentalDataset",
    "HistoricalDataset",
    "FoldAssignment",
    "load_csv",
    "save_csv",
    "make_folds",
    "PROP_SUM_TOL",
]

KINDS = ("float", "int", "categorical")

# Tolerance for per-unit propensity rows summing to one.
PROP_SUM_TOL = 1e-9


class Table:
    """Immutable column-ordered table.

    Columns are typed ``float`` (float64, no NaN), ``int`` (int64), or
    ``categorical`` (integer codes over an enumerated, sorted level set).
    """

    def __init__(self, columns):
        """``columns``: list of (name, kind, values); categorical values may be
        raw strings or (codes, levels)."""
        names, kinds = [], []
        self._data = {}
        self._levels = {}
        n_rows = None
        for entry in columns:
            name, kind, values = entry
            if kind not in KINDS:
                raise SchemaError(f"unknown column kind {kind!r} for {name!r}")
            if name in self._data:
                raise SchemaError(f"duplicate column name {name!r}")
            if kind == "float":
                arr = np.asarray(values, dtype=np.float64)
                if arr.ndim != 1:
                    raise DataError(f"column {name!r} is not 1-d")
                if not np.all(np.isfinite(arr)):
                    raise DataError(f"column {name!r} contains NaN or infinite values")
            elif kind == "int":
                arr = np.asarray(values, dtype=np.int64)
            else:
                if isinstance(values, tuple) and len(values) == 2:
                    codes, levels = values
                    arr = np.asarray(codes, dtype=np.int64)
                    levels = tuple(levels)
                else:
                    raw = [str(v) for v in values]
                    levels = tuple(sorted(set(raw)))
                    index = {lev: i for i, lev in enumerate(levels)}
                    arr = np.asarray([index[v] for v in raw], dtype=np.int64)
                if len(levels) == 0 and arr.size > 0:
                    raise DataError(f"categorical column {name!r} has no levels")
                if arr.size and (arr.min() < 0 or arr.max() >= len(levels)):
                    raise DataError(f"categorical codes out of range in {name!r}")
                self._levels[name] = levels
            if n_rows is None:
                n_rows = arr.shape[0]
            elif arr.shape[0] != n_rows:
                raise DataError(
                    f"column {name!r} has {arr.shape[0]} rows, expected {n_rows}"
                )
            arr.setflags(write=False)
            names.append(name)
            kinds.append(kind)
            self._data[name] = arr
        self.names = tuple(names)
        self.kinds = tuple(kinds)
        self.n_rows = 0 if n_rows is None else int(n_rows)

    @property
    def schema(self):
        """Tuple of (name, kind) pairs in column order."""
        return tuple(zip(self.names, self.kinds))

    def kind_of(self, name: str) -> str:
        return self.kinds[self.names.index(name)]

    def column(self, name: str) -> np.ndarray:
        """Raw stored array (codes for categorical columns)."""
        if name not in self._data:
            raise SchemaError(f"no column named {name!r}")
        return self._data[name]

    def levels(self, name: str):
        if self.kind_of(name) != "categorical":
            raise SchemaError(f"column {name!r} is not categorical")
        return self._levels[name]

    def select(self, names) -> "Table":
        """New Table with the given columns, in the given order."""
        cols = []
        for name in names:
            if name not in self._data:
                raise SchemaError(f"no column named {name!r}")
            kind = self.kind_of(name)
            values = self._data[name]
            if kind == "categorical":
                values = (values, self._levels[name])
            cols.append((name, kind, values))
        return Table(cols)

    def take(self, indices) -> "Table":
        """Row subset (copy) in the order given by ``indices``."""
        idx = np.asarray(indices, dtype=np.int64)
        cols = []
        for name, kind in self.schema:
            values = self._data[name][idx]
            if kind == "categorical":
                values = (values, self._levels[name])
            cols.append((name, kind, values))
        return Table(cols)

    def hstack(self, other: "Table") -> "Table":
        """Concatenate columns of two tables with the same row count."""
        if other.n_rows != self.n_rows:
            raise DataError("row counts differ")
        overlap = set(self.names) & set(other.names)
        if overlap:
            raise SchemaError(f"column name collision: {sorted(overlap)}")
        cols = []
        for tab in (self, other):
            for name, kind in tab.schema:
                values = tab._data[name]
                if kind == "categorical":
                    values = (values, tab._levels[name])
                cols.append((name, kind, values))
        return Table(cols)

    def equals(self, other: "Table", float_tol: float = 0.0) -> bool:
        if self.schema != other.schema or self.n_rows != other.n_rows:
            return False
        for name, kind in self.schema:
            a, b = self._data[name], other._data[name]
            if kind == "float":
                if not np.allclose(a, b, rtol=0.0, atol=float_tol):
                    return False
            else:
                if not np.array_equal(a, b):
                    return False
            if kind == "categorical" and self._levels[name] != other._levels[name]:
                return False
        return True

    def __repr__(self):
        cols = ", ".join(f"{n}:{k}" for n, k in self.schema)
        return f"Table({self.n_rows} rows; {cols})"


def _parse_cell(text: str, kind: str, row: int, col: str):
    if text == "":
        raise DataError(f"missing value at row {row}, column {col!r}")
    try:
        if kind == "float":
            return float(text)
        if kind == "int":
            return int(text)
        return text
    except ValueError:
        raise DataError(
            f"unparseable {kind} cell {text!r} at row {row}, column {col!r}"
        ) from None


def load_csv(path, schema) -> Table:
    """Load a UTF-8, header-row CSV into a Table.

    ``schema`` is a list of (name, kind) declarations. The header must
    contain every declared column; extra file columns are ignored. Missing
    or unparseable cells raise DataError with the row/column location.
    """
    schema = list(schema)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        positions = {}
        for name, _kind in schema:
            if name not in header:
                raise SchemaError(f"{path}: missing column {name!r} in header")
            positions[name] = header.index(name)
        raw = {name: [] for name, _ in schema}
        for row_idx, row in enumerate(reader):
            for name, kind in schema:
                pos = positions[name]
                if pos >= len(row):
                    raise DataError(f"{path}: short row {row_idx}")
                raw[name].append(_parse_cell(row[pos], kind, row_idx, name))
    return Table([(name, kind, raw[name]) for name, kind in schema])


def save_csv(table: Table, path) -> None:
    """Write a Table to CSV with full round-trip float precision."""
    decoded = {}
    for name, kind in table.schema:
        arr = table.column(name)
        if kind == "float":
            decoded[name] = [repr(float(v)) for v in arr]
        elif kind == "int":
            decoded[name] = [str(int(v)) for v in arr]
        else:
            levels = table.levels(name)
            decoded[name] = [levels[c] for c in arr]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(table.names))
        for i in range(table.n_rows):
            writer.writerow([decoded[name][i] for name in table.names])


@dataclass(frozen=True)
class FoldAssignment:
    """Balanced random partition of units into folds."""

    fold_of_unit: np.ndarray
    n_folds: int
    seed: int

    def units_in(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of_unit == fold)

    def units_not_in(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of_unit != fold)


def make_folds(n_units: int, n_folds: int, seed: int) -> FoldAssignment:
    """Shuffle unit indices with the seeded RNG and deal round-robin.

    Fold sizes differ by at most one; the assignment is a deterministic
    function of (n_units, n_folds, seed).
    """
    if n_folds < 2:
        raise ConfigError(f"n_folds must be >= 2, got {n_folds}")
    if n_units < n_folds:
        raise ConfigError(f"n_folds={n_folds} exceeds n_units={n_units}")
    order = np.random.default_rng(seed).permutation(n_units)
    fold_of_unit = np.empty(n_units, dtype=np.int64)
    fold_of_unit[order] = np.arange(n_units) % n_folds
    fold_of_unit.setflags(write=False)
    return FoldAssignment(fold_of_unit=fold_of_unit, n_folds=n_folds, seed=seed)


def _check_surrogate_schemas(a: Table, b: Table) -> None:
    if a.schema != b.schema:
        only_a = [n for n in a.names if n not in b.names]
        only_b = [n for n in b.names if n not in a.names]
        raise SchemaError(
            "surrogate schemas differ: "
            f"only in first={only_a}, only in second={only_b}, "
            f"first={a.schema}, second={b.schema}"
        )


@dataclass
class ExperimentalDataset:
    """Experiment tuple (X, A, S, design propensities) over K actions."""

    features: Table
    actions: np.ndarray
    surrogates: Table
    propensities: np.ndarray
    k_actions: int

    def __post_init__(self):
        self.actions = np.asarray(self.actions, dtype=np.int64)
        self.propensities = np.asarray(self.propensities, dtype=np.float64)
        n = self.features.n_rows
        if self.surrogates.n_rows != n:
            raise DataError("features and surrogates disagree on row count")
        if self.actions.shape != (n,):
            raise DataError("actions must be one entry per unit")
        if self.propensities.shape != (n, self.k_actions):
            raise DataError(
                f"propensities must be shape ({n}, {self.k_actions}), "
                f"got {self.propensities.shape}"
            )
        if self.actions.size and (
            self.actions.min() < 0 or self.actions.max() >= self.k_actions
        ):
            raise DataError("actions outside the action set")
        if np.any(self.propensities <= 0.0) or np.any(self.propensities >= 1.0):
            raise DataError("propensities must be strictly inside (0, 1)")
        sums = self.propensities.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > PROP_SUM_TOL):
            worst = int(np.argmax(np.abs(sums - 1.0)))
            raise DataError(
                f"propensity rows must sum to 1 +/- {PROP_SUM_TOL}; "
                f"row {worst} sums to {sums[worst]!r}"
            )

    @property
    def n_units(self) -> int:
        return self.features.n_rows

    def observed_propensity(self) -> np.ndarray:
        """pi_D(A_i | X_i) for each unit."""
        return self.propensities[np.arange(self.n_units), self.actions]

    def take(self, indices) -> "ExperimentalDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return ExperimentalDataset(
            features=self.features.take(idx),
            actions=self.actions[idx],
            surrogates=self.surrogates.take(idx),
            propensities=self.propensities[idx],
            k_actions=self.k_actions,
        )


@dataclass
class HistoricalDataset:
    """Observational tuple (X, S, Y) with the long-term outcome observed."""

    features: Table
    surrogates: Table
    outcomes: np.ndarray

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes, dtype=np.float64)
        n = self.features.n_rows
        if self.surrogates.n_rows != n:
            raise DataError("features and surrogates disagree on row count")
        if self.outcomes.shape != (n,):
            raise DataError("outcomes must be one entry per unit")
        if not np.all(np.isfinite(self.outcomes)):
            raise DataError("outcomes contain missing or non-finite values")

    @property
    def n_units(self) -> int:
        return self.features.n_rows

    def check_compatible(self, experiment: ExperimentalDataset) -> None:
        """Reject dataset pairs whose surrogate schemas differ."""
        _check_surrogate_schemas(self.surrogates, experiment.surrogates)
