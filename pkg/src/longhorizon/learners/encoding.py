"""Name-keyed feature schemas and one-hot design matrices."""

from __future__ import annotations

import numpy as np

from ..data import Table
from ..errors import SchemaError

__all__ = ["FeatureSchema", "schema_from_table", "encode"]


class FeatureSchema:
    """Feature layout recorded at fit time.

    Predict-time tables are matched by column name, so column order does
    not matter. Categorical levels unseen at fit time encode as all-zero
    rows for that block.
    """

    def __init__(self, entries):
        # entries: list of (name, kind, levels-or-None)
        self.entries = [
            (str(n), str(k), tuple(lv) if lv is not None else None)
            for n, k, lv in entries
        ]

    @property
    def names(self):
        return [n for n, _k, _lv in self.entries]

    @property
    def width(self) -> int:
        total = 0
        for _n, kind, levels in self.entries:
            total += len(levels) if kind == "categorical" else 1
        return total

    def to_json(self):
        return [
            [n, k, list(lv) if lv is not None else None] for n, k, lv in self.entries
        ]

    @classmethod
    def from_json(cls, payload):
        return cls([(n, k, lv) for n, k, lv in payload])

    def __eq__(self, other):
        return isinstance(other, FeatureSchema) and self.entries == other.entries


def schema_from_table(table: Table) -> FeatureSchema:
    entries = []
    for name, kind in table.schema:
        levels = table.levels(name) if kind == "categorical" else None
        entries.append((name, kind, levels))
    return FeatureSchema(entries)


def encode(table: Table, schema: FeatureSchema) -> np.ndarray:
    """Dense float64 design matrix (no intercept column) under ``schema``."""
    n = table.n_rows
    blocks = []
    for name, kind, levels in schema.entries:
        if name not in table.names:
            raise SchemaError(f"feature {name!r} missing from table")
        got_kind = table.kind_of(name)
        if kind == "categorical":
            if got_kind != "categorical":
                raise SchemaError(
                    f"feature {name!r} is {got_kind}, expected categorical"
                )
            onehot = np.zeros((n, len(levels)), dtype=np.float64)
            pos = {lev: j for j, lev in enumerate(levels)}
            codes = table.column(name)
            table_levels = table.levels(name)
            # map this table's codes onto fit-time level positions
            remap = np.array(
                [pos.get(lev, -1) for lev in table_levels], dtype=np.int64
            )
            cols = remap[codes]
            seen = cols >= 0
            onehot[np.flatnonzero(seen), cols[seen]] = 1.0
            blocks.append(onehot)
        else:
            if got_kind == "categorical":
                raise SchemaError(f"feature {name!r} is categorical, expected {kind}")
            blocks.append(table.column(name).astype(np.float64).reshape(n, 1))
    if not blocks:
        return np.zeros((n, 0), dtype=np.float64)
    return np.hstack(blocks)
