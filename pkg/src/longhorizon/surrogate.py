"""Surrogate-index fitting, imputation, and validity diagnostics.

The surrogate index is the regression of the long-term outcome on
surrogates and covariates in the historical dataset; applying it to
experimental units imputes their missing long-term outcomes.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .data import ExperimentalDataset, HistoricalDataset, Table
from .errors import ConfigError, DataError, SchemaError
from .learners import (
    FittedRegressor,
    LearnerSpec,
    fit_regressor,
    model_from_dict,
    model_to_dict,
    predict,
    select_spec,
)

__all__ = [
    "SurrogateModel",
    "BiasBoundReport",
    "ShiftReport",
    "fit_surrogate_index",
    "impute",
    "ate_bias_bound",
    "covariate_shift_report",
]


@dataclass
class SurrogateModel:
    """Fitted E[Y | S, X] with the schemas recorded at fit time."""

    regressor: FittedRegressor
    surrogate_schema: tuple
    covariate_schema: tuple
    n_train: int
    r_squared: float
    include_covariates: bool = True

    def to_dict(self) -> dict:
        return {
            "model": model_to_dict(self.regressor),
            "surrogate_schema": [list(p) for p in self.surrogate_schema],
            "covariate_schema": [list(p) for p in self.covariate_schema],
            "n_train": self.n_train,
            "r_squared": self.r_squared,
            "include_covariates": self.include_covariates,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SurrogateModel":
        return cls(
            regressor=model_from_dict(doc["model"]),
            surrogate_schema=tuple(tuple(p) for p in doc["surrogate_schema"]),
            covariate_schema=tuple(tuple(p) for p in doc["covariate_schema"]),
            n_train=int(doc["n_train"]),
            r_squared=float(doc["r_squared"]),
            include_covariates=bool(doc.get("include_covariates", True)),
        )


def _imputation_inputs(surrogates: Table, features: Table, include_covariates: bool):
    if include_covariates:
        return surrogates.hstack(features)
    return surrogates


def fit_surrogate_index(
    historical: HistoricalDataset,
    spec: LearnerSpec | list | None = None,
    folds_for_tuning: int = 3,
    include_covariates: bool = True,
    tuning_seed: int = 0,
) -> SurrogateModel:
    """Fit the surrogate index on historical (X, S, Y).

    ``spec`` may be a single LearnerSpec (fit directly), a list of specs
    (tuned by ``folds_for_tuning``-fold cross-validation), or None (the
    default ridge). ``include_covariates=False`` restricts the regression
    to surrogates only, supporting surrogate-set comparisons.
    """
    if historical.n_units == 0:
        raise ConfigError("historical dataset is empty")
    y = historical.outcomes
    if float(np.var(y)) == 0.0:
        warnings.warn("historical outcome has zero variance; fitting a constant model")
    inputs = _imputation_inputs(
        historical.surrogates, historical.features, include_covariates
    )
    if isinstance(spec, (list, tuple)):
        chosen, _ = select_spec(
            list(spec), inputs, y, task="regression",
            n_folds=folds_for_tuning, seed=tuning_seed,
        )
    elif spec is None:
        chosen = LearnerSpec("ridge_linear", {"l2_penalty": 0.0})
    else:
        chosen = spec
    regressor = fit_regressor(chosen, inputs, y)
    fitted = predict(regressor, inputs)
    var_y = float(np.var(y))
    r2 = 1.0 - float(np.var(y - fitted)) / var_y if var_y > 0 else 1.0
    return SurrogateModel(
        regressor=regressor,
        surrogate_schema=historical.surrogates.schema,
        covariate_schema=historical.features.schema,
        n_train=historical.n_units,
        r_squared=r2,
        include_covariates=include_covariates,
    )


def impute(model: SurrogateModel, experiment: ExperimentalDataset) -> np.ndarray:
    """Imputed long-term outcomes for each experimental unit."""
    if experiment.surrogates.schema != model.surrogate_schema:
        raise SchemaError(
            "experimental surrogate schema does not match the fitted model: "
            f"model={model.surrogate_schema}, got={experiment.surrogates.schema}"
        )
    if model.include_covariates and experiment.features.schema != model.covariate_schema:
        raise SchemaError(
            "experimental covariate schema does not match the fitted model: "
            f"model={model.covariate_schema}, got={experiment.features.schema}"
        )
    inputs = _imputation_inputs(
        experiment.surrogates, experiment.features, model.include_covariates
    )
    out = predict(model.regressor, inputs)
    if out.size and not np.all(np.isfinite(out)):
        raise DataError("imputation produced non-finite values")
    return out


@dataclass
class BiasBoundReport:
    """Closed-form bound on the ATE bias from imperfect surrogacy.

    R-squared terms come from linear regressions regardless of the
    surrogate model family; the bound is conservative and reproducible.
    """

    var_y: float
    var_a: float
    r2_y_given_s: float
    r2_a_given_s: float
    bound: float

    def to_dict(self) -> dict:
        return {
            "var_y": self.var_y,
            "var_a": self.var_a,
            "r2_y_given_s": self.r2_y_given_s,
            "r2_a_given_s": self.r2_a_given_s,
            "bound": self.bound,
            "note": "R-squared terms use linear regressions on (S, X)",
        }


def _linear_r2(inputs: Table, target: np.ndarray) -> float:
    model = fit_regressor(LearnerSpec("ridge_linear", {"l2_penalty": 0.0}), inputs, target)
    fitted = predict(model, inputs)
    var = float(np.var(target))
    if var == 0.0:
        return 1.0
    r2 = 1.0 - float(np.var(target - fitted)) / var
    return float(min(max(r2, 0.0), 1.0))


def ate_bias_bound(
    historical: HistoricalDataset, experiment: ExperimentalDataset
) -> BiasBoundReport:
    """bound = sqrt(var(Y)/var(A) * (1 - R2_{Y|S,X}) * (1 - R2_{A|S,X})).

    Y and its regression come from the historical dataset; A and its
    regression come from the experimental dataset (binary actions only).
    """
    if experiment.k_actions != 2:
        raise ConfigError("the ATE bias bound is defined for binary actions")
    historical.check_compatible(experiment)
    actions = experiment.actions.astype(np.float64)
    var_a = float(np.var(actions))
    if var_a == 0.0:
        raise DataError("all units received the same action; bound undefined")
    var_y = float(np.var(historical.outcomes))
    r2_y = _linear_r2(
        historical.surrogates.hstack(historical.features), historical.outcomes
    )
    r2_a = _linear_r2(
        experiment.surrogates.hstack(experiment.features), actions
    )
    bound = float(np.sqrt(var_y / var_a * (1.0 - r2_y) * (1.0 - r2_a)))
    return BiasBoundReport(
        var_y=var_y, var_a=var_a, r2_y_given_s=r2_y, r2_a_given_s=r2_a, bound=bound
    )


@dataclass
class ShiftReport:
    """Per-feature (2.5, 97.5) percentile pairs for two datasets."""

    features: list
    quantiles_d1: dict  # name -> (p2.5, p97.5)
    quantiles_d2: dict
    overlap: dict  # name -> bool

    def rows(self):
        for name in self.features:
            lo1, hi1 = self.quantiles_d1[name]
            lo2, hi2 = self.quantiles_d2[name]
            yield name, lo1, hi1, lo2, hi2, self.overlap[name]

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["feature", "p2.5_d1", "p97.5_d1", "p2.5_d2", "p97.5_d2", "overlap"]
            )
            for name, lo1, hi1, lo2, hi2, ok in self.rows():
                writer.writerow(
                    [name, repr(lo1), repr(hi1), repr(lo2), repr(hi2), str(ok).lower()]
                )


def covariate_shift_report(d1: Table, d2: Table) -> ShiftReport:
    """Compare 2.5/97.5 percentile ranges of every shared float column."""
    shared = [
        n for n, k in d1.schema if k == "float" and n in d2.names
        and d2.kind_of(n) == "float"
    ]
    if not shared:
        raise DataError("no shared float columns to compare")
    q1, q2, overlap = {}, {}, {}
    for name in shared:
        lo1, hi1 = (float(v) for v in np.quantile(d1.column(name), [0.025, 0.975]))
        lo2, hi2 = (float(v) for v in np.quantile(d2.column(name), [0.025, 0.975]))
        q1[name] = (lo1, hi1)
        q2[name] = (lo2, hi2)
        overlap[name] = bool(lo1 <= hi2 and lo2 <= hi1)
    return ShiftReport(features=shared, quantiles_d1=q1, quantiles_d2=q2, overlap=overlap)
