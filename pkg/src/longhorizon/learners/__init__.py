"""Pluggable supervised learners used across the surrogate, outcome, and
policy models, plus interpretation tools and JSON persistence."""

from .base import (
    FittedClassifier,
    FittedRegressor,
    fit_classifier,
    fit_regressor,
    predict,
    predict_scores,
)
from .encoding import FeatureSchema, encode, schema_from_table
from .interpret import accumulated_local_effects, permutation_importance
from .io import load_model, model_from_dict, model_to_dict, save_model
from .spec import LearnerSpec, default_spec_grid, select_spec

__all__ = [
    "LearnerSpec",
    "FittedRegressor",
    "FittedClassifier",
    "FeatureSchema",
    "fit_regressor",
    "fit_classifier",
    "predict",
    "predict_scores",
    "encode",
    "schema_from_table",
    "permutation_importance",
    "accumulated_local_effects",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "default_spec_grid",
    "select_spec",
]
