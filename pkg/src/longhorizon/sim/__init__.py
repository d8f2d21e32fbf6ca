"""Synthetic data-generating processes with oracle ground truth."""

from .dgp import DgpConfig, SimData, generate
from .power import (
    DesignVsUniformResult,
    PowerCell,
    PowerConfig,
    calibrate_threshold,
    design_vs_uniform,
    power_simulation,
)
from .validation import (
    HorizonRow,
    ValidationReport,
    generate_horizon,
    validation_experiment,
)

__all__ = [
    "DgpConfig",
    "SimData",
    "generate",
    "PowerConfig",
    "PowerCell",
    "power_simulation",
    "calibrate_threshold",
    "DesignVsUniformResult",
    "design_vs_uniform",
    "HorizonRow",
    "ValidationReport",
    "generate_horizon",
    "validation_experiment",
]
