"""longhorizon: surrogate-index imputation, doubly-robust off-policy
evaluation and optimization, and bootstrap-Thompson-sampling exploration,
with a synthetic-ground-truth simulator for end-to-end validation."""

__version__ = "0.1.0"
