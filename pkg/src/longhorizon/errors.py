"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class LongHorizonError(Exception):
    """Base class for all package errors."""


class ConfigError(LongHorizonError):
    """Invalid configuration or arguments."""


class DataError(LongHorizonError):
    """Malformed or inconsistent input data."""


class SchemaError(DataError):
    """Column names, kinds, or levels do not match what was declared."""


class NumericError(LongHorizonError):
    """A numeric contract was violated during estimation."""


class PositivityError(NumericError):
    """A design-policy propensity was zero or negative for an observed action."""


class NoOverlapError(NumericError):
    """The target policy puts zero probability on every observed action."""
