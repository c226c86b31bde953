"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration value (fractions, alpha, hyperparameters)."""


class SchemaError(ValueError):
    """CSV header/target-column problems."""


class ParseError(ValueError):
    """Non-numeric cell in a CSV, with row/column location."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class DimensionError(ValueError):
    """Array shape or length mismatch."""


class SupportError(ValueError):
    """Point outside the support of a synthetic data-generating process."""


class EmptyInputError(ValueError):
    """An operation received no rows/scores/members to work with."""


class InsufficientDataError(ValueError):
    """Not enough usable points for a fit (e.g. log-linear decay fit)."""
