"""Exception and warning classes raised across the package."""

import numpy as np


class DataError(ValueError):
    """Malformed tabular input. Carries the 1-based row and the column name when known."""

    def __init__(self, message, row=None, column=None):
        location = []
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        if location:
            message = f"{message} ({', '.join(location)})"
        super().__init__(message)
        self.row = row
        self.column = column


class SingularDesignError(np.linalg.LinAlgError):
    """The (weighted) Gram matrix of a design cannot be inverted reliably."""

    def __init__(self, message, condition=np.inf):
        super().__init__(f"{message}; condition number estimate {condition:.3e}")
        self.condition = condition


class PosteriorUnderflowError(FloatingPointError):
    """Every grid weight of the precision posterior underflowed to zero."""


class IllConditionedWarning(UserWarning):
    """Solve succeeded but the weighted Gram matrix is badly conditioned."""
