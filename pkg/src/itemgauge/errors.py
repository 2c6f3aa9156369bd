"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 2, NumericalError -> 3.
"""


class ItemGaugeError(Exception):
    """Base class for errors raised by this package."""


class DataError(ItemGaugeError, ValueError):
    """Invalid input data: parsing failures, domain violations, bad arguments."""


class NumericalError(ItemGaugeError, ArithmeticError):
    """Numerical failure: non-convergence, separation, singular systems."""
