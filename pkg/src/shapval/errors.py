"""Exception hierarchy shared by every shapval module."""

from __future__ import annotations


class ShapvalError(Exception):
    """Base class for all errors raised by shapval."""


class MissingCoalitionError(ShapvalError, KeyError):
    """A utility was requested for a coalition the oracle does not know."""

    def __init__(self, coalition: str):
        self.coalition = coalition
        super().__init__(f"no utility recorded for coalition {coalition}")

    def __str__(self) -> str:  # KeyError would otherwise repr() the message
        return self.args[0]


class TableFormatError(ShapvalError, ValueError):
    """A utility table file could not be parsed."""


class DataError(ShapvalError, ValueError):
    """Training or test data contains non-finite values."""


class GuardError(ShapvalError, ValueError):
    """An exact or exhaustive computation was refused by its cost guard."""

    def __init__(self, what: str, required: int, limit: int):
        self.required = required
        self.limit = limit
        super().__init__(
            f"{what} needs {required} evaluations, over the guard of {limit}; "
            "pass force=True to run it anyway"
        )


class UndefinedMetricError(ShapvalError, ValueError):
    """A metric is undefined for its inputs, e.g. a zero reference norm."""


class ConfigError(ShapvalError, ValueError):
    """An experiment or scenario configuration is invalid."""
