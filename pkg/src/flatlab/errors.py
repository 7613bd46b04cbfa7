"""Exception hierarchy.

Every error carries an ``exit_code`` so the command line runner can map
failures to process status without a lookup table.
"""

from __future__ import annotations


class FlatLabError(Exception):
    exit_code = 4


# --- invalid input ---------------------------------------------------------

class InvalidIFS(FlatLabError, ValueError):
    pass


class DegenerateIFS(InvalidIFS):
    pass


class NonContraction(InvalidIFS):
    pass


class BadWeights(InvalidIFS):
    pass


class TauOutOfRange(FlatLabError, ValueError):
    pass


class DimMismatch(FlatLabError, ValueError):
    pass


class DomainViolation(FlatLabError, ValueError):
    pass


class LevelOutOfRange(FlatLabError, ValueError):
    pass


class InvalidMeasure(FlatLabError, ValueError):
    pass


# --- budgets (exit code 3) -------------------------------------------------

class BudgetExceeded(FlatLabError):
    exit_code = 3


class SizeOverflow(BudgetExceeded):
    pass


class AtomBudgetExceeded(BudgetExceeded):
    pass


class GridBudgetExceeded(BudgetExceeded):
    pass


class TauUnderflow(BudgetExceeded):
    pass


# --- numeric failures (exit code 4) ----------------------------------------

class InsufficientScales(FlatLabError, ValueError):
    pass


class IdenticallyZero(FlatLabError, ValueError):
    """The non-degeneracy determinant vanishes identically: the curve lies in a hyperplane."""


# --- configuration (exit code 2) -------------------------------------------

class ConfigError(FlatLabError):
    exit_code = 2

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")
