"""Error types shared across the toolkit.

``DomainError`` marks a violated precondition (bad input), ``NumericalError``
a computation that ran but could not deliver a trustworthy result.
"""


class SphereEnergyError(Exception):
    """Base class for toolkit errors."""


class DomainError(SphereEnergyError, ValueError):
    """Input outside the domain of an operation."""


class NumericalError(SphereEnergyError, ArithmeticError):
    """Non-convergence, stall, overflow or failed certificate search."""
