"""Exception hierarchy shared by the formal and numeric layers."""

from __future__ import annotations

from typing import Optional


class FatouError(Exception):
    """Base class for every failure raised by the engine."""

    exit_code = 1


class ParseError(FatouError):
    """Syntax or validation error in a transseries / germ text."""

    exit_code = 2

    def __init__(self, message: str, position: Optional[int] = None):
        self.message = message
        self.position = position
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)


class SeriesError(FatouError):
    """Invalid operation on a truncated series."""

    exit_code = 3


class SolverError(FatouError):
    exit_code = 3


class NumericDomainError(FatouError):
    """A point, orbit or integration range left the admissible interval."""

    exit_code = 4

    def __init__(self, message: str, location=None):
        self.location = location
        super().__init__(message)


class ToleranceError(FatouError):
    exit_code = 4
