"""Exception types shared across the package."""

from __future__ import annotations


class OccupancyGamesError(Exception):
    """Base class for all package errors."""


class PosgParseError(OccupancyGamesError):
    """Raised on malformed ``.posg`` input.

    Carries the 1-based line and column of the offending token when known.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        where = ""
        if line is not None:
            where = f"line {line}"
            if col is not None:
                where += f", col {col}"
            where += ": "
        super().__init__(where + message)


class ModelValidationError(OccupancyGamesError):
    """Raised when a parsed model violates a structural invariant."""


class CapExceededError(OccupancyGamesError):
    """Raised when an enumeration would exceed the configured cap."""

    def __init__(self, what: str, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"{what} too large: {count} exceeds cap {cap}")


class UnreachableHistoryError(OccupancyGamesError):
    """Raised for private histories with zero probability or off-tree actions."""


class UndefinedDecisionRuleError(OccupancyGamesError):
    """Raised when a decision rule lacks an entry for a required history."""


class ImpossibleObservationError(OccupancyGamesError):
    """Raised when conditioning on a zero-probability observation."""


class InconsistentOccupancyError(OccupancyGamesError):
    """Raised when an occupancy state does not match its generating policy."""


class UnknownSuiteError(OccupancyGamesError):
    """Raised for unrecognized verification suite names."""
