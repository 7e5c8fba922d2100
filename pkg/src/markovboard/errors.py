"""Exception hierarchy for markovboard.

Matrix-level errors carry 0-based row/column indices (array coordinates);
board-level errors speak in 1-based square numbers, matching the rest of
the board API.
"""

from __future__ import annotations

from fractions import Fraction


class MarkovBoardError(Exception):
    """Base class for all errors raised by this package."""


# --- transition-matrix validation -------------------------------------------

class NonSquareError(MarkovBoardError):
    """Candidate matrix is not square (or is empty)."""


class NegativeEntryError(MarkovBoardError):
    def __init__(self, row: int, col: int, value):
        self.row = row
        self.col = col
        self.value = value
        super().__init__(f"negative entry {value} at ({row}, {col})")


class RowSumViolation(MarkovBoardError):
    def __init__(self, row: int, total):
        self.row = row
        self.total = total
        shown = float(total) if isinstance(total, Fraction) else total
        super().__init__(f"row {row} sums to {shown}, expected 1")


# --- chain analysis ----------------------------------------------------------

class NotARecurrentClassError(MarkovBoardError):
    """The given state set is not a recurrent class of the chain."""


class EmptyTransientSetError(MarkovBoardError):
    """Requested a transient-state quantity, but the chain has no transient states."""


class SingularMatrixError(MarkovBoardError):
    """Internal error: a system that must be solvable turned out singular."""


class SingularSystemError(MarkovBoardError):
    """Internal error: stationary system singular for a genuine recurrent class."""


class DimensionMismatchError(MarkovBoardError):
    """Internal error: block shapes disagree."""


class InternalInconsistency(MarkovBoardError):
    """Internal error: derived data contradicts its source (classification bug)."""


# --- board construction ------------------------------------------------------

class NoForwardMotionError(MarkovBoardError):
    """A linear board whose move distribution can never advance would never end."""


class NegativeDisplacementError(MarkovBoardError):
    """Linear boards only move forward; use a ruin board for two-sided moves."""


class TooFewSquaresError(MarkovBoardError):
    """Board too small for the requested family."""


class SelfRedirectError(MarkovBoardError):
    """A redirect square may not point at itself."""


class DestinationResolutionError(MarkovBoardError):
    """A card destination could not be resolved (e.g. empty nearest-of set)."""


class OrderingViolation(MarkovBoardError):
    """A card deck points at a card square whose deck was already applied.

    Deck application is column surgery, so a relocation into an
    already-processed card square would skip that square's card draw and
    the result would depend on processing order.
    """


# --- simulation --------------------------------------------------------------

class StartNotTransientError(MarkovBoardError):
    """Absorbing-chain simulation must start from a transient state."""


# --- DSL ----------------------------------------------------------------------

class BoardParseError(MarkovBoardError):
    """Raised by strict parsing entry points; carries all diagnostics."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        lines = "; ".join(str(d) for d in self.diagnostics)
        super().__init__(lines or "parse failed")


class BoardCompileError(MarkovBoardError):
    """A parsed board could not be compiled into a transition matrix."""
