"""Transition-matrix builders for the supported board families.

Squares are numbered 1..n.  Builders do exact rational arithmetic
whenever the move probabilities are rationals, so the resulting matrices
validate with exact row sums.

Board surgery (redirects, card decks) works on columns: sending every
arrival at square s somewhere else means moving mass out of column s.
Row sums are untouched by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Union

import numpy as np

from .chain import TransitionMatrix, validate_stochastic
from .errors import (
    DestinationResolutionError,
    NegativeDisplacementError,
    NoForwardMotionError,
    OrderingViolation,
    SelfRedirectError,
    TooFewSquaresError,
)
from .linalg import FLOAT_TOL, as_fraction


@dataclass(frozen=True)
class MoveDistribution:
    """Probability of each signed displacement per turn.

    Keys are explicit displacements (0 = stay put), removing any
    ambiguity about what the first entry of a probability list means.
    """

    probs: Mapping[int, Union[Fraction, float]]

    def __post_init__(self):
        cleaned = {}
        exact = True
        for d, p in self.probs.items():
            if isinstance(p, float):
                exact = False
                cleaned[int(d)] = p
            else:
                cleaned[int(d)] = as_fraction(p)
        object.__setattr__(self, "probs", dict(sorted(cleaned.items())))
        if any(p < 0 for p in self.probs.values()):
            raise ValueError("move probabilities must be nonnegative")
        total = sum(self.probs.values())
        if exact:
            if total != 1:
                raise ValueError(f"move probabilities sum to {total}, expected 1")
        elif abs(total - 1.0) > FLOAT_TOL:
            raise ValueError(f"move probabilities sum to {total}, expected 1")

    @property
    def is_exact(self) -> bool:
        return all(isinstance(p, Fraction) for p in self.probs.values())

    def items(self):
        return self.probs.items()


#: Sum of two fair dice: the standard roll for a 40-square loop.
TWO_DICE = MoveDistribution({d: Fraction([1, 2, 3, 4, 5, 6, 5, 4, 3, 2, 1][d - 2], 36)
                             for d in range(2, 13)})

#: Coin flip of the introductory linear board: one or two squares forward.
COIN_MOVES = MoveDistribution({1: Fraction(1, 2), 2: Fraction(1, 2)})


class OvershootPolicy:
    """What happens to a move that would pass the final square."""

    COLLAPSE_TO_END = "collapse"
    STAY_IN_PLACE = "stay"

    ALL = (COLLAPSE_TO_END, STAY_IN_PLACE)


# --- card decks ---------------------------------------------------------------

@dataclass(frozen=True)
class FixedSquare:
    square: int


@dataclass(frozen=True)
class GoBack:
    squares: int


@dataclass(frozen=True)
class NearestOf:
    squares: tuple[int, ...]


DestinationRule = Union[FixedSquare, GoBack, NearestOf]


@dataclass(frozen=True)
class CardDeck:
    """A deck of ``size`` cards drawn uniformly with replacement.

    ``cards`` lists the movement cards as (rule, count) pairs; the
    remaining ``size - sum(counts)`` cards do nothing to the player's
    position.  ``stay_count`` optionally declares some of those inert
    cards explicitly (purely descriptive).
    """

    size: int
    cards: tuple[tuple[DestinationRule, int], ...]
    stay_count: int | None = None

    def __post_init__(self):
        moving = sum(count for _, count in self.cards)
        declared = moving + (self.stay_count or 0)
        if declared > self.size:
            raise ValueError(f"deck declares {declared} cards but has size {self.size}")
        if any(count <= 0 for _, count in self.cards):
            raise ValueError("card counts must be positive")

    @property
    def moving_count(self) -> int:
        return sum(count for _, count in self.cards)


def resolve_destination(rule: DestinationRule, square: int, n: int) -> int:
    """Resolve a card's destination from ``square`` on an n-square board.

    ``NearestOf`` scans clockwise (wrapping past square n); ``GoBack``
    counts backwards, wrapping below square 1.
    """
    if isinstance(rule, FixedSquare):
        if not 1 <= rule.square <= n:
            raise DestinationResolutionError(f"square {rule.square} not on a {n}-square board")
        return rule.square
    if isinstance(rule, GoBack):
        return (square - 1 - rule.squares) % n + 1
    if isinstance(rule, NearestOf):
        targets = set(rule.squares)
        if not targets:
            raise DestinationResolutionError("nearest-of set is empty")
        if not all(1 <= s <= n for s in targets):
            raise DestinationResolutionError(f"nearest-of set {sorted(targets)} leaves the board")
        for offset in range(1, n + 1):
            candidate = (square - 1 + offset) % n + 1
            if candidate in targets:
                return candidate
    raise DestinationResolutionError(f"unknown destination rule {rule!r}")


# --- board families -----------------------------------------------------------

def linear_board(n: int, moves: MoveDistribution,
                 policy: str = OvershootPolicy.COLLAPSE_TO_END,
                 labels=None) -> TransitionMatrix:
    """Start-to-finish board: forward moves only, square n absorbs.

    Overshooting mass collapses onto square n, or stays put when the
    board requires landing on the end exactly.
    """
    if n < 2:
        raise TooFewSquaresError("a linear board needs at least 2 squares")
    if policy not in OvershootPolicy.ALL:
        raise ValueError(f"unknown overshoot policy {policy!r}")
    if any(d < 0 for d, _ in moves.items()):
        raise NegativeDisplacementError("linear boards cannot move backwards")
    if not any(d > 0 and p > 0 for d, p in moves.items()):
        raise NoForwardMotionError("no forward motion: the game would never end")

    rows = _empty_rows(n, moves.is_exact)
    for k in range(1, n):
        for d, p in moves.items():
            target = k + d
            if target > n:
                target = n if policy == OvershootPolicy.COLLAPSE_TO_END else k
            rows[k - 1][target - 1] += p
    rows[n - 1][n - 1] = _one(moves.is_exact)
    return validate_stochastic(rows, labels)


def gamblers_ruin_board(n_squares: int, p_win) -> TransitionMatrix:
    """Bankroll walk: win a step right, lose a step left, ends at 1 or n."""
    if n_squares < 3:
        raise TooFewSquaresError("ruin needs at least one interior square")
    exact = not isinstance(p_win, float)
    p = as_fraction(p_win) if exact else p_win
    if not 0 <= p <= 1:
        raise ValueError(f"p_win must be a probability, got {p}")

    rows = _empty_rows(n_squares, exact)
    rows[0][0] = _one(exact)
    rows[n_squares - 1][n_squares - 1] = _one(exact)
    for k in range(2, n_squares):
        rows[k - 1][k] = p
        rows[k - 1][k - 2] = (1 - p) if exact else (1.0 - p)
    return validate_stochastic(rows)


def loop_board(n: int, moves: MoveDistribution, labels=None) -> TransitionMatrix:
    """Circular board: identical move rule on every square (circulant)."""
    if n < 2:
        raise TooFewSquaresError("a loop needs at least 2 squares")
    rows = _empty_rows(n, moves.is_exact)
    for k in range(1, n + 1):
        for d, p in moves.items():
            target = (k - 1 + d) % n + 1
            rows[k - 1][target - 1] += p
    return validate_stochastic(rows, labels)


def _empty_rows(n: int, exact: bool) -> list[list]:
    zero = Fraction(0) if exact else 0.0
    return [[zero] * n for _ in range(n)]


def _one(exact: bool):
    return Fraction(1) if exact else 1.0


# --- board surgery ------------------------------------------------------------

def apply_redirect(p: TransitionMatrix, source: int, target: int) -> TransitionMatrix:
    """Forward every arrival at ``source`` to ``target``.

    Column target gains column source, which is then zeroed; nobody can
    end a turn on the source square afterwards.
    """
    n = p.n
    if not (1 <= source <= n and 1 <= target <= n):
        raise ValueError(f"redirect {source}->{target} leaves the {n}-square board")
    if source == target:
        raise SelfRedirectError(f"redirect {source}->{target} points at itself")
    entries = np.array(p.entries, copy=True)
    entries[:, target - 1] += entries[:, source - 1]
    entries[:, source - 1] = _zero_column(entries)
    return validate_stochastic(entries, p.labels)


def _zero_column(entries: np.ndarray):
    if entries.dtype == object:
        return np.array([Fraction(0)] * entries.shape[0], dtype=object)
    return 0.0


def apply_card_deck(p: TransitionMatrix, square: int, deck: CardDeck) -> TransitionMatrix:
    """Model a draw-a-card square by redistributing its arrival column.

    Each movement card sends ``count/size`` of the arrivals at ``square``
    to its resolved destination; whatever does not move scales the
    square's own column.  Destinations resolving back to the square
    itself count as staying.
    """
    n = p.n
    if not 1 <= square <= n:
        raise ValueError(f"square {square} not on the {n}-square board")
    entries = np.array(p.entries, copy=True)
    exact = entries.dtype == object
    original = np.array(entries[:, square - 1], copy=True)

    moved = 0
    for rule, count in deck.cards:
        dest = resolve_destination(rule, square, n)
        if dest == square:
            continue
        weight = Fraction(count, deck.size) if exact else count / deck.size
        entries[:, dest - 1] += original * weight
        moved += count

    stay = deck.size - moved
    weight = Fraction(stay, deck.size) if exact else stay / deck.size
    entries[:, square - 1] = original * weight
    return validate_stochastic(entries, p.labels)


# --- the staged Monopoly model --------------------------------------------------

#: Standard 40-square US board, square 1 = Go, clockwise.
MONOPOLY_LABELS = (
    "Go", "Mediterranean Avenue", "Community Chest", "Baltic Avenue", "Income Tax",
    "Reading Railroad", "Oriental Avenue", "Chance", "Vermont Avenue", "Connecticut Avenue",
    "Jail", "St. Charles Place", "Electric Company", "States Avenue", "Virginia Avenue",
    "Pennsylvania Railroad", "St. James Place", "Community Chest", "Tennessee Avenue",
    "New York Avenue", "Free Parking", "Kentucky Avenue", "Chance", "Indiana Avenue",
    "Illinois Avenue", "B&O Railroad", "Atlantic Avenue", "Ventnor Avenue", "Water Works",
    "Marvin Gardens", "Go To Jail", "Pacific Avenue", "North Carolina Avenue",
    "Community Chest", "Pennsylvania Avenue", "Short Line", "Chance", "Park Place",
    "Luxury Tax", "Boardwalk",
)

RAILROADS = (6, 16, 26, 36)
UTILITIES = (13, 29)

#: The ten movement cards of the standard US Chance deck (two copies of
#: "advance to the nearest railroad"), out of 16 cards total.
DEFAULT_CHANCE_DECK = CardDeck(
    size=16,
    cards=(
        (FixedSquare(1), 1),        # Advance to Go
        (FixedSquare(11), 1),       # Go directly to Jail
        (FixedSquare(25), 1),       # Advance to Illinois Avenue
        (FixedSquare(12), 1),       # Advance to St. Charles Place
        (FixedSquare(40), 1),       # Take a walk on the Boardwalk
        (FixedSquare(6), 1),        # Take a ride on the Reading
        (NearestOf(RAILROADS), 2),
        (NearestOf(UTILITIES), 1),
        (GoBack(3), 1),
    ),
)

#: Only two Community Chest cards relocate the player.
DEFAULT_COMMUNITY_CHEST_DECK = CardDeck(
    size=16,
    cards=(
        (FixedSquare(1), 1),        # Advance to Go
        (FixedSquare(11), 1),       # Go to Jail
    ),
)


@dataclass(frozen=True)
class MonopolyConfig:
    """Which features of the 40-square model to switch on.

    Decks and the go-to-jail redirect can be disabled independently so
    the dice-only and redirect-only stages are reachable as their own
    models.
    """

    n: int = 40
    dice: MoveDistribution = TWO_DICE
    go_to_jail: tuple[int, int] | None = (31, 11)
    chance_squares: tuple[int, ...] = (8, 23, 37)
    chance_deck: CardDeck | None = DEFAULT_CHANCE_DECK
    community_chest_squares: tuple[int, ...] = (3, 18, 34)
    community_chest_deck: CardDeck | None = DEFAULT_COMMUNITY_CHEST_DECK

    def __post_init__(self):
        squares = list(self.chance_squares) + list(self.community_chest_squares)
        if self.go_to_jail is not None:
            source, target = self.go_to_jail
            if source == target:
                raise SelfRedirectError("go-to-jail redirect points at itself")
            squares += [source, target]
        if any(not 1 <= s <= self.n for s in squares):
            raise ValueError(f"square reference outside 1..{self.n}")


def check_deck_ordering(deck_plan: list[tuple[int, CardDeck]], n: int) -> None:
    """Reject deck plans whose sequential application is order-dependent.

    Cards may relocate players onto another card square only if that
    square's deck is applied later (the arrival then draws a card there,
    as at the table).  A destination pointing at an already-applied card
    square would silently skip that draw.
    """
    card_squares = {sq for sq, _ in deck_plan}
    applied: set[int] = set()
    for sq, deck in deck_plan:
        for rule, _ in deck.cards:
            dest = resolve_destination(rule, sq, n)
            if dest != sq and dest in card_squares and dest in applied:
                raise OrderingViolation(
                    f"deck at {sq} relocates to card square {dest}, whose deck "
                    f"was already applied"
                )
        applied.add(sq)


def monopoly_board(cfg: MonopolyConfig = MonopolyConfig()) -> TransitionMatrix:
    """Build the staged Monopoly chain: dice loop, redirect, then decks.

    Chance squares are processed before Community Chest squares; the
    order within and across groups is validated by
    :func:`check_deck_ordering` (the back-3 card relocates from 37 onto
    the Community Chest at 34, so 37 must come first).
    """
    labels = MONOPOLY_LABELS if cfg.n == 40 else None
    p = loop_board(cfg.n, cfg.dice, labels=labels)
    if cfg.go_to_jail is not None:
        p = apply_redirect(p, *cfg.go_to_jail)

    plan: list[tuple[int, CardDeck]] = []
    if cfg.chance_deck is not None:
        plan += [(sq, cfg.chance_deck) for sq in cfg.chance_squares]
    if cfg.community_chest_deck is not None:
        plan += [(sq, cfg.community_chest_deck) for sq in cfg.community_chest_squares]
    check_deck_ordering(plan, cfg.n)
    for sq, deck in plan:
        p = apply_card_deck(p, sq, deck)
    return p
