"""Board description language.

A board file is line oriented: one directive per line, ``#`` starts a
comment, blank lines are ignored.  Probabilities are rational literals
(``1/2``, ``3``); decimal floats are rejected so compiled matrices stay
exact.

::

    board monopoly
    topology loop            # or: linear
    squares 40
    move 2:1/36 3:2/36 ...   # displacement:probability pairs
    overshoot collapse       # linear boards only: collapse | stay
    absorbing 1, 11          # identity rows overriding the move rule
    redirect 31 -> 11
    deck chance size 16 at 8, 23, 37
    card chance goto 1 : 1   # goto K | back K | nearest K1,K2,... | stay
    label 11 "Jail"

Parsing recovers after errors and reports every diagnostic it finds.
Compiling dispatches to the board builders and applies absorbing
overrides, redirects, and decks in file order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .boards import (
    CardDeck,
    DestinationRule,
    FixedSquare,
    GoBack,
    MoveDistribution,
    NearestOf,
    OvershootPolicy,
    apply_card_deck,
    apply_redirect,
    check_deck_ordering,
    linear_board,
    loop_board,
)
from .chain import TransitionMatrix, validate_stochastic
from .errors import BoardCompileError, BoardParseError, MarkovBoardError

_INT_RE = re.compile(r"-?\d+$")
_RAT_RE = re.compile(r"(-?\d+)(?:/(\d+))?$")

_SINGLETON_DIRECTIVES = ("board", "topology", "squares", "move", "overshoot", "absorbing")


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int
    column: int
    severity: str  # "error" | "warning"
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity}: {self.message}"


@dataclass(frozen=True)
class Redirect:
    source: int
    target: int
    line: int


@dataclass(frozen=True)
class DeckSpec:
    name: str
    size: int
    squares: tuple[int, ...]
    cards: tuple[tuple[DestinationRule, int], ...]
    stay_count: int | None
    line: int

    def to_deck(self) -> CardDeck:
        return CardDeck(size=self.size, cards=self.cards, stay_count=self.stay_count)


@dataclass(frozen=True)
class BoardSpec:
    """Parsed, semantically checked board description."""

    name: str
    topology: str  # "linear" | "loop"
    squares: int
    moves: MoveDistribution
    overshoot: str | None
    absorbing: tuple[int, ...]
    redirects: tuple[Redirect, ...]
    decks: tuple[DeckSpec, ...]
    labels: tuple[tuple[int, str], ...]


@dataclass(frozen=True)
class ParseResult:
    spec: BoardSpec | None
    diagnostics: tuple[ParseDiagnostic, ...]

    @property
    def ok(self) -> bool:
        return self.spec is not None

    @property
    def errors(self) -> tuple[ParseDiagnostic, ...]:
        return tuple(d for d in self.diagnostics if d.severity == "error")


class _LineError(Exception):
    def __init__(self, message: str, column: int = 1):
        self.message = message
        self.column = column
        super().__init__(message)


class _Parser:
    def __init__(self):
        self.diagnostics: list[ParseDiagnostic] = []
        self.seen: dict[str, int] = {}
        self.name: str | None = None
        self.topology: str | None = None
        self.squares: int | None = None
        self.move_pairs: dict[int, Fraction] | None = None
        self.move_line = 0
        self.overshoot: str | None = None
        self.absorbing: tuple[int, ...] = ()
        self.redirects: list[Redirect] = []
        self.decks: dict[str, dict] = {}
        self.cards: list[tuple[str, DestinationRule | None, int, int, int]] = []
        self.labels: dict[int, tuple[str, int]] = {}

    def error(self, line: int, message: str, column: int = 1) -> None:
        self.diagnostics.append(ParseDiagnostic(line, column, "error", message))

    # -- per-line dispatch ------------------------------------------------

    def feed(self, lineno: int, raw: str) -> None:
        text = _strip_comment(raw).strip()
        if not text:
            return
        tokens = text.split()
        directive, rest_tokens = tokens[0], tokens[1:]
        handler = getattr(self, f"_dir_{directive}", None)
        if handler is None:
            self.error(lineno, f"unknown directive '{directive}'", _col(raw, directive))
            return
        if directive in _SINGLETON_DIRECTIVES:
            if directive in self.seen:
                self.error(lineno, f"duplicate '{directive}' directive "
                                   f"(first on line {self.seen[directive]})")
                return
            self.seen[directive] = lineno
        try:
            handler(lineno, rest_tokens, text)
        except _LineError as exc:
            self.error(lineno, exc.message, exc.column)

    def _dir_board(self, lineno, tokens, text):
        if len(tokens) != 1:
            raise _LineError("expected: board NAME")
        self.name = tokens[0]

    def _dir_topology(self, lineno, tokens, text):
        if len(tokens) != 1 or tokens[0] not in ("linear", "loop"):
            raise _LineError("expected: topology linear|loop")
        self.topology = tokens[0]

    def _dir_squares(self, lineno, tokens, text):
        if len(tokens) != 1:
            raise _LineError("expected: squares N")
        self.squares = _parse_int(tokens[0])

    def _dir_move(self, lineno, tokens, text):
        pairs: dict[int, Fraction] = {}
        rest = re.sub(r"\s*:\s*", ":", text[len("move"):].strip())
        if not rest:
            raise _LineError("expected: move D:PROB ...")
        for item in rest.split():
            if ":" not in item:
                raise _LineError(f"expected displacement:probability, got '{item}'")
            d_text, p_text = item.split(":", 1)
            d = _parse_int(d_text)
            prob = _parse_rational(p_text)
            if prob < 0:
                raise _LineError(f"negative probability {p_text}")
            if d in pairs:
                raise _LineError(f"displacement {d} listed twice")
            pairs[d] = prob
        total = sum(pairs.values())
        if total != 1:
            raise _LineError(f"move probabilities sum to {total}, expected 1")
        self.move_pairs = pairs
        self.move_line = lineno

    def _dir_overshoot(self, lineno, tokens, text):
        if len(tokens) != 1 or tokens[0] not in OvershootPolicy.ALL:
            raise _LineError("expected: overshoot collapse|stay")
        self.overshoot = tokens[0]

    def _dir_absorbing(self, lineno, tokens, text):
        squares = _parse_int_list(" ".join(tokens))
        if len(set(squares)) != len(squares):
            raise _LineError("absorbing square listed twice")
        self.absorbing = tuple(squares)

    def _dir_redirect(self, lineno, tokens, text):
        m = re.match(r"redirect\s+(-?\d+)\s*->\s*(-?\d+)\s*$", text)
        if not m:
            raise _LineError("expected: redirect FROM -> TO")
        source, target = int(m.group(1)), int(m.group(2))
        if source == target:
            raise _LineError(f"redirect {source} -> {target} points at itself")
        if any(r.source == source for r in self.redirects):
            raise _LineError(f"duplicate redirect from square {source}")
        self.redirects.append(Redirect(source, target, lineno))

    def _dir_deck(self, lineno, tokens, text):
        if len(tokens) < 4 or tokens[1] != "size" or tokens[3] != "at":
            raise _LineError("expected: deck NAME size N at SQ1, SQ2, ...")
        name = tokens[0]
        if name in self.decks:
            raise _LineError(f"duplicate deck '{name}'")
        size = _parse_int(tokens[2])
        if size < 1:
            raise _LineError(f"deck size must be positive, got {size}")
        squares = _parse_int_list(" ".join(tokens[4:]))
        if not squares:
            raise _LineError("deck needs at least one attachment square")
        self.decks[name] = {"size": size, "squares": tuple(squares), "line": lineno}

    def _dir_card(self, lineno, tokens, text):
        if len(tokens) < 2:
            raise _LineError("expected: card DECK goto|back|nearest|stay ... : COUNT")
        name, action = tokens[0], tokens[1]
        rest = text.split(None, 2)[2] if len(text.split(None, 2)) > 2 else ""
        if ":" not in rest and action != "stay":
            raise _LineError("card needs a ': COUNT' weight")
        if ":" in rest:
            arg_text, count_text = rest.rsplit(":", 1)
            arg_text = arg_text[len(action):].strip() if arg_text.startswith(action) else arg_text
            count = _parse_int(count_text.strip())
        else:
            arg_text, count = "", 1
        if count < 1:
            raise _LineError(f"card count must be positive, got {count}")

        # arg_text still begins with the action keyword when rsplit kept it
        if arg_text.startswith(action):
            arg_text = arg_text[len(action):].strip()

        rule: DestinationRule | None
        if action == "goto":
            rule = FixedSquare(_parse_int(arg_text))
        elif action == "back":
            rule = GoBack(_parse_int(arg_text))
        elif action == "nearest":
            rule = NearestOf(tuple(_parse_int_list(arg_text)))
            if not rule.squares:
                raise _LineError("nearest needs at least one square")
        elif action == "stay":
            if arg_text:
                raise _LineError("stay takes no squares")
            rule = None
        else:
            raise _LineError(f"unknown card action '{action}'")
        self.cards.append((name, rule, count, lineno, _col(text, action)))

    def _dir_label(self, lineno, tokens, text):
        m = re.match(r'label\s+(-?\d+)\s+(.*)$', text)
        if not m:
            raise _LineError("expected: label SQUARE NAME")
        square = int(m.group(1))
        value = m.group(2).strip()
        if value.startswith('"'):
            if not (value.endswith('"') and len(value) >= 2):
                raise _LineError("unterminated label string")
            value = value[1:-1]
        if not value:
            raise _LineError("empty label")
        if square in self.labels:
            raise _LineError(f"duplicate label for square {square}")
        self.labels[square] = (value, lineno)

    # -- whole-file checks --------------------------------------------------

    def finish(self) -> BoardSpec | None:
        last = max(self.seen.values(), default=1)
        if self.name is None:
            self.error(1, "missing board directive")
        if self.topology is None:
            self.error(last, "missing topology directive")
        if self.squares is None:
            self.error(last, "missing squares directive")
        if self.move_pairs is None:
            self.error(last, "missing move directive")
        if self.topology == "linear" and self.overshoot is None:
            self.error(last, "linear boards need an overshoot directive")
        if self.topology == "loop" and self.overshoot is not None:
            self.error(self.seen.get("overshoot", last),
                       "overshoot only applies to linear boards")
        if self.squares is not None and self.squares < 2:
            self.error(self.seen.get("squares", last),
                       f"a board needs at least 2 squares, got {self.squares}")

        n = self.squares if self.squares is not None and self.squares >= 2 else None
        if n is not None:
            self._check_ranges(n)
        decks = self._assemble_decks()

        if any(d.severity == "error" for d in self.diagnostics):
            return None
        return BoardSpec(
            name=self.name,
            topology=self.topology,
            squares=self.squares,
            moves=MoveDistribution(self.move_pairs),
            overshoot=self.overshoot,
            absorbing=self.absorbing,
            redirects=tuple(self.redirects),
            decks=decks,
            labels=tuple(sorted((sq, v[0]) for sq, v in self.labels.items())),
        )

    def _check_ranges(self, n: int) -> None:
        for sq in self.absorbing:
            if not 1 <= sq <= n:
                self.error(self.seen.get("absorbing", 1),
                           f"absorbing square {sq} outside 1..{n}")
        for r in self.redirects:
            for sq in (r.source, r.target):
                if not 1 <= sq <= n:
                    self.error(r.line, f"redirect square {sq} outside 1..{n}")
        for info in self.decks.values():
            for sq in info["squares"]:
                if not 1 <= sq <= n:
                    self.error(info["line"], f"deck square {sq} outside 1..{n}")
        for sq, (_, line) in self.labels.items():
            if not 1 <= sq <= n:
                self.error(line, f"label square {sq} outside 1..{n}")
        for name, rule, count, line, col in self.cards:
            squares = ()
            if isinstance(rule, FixedSquare):
                squares = (rule.square,)
            elif isinstance(rule, NearestOf):
                squares = rule.squares
            for sq in squares:
                if not 1 <= sq <= n:
                    self.error(line, f"card square {sq} outside 1..{n}", col)

    def _assemble_decks(self) -> tuple[DeckSpec, ...]:
        movement: dict[str, list] = {name: [] for name in self.decks}
        stay: dict[str, int] = {name: 0 for name in self.decks}
        for name, rule, count, line, col in self.cards:
            if name not in self.decks:
                self.error(line, f"card names unknown deck '{name}'", col)
                continue
            if rule is None:
                stay[name] += count
            else:
                movement[name].append((rule, count))
        out = []
        for name, info in self.decks.items():
            moving = sum(c for _, c in movement[name])
            declared = moving + stay[name]
            if declared > info["size"]:
                self.error(info["line"],
                           f"deck '{name}' declares {declared} cards but has size {info['size']}")
                continue
            out.append(DeckSpec(
                name=name,
                size=info["size"],
                squares=info["squares"],
                cards=tuple(movement[name]),
                stay_count=stay[name] or None,
                line=info["line"],
            ))
        return tuple(out)


def _strip_comment(line: str) -> str:
    out = []
    in_string = False
    for ch in line:
        if ch == '"':
            in_string = not in_string
        if ch == "#" and not in_string:
            break
        out.append(ch)
    return "".join(out)


def _col(line: str, token: str) -> int:
    pos = line.find(token)
    return pos + 1 if pos >= 0 else 1


def _parse_int(text: str) -> int:
    text = text.strip()
    if not _INT_RE.match(text):
        raise _LineError(f"expected an integer, got '{text}'")
    return int(text)


def _parse_int_list(text: str) -> list[int]:
    items = [item.strip() for item in text.split(",")]
    if items == [""]:
        return []
    return [_parse_int(item) for item in items]


def _parse_rational(text: str) -> Fraction:
    text = text.strip()
    m = _RAT_RE.match(text)
    if not m:
        if re.match(r"-?\d*\.\d+$", text):
            raise _LineError(f"decimal literals are not allowed, write '{text}' as a fraction")
        raise _LineError(f"expected a rational a/b, got '{text}'")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise _LineError(f"zero denominator in '{text}'")
    return Fraction(num, den)


def parse(source) -> ParseResult:
    """Parse DSL source (str or bytes) with error recovery.

    Never raises on malformed input: every problem becomes a diagnostic
    and ``spec`` is None whenever any error was recorded.
    """
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            bad_line = source[: exc.start].count(b"\n") + 1
            diag = ParseDiagnostic(bad_line, 1, "error", "input is not valid UTF-8")
            source = bytes(source).decode("utf-8", errors="replace")
            parser = _Parser()
            parser.diagnostics.append(diag)
            for lineno, raw in enumerate(source.replace("\r\n", "\n").split("\n"), start=1):
                parser.feed(lineno, raw)
            parser.finish()
            return ParseResult(None, tuple(parser.diagnostics))

    parser = _Parser()
    for lineno, raw in enumerate(source.replace("\r\n", "\n").split("\n"), start=1):
        parser.feed(lineno, raw)
    spec = parser.finish()
    return ParseResult(spec, tuple(parser.diagnostics))


def parse_strict(source) -> BoardSpec:
    """Parse and raise :class:`BoardParseError` on any diagnostic error."""
    result = parse(source)
    if not result.ok:
        raise BoardParseError(result.errors)
    return result.spec


# --- compilation ---------------------------------------------------------------

def compile_board(spec: BoardSpec) -> TransitionMatrix:
    """Compile a parsed board into a validated transition matrix.

    Construction order: base topology, absorbing overrides, redirects,
    then decks in file order (deck order, then attachment order), with
    the cross-deck ordering check applied to the whole plan.
    """
    labels = _full_labels(spec)
    try:
        if spec.topology == "loop":
            p = loop_board(spec.squares, spec.moves, labels=labels)
            p = _override_absorbing(p, spec.absorbing)
        else:
            p = _compile_linear(spec, labels)

        for r in spec.redirects:
            try:
                p = apply_redirect(p, r.source, r.target)
            except MarkovBoardError as exc:
                raise BoardCompileError(f"line {r.line}: {exc}") from None

        plan = [(sq, ds) for ds in spec.decks for sq in ds.squares]
        deck_lines = {ds.name: ds.line for ds in spec.decks}
        try:
            check_deck_ordering([(sq, ds.to_deck()) for sq, ds in plan], spec.squares)
        except MarkovBoardError as exc:
            lines = ", ".join(str(l) for l in sorted(set(deck_lines.values())))
            raise BoardCompileError(f"line {lines}: {exc}") from None
        for sq, ds in plan:
            try:
                p = apply_card_deck(p, sq, ds.to_deck())
            except MarkovBoardError as exc:
                raise BoardCompileError(f"line {ds.line}: {exc}") from None
        return p
    except BoardCompileError:
        raise
    except MarkovBoardError as exc:
        raise BoardCompileError(str(exc)) from None


def _compile_linear(spec: BoardSpec, labels) -> TransitionMatrix:
    n = spec.squares
    displacements = dict(spec.moves.items())
    if all(d >= 0 for d in displacements):
        p = linear_board(n, spec.moves, spec.overshoot, labels=labels)
        return _override_absorbing(p, spec.absorbing)

    # Two-sided moves (ruin-style): build rows directly.  The final square
    # still absorbs; other boundaries must be covered by explicit absorbing
    # squares or the walk would leave the board.
    absorbing = set(spec.absorbing) | {n}
    zero = Fraction(0)
    rows = [[zero] * n for _ in range(n)]
    for k in range(1, n + 1):
        if k in absorbing:
            rows[k - 1][k - 1] = Fraction(1)
            continue
        for d, prob in displacements.items():
            target = k + d
            if target > n:
                target = n if spec.overshoot == OvershootPolicy.COLLAPSE_TO_END else k
            if target < 1:
                raise BoardCompileError(
                    f"move {d} from square {k} leaves the board; "
                    f"mark the lower boundary absorbing"
                )
            rows[k - 1][target - 1] += prob
    return validate_stochastic(rows, labels)


def _override_absorbing(p: TransitionMatrix, squares: tuple[int, ...]) -> TransitionMatrix:
    if not squares:
        return p
    entries = np.array(p.entries, copy=True)
    exact = entries.dtype == object
    for sq in squares:
        for j in range(p.n):
            entries[sq - 1, j] = Fraction(0) if exact else 0.0
        entries[sq - 1, sq - 1] = Fraction(1) if exact else 1.0
    return validate_stochastic(entries, p.labels)


def _full_labels(spec: BoardSpec):
    if not spec.labels:
        return None
    full = [""] * spec.squares
    for sq, text in spec.labels:
        full[sq - 1] = text
    return tuple(full)


# --- canonical renderer ----------------------------------------------------------

def render(spec: BoardSpec) -> str:
    """Pretty-print the canonical text for a spec (parse(render(s)) == s)."""
    lines = [f"board {spec.name}",
             f"topology {spec.topology}",
             f"squares {spec.squares}"]
    moves = " ".join(f"{d}:{_rat(p)}" for d, p in spec.moves.items())
    lines.append(f"move {moves}")
    if spec.overshoot is not None:
        lines.append(f"overshoot {spec.overshoot}")
    if spec.absorbing:
        lines.append("absorbing " + ", ".join(str(s) for s in spec.absorbing))
    for r in spec.redirects:
        lines.append(f"redirect {r.source} -> {r.target}")
    for ds in spec.decks:
        at = ", ".join(str(s) for s in ds.squares)
        lines.append(f"deck {ds.name} size {ds.size} at {at}")
        for rule, count in ds.cards:
            lines.append(f"card {ds.name} {_rule_text(rule)} : {count}")
        if ds.stay_count:
            lines.append(f"card {ds.name} stay : {ds.stay_count}")
    for sq, text in spec.labels:
        lines.append(f'label {sq} "{text}"')
    return "\n".join(lines) + "\n"


def _rat(p: Fraction) -> str:
    return str(p.numerator) if p.denominator == 1 else f"{p.numerator}/{p.denominator}"


def _rule_text(rule: DestinationRule) -> str:
    if isinstance(rule, FixedSquare):
        return f"goto {rule.square}"
    if isinstance(rule, GoBack):
        return f"back {rule.squares}"
    return "nearest " + ",".join(str(s) for s in rule.squares)


import numpy as np  # noqa: E402  (used by the absorbing override)
