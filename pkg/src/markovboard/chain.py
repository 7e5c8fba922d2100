"""Finite stationary Markov chain analysis.

States are numbered 1..n in the public API (matching board squares);
matrices and vectors returned here are plain numpy arrays indexed from 0,
so state k lives at index k-1.

The three classical quantities for a chain in canonical block form::

    P = [ P_T  P_TR ]        E = (I - P_T)^-1      expected visits
        [ 0    P_R  ]        F = E @ P_TR          absorption probabilities
                             pi' P = pi'           stationary distribution

``E[i, j]`` counts the expected number of occupancies of transient state j
starting from transient state i, with the starting occupancy included
(so the diagonal is always >= 1).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    EmptyTransientSetError,
    InternalInconsistency,
    NegativeEntryError,
    NonSquareError,
    NotARecurrentClassError,
    RowSumViolation,
    SingularSystemError,
)
from .linalg import (
    FLOAT_TOL,
    Backend,
    backend_of,
    identity,
    solve,
    to_float,
    zeros,
)


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """A validated row-stochastic square matrix.

    ``entries`` is either an object array of Fractions (exact backend) or
    a float64 array.  Construct through :func:`validate_stochastic`.
    """

    entries: np.ndarray
    labels: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def backend(self) -> Backend:
        return backend_of(self.entries)

    def as_float(self) -> "TransitionMatrix":
        if self.backend == "float":
            return self
        return TransitionMatrix(to_float(self.entries), self.labels)

    def label(self, state: int) -> str:
        """Human name of 1-based state `state` (falls back to its number)."""
        if self.labels is not None and self.labels[state - 1]:
            return self.labels[state - 1]
        return str(state)


class StateKind(enum.Enum):
    TRANSIENT = "transient"
    RECURRENT = "recurrent"


@dataclass(frozen=True)
class StateClassification:
    """Communicating-class structure of a chain.

    ``classes`` lists every communicating class (ordered by smallest
    member); ``class_ids[k-1]`` is the index into ``classes`` for state k.
    ``recurrent_classes`` and ``periods`` are aligned with each other.
    All state numbers are 1-based.
    """

    kinds: tuple[StateKind, ...]
    class_ids: tuple[int, ...]
    classes: tuple[frozenset[int], ...]
    recurrent_classes: tuple[frozenset[int], ...]
    periods: tuple[int, ...]
    absorbing: tuple[bool, ...]

    @property
    def n(self) -> int:
        return len(self.kinds)

    @property
    def transient_states(self) -> tuple[int, ...]:
        return tuple(s for s in range(1, self.n + 1) if self.kinds[s - 1] is StateKind.TRANSIENT)

    @property
    def recurrent_states(self) -> tuple[int, ...]:
        return tuple(s for s in range(1, self.n + 1) if self.kinds[s - 1] is StateKind.RECURRENT)

    @property
    def is_absorbing_chain(self) -> bool:
        """True when every recurrent class is a single absorbing state."""
        return all(len(c) == 1 for c in self.recurrent_classes)


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """Block form with transient states first.

    ``permutation`` holds original 1-based state numbers: the first ``t``
    are the transient states in ascending order, the rest the recurrent
    states grouped by class (classes ordered by smallest member).
    """

    permutation: tuple[int, ...]
    p_t: np.ndarray
    p_tr: np.ndarray
    p_r: np.ndarray
    t: int
    r: int
    recurrent_class_states: tuple[tuple[int, ...], ...]

    @property
    def transient_states(self) -> tuple[int, ...]:
        return self.permutation[: self.t]

    @property
    def recurrent_states(self) -> tuple[int, ...]:
        return self.permutation[self.t:]


@dataclass(frozen=True, eq=False)
class FundamentalMatrix:
    """Expected-visit counts among transient states, basis ``states``."""

    e: np.ndarray
    states: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class AbsorptionMatrix:
    """Probabilities of ending in each recurrent state (and class).

    ``f[i, j]``: starting from ``transient_states[i]``, probability of
    being absorbed at ``recurrent_states[j]``.  ``by_class`` sums the
    columns of each recurrent class.
    """

    f: np.ndarray
    transient_states: tuple[int, ...]
    recurrent_states: tuple[int, ...]
    by_class: np.ndarray
    class_states: tuple[tuple[int, ...], ...]


@dataclass(frozen=True, eq=False)
class StationaryVector:
    """Length-n stationary vector supported on one recurrent class."""

    pi: np.ndarray
    restricted_to: frozenset[int]

    def at(self, state: int):
        """Stationary probability of 1-based state `state`."""
        return self.pi[state - 1]


def validate_stochastic(m, labels: Sequence[str] | None = None) -> TransitionMatrix:
    """Validate a candidate square matrix and wrap it as a TransitionMatrix.

    Entries that are all ints/Fractions give the exact backend; anything
    float-valued gives the float backend.  Rows must sum to 1 — exactly
    for the exact backend, within 1e-9 for floats.

    Raises NonSquareError, NegativeEntryError, or RowSumViolation.
    """
    arr = _coerce_matrix(m)
    n = arr.shape[0]
    if n == 0 or arr.ndim != 2 or arr.shape[1] != n:
        raise NonSquareError(f"expected a nonempty square matrix, got shape {arr.shape}")

    exact = arr.dtype == object
    for i in range(n):
        row = arr[i]
        for j in range(n):
            v = row[j]
            if v < 0:
                raise NegativeEntryError(i, j, v)
        total = row.sum()
        if exact:
            if total != 1:
                raise RowSumViolation(i, total)
        elif abs(total - 1.0) > FLOAT_TOL:
            raise RowSumViolation(i, total)

    if labels is not None:
        labels = tuple(labels)
        if len(labels) != n:
            raise NonSquareError(f"{len(labels)} labels for {n} states")
    arr.setflags(write=False)
    return TransitionMatrix(arr, labels)


def _coerce_matrix(m) -> np.ndarray:
    if isinstance(m, TransitionMatrix):
        return m.entries
    if isinstance(m, np.ndarray):
        if m.dtype == object:
            return m
        return np.asarray(m, dtype=float)
    rows = [list(row) for row in m]
    if any(isinstance(v, float) for row in rows for v in row):
        return np.asarray(rows, dtype=float)
    out = np.empty((len(rows), len(rows[0]) if rows else 0), dtype=object)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            out[i, j] = Fraction(v)
    return out


# --- classification ----------------------------------------------------------

def _successors(entries: np.ndarray) -> list[list[int]]:
    n = entries.shape[0]
    return [[j for j in range(n) if entries[i, j] > 0] for i in range(n)]


def _tarjan_sccs(adj: list[list[int]]) -> list[list[int]]:
    """Strongly connected components, iterative to spare the recursion limit."""
    n = len(adj)
    index = [-1] * n
    lowlink = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    sccs: list[list[int]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(adj[v])):
                w = adj[v][k]
                if index[w] == -1:
                    work[-1] = (v, k + 1)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    lowlink[v] = min(lowlink[v], index[w])
            if advanced:
                continue
            work.pop()
            if lowlink[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
    return sccs


def _class_period(adj: list[list[int]], members: set[int]) -> int:
    """gcd of cycle lengths inside a strongly connected class.

    BFS from any member; every internal edge u->v contributes
    level(u) + 1 - level(v) to the gcd.
    """
    root = min(members)
    level = {root: 0}
    queue = [root]
    g = 0
    while queue:
        u = queue.pop(0)
        for v in adj[u]:
            if v not in members:
                continue
            if v not in level:
                level[v] = level[u] + 1
                queue.append(v)
            g = gcd(g, level[u] + 1 - level[v])
    return abs(g) if g else 1


def classify_states(p: TransitionMatrix) -> StateClassification:
    """Partition states into communicating classes and type them.

    A class is recurrent iff no positive-probability edge leaves it;
    every other class is transient (some recurrent class is reachable,
    because the condensation is a finite DAG).
    """
    adj = _successors(p.entries)
    sccs = _tarjan_sccs(adj)
    sccs.sort(key=min)

    member_sets = [set(c) for c in sccs]
    class_of = [0] * p.n
    for cid, comp in enumerate(sccs):
        for v in comp:
            class_of[v] = cid

    recurrent_flags = []
    for cid, comp in enumerate(member_sets):
        leaves = any(w not in comp for v in comp for w in adj[v])
        recurrent_flags.append(not leaves)

    kinds = tuple(
        StateKind.RECURRENT if recurrent_flags[class_of[v]] else StateKind.TRANSIENT
        for v in range(p.n)
    )
    recurrent_classes = tuple(
        frozenset(v + 1 for v in member_sets[cid])
        for cid in range(len(sccs))
        if recurrent_flags[cid]
    )
    periods = tuple(
        _class_period(adj, {s - 1 for s in cls}) for cls in recurrent_classes
    )
    absorbing = tuple(
        kinds[v] is StateKind.RECURRENT and len(member_sets[class_of[v]]) == 1
        for v in range(p.n)
    )
    classes = tuple(frozenset(v + 1 for v in comp) for comp in member_sets)
    return StateClassification(
        kinds=kinds,
        class_ids=tuple(class_of),
        classes=classes,
        recurrent_classes=recurrent_classes,
        periods=periods,
        absorbing=absorbing,
    )


def class_period(p: TransitionMatrix, states: Iterable[int]) -> int:
    """Period of a recurrent class (1 = aperiodic); states are 1-based."""
    wanted = frozenset(states)
    c = classify_states(p)
    if wanted not in c.recurrent_classes:
        raise NotARecurrentClassError(f"{sorted(wanted)} is not a recurrent class")
    return c.periods[c.recurrent_classes.index(wanted)]


# --- canonical form and the fundamental quantities ---------------------------

def canonical_form(p: TransitionMatrix, c: StateClassification) -> CanonicalForm:
    """Reorder states transient-first and slice out the three blocks."""
    if c.n != p.n:
        raise DimensionMismatchError("classification does not match matrix size")
    transient = [s for s in range(1, p.n + 1) if c.kinds[s - 1] is StateKind.TRANSIENT]
    class_groups = tuple(tuple(sorted(cls)) for cls in c.recurrent_classes)
    recurrent = [s for group in class_groups for s in group]
    perm = transient + recurrent
    idx = [s - 1 for s in perm]
    reordered = p.entries[np.ix_(idx, idx)]
    t = len(transient)
    r = len(recurrent)

    lower_left = reordered[t:, :t]
    if any(lower_left[i, j] > 0 for i in range(r) for j in range(t)):
        raise InternalInconsistency("recurrent state has a positive edge to a transient state")

    return CanonicalForm(
        permutation=tuple(perm),
        p_t=reordered[:t, :t],
        p_tr=reordered[:t, t:],
        p_r=reordered[t:, t:],
        t=t,
        r=r,
        recurrent_class_states=class_groups,
    )


def fundamental_matrix(cf: CanonicalForm) -> FundamentalMatrix:
    """Expected transient-visit counts ``(I - P_T)^-1``.

    Exact backend: fraction-free elimination.  Float backend: LU solve.
    Singularity cannot happen for a valid classification, since every
    transient state reaches some recurrent class.
    """
    if cf.t == 0:
        raise EmptyTransientSetError("chain has no transient states")
    backend = backend_of(cf.p_t)
    i_minus = identity(cf.t, backend) - cf.p_t
    e = solve(i_minus, identity(cf.t, backend))
    return FundamentalMatrix(e=e, states=cf.transient_states)


def absorption_probabilities(cf: CanonicalForm, e: FundamentalMatrix) -> AbsorptionMatrix:
    """``F = E @ P_TR`` plus the per-recurrent-class column sums."""
    if cf.t == 0 or cf.r == 0:
        raise EmptyTransientSetError("absorption needs both transient and recurrent states")
    if e.e.shape != (cf.t, cf.t):
        raise DimensionMismatchError(
            f"fundamental matrix is {e.e.shape}, canonical form has t={cf.t}"
        )
    f = e.e.dot(cf.p_tr)

    by_class = zeros((cf.t, len(cf.recurrent_class_states)), backend_of(f))
    col = 0
    for k, group in enumerate(cf.recurrent_class_states):
        width = len(group)
        for i in range(cf.t):
            by_class[i, k] = f[i, col:col + width].sum()
        col += width
    return AbsorptionMatrix(
        f=f,
        transient_states=cf.transient_states,
        recurrent_states=cf.recurrent_states,
        by_class=by_class,
        class_states=cf.recurrent_class_states,
    )


def expected_absorption_time(e: FundamentalMatrix) -> np.ndarray:
    """Expected number of moves before absorption, per transient start.

    Row sums of E: total expected transient occupancies, start included.
    """
    return np.array([e.e[i].sum() for i in range(e.e.shape[0])],
                    dtype=e.e.dtype if e.e.dtype == object else float)


def stationary_distribution(
    p: TransitionMatrix, c: StateClassification, states: Iterable[int]
) -> StationaryVector:
    """Stationary vector of one recurrent class, embedded in length n.

    Solves ``(P_class' - I) pi = 0`` with the last (redundant) equation
    replaced by the normalization ``sum(pi) = 1``.  The vector exists for
    any finite recurrent class; whether it has the long-run
    landing-frequency meaning depends on aperiodicity, which reporting
    flags separately.
    """
    wanted = frozenset(states)
    if wanted not in c.recurrent_classes:
        raise NotARecurrentClassError(f"{sorted(wanted)} is not a recurrent class")
    members = sorted(wanted)
    idx = [s - 1 for s in members]
    sub = p.entries[np.ix_(idx, idx)]
    backend = backend_of(sub)
    m = len(idx)

    a = sub.T - identity(m, backend)
    one = 1.0 if backend == "float" else Fraction(1)
    for j in range(m):
        a[m - 1, j] = one
    b = zeros((m,), backend)
    b[m - 1] = one
    try:
        x = solve(a, b)
    except Exception as exc:
        raise SingularSystemError(f"stationary system unsolvable: {exc}") from None

    pi = zeros((p.n,), backend)
    for k, s in enumerate(members):
        pi[s - 1] = x[k]
    pi.setflags(write=False)
    return StationaryVector(pi=pi, restricted_to=wanted)


def is_doubly_stochastic(p: TransitionMatrix) -> bool:
    """True iff every column also sums to 1 (rows do by construction)."""
    if p.backend == "exact":
        return all(p.entries[:, j].sum() == 1 for j in range(p.n))
    return bool(np.all(np.abs(p.entries.sum(axis=0) - 1.0) <= FLOAT_TOL))
