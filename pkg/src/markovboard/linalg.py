"""Dual-backend matrix helpers.

Two numeric backends run through the whole package:

* ``exact``  — numpy object arrays holding :class:`fractions.Fraction`
* ``float``  — ordinary float64 arrays

Exact systems are solved by fraction-free (Bareiss) elimination after
clearing each row's denominators, so intermediate values stay integers
and the answers are exact rationals.  Float systems go through
``numpy.linalg.solve`` (LU with partial pivoting).
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Literal, Sequence

import numpy as np

from .errors import SingularMatrixError

Backend = Literal["exact", "float"]

FLOAT_TOL = 1e-9


def backend_of(a: np.ndarray) -> Backend:
    return "exact" if a.dtype == object else "float"


def as_fraction(value) -> Fraction:
    """Coerce an int, Fraction, or 'a/b' string to an exact Fraction.

    Floats are rejected: silently promoting a rounded float to an exact
    rational would defeat the point of the exact backend.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise TypeError(f"cannot treat {value!r} as an exact rational")


def fraction_matrix(rows: Sequence[Sequence]) -> np.ndarray:
    """Build an exact-backend matrix from nested int/Fraction values."""
    n = len(rows)
    out = np.empty((n, len(rows[0]) if n else 0), dtype=object)
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            out[i, j] = as_fraction(v)
    return out


def zeros(shape, backend: Backend) -> np.ndarray:
    if backend == "float":
        return np.zeros(shape, dtype=float)
    out = np.empty(shape, dtype=object)
    out[...] = Fraction(0)
    return out


def identity(n: int, backend: Backend) -> np.ndarray:
    out = zeros((n, n), backend)
    one = 1.0 if backend == "float" else Fraction(1)
    for i in range(n):
        out[i, i] = one
    return out


def to_float(a: np.ndarray) -> np.ndarray:
    if a.dtype != object:
        return np.asarray(a, dtype=float)
    return np.array([[float(x) for x in row] for row in a], dtype=float)


def values_close(a, b, tol: float = FLOAT_TOL) -> bool:
    """Backend-aware scalar comparison: exact for Fractions, tol for floats."""
    if isinstance(a, Fraction) and isinstance(b, (Fraction, int)):
        return a == b
    return abs(float(a) - float(b)) <= tol


def solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` in the backend of ``a``."""
    if backend_of(a) == "float":
        try:
            return np.linalg.solve(a, np.asarray(b, dtype=float))
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(str(exc)) from None
    return _solve_exact(a, b)


def _solve_exact(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Exact solve by fraction-free elimination.

    Each row of the augmented system is scaled by the lcm of its
    denominators, then Bareiss elimination keeps every intermediate an
    integer (the division in the update step is always exact).
    """
    n = a.shape[0]
    rhs = b if b.ndim == 2 else b.reshape(n, 1)
    m = rhs.shape[1]

    rows: list[list[int]] = []
    for i in range(n):
        frs = [Fraction(a[i, j]) for j in range(n)] + [Fraction(rhs[i, j]) for j in range(m)]
        scale = 1
        for f in frs:
            scale = lcm(scale, f.denominator)
        rows.append([int(f * scale) for f in frs])

    prev = 1
    for k in range(n):
        pivot_row = next((r for r in range(k, n) if rows[r][k] != 0), None)
        if pivot_row is None:
            raise SingularMatrixError("exact elimination found no pivot")
        if pivot_row != k:
            rows[k], rows[pivot_row] = rows[pivot_row], rows[k]
        rk = rows[k]
        pivot = rk[k]
        for i in range(k + 1, n):
            ri = rows[i]
            factor = ri[k]
            for j in range(k + 1, n + m):
                ri[j] = (ri[j] * pivot - factor * rk[j]) // prev
            ri[k] = 0
        prev = pivot

    x = np.empty((n, m), dtype=object)
    for j in range(m):
        for i in range(n - 1, -1, -1):
            acc = Fraction(rows[i][n + j])
            for l in range(i + 1, n):
                acc -= rows[i][l] * x[l, j]
            x[i, j] = acc / rows[i][i]
    return x if b.ndim == 2 else x.reshape(n)
