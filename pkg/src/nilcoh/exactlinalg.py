"""Exact linear algebra over the rationals.

Matrices are lists of rows of ``fractions.Fraction``.  Everything here is
deterministic: pivots are chosen by scanning columns left to right and rows
top to bottom, never by magnitude, so repeated runs (and downstream
cohomology bases) are reproducible.
"""

from __future__ import annotations

from fractions import Fraction

Matrix = list[list[Fraction]]
Vector = list[Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


def zeros(rows: int, cols: int) -> Matrix:
    return [[ZERO] * cols for _ in range(rows)]


def identity(n: int) -> Matrix:
    m = zeros(n, n)
    for i in range(n):
        m[i][i] = ONE
    return m


def copy_matrix(m: Matrix) -> Matrix:
    return [row[:] for row in m]


def transpose(m: Matrix) -> Matrix:
    if not m:
        return []
    return [list(col) for col in zip(*m)]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if not a or not b:
        return []
    bt = transpose(b)
    return [[sum((x * y for x, y in zip(row, col)), ZERO) for col in bt] for row in a]


def mat_vec(m: Matrix, v: Vector) -> Vector:
    return [sum((x * y for x, y in zip(row, v)), ZERO) for row in m]


def rref(m: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form; returns (rref_matrix, pivot_columns)."""
    r = copy_matrix(m)
    if not r:
        return r, []
    n_rows, n_cols = len(r), len(r[0])
    pivots: list[int] = []
    piv_r = 0
    for col in range(n_cols):
        row = next((i for i in range(piv_r, n_rows) if r[i][col] != 0), None)
        if row is None:
            continue
        r[piv_r], r[row] = r[row], r[piv_r]
        inv = ONE / r[piv_r][col]
        r[piv_r] = [x * inv for x in r[piv_r]]
        for i in range(n_rows):
            if i != piv_r and r[i][col] != 0:
                f = r[i][col]
                r[i] = [x - f * y for x, y in zip(r[i], r[piv_r])]
        pivots.append(col)
        piv_r += 1
        if piv_r == n_rows:
            break
    return r, pivots


def rank(m: Matrix) -> int:
    return len(rref(m)[1])


def nullspace(m: Matrix) -> list[Vector]:
    """Basis of the right nullspace, one vector per free column, in column order."""
    if not m:
        return []
    n_cols = len(m[0])
    r, pivots = rref(m)
    pivot_set = set(pivots)
    basis = []
    for free in range(n_cols):
        if free in pivot_set:
            continue
        v = [ZERO] * n_cols
        v[free] = ONE
        for prow, pcol in enumerate(pivots):
            v[pcol] = -r[prow][free]
        basis.append(v)
    return basis


def column_space_pivots(m: Matrix) -> list[int]:
    """Indices of a deterministic set of columns spanning the column space."""
    return rref(m)[1]


def solve(m: Matrix, b: Vector) -> Vector | None:
    """One solution of m x = b, or None if inconsistent.  Free variables are set to 0."""
    if not m:
        return [] if all(x == 0 for x in b) else None
    n_cols = len(m[0])
    aug = [row[:] + [bv] for row, bv in zip(m, b)]
    r, pivots = rref(aug)
    if n_cols in pivots:
        return None
    x = [ZERO] * n_cols
    for prow, pcol in enumerate(pivots):
        x[pcol] = r[prow][n_cols]
    return x


def invert(m: Matrix) -> Matrix:
    """Inverse of a square invertible matrix; raises ValueError if singular."""
    n = len(m)
    aug = [row[:] + irow[:] for row, irow in zip(m, identity(n))]
    r, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ValueError("matrix is singular")
    return [row[n:] for row in r]


def in_span(basis: list[Vector], v: Vector) -> bool:
    """Whether v lies in the span of the given vectors."""
    if not basis:
        return all(x == 0 for x in v)
    m = transpose(basis)
    return solve(m, v) is not None
