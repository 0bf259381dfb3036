"""Small exact linear algebra over Fractions (row-tuple matrices)."""

from __future__ import annotations

from fractions import Fraction

Matrix = tuple  # tuple of row tuples of Fractions
Vector = tuple


def as_fraction_rows(rows) -> Matrix:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def identity_matrix(n: int) -> Matrix:
    return tuple(
        tuple(Fraction(1) if i == j else Fraction(0) for j in range(n)) for i in range(n)
    )


def mat_vec(m: Matrix, v: Vector) -> Vector:
    return tuple(sum((a * b for a, b in zip(row, v)), Fraction(0)) for row in m)


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    if not a:
        return ()
    cols = len(b[0]) if b else 0
    return tuple(
        tuple(
            sum((a[i][k] * b[k][j] for k in range(len(b))), Fraction(0))
            for j in range(cols)
        )
        for i in range(len(a))
    )


def transpose(m: Matrix) -> Matrix:
    if not m:
        return ()
    return tuple(tuple(row[j] for row in m) for j in range(len(m[0])))


def mat_inv(m: Matrix) -> Matrix:
    """Exact inverse by Gauss-Jordan; raises ValueError on singular input."""
    n = len(m)
    aug = [list(row) + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
           for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


def solve_exact(rows: list, rhs: list):
    """Solve rows @ x = rhs exactly.

    Returns the unique solution vector, the string "inconsistent" when the
    (possibly overdetermined) system has no solution, or raises ValueError
    naming the missing directions when the coefficient rows do not span.
    """
    n_cols = len(rows[0]) if rows else 0
    aug = [list(r) + [b] for r, b in zip(rows, rhs)]
    pivots = []
    row_i = 0
    for col in range(n_cols):
        pivot = next((r for r in range(row_i, len(aug)) if aug[r][col] != 0), None)
        if pivot is None:
            continue
        aug[row_i], aug[pivot] = aug[pivot], aug[row_i]
        p = aug[row_i][col]
        aug[row_i] = [v / p for v in aug[row_i]]
        for r in range(len(aug)):
            if r != row_i and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[row_i])]
        pivots.append(col)
        row_i += 1
    for r in range(row_i, len(aug)):
        if aug[r][n_cols] != 0:
            return "inconsistent"
    if len(pivots) < n_cols:
        missing = [c for c in range(n_cols) if c not in pivots]
        raise ValueError(
            f"coefficient rows do not span: missing directions {missing}"
        )
    sol = [Fraction(0)] * n_cols
    for r, col in enumerate(pivots):
        sol[col] = aug[r][n_cols]
    return tuple(sol)


def sup_norm(v) -> Fraction:
    return max((abs(Fraction(x)) for x in v), default=Fraction(0))


def row_l1_norm(m: Matrix):
    """Operator sup-norm: max row absolute sum."""
    return max((sum(abs(v) for v in row) for row in m), default=Fraction(0))
