"""Exact linear algebra over Fraction or RatFunc entries.

Matrices are lists of lists.  Subspaces are represented by lists of spanning
row vectors; their canonical form is the reduced row echelon form with zero
rows dropped, which makes subspace equality a structural comparison.

Everything works for any entry type supporting +, -, *, /, a truthy zero
test via ``_is_zero`` and an explicit multiplicative identity (needed when a
matrix over RatFuncs must be inverted).
"""

from __future__ import annotations

from fractions import Fraction


def _is_zero(x) -> bool:
    z = getattr(x, "is_zero", None)
    if z is not None:
        return z
    return x == 0


def mat_copy(m):
    return [list(row) for row in m]


def rref(matrix):
    """Reduced row echelon form.  Returns (rows, pivot column indices)."""
    m = mat_copy(matrix)
    if not m:
        return [], []
    rows, cols = len(m), len(m[0])
    pivots = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if not _is_zero(m[i][c])), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        pv = m[r][c]
        m[r] = [x / pv for x in m[r]]
        for i in range(rows):
            if i != r and not _is_zero(m[i][c]):
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(matrix) -> int:
    return len(rref(matrix)[1])


def canonical_span(vectors):
    """Canonical basis (rref rows, zero rows dropped) of the row span."""
    if not vectors:
        return []
    m, pivots = rref(vectors)
    return [m[i] for i in range(len(pivots))]


def span_eq(a, b) -> bool:
    return canonical_span(a) == canonical_span(b)


def kernel_basis(matrix, ncols=None):
    """Basis of the right null space {v : matrix @ v = 0}."""
    if not matrix:
        return []
    cols = ncols if ncols is not None else len(matrix[0])
    m, pivots = rref(matrix)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * cols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -m[r][fc]
        basis.append(v)
    return basis


def _dot(row, col):
    it = iter(zip(row, col))
    x, y = next(it)
    acc = x * y
    for x, y in it:
        acc = acc + x * y
    return acc


def matvec(m, v):
    return [_dot(row, v) for row in m]


def matmul(a, b):
    bt = list(zip(*b))
    return [[_dot(row, col) for col in bt] for row in a]


def transpose(m):
    return [list(row) for row in zip(*m)]


def identity(n, one=Fraction(1)):
    zero = one - one
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_inverse(m, one=Fraction(1)):
    """Inverse by Gauss-Jordan; returns None when the matrix is singular."""
    n = len(m)
    zero = one - one
    aug = [list(row) + list(idrow) for row, idrow in zip(mat_copy(m), identity(n, one))]
    r = 0
    for c in range(n):
        pivot = next((i for i in range(r, n) if not _is_zero(aug[i][c])), None)
        if pivot is None:
            return None
        aug[r], aug[pivot] = aug[pivot], aug[r]
        pv = aug[r][c]
        aug[r] = [x / pv for x in aug[r]]
        for i in range(n):
            if i != r and not _is_zero(aug[i][c]):
                f = aug[i][c]
                aug[i] = [a - f * b for a, b in zip(aug[i], aug[r])]
        r += 1
    return [row[n:] for row in aug]


def det(m, one=Fraction(1)):
    n = len(m)
    a = mat_copy(m)
    result = one
    for c in range(n):
        pivot = next((i for i in range(c, n) if not _is_zero(a[i][c])), None)
        if pivot is None:
            return one - one
        if pivot != c:
            a[c], a[pivot] = a[pivot], a[c]
            result = -result
        result = result * a[c][c]
        inv = one / a[c][c]
        for i in range(c + 1, n):
            if not _is_zero(a[i][c]):
                f = a[i][c] * inv
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return result


def solve(matrix, rhs):
    """One solution of matrix @ v = rhs, or None if inconsistent."""
    if not matrix:
        return None
    rows, cols = len(matrix), len(matrix[0])
    aug = [list(matrix[i]) + [rhs[i]] for i in range(rows)]
    m, pivots = rref(aug)
    if cols in pivots:
        return None  # pivot in the rhs column
    v = [Fraction(0)] * cols
    for r, pc in enumerate(pivots):
        v[pc] = m[r][cols]
    return v


def map_span(matrix, span):
    """Image of a row-spanned subspace under v -> matrix @ v."""
    return canonical_span([matvec(matrix, v) for v in span])


def column_space(matrix):
    return canonical_span(transpose(matrix))


def preimage_span(matrix, span, ncols=None):
    """{v : matrix @ v in row-span(span)} as a canonical row span."""
    rows = len(matrix)
    cols = ncols if ncols is not None else len(matrix[0])
    k = len(span)
    # Solve matrix @ v - span^T c = 0 for (v, c), then project to v.
    big = []
    for i in range(rows):
        big.append(list(matrix[i]) + [-span[j][i] for j in range(k)])
    sols = kernel_basis(big, ncols=cols + k)
    return canonical_span([s[:cols] for s in sols])


def intersect_spans(a, b):
    """Intersection of two row-spanned subspaces."""
    if not a or not b:
        return []
    dim = len(a[0])
    # v = a^T x = b^T y; kernel of [a^T | -b^T]
    big = []
    for i in range(dim):
        big.append([a[j][i] for j in range(len(a))] + [-b[j][i] for j in range(len(b))])
    out = []
    for s in kernel_basis(big, ncols=len(a) + len(b)):
        coeffs = s[: len(a)]
        v = [_dot(coeffs, [a[j][i] for j in range(len(a))]) for i in range(dim)]
        out.append(v)
    return canonical_span(out)


def sum_spans(a, b):
    return canonical_span(list(a) + list(b))
