"""Exact linear algebra over canonical rational functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

from .expr import (ONE_RF, ZERO, Assumption, RationalForm, _name, canonicalize,
                   merge_assumptions, nonzero_factors)
from .poly import Poly, lcm

Matrix = list  # list[list[RationalForm]]


class NonlinearMultiplierError(ValueError):
    pass


class SingularMatrixError(ArithmeticError):
    def __init__(self, message: str, null_vector=None):
        self.null_vector = null_vector
        if null_vector is not None:
            message += "; null vector: [" + ", ".join(str(v) for v in null_vector) + "]"
        super().__init__(message)


@dataclass
class LinearSolution:
    solved: dict            # name -> RationalForm
    residuals: list         # RationalForm, multiplier-free leftovers
    free: list              # names left undetermined
    assumptions: list = field(default_factory=list)


def _size(r: RationalForm) -> tuple:
    return (not r.is_constant(), len(r.num.terms) + len(r.den.terms), str(r))


def solve_linear(equations: Sequence, unknowns: Sequence,
                 is_zero: Callable[[RationalForm], bool] | None = None) -> LinearSolution:
    """Solve equations affine in ``unknowns`` (each equation means expr = 0).

    ``is_zero`` decides whether a coefficient vanishes; pass a weak-zero
    test to pivot only on coefficients that are nonzero on a constraint
    surface. Rows left without a usable pivot yield their constant part as
    a residual; zero residuals are dropped.
    """
    zero = is_zero or (lambda r: r.is_zero())
    names = [_name(u) for u in unknowns]
    nameset = set(names)
    eqs = [canonicalize(e) for e in equations]
    rows = []
    for e in eqs:
        coeffs = []
        for n in names:
            a = e.diff(n)
            bad = a.free_symbols() & nameset
            if bad:
                raise NonlinearMultiplierError(
                    f"equation {e} is not affine in {n} (coefficient involves {', '.join(sorted(bad))})")
            coeffs.append(a)
        const = e.subs({n: ZERO for n in names if e.has(n)})
        rows.append(coeffs + [const])

    ncol = len(names)
    pivots: dict[int, int] = {}  # column -> row
    used: set[int] = set()
    assumptions: list[Assumption] = []
    for j in range(ncol):
        cands = [r for r in range(len(rows)) if r not in used and not rows[r][j].is_zero()
                 and not zero(rows[r][j])]
        if not cands:
            continue
        p = min(cands, key=lambda r: _size(rows[r][j]))
        piv = rows[p][j]
        used.add(p)
        pivots[j] = p
        if not piv.is_constant():
            assumptions = merge_assumptions(assumptions, nonzero_factors(piv))
        inv = piv.reciprocal()
        for r in range(len(rows)):
            if r == p:
                continue
            a = rows[r][j]
            if a.is_zero():
                continue
            if r not in used and zero(a):
                continue
            f = a * inv
            rows[r] = [x - f * y if not y.is_zero() else x for x, y in zip(rows[r], rows[p])]
            rows[r][j] = ZERO

    solved: dict = {}
    for j, p in pivots.items():
        row = rows[p]
        acc = row[ncol]
        for k in range(ncol):
            if k != j and not row[k].is_zero():
                acc = acc + row[k] * RationalForm.symbol(names[k])
        solved[names[j]] = -acc / row[j]
    # resolve references among pivot solutions
    for _ in range(len(solved) + 1):
        changed = False
        for n, v in solved.items():
            refs = {k: solved[k] for k in v.free_symbols() & set(solved) if k != n}
            if refs:
                solved[n] = v.subs(refs)
                changed = True
        if not changed:
            break

    residuals = []
    for r in range(len(rows)):
        if r in used:
            continue
        c = rows[r][ncol]
        if not c.is_zero():
            residuals.append(c)
    free = [n for j, n in enumerate(names) if j not in pivots]
    return LinearSolution(solved, residuals, free, assumptions)


# ---------------------------------------------------------------------------
# matrices


def as_matrix(m) -> Matrix:
    return [[canonicalize(x) for x in row] for row in m]


def identity(n: int) -> Matrix:
    return [[ONE_RF if i == j else ZERO for j in range(n)] for i in range(n)]


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = ZERO
            for t in range(k):
                x, y = a[i][t], b[t][j]
                if not x.is_zero() and not y.is_zero():
                    acc = acc + x * y
            row.append(acc)
        out.append(row)
    return out


def transpose(a: Matrix) -> Matrix:
    return [list(r) for r in zip(*a)]


def nullspace(m: Matrix, is_zero: Callable[[RationalForm], bool] | None = None) -> list[list[RationalForm]]:
    """Basis of the right null space by Gauss-Jordan elimination over rational functions."""
    zero = is_zero or (lambda r: r.is_zero())
    rows = [list(r) for r in as_matrix(m)]
    ncol = len(rows[0]) if rows else 0
    pivcols = []
    r = 0
    for j in range(ncol):
        cands = [i for i in range(r, len(rows)) if not rows[i][j].is_zero() and not zero(rows[i][j])]
        if not cands:
            continue
        p = min(cands, key=lambda i: _size(rows[i][j]))
        rows[r], rows[p] = rows[p], rows[r]
        inv = rows[r][j].reciprocal()
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and not rows[i][j].is_zero():
                f = rows[i][j]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivcols.append(j)
        r += 1
        if r == len(rows):
            break
    basis = []
    for fcol in range(ncol):
        if fcol in pivcols:
            continue
        v = [ZERO] * ncol
        v[fcol] = ONE_RF
        for i, pc in enumerate(pivcols):
            v[pc] = -rows[i][fcol]
        basis.append(v)
    return basis


def _row_lcm(row) -> Poly:
    L = Poly.const(1)
    for x in row:
        if not x.den.is_one():
            L = lcm(L, x.den)
    return L


def _psize(p: Poly) -> tuple:
    return (len(p.terms), p.total_degree())


def mat_inverse(m, record: list | None = None, method: str = "gauss") -> Matrix:
    """Inverse by Gauss-Jordan elimination over canonical rational functions.

    ``method="bareiss"`` delegates to the fraction-free variant; both give
    identical canonical entries.

    Pivots are chosen as the smallest nonzero candidate in each column,
    which keeps sparse matrices sparse. The determinant is the signed
    product of the pivots; the nonvanishing of each pivot is appended to
    ``record`` as assumptions.
    """
    if method == "bareiss":
        return bareiss_inverse(m, record)
    if method != "gauss":
        raise ValueError(f"unknown inversion method {method!r}")
    a = as_matrix(m)
    n = len(a)
    if any(len(r) != n for r in a):
        raise ValueError("matrix is not square")
    rows = [list(r) + [ONE_RF if j == i else ZERO for j in range(n)] for i, r in enumerate(a)]
    found: list = []
    for k in range(n):
        cands = [i for i in range(k, n) if not rows[i][k].is_zero()]
        if not cands:
            basis = nullspace(a)
            raise SingularMatrixError("matrix is singular", basis[0] if basis else None)
        p = min(cands, key=lambda i: _size(rows[i][k]))
        rows[k], rows[p] = rows[p], rows[k]
        piv = rows[k][k]
        if not piv.is_constant():
            found.extend(nonzero_factors(piv))
        if not piv.is_one():
            inv = piv.reciprocal()
            rows[k] = [x * inv if not x.is_zero() else x for x in rows[k]]
        pk = rows[k]
        nz = [j for j in range(2 * n) if not pk[j].is_zero()]
        for i in range(n):
            if i == k:
                continue
            f = rows[i][k]
            if f.is_zero():
                continue
            ri = rows[i]
            for j in nz:
                ri[j] = ri[j] - f * pk[j]
            ri[k] = ZERO
    if record is not None:
        record.extend(merge_assumptions(found))
    return [r[n:] for r in rows]


def bareiss_inverse(m, record: list | None = None) -> Matrix:
    """Inverse by fraction-free Gauss-Jordan elimination.

    Each row is first cleared of denominators, then the polynomial matrix
    is reduced Bareiss-style so every intermediate division is exact. The
    nonvanishing of the determinant is appended to ``record`` as
    assumptions.
    """
    a = as_matrix(m)
    n = len(a)
    if any(len(r) != n for r in a):
        raise ValueError("matrix is not square")
    scale = []
    work: list[list[Poly]] = []
    for i, row in enumerate(a):
        L = _row_lcm(row)
        scale.append(L)
        prow = [x.num * L.exact_div(x.den) if not x.is_zero() else Poly() for x in row]
        prow += [Poly.const(1) if j == i else Poly() for j in range(n)]
        work.append(prow)
    prev = Poly.const(1)
    for k in range(n):
        cands = [i for i in range(k, n) if not work[i][k].is_zero()]
        if not cands:
            basis = nullspace(a)
            raise SingularMatrixError("matrix is singular", basis[0] if basis else None)
        p = min(cands, key=lambda i: _psize(work[i][k]))
        work[k], work[p] = work[p], work[k]
        pk = work[k]
        piv = pk[k]
        for i in range(n):
            if i == k:
                continue
            wi = work[i]
            f = wi[k]
            for j in range(2 * n):
                if j == k:
                    continue
                x, y = wi[j], pk[j]
                if x.is_zero() and (f.is_zero() or y.is_zero()):
                    continue
                t = piv * x if not x.is_zero() else Poly()
                if not f.is_zero() and not y.is_zero():
                    t = t - f * y
                wi[j] = t.exact_div(prev) if not prev.is_one() else t
            wi[k] = Poly()
        prev = piv
    # left block is now prev * I; the right block is prev times the inverse
    # of the row-scaled matrix, so column j still carries row j's factor
    d = prev
    inv = []
    for i in range(n):
        out_row = []
        for j in range(n):
            r = work[i][n + j]
            out_row.append(RationalForm(r * scale[j], d) if not r.is_zero() else ZERO)
        inv.append(out_row)
    if record is not None:
        det_den = Poly.const(1)
        for L in scale:
            det_den = det_den * L
        record.extend(nonzero_factors(RationalForm(d, det_den)))
    return inv


def det(m) -> RationalForm:
    """Determinant by fraction-free elimination."""
    a = as_matrix(m)
    n = len(a)
    den = Poly.const(1)
    work = []
    for row in a:
        L = _row_lcm(row)
        den = den * L
        work.append([x.num * L.exact_div(x.den) if not x.is_zero() else Poly() for x in row])
    sign = 1
    prev = Poly.const(1)
    for k in range(n):
        cands = [i for i in range(k, n) if not work[i][k].is_zero()]
        if not cands:
            return ZERO
        p = min(cands, key=lambda i: _psize(work[i][k]))
        if p != k:
            work[k], work[p] = work[p], work[k]
            sign = -sign
        piv = work[k][k]
        for i in range(k + 1, n):
            f = work[i][k]
            for j in range(k + 1, n):
                x, y = work[i][j], work[k][j]
                t = piv * x - f * y
                work[i][j] = t.exact_div(prev) if not prev.is_one() else t
            work[i][k] = Poly()
        prev = piv
    return RationalForm(prev.scale(sign), den) if n else ONE_RF
