"""Symbols, expression trees and the canonical rational-function form."""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd as igcd
from numbers import Number

from .poly import IMAG, ONE, Poly, gcd

KINDS = frozenset({
    "coordinate", "momentum", "multiplier", "control", "parameter", "time",
    "conjugate-coordinate", "conjugate-momentum", "velocity",
})

DENOMINATOR_FLOOR = 1e-12


class EvaluationError(ValueError):
    """Raised when numeric evaluation hits an unbound symbol or a vanishing denominator."""


class SubstitutionCycleError(ValueError):
    pass


@dataclass(frozen=True)
class Symbol:
    """A named variable. Equality and hashing use the name only."""

    name: str
    kind: str = field(default="parameter", compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")

    def __str__(self) -> str:
        return self.name


def _name(s) -> str:
    if isinstance(s, Symbol):
        return s.name
    if isinstance(s, Sym):
        return s.symbol.name
    if isinstance(s, RationalForm):
        n = s.as_symbol_name()
        if n is not None:
            return n
    if isinstance(s, str):
        return s
    raise TypeError(f"not a symbol: {s!r}")


# ---------------------------------------------------------------------------
# expression trees


class Expr:
    """Base class of all expressions (trees and canonical forms)."""

    __slots__ = ()

    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Add((self, Mul((Num(Fraction(-1)), as_expr(other)))))

    def __rsub__(self, other):
        return Add((as_expr(other), Mul((Num(Fraction(-1)), self))))

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __pow__(self, n: int):
        return Pow(self, int(n))

    def __neg__(self):
        return Mul((Num(Fraction(-1)), self))


@dataclass(frozen=True, eq=True)
class Num(Expr):
    value: Fraction

    def __str__(self) -> str:
        return str(self.value)


@dataclass(frozen=True, eq=True)
class Sym(Expr):
    symbol: Symbol

    def __str__(self) -> str:
        return self.symbol.name


@dataclass(frozen=True, eq=True)
class Add(Expr):
    args: tuple

    def __str__(self) -> str:
        out = str(self.args[0])
        for a in self.args[1:]:
            out += f" + {_paren(a, 1)}"
        return out if len(self.args) > 1 else out


@dataclass(frozen=True, eq=True)
class Mul(Expr):
    args: tuple

    def __str__(self) -> str:
        return "*".join(_paren(a, 2) for a in self.args)


@dataclass(frozen=True, eq=True)
class Pow(Expr):
    base: Expr
    exp: int

    def __str__(self) -> str:
        if self.exp < 0:
            return f"1/{_paren(self.base, 3)}^{-self.exp}"
        return f"{_paren(self.base, 3)}^{self.exp}"


@dataclass(frozen=True, eq=True)
class Div(Expr):
    num: Expr
    den: Expr

    def __str__(self) -> str:
        return f"{_paren(self.num, 2)}/{_paren(self.den, 3)}"


def _prec(e) -> int:
    if isinstance(e, Add):
        return 1
    if isinstance(e, (Mul, Div)):
        return 2
    if isinstance(e, Pow):
        return 3
    if isinstance(e, Num):
        return 2 if e.value.denominator != 1 or e.value < 0 else 4
    if isinstance(e, RationalForm):
        return e._prec()
    return 4


def _paren(e, level: int) -> str:
    s = str(e)
    return f"({s})" if _prec(e) < level or (level >= 3 and _prec(e) < 4) else s


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, Symbol):
        return Sym(x)
    if isinstance(x, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(x, int):
        return Num(Fraction(x))
    if isinstance(x, Fraction):
        return Num(x)
    if isinstance(x, str):
        from .parser import parse
        return parse(x)
    raise TypeError(f"cannot build an exact expression from {x!r}")


# ---------------------------------------------------------------------------
# canonical form


def _normalize(num: Poly, den: Poly) -> tuple[Poly, Poly]:
    if den.is_zero():
        raise ZeroDivisionError("rational function with zero denominator")
    if num.is_zero():
        return Poly(), Poly.const(1)
    if den.has_imag():
        c = den.conj()
        num, den = num * c, den * c
    if den.is_const():
        k = den.const_value()
        g = igcd(num.content(), k)
        if k < 0:
            g = -g
        if g != 1:
            num, den = num.exact_div(Poly.const(g)), Poly.const(k // g)
        return num, den
    re, im = num.split_imag()
    if im.is_zero():
        g = gcd(re, den)
    elif re.is_zero():
        g = gcd(im, den)
    else:
        g = gcd(gcd(re, im), den)
    if not g.is_one():
        num, den = num.exact_div(g), den.exact_div(g)
    if den.leading()[1] < 0:
        num, den = -num, -den
    return num, den


class RationalForm(Expr):
    """Canonical rational function num/den.

    Invariants: den is free of the imaginary unit and has a positive leading
    coefficient in graded-lex order; the real and imaginary parts of num
    share no common factor with den (integer content included). Two equal
    rational functions therefore have identical forms.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Poly, den: Poly | None = None, *, normalized: bool = False):
        if den is None:
            den = Poly.const(1)
        if not normalized:
            num, den = _normalize(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # construction ---------------------------------------------------------
    @staticmethod
    def from_int(k: int) -> RationalForm:
        return RationalForm(Poly.const(k), normalized=True)

    @staticmethod
    def from_fraction(q: Fraction) -> RationalForm:
        return RationalForm(Poly.const(q.numerator), Poly.const(q.denominator), normalized=True)

    @staticmethod
    def symbol(name) -> RationalForm:
        return RationalForm(Poly.var(_name(name)), normalized=True)

    # predicates -----------------------------------------------------------
    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_one(self) -> bool:
        return self.num.is_one() and self.den.is_one()

    def is_polynomial(self) -> bool:
        return self.den.is_const()

    def is_constant(self) -> bool:
        return self.num.is_const() and self.den.is_const()

    def is_rational_constant(self) -> bool:
        return self.is_constant()

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError("not a constant")
        return Fraction(self.num.const_value(), self.den.const_value())

    def as_symbol_name(self) -> str | None:
        if self.den.is_one() and len(self.num.terms) == 1:
            (m, c), = self.num.terms.items()
            if c == 1 and len(m) == 1 and m[0][1] == 1:
                return m[0][0]
        return None

    def free_symbols(self) -> set[str]:
        return (self.num.variables() | self.den.variables()) - {IMAG}

    def has(self, name) -> bool:
        n = _name(name)
        return n in self.num.variables() or n in self.den.variables()

    def has_imag(self) -> bool:
        return self.num.has_imag()

    def __eq__(self, other) -> bool:
        if isinstance(other, RationalForm):
            return self.num == other.num and self.den == other.den
        if isinstance(other, (int, Fraction)):
            return self == RationalForm.from_fraction(Fraction(other))
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    # arithmetic -----------------------------------------------------------
    def __neg__(self) -> RationalForm:
        return RationalForm(-self.num, self.den, normalized=True)

    def __add__(self, other) -> RationalForm:
        o = canonicalize(other)
        a, b, c, d = self.num, self.den, o.num, o.den
        if a.is_zero():
            return o
        if c.is_zero():
            return self
        if b.is_one() and d.is_one():
            return RationalForm(a + c, b, normalized=True)
        if b == d:
            return RationalForm(a + c, b)
        if b.is_const() and d.is_const():
            kb, kd = b.const_value(), d.const_value()
            g = igcd(kb, kd)
            return RationalForm(a.scale(kd // g) + c.scale(kb // g), Poly.const(kb // g * kd))
        g = gcd(b, d)
        if g.is_one():
            return RationalForm(a * d + c * b, b * d)
        b1, d1 = b.exact_div(g), d.exact_div(g)
        return RationalForm(a * d1 + c * b1, b * d1)

    __radd__ = __add__

    def __sub__(self, other) -> RationalForm:
        return self + (-canonicalize(other))

    def __rsub__(self, other) -> RationalForm:
        return canonicalize(other) + (-self)

    def __mul__(self, other) -> RationalForm:
        o = canonicalize(other)
        a, b, c, d = self.num, self.den, o.num, o.den
        if a.is_zero() or c.is_zero():
            return ZERO
        if b.is_one() and d.is_one():
            return RationalForm(a * c, b, normalized=True)
        if a.has_imag() or c.has_imag():
            return RationalForm(a * c, b * d)
        g1 = gcd(a, d) if not d.is_one() else None
        g2 = gcd(c, b) if not b.is_one() else None
        if g1 is not None and not g1.is_one():
            a, d = a.exact_div(g1), d.exact_div(g1)
        if g2 is not None and not g2.is_one():
            c, b = c.exact_div(g2), b.exact_div(g2)
        num, den = a * c, b * d
        if den.leading()[1] < 0:
            num, den = -num, -den
        return RationalForm(num, den, normalized=True)

    __rmul__ = __mul__

    def reciprocal(self) -> RationalForm:
        if self.num.is_zero():
            raise ZeroDivisionError("reciprocal of zero")
        n, d = self.num, self.den
        if n.has_imag():
            return RationalForm(d, n)
        if n.leading()[1] < 0:
            return RationalForm(-d, -n, normalized=True)
        return RationalForm(d, n, normalized=True)

    def __truediv__(self, other) -> RationalForm:
        return self * canonicalize(other).reciprocal()

    def __rtruediv__(self, other) -> RationalForm:
        return canonicalize(other) * self.reciprocal()

    def __pow__(self, n: int) -> RationalForm:
        n = int(n)
        if n < 0:
            return self.reciprocal() ** (-n)
        if n == 0:
            return ONE_RF
        if n == 1:
            return self
        if self.num.has_imag():
            return RationalForm(self.num ** n, self.den ** n)
        return RationalForm(self.num ** n, self.den ** n, normalized=True)

    def conjugate_imag(self) -> RationalForm:
        """Flip the sign of the imaginary unit."""
        return RationalForm(self.num.conj(), self.den, normalized=True)

    # calculus -------------------------------------------------------------
    def diff(self, s) -> RationalForm:
        v = _name(s)
        if v == IMAG:
            raise ValueError("cannot differentiate with respect to the imaginary unit")
        n, d = self.num, self.den
        if v not in n.variables() and v not in d.variables():
            return ZERO
        if d.is_const():
            return RationalForm(n.diff(v), d)
        dn, dd = n.diff(v), d.diff(v)
        return RationalForm(dn * d - n * dd, d * d)

    def subs(self, mapping: dict) -> RationalForm:
        """Simultaneous substitution; mapping is name -> RationalForm."""
        if not mapping:
            return self
        vs = self.num.variables() | self.den.variables()
        m = {k: v for k, v in mapping.items() if k in vs}
        if not m:
            return self
        n1, d1 = _poly_subs(self.num, m)
        n2, d2 = _poly_subs(self.den, m)
        if n2.is_zero():
            raise ZeroDivisionError("denominator vanishes under substitution")
        return RationalForm(n1 * d2, d1 * n2)

    def subs_within(self, mapping: dict, max_terms: int) -> RationalForm | None:
        """Like subs, but None once the unnormalized result exceeds ``max_terms`` terms."""
        if not mapping:
            return self
        vs = self.num.variables() | self.den.variables()
        m = {k: v for k, v in mapping.items() if k in vs}
        if not m:
            return self
        n1, d1 = _poly_subs(self.num, m)
        n2, d2 = _poly_subs(self.den, m)
        if len(n1.terms) * len(d2.terms) + len(d1.terms) * len(n2.terms) > max_terms:
            return None
        if n2.is_zero():
            raise ZeroDivisionError("denominator vanishes under substitution")
        return RationalForm(n1 * d2, d1 * n2)

    def evaluate(self, values: dict):
        vals = dict(values)
        vals[IMAG] = 1j
        d = self.den.evaluate(vals)
        if abs(d) < DENOMINATOR_FLOOR:
            raise EvaluationError("denominator below 1e-12 in magnitude")
        return self.num.evaluate(vals) / d

    # printing -------------------------------------------------------------
    def _prec(self) -> int:
        if not self.den.is_one():
            return 2
        if len(self.num.terms) > 1:
            return 1
        if self.num.is_zero():
            return 4
        (m, c), = self.num.terms.items()
        if c < 0:
            return 1
        if c != 1 and m:
            return 2
        if len(m) > 1 or (m and m[0][1] > 1):
            return 2 if len(m) > 1 else 3
        return 4

    def __str__(self) -> str:
        ns = str(self.num)
        if self.den.is_one():
            return ns
        if len(self.num.terms) > 1 or ns.startswith("-"):
            ns = f"({ns})"
        ds = str(self.den)
        if len(self.den.terms) > 1 or "*" in ds or "^" in ds:
            ds = f"({ds})"
        return f"{ns}/{ds}"

    def __repr__(self) -> str:
        return f"RationalForm({self})"


def _poly_subs(p: Poly, m: dict) -> tuple[Poly, Poly]:
    bound = [v for v in p.variables() if v in m]
    if not bound:
        return p, Poly.const(1)
    maxexp = {v: p.degree(v) for v in bound}
    poly_rules = all(m[v].den.is_one() for v in bound)
    den = Poly.const(1)
    if not poly_rules:
        for v in bound:
            den = den * m[v].den ** maxexp[v]
    npow: dict = {}
    dpow: dict = {}

    def num_pow(v, k):
        key = (v, k)
        if key not in npow:
            npow[key] = m[v].num ** k
        return npow[key]

    def den_pow(v, k):
        key = (v, k)
        if key not in dpow:
            dpow[key] = m[v].den ** k
        return dpow[key]

    bset = set(bound)
    groups: dict = {}
    for mono, c in p.terms.items():
        free = tuple(t for t in mono if t[0] not in bset)
        key = tuple((v, e) for v, e in mono if v in bset)
        groups.setdefault(key, {})[free] = c
    total = Poly()
    for key, rest in groups.items():
        ek = dict(key)
        factor = Poly.const(1)
        for v in bound:
            k = ek.get(v, 0)
            if k:
                factor = factor * num_pow(v, k)
            if not poly_rules and maxexp[v] - k:
                factor = factor * den_pow(v, maxexp[v] - k)
        total = total + Poly(rest) * factor
    return total, den


ZERO = RationalForm(Poly(), Poly.const(1), normalized=True)
ONE_RF = RationalForm(Poly.const(1), normalized=True)
IMAG_UNIT = RationalForm(Poly.var(IMAG), normalized=True)


def canonicalize(e) -> RationalForm:
    """Canonical rational form of an expression (idempotent)."""
    if isinstance(e, RationalForm):
        return e
    if isinstance(e, Num):
        return RationalForm.from_fraction(e.value)
    if isinstance(e, Sym):
        return RationalForm.symbol(e.symbol.name)
    if isinstance(e, Add):
        out = ZERO
        for a in e.args:
            out = out + canonicalize(a)
        return out
    if isinstance(e, Mul):
        out = ONE_RF
        for a in e.args:
            out = out * canonicalize(a)
        return out
    if isinstance(e, Pow):
        return canonicalize(e.base) ** e.exp
    if isinstance(e, Div):
        return canonicalize(e.num) / canonicalize(e.den)
    if isinstance(e, Symbol):
        return RationalForm.symbol(e.name)
    if isinstance(e, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(e, int):
        return RationalForm.from_int(e)
    if isinstance(e, Fraction):
        return RationalForm.from_fraction(e)
    if isinstance(e, str):
        from .parser import parse
        return canonicalize(parse(e))
    raise TypeError(f"cannot canonicalize {e!r}")


rf = canonicalize


@dataclass(frozen=True)
class Assumption:
    """A genericity condition: ``expression != 0``."""

    expression: RationalForm
    relation: str = "nonzero"

    def __str__(self) -> str:
        return f"{self.expression} != 0"


def nonzero_factors(e) -> list[Assumption]:
    """Assumptions that make a division by ``e`` legal.

    Monomial factors are split into one assumption per variable so that
    x4^3 becomes x4 != 0; the remaining numerator and denominator are kept
    whole. Constants need no assumption.
    """
    r = canonicalize(e)
    out = []
    for p in (r.num, r.den):
        if p.is_const():
            continue
        mono = None
        for t in p.terms:
            d = dict(t)
            mono = d if mono is None else {v: min(e_, d.get(v, 0)) for v, e_ in mono.items()}
        mono = {v: e_ for v, e_ in (mono or {}).items() if e_}
        rest = p
        if mono:
            mm = tuple(sorted(mono.items()))
            rest = p.exact_div(Poly({mm: 1}))
            for v in sorted(mono):
                if v != IMAG:
                    out.append(Assumption(RationalForm.symbol(v)))
        if not rest.is_const():
            k = rest.content()
            if k > 1:
                rest = rest.exact_div(Poly.const(k))
            out.append(Assumption(RationalForm(rest.sign_normalized(), normalized=True)))
    return out


def _primitive(p: Poly) -> Poly:
    k = p.content()
    if k > 1:
        p = p.exact_div(Poly.const(k))
    return p.sign_normalized()


def _squarefree(p: Poly) -> Poly:
    for v in sorted(p.variables()):
        d = p.diff(v)
        if d.is_zero():
            continue
        g = gcd(p, d)
        if not g.is_const():
            p = p.exact_div(g)
    return _primitive(p)


def _insert_coprime(basis: list, q: Poly) -> None:
    if q.is_const():
        return
    q = _primitive(q)
    for k, b in enumerate(basis):
        g = gcd(q, b)
        if g.is_const():
            continue
        g = _primitive(g)
        basis.pop(k)
        tail = basis[k:]
        del basis[k:]
        for piece in (g, b.exact_div(g), q.exact_div(g)):
            _insert_coprime(basis, piece)
        for t in tail:
            _insert_coprime(basis, t)
        return
    basis.append(q)


def merge_assumptions(*groups) -> list[Assumption]:
    """Union of assumption lists, refined into pairwise coprime square-free factors.

    Expressions involving the imaginary unit are kept whole.
    """
    basis: list[Poly] = []
    whole: list[RationalForm] = []
    for g in groups:
        for a in g:
            e = a.expression
            for p in (e.num, e.den):
                if p.is_const():
                    continue
                if p.has_imag():
                    r = RationalForm(p)
                    if r not in whole and -r not in whole:
                        whole.append(r)
                else:
                    _insert_coprime(basis, _squarefree(p))
    out = [Assumption(RationalForm(p, normalized=True)) for p in basis]
    return out + [Assumption(r) for r in whole]


# ---------------------------------------------------------------------------
# tree-level operations


def _t_add(args):
    args = [a for a in args if not (isinstance(a, Num) and a.value == 0)]
    if not args:
        return Num(Fraction(0))
    return args[0] if len(args) == 1 else Add(tuple(args))


def _t_mul(args):
    if any(isinstance(a, Num) and a.value == 0 for a in args):
        return Num(Fraction(0))
    args = [a for a in args if not (isinstance(a, Num) and a.value == 1)]
    if not args:
        return Num(Fraction(1))
    return args[0] if len(args) == 1 else Mul(tuple(args))


def _tree_diff(e: Expr, v: str) -> Expr:
    if isinstance(e, Num):
        return Num(Fraction(0))
    if isinstance(e, Sym):
        return Num(Fraction(1 if e.symbol.name == v else 0))
    if isinstance(e, RationalForm):
        return e.diff(v)
    if isinstance(e, Add):
        return _t_add([_tree_diff(a, v) for a in e.args])
    if isinstance(e, Mul):
        terms = []
        for i, a in enumerate(e.args):
            da = _tree_diff(a, v)
            if isinstance(da, Num) and da.value == 0:
                continue
            terms.append(_t_mul(list(e.args[:i]) + [da] + list(e.args[i + 1:])))
        return _t_add(terms)
    if isinstance(e, Pow):
        db = _tree_diff(e.base, v)
        if isinstance(db, Num) and db.value == 0:
            return Num(Fraction(0))
        if e.exp == 0:
            return Num(Fraction(0))
        return _t_mul([Num(Fraction(e.exp)), Pow(e.base, e.exp - 1) if e.exp != 2 else e.base, db])
    if isinstance(e, Div):
        dn, dd = _tree_diff(e.num, v), _tree_diff(e.den, v)
        zn = isinstance(dn, Num) and dn.value == 0
        zd = isinstance(dd, Num) and dd.value == 0
        if zn and zd:
            return Num(Fraction(0))
        if zd:
            return Div(dn, e.den)
        top = _t_add([_t_mul([dn, e.den]), _t_mul([Num(Fraction(-1)), e.num, dd])] if not zn
                     else [_t_mul([Num(Fraction(-1)), e.num, dd])])
        return Div(top, Pow(e.den, 2))
    raise TypeError(f"cannot differentiate {e!r}")


def diff(e, s) -> Expr:
    """Exact partial derivative. Trees give trees, canonical forms give canonical forms."""
    v = _name(s)
    if v == IMAG:
        raise ValueError("cannot differentiate with respect to the imaginary unit")
    if isinstance(e, (RationalForm, int, Fraction, str, Symbol)):
        return canonicalize(e).diff(v)
    return _tree_diff(e, v)


def _free_names(e) -> set[str]:
    return canonicalize(e).free_symbols() if isinstance(e, RationalForm) else _tree_names(e)


def _tree_names(e) -> set[str]:
    if isinstance(e, Sym):
        return {e.symbol.name} - {IMAG}
    if isinstance(e, Num):
        return set()
    if isinstance(e, RationalForm):
        return e.free_symbols()
    if isinstance(e, (Add, Mul)):
        out: set[str] = set()
        for a in e.args:
            out |= _tree_names(a)
        return out
    if isinstance(e, Pow):
        return _tree_names(e.base)
    if isinstance(e, Div):
        return _tree_names(e.num) | _tree_names(e.den)
    return set()


def free_symbols(e) -> set[str]:
    return _free_names(e)


def check_acyclic(bindings: dict) -> None:
    """Raise SubstitutionCycleError if the binding graph has a cycle."""
    graph = {k: _free_names(v) & set(bindings) for k, v in bindings.items()}
    state: dict[str, int] = {}

    def visit(n, path):
        st = state.get(n, 0)
        if st == 1:
            cyc = path[path.index(n):] + [n]
            raise SubstitutionCycleError("cycle in bindings: " + " -> ".join(cyc))
        if st == 2:
            return
        state[n] = 1
        for m in sorted(graph.get(n, ())):
            visit(m, path + [n])
        state[n] = 2

    for k in sorted(graph):
        visit(k, [])


def substitute(e, bindings: dict) -> RationalForm:
    """Simultaneous substitution followed by canonicalization."""
    m = {_name(k): canonicalize(v) for k, v in bindings.items()}
    check_acyclic(m)
    return canonicalize(e).subs(m)


def _coerce_point(point: dict) -> tuple[dict, bool]:
    vals = {}
    cplx = False
    for k, v in point.items():
        n = _name(k)
        if isinstance(v, complex):
            cplx = True
        elif isinstance(v, Fraction):
            v = float(v)
        elif not isinstance(v, Number):
            v = complex(v)
            cplx = True
        vals[n] = v
    return vals, cplx


def _tree_eval(e, vals):
    if isinstance(e, Num):
        return float(e.value)
    if isinstance(e, Sym):
        n = e.symbol.name
        if n == IMAG:
            return 1j
        if n not in vals:
            raise EvaluationError(f"unbound symbol {n}")
        return vals[n]
    if isinstance(e, RationalForm):
        return _rf_eval(e, vals)
    if isinstance(e, Add):
        return sum(_tree_eval(a, vals) for a in e.args)
    if isinstance(e, Mul):
        out = 1.0
        for a in e.args:
            out = out * _tree_eval(a, vals)
        return out
    if isinstance(e, Pow):
        b = _tree_eval(e.base, vals)
        if e.exp < 0 and abs(b) < DENOMINATOR_FLOOR:
            raise EvaluationError("denominator below 1e-12 in magnitude")
        return b ** e.exp
    if isinstance(e, Div):
        d = _tree_eval(e.den, vals)
        if abs(d) < DENOMINATOR_FLOOR:
            raise EvaluationError("denominator below 1e-12 in magnitude")
        return _tree_eval(e.num, vals) / d
    raise TypeError(f"cannot evaluate {e!r}")


def _rf_eval(r: RationalForm, vals):
    missing = r.free_symbols() - set(vals)
    if missing:
        raise EvaluationError("unbound symbol " + ", ".join(sorted(missing)))
    return r.evaluate(vals)


def eval_num(e, point: dict):
    """Double-precision value of ``e`` at ``point`` (symbol or name -> number)."""
    vals, cplx = _coerce_point(point)
    if isinstance(e, (int, Fraction, str, Symbol)):
        e = canonicalize(e)
    out = _tree_eval(e, vals)
    if isinstance(out, complex):
        if not cplx and out.imag == 0:
            return out.real
        return out
    return float(out)


def is_close(a, b, rel: float = 1e-12, abs_: float = 1e-12) -> bool:
    return cmath.isclose(a, b, rel_tol=rel, abs_tol=abs_)
