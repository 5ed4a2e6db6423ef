"""Sparse multivariate polynomials with integer coefficients.

A monomial is a tuple of ``(name, exponent)`` pairs sorted by name, with
every exponent positive. The imaginary unit is the reserved variable ``I``;
products reduce it with I^2 = -1, so stored monomials carry I at most once.
Coefficients are Python ints, which keeps arithmetic exact and fast.
"""

from __future__ import annotations

import random
from functools import lru_cache

import gmpy2
from math import gcd as igcd

IMAG = "I"

Monomial = tuple  # tuple[tuple[str, int], ...]
ONE: Monomial = ()


@lru_cache(maxsize=1 << 18)
def mono_mul(a: Monomial, b: Monomial) -> tuple[Monomial, int]:
    """Multiply two monomials, returning the product and a sign from I^2."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    out = []
    i = j = 0
    la, lb = len(a), len(b)
    while i < la and j < lb:
        va, ea = a[i]
        vb, eb = b[j]
        if va == vb:
            out.append((va, ea + eb))
            i += 1
            j += 1
        elif va < vb:
            out.append(a[i])
            i += 1
        else:
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    sign = 1
    for k, (v, e) in enumerate(out):
        if v == IMAG and e > 1:
            if (e // 2) % 2:
                sign = -1
            if e % 2:
                out[k] = (v, 1)
            else:
                del out[k]
            break
    return tuple(out), sign


@lru_cache(maxsize=1 << 18)
def mono_key(m: Monomial):
    """Sort key realizing graded lexicographic order (larger key = larger monomial).

    Variables compare alphabetically with earlier names ranking higher.
    """
    deg = 0
    lex = []
    for v, e in m:
        deg += e
        lex.append((tuple(-ord(c) for c in v) + (1,), e))
    return deg, tuple(lex)


def mono_div(a: Monomial, b: Monomial) -> Monomial | None:
    """Return a / b if b divides a, else None."""
    da = dict(a)
    for v, e in b:
        ea = da.get(v, 0)
        if ea < e:
            return None
        if ea == e:
            del da[v]
        else:
            da[v] = ea - e
    return tuple(sorted(da.items()))


def mono_str(m: Monomial) -> str:
    return "*".join(v if e == 1 else f"{v}^{e}" for v, e in m)


class Poly:
    """Immutable sparse polynomial; ``terms`` maps monomial -> nonzero int."""

    __slots__ = ("terms", "_hash")

    def __init__(self, terms: dict | None = None):
        self.terms = terms if terms is not None else {}
        self._hash = None

    # construction -------------------------------------------------------
    @staticmethod
    def const(c: int) -> Poly:
        return Poly({ONE: c}) if c else Poly()

    @staticmethod
    def var(name: str) -> Poly:
        return Poly({((name, 1),): 1})

    # predicates ---------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_const(self) -> bool:
        t = self.terms
        return not t or (len(t) == 1 and ONE in t)

    def const_value(self) -> int:
        return self.terms.get(ONE, 0)

    def is_one(self) -> bool:
        return len(self.terms) == 1 and self.terms.get(ONE) == 1

    def __len__(self) -> int:
        return len(self.terms)

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.terms == other.terms
        if isinstance(other, int):
            return self.is_const() and self.const_value() == other
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self.terms.items()))
        return self._hash

    # arithmetic ---------------------------------------------------------
    def __neg__(self) -> Poly:
        return Poly({m: -c for m, c in self.terms.items()})

    def __add__(self, other: Poly) -> Poly:
        if isinstance(other, int):
            other = Poly.const(other)
        if len(self.terms) < len(other.terms):
            a, b = other.terms, self.terms
        else:
            a, b = self.terms, other.terms
        out = dict(a)
        for m, c in b.items():
            s = out.get(m, 0) + c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Poly(out)

    __radd__ = __add__

    def __sub__(self, other: Poly) -> Poly:
        if isinstance(other, int):
            other = Poly.const(other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            s = out.get(m, 0) - c
            if s:
                out[m] = s
            else:
                out.pop(m, None)
        return Poly(out)

    def __rsub__(self, other) -> Poly:
        return (-self) + other

    def scale(self, k: int) -> Poly:
        if not k:
            return Poly()
        if k == 1:
            return self
        return Poly({m: c * k for m, c in self.terms.items()})

    def __mul__(self, other) -> Poly:
        if isinstance(other, int):
            return self.scale(other)
        a, b = self.terms, other.terms
        if not a or not b:
            return Poly()
        if len(a) == 1 and ONE in a:
            return other.scale(a[ONE])
        if len(b) == 1 and ONE in b:
            return self.scale(b[ONE])
        out: dict = {}
        get = out.get
        for ma, ca in a.items():
            for mb, cb in b.items():
                m, s = mono_mul(ma, mb)
                v = get(m, 0) + s * ca * cb
                out[m] = v
        return Poly({m: c for m, c in out.items() if c})

    __rmul__ = __mul__

    def __pow__(self, n: int) -> Poly:
        if n < 0:
            raise ValueError("negative polynomial power")
        result = Poly.const(1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def mul_mono(self, m: Monomial, c: int = 1) -> Poly:
        out = {}
        for mm, cc in self.terms.items():
            p, s = mono_mul(mm, m)
            out[p] = out.get(p, 0) + s * cc * c
        return Poly({k: v for k, v in out.items() if v})

    # structure ----------------------------------------------------------
    def variables(self) -> set[str]:
        vs: set[str] = set()
        for m in self.terms:
            for v, _ in m:
                vs.add(v)
        return vs

    def degree(self, var: str) -> int:
        d = 0
        for m in self.terms:
            for v, e in m:
                if v == var and e > d:
                    d = e
        return d

    def total_degree(self) -> int:
        return max((sum(e for _, e in m) for m in self.terms), default=0)

    def leading(self) -> tuple[Monomial, int]:
        m = max(self.terms, key=mono_key)
        return m, self.terms[m]

    def content(self) -> int:
        g = 0
        for c in self.terms.values():
            g = igcd(g, c)
            if g == 1:
                break
        return g

    def sign_normalized(self) -> Poly:
        if self.terms and self.leading()[1] < 0:
            return -self
        return self

    def has_imag(self) -> bool:
        for m in self.terms:
            for v, _ in m:
                if v == IMAG:
                    return True
        return False

    def split_imag(self) -> tuple[Poly, Poly]:
        """Return (re, im) with self = re + I*im and both free of I."""
        re, im = {}, {}
        for m, c in self.terms.items():
            if any(v == IMAG for v, _ in m):
                im[tuple(p for p in m if p[0] != IMAG)] = c
            else:
                re[m] = c
        return Poly(re), Poly(im)

    def conj(self) -> Poly:
        """Complex conjugate with respect to the imaginary unit only."""
        out = {}
        for m, c in self.terms.items():
            out[m] = -c if any(v == IMAG for v, _ in m) else c
        return Poly(out)

    def coeffs_in(self, var: str) -> dict[int, Poly]:
        out: dict[int, dict] = {}
        for m, c in self.terms.items():
            k = 0
            rest = m
            for idx, (v, e) in enumerate(m):
                if v == var:
                    k = e
                    rest = m[:idx] + m[idx + 1:]
                    break
            out.setdefault(k, {})[rest] = c
        return {k: Poly(t) for k, t in out.items()}

    @staticmethod
    def from_coeffs(var: str, coeffs: dict[int, Poly]) -> Poly:
        out: dict = {}
        for k, p in coeffs.items():
            if k == 0:
                for m, c in p.terms.items():
                    out[m] = out.get(m, 0) + c
                continue
            xm = ((var, k),)
            for m, c in p.terms.items():
                mm, _ = mono_mul(m, xm)
                out[mm] = out.get(mm, 0) + c
        return Poly({m: c for m, c in out.items() if c})

    def diff(self, var: str) -> Poly:
        out: dict = {}
        for m, c in self.terms.items():
            for idx, (v, e) in enumerate(m):
                if v == var:
                    nm = m[:idx] + ((v, e - 1),) + m[idx + 1:] if e > 1 else m[:idx] + m[idx + 1:]
                    out[nm] = out.get(nm, 0) + c * e
                    break
        return Poly({m: c for m, c in out.items() if c})

    def evaluate(self, values: dict):
        """Numeric value; ``values`` maps every variable (I included) to a number."""
        total = 0
        for m, c in self.terms.items():
            t = c
            for v, e in m:
                t = t * values[v] ** e
            total += t
        return total

    # division -----------------------------------------------------------
    def exact_div(self, other: Poly) -> Poly:
        """Exact quotient self / other; raises ArithmeticError if inexact."""
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        if self.is_zero():
            return Poly()
        if other.has_imag():
            c = other.conj()
            return (self * c).exact_div(other * c)
        if other.is_const():
            k = other.const_value()
            out = {}
            for m, c in self.terms.items():
                q, r = divmod(c, k)
                if r:
                    raise ArithmeticError("inexact integer division")
                out[m] = q
            return Poly(out)
        if len(other.terms) == 1:
            (mb, cb), = other.terms.items()
            out = {}
            for m, c in self.terms.items():
                q = mono_div(m, mb)
                if q is None or c % cb:
                    raise ArithmeticError("inexact monomial division")
                out[q] = c // cb
            return Poly(out)
        var = min(other.variables())
        b = other.coeffs_in(var)
        db = max(b)
        lcb = b[db]
        rem = self.coeffs_in(var)
        quot: dict[int, Poly] = {}
        while rem:
            dr = max(rem)
            if dr < db:
                raise ArithmeticError("inexact polynomial division")
            q = rem[dr].exact_div(lcb)
            shift = dr - db
            quot[shift] = q
            for k, bk in b.items():
                t = rem.get(k + shift)
                nv = (t - q * bk) if t is not None else -(q * bk)
                if nv.is_zero():
                    rem.pop(k + shift, None)
                else:
                    rem[k + shift] = nv
        return Poly.from_coeffs(var, quot)

    # printing -----------------------------------------------------------
    def sorted_terms(self) -> list[tuple[Monomial, int]]:
        return sorted(self.terms.items(), key=lambda t: mono_key(t[0]), reverse=True)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for m, c in self.sorted_terms():
            sign = "-" if c < 0 else "+"
            a = abs(c)
            body = mono_str(m)
            if not body:
                txt = str(a)
            elif a == 1:
                txt = body
            else:
                txt = f"{a}*{body}"
            parts.append((sign, txt))
        out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        for s, t in parts[1:]:
            out += f" {s} {t}"
        return out

    __repr__ = __str__


# gcd ------------------------------------------------------------------------

def _fold_gcd(g: Poly, polys) -> Poly:
    for p in polys:
        g = gcd(g, p)
        if g.is_one():
            break
    return g


def _mono_gcd(m: Poly, p: Poly) -> Poly:
    """gcd of a single-term polynomial with an arbitrary one."""
    (mm, cm), = m.terms.items()
    exps = dict(mm)
    for t in p.terms:
        if not exps:
            break
        td = dict(t)
        for v in list(exps):
            e = min(exps[v], td.get(v, 0))
            if e:
                exps[v] = e
            else:
                del exps[v]
    c = igcd(cm, p.content())
    return Poly({tuple(sorted(exps.items())): c})


def _prem(a: dict[int, Poly], b: dict[int, Poly]) -> dict[int, Poly]:
    db = max(b)
    lcb = b[db]
    r = dict(a)
    while r and max(r) >= db:
        dr = max(r)
        lcr = r[dr]
        shift = dr - db
        nr = {}
        for k, v in r.items():
            nr[k] = v * lcb
        for k, bk in b.items():
            kk = k + shift
            t = nr.get(kk)
            nv = t - lcr * bk if t is not None else -(lcr * bk)
            if nv.is_zero():
                nr.pop(kk, None)
            else:
                nr[kk] = nv
        r = nr
    return r


def _ucontent(a: dict[int, Poly]) -> Poly:
    items = sorted(a.values(), key=len)
    g = items[0]
    return _fold_gcd(g, items[1:])


def gcd(a: Poly, b: Poly) -> Poly:
    """Greatest common divisor over Z of two I-free polynomials.

    The result has a positive leading coefficient and includes the integer
    content. gcd(0, 0) is 0.
    """
    if a.is_zero():
        return b.sign_normalized()
    if b.is_zero():
        return a.sign_normalized()
    if a.is_const() or b.is_const():
        return Poly.const(igcd(a.content(), b.content()))
    if a == b:
        return a.sign_normalized()
    if len(a.terms) == 1:
        return _mono_gcd(a, b)
    if len(b.terms) == 1:
        return _mono_gcd(b, a)
    va, vb = a.variables(), b.variables()
    common = va & vb
    if common and all(_coprime_in(a, b, x) for x in common):
        return Poly.const(igcd(a.content(), b.content()))
    if len(va | vb) > 1:
        h = _heuristic_gcd(a, b)
        if h is not None:
            return h
    only_a = va - vb
    if only_a:
        x = min(only_a)
        return _fold_gcd(b, sorted(a.coeffs_in(x).values(), key=len))
    only_b = vb - va
    if only_b:
        x = min(only_b)
        return _fold_gcd(a, sorted(b.coeffs_in(x).values(), key=len))
    x = min(va, key=lambda v: (a.degree(v) + b.degree(v), v))
    ua, ub = a.coeffs_in(x), b.coeffs_in(x)
    ca, cb = _ucontent(ua), _ucontent(ub)
    c = gcd(ca, cb)
    ua = {k: v.exact_div(ca) for k, v in ua.items()}
    ub = {k: v.exact_div(cb) for k, v in ub.items()}
    if max(ua) < max(ub):
        ua, ub = ub, ua
    while True:
        r = _prem(ua, ub)
        if not r:
            break
        if max(r) == 0:
            return c.sign_normalized()
        cr = _ucontent(r)
        ua, ub = ub, {k: v.exact_div(cr) for k, v in r.items()}
    g = Poly.from_coeffs(x, ub)
    return (c * g).sign_normalized()


# degree certificate modulo a prime --------------------------------------

_P = (1 << 61) - 1


def _eval_mod(p: Poly, point: dict) -> int:
    total = 0
    for m, c in p.terms.items():
        t = c
        for v, e in m:
            t = t * pow(point[v], e, _P) % _P
        total += t
    return total % _P


def _useries(p: Poly, x: str, point: dict) -> list:
    cs = p.coeffs_in(x)
    out = [0] * (max(cs) + 1)
    for k, c in cs.items():
        out[k] = _eval_mod(c, point)
    return out


def _ugcd_degree(f: list, g: list) -> int:
    def trim(u):
        while u and u[-1] == 0:
            u.pop()
        return u
    f, g = trim(list(f)), trim(list(g))
    while g:
        inv = pow(g[-1], _P - 2, _P)
        while len(f) >= len(g):
            q = f[-1] * inv % _P
            shift = len(f) - len(g)
            for i, c in enumerate(g):
                f[i + shift] = (f[i + shift] - q * c) % _P
            trim(f)
            if not f:
                break
        f, g = g, f
    return len(f) - 1


def _coprime_in(a: Poly, b: Poly, x: str, tries: int = 2) -> bool:
    """True when gcd(a, b) certainly has degree 0 in x.

    Specializing the other variables (modulo a prime) without killing the
    leading coefficients in x cannot lower the x-degree of the gcd, so a
    constant specialized gcd is a proof.
    """
    rng = random.Random(hash((x, len(a.terms), len(b.terms))))
    others = (a.variables() | b.variables()) - {x}
    for _ in range(tries):
        point = {v: rng.randrange(2, _P - 1) for v in others}
        fa, fb = _useries(a, x, point), _useries(b, x, point)
        if fa[-1] == 0 or fb[-1] == 0:
            continue
        return _ugcd_degree(fa, fb) == 0
    return False


# heuristic gcd (evaluate, recurse, reconstruct, verify) -------------------

def _norm(p: Poly) -> int:
    return max(abs(c) for c in p.terms.values())


def _eval_at(p: Poly, x: str, xi: int) -> Poly:
    out: dict = {}
    for m, c in p.terms.items():
        e = 0
        rest = []
        for v, k in m:
            if v == x:
                e = k
            else:
                rest.append((v, k))
        key = tuple(rest)
        out[key] = out.get(key, 0) + c * xi ** e
    return Poly({m: c for m, c in out.items() if c})


def _symmetric_mod(c: int, xi: int) -> int:
    r = c % xi
    return r - xi if r > xi // 2 else r


def _reconstruct(h: Poly, x: str, xi: int) -> Poly:
    """Read the integer coefficients of h as balanced base-xi digits in x."""
    out: dict = {}
    cur = dict(h.terms)
    e = 0
    while cur:
        nxt = {}
        for m, c in cur.items():
            d = _symmetric_mod(c, xi)
            if d:
                key = tuple(sorted(m + ((x, e),))) if e else m
                out[key] = d
            q = (c - d) // xi
            if q:
                nxt[m] = q
        cur = nxt
        e += 1
    return Poly(out)


def _quotient(p: Poly, d: Poly) -> Poly | None:
    try:
        return p.exact_div(d)
    except ArithmeticError:
        return None


def _zcontent(p: Poly):
    g = gmpy2.mpz(0)
    for c in p.terms.values():
        g = gmpy2.gcd(g, c)
        if g == 1:
            break
    return g


def _primitive(p: Poly) -> Poly:
    k = _zcontent(p)
    return (p.exact_div(Poly.const(k)) if k > 1 else p).sign_normalized()


def _heu(a: Poly, b: Poly, names: list) -> Poly | None:
    """gcd of a and b (integer content included), or None when the heuristic gives up."""
    if not names:
        return Poly.const(gmpy2.gcd(a.const_value(), b.const_value()))
    k = gmpy2.gcd(_zcontent(a), _zcontent(b))
    if k > 1:
        a, b = a.exact_div(Poly.const(k)), b.exact_div(Poly.const(k))
    x, rest = names[0], names[1:]
    na, nb = _norm(a), _norm(b)
    bound = 2 * min(na, nb) + 29
    lca, lcb = abs(a.leading()[1]), abs(b.leading()[1])
    xi = gmpy2.mpz(max(min(bound, 99 * gmpy2.isqrt(bound)), 2 * min(na // lca, nb // lcb) + 4))
    for _ in range(6):
        aa, bb = _eval_at(a, x, xi), _eval_at(b, x, xi)
        if not aa.is_zero() and not bb.is_zero():
            h = _heu(aa, bb, rest)
            if h is not None:
                for route in range(3):
                    if route == 0:
                        g = _primitive(_reconstruct(h, x, xi))
                    else:
                        src, ev = (a, aa) if route == 1 else (b, bb)
                        cof = _quotient(ev, h)
                        if cof is None:
                            continue
                        cof = _reconstruct(cof, x, xi)
                        if cof.is_zero():
                            continue
                        g = _quotient(src, cof)
                        if g is None:
                            continue
                        g = _primitive(g)
                    if g.is_zero():
                        continue
                    qa = _quotient(a, g)
                    qb = qa is not None and _quotient(b, g)
                    if qa is not None and qb is not None and qb is not False and _certified_coprime(qa, qb):
                        return g.scale(k) if k > 1 else g
        xi = 73794 * xi * gmpy2.isqrt(gmpy2.isqrt(xi)) // 27011
    return None


def _certified_coprime(a: Poly, b: Poly) -> bool:
    if gmpy2.gcd(_zcontent(a), _zcontent(b)) != 1:
        return False
    return all(_coprime_in(a, b, x) for x in a.variables() & b.variables())


def _heuristic_gcd(a: Poly, b: Poly) -> Poly | None:
    g = _heu(a, b, sorted(a.variables() | b.variables()))
    if g is None:
        return None
    return Poly({m: int(c) for m, c in g.terms.items()}).sign_normalized()


def lcm(a: Poly, b: Poly) -> Poly:
    if a.is_one():
        return b
    if b.is_one():
        return a
    return (a * b).exact_div(gcd(a, b)).sign_normalized()
