import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from dbctl.symkernel import (Add, Div, EvaluationError, Mul, NonlinearMultiplierError, Num,
                             ParseError, Pow, RationalForm, SingularMatrixError, SubstitutionCycleError, Sym,
                             Symbol, ZERO, canonicalize, det, diff, eval_num, gcd, identity,
                             mat_inverse, mat_mul, nonzero_factors, parse, rf, solve_linear,
                             substitute)
from dbctl.symkernel.linalg import bareiss_inverse

from oracles import to_sympy

NAMES = ["x2", "x4", "g", "u", "Lam_x3"]


# ---------------------------------------------------------------------------
# strategies

def _leaf():
    return st.one_of(
        st.sampled_from(NAMES).map(lambda n: Sym(Symbol(n))),
        st.integers(-4, 4).map(lambda k: Num(Fraction(k))),
        st.tuples(st.integers(-3, 3), st.integers(1, 3)).map(lambda t: Num(Fraction(*t))),
    )


def _extend(children):
    return st.one_of(
        st.lists(children, min_size=2, max_size=3).map(lambda a: Add(tuple(a))),
        st.lists(children, min_size=2, max_size=3).map(lambda a: Mul(tuple(a))),
        st.tuples(children, st.integers(0, 2)).map(lambda t: Pow(t[0], t[1])),
    )


polys = st.recursive(_leaf(), _extend, max_leaves=6)


def _nonzero(e):
    return not canonicalize(e).is_zero()


rationals = st.tuples(polys, polys.filter(_nonzero)).map(lambda t: Div(t[0], t[1]))

points = st.fixed_dictionaries({n: st.floats(0.3, 2.5) for n in NAMES})


def _tree_sympy(e):
    if isinstance(e, Num):
        return sp.Rational(e.value.numerator, e.value.denominator)
    if isinstance(e, Sym):
        return sp.Symbol(e.symbol.name)
    if isinstance(e, Add):
        return sp.Add(*[_tree_sympy(a) for a in e.args])
    if isinstance(e, Mul):
        return sp.Mul(*[_tree_sympy(a) for a in e.args])
    if isinstance(e, Pow):
        return _tree_sympy(e.base) ** e.exp
    if isinstance(e, Div):
        return _tree_sympy(e.num) / _tree_sympy(e.den)
    raise TypeError(e)


# ---------------------------------------------------------------------------
# parse

def test_parse_sum_of_squares():
    e = parse("x2^2 + x4^2")
    assert isinstance(e, Add) and all(isinstance(a, Pow) and a.exp == 2 for a in e.args)


def test_parse_quotient_and_canonical_parts():
    e = parse("2*g*x2*x4/(x2^2 + x4^2)")
    assert isinstance(e, Div)
    r = canonicalize(e)
    assert r.num == rf("2*g*x2*x4").num
    assert r.den == rf("x2^2 + x4^2").num


def test_parse_error_offset_and_expected():
    with pytest.raises(ParseError) as info:
        parse("x4 + * 2")
    assert info.value.offset == 5
    assert "identifier" in info.value.expected and "'('" in info.value.expected


@pytest.mark.parametrize("text, value", [
    ("8/4/2", 1), ("1 - 2 - 3", -4), ("-2^2", -4), ("(-2)^2", 4), ("3/4", Fraction(3, 4)),
    ("2*3 + 4", 10), ("(1+2)*3", 9),
])
def test_parse_precedence_and_associativity(text, value):
    r = canonicalize(parse(text))
    assert r.is_constant() and r.constant_value() == value


@pytest.mark.parametrize("text", ["", "x +", "(x", "x)", "2.5", "x^y", "x $ y", "x^-"])
def test_parse_rejects_malformed(text):
    with pytest.raises(ParseError):
        parse(text)


def test_float_literals_are_not_expressions():
    with pytest.raises(ParseError):
        parse("0.1*x")


# ---------------------------------------------------------------------------
# canonicalize

def test_cancellation_to_polynomial():
    assert rf("(x2^2 - x4^2)/(x2 - x4)") == rf("x2 + x4")
    assert rf("(x2^2 - x4^2)/(x2 - x4)").den.is_one()


def test_secondary_and_cleared_form_differ_by_unit_factor():
    reference = rf("u*((x4^2 + x2^2)/x4^3)*(-Lam_x3 - g*Lam_x4/x4) + 2*g*x2*((Lam_x3*x4 + g*Lam_x4)/x4^3)")
    cleared = rf(str(reference.num))
    assert reference / cleared == rf("1/x4^4")
    assert [str(a) for a in nonzero_factors(rf("x4^4"))] == ["x4 != 0"]


def test_reassociated_polynomial_is_zero():
    rnd = random.Random(7)
    terms = [f"{rnd.randint(-9, 9) or 1}*x2^{rnd.randint(0, 3)}*x4^{rnd.randint(0, 2)}*g^{rnd.randint(0, 2)}"
             for _ in range(5)]
    forward = " + ".join(terms)
    backward = " + ".join(f"({t})" for t in reversed(terms))
    assert canonicalize(parse(f"({forward}) - ({backward})")).is_zero()
    # direct expansion at 20 random rational points agrees with the canonical form
    r = rf(forward)
    for _ in range(20):
        pt = {n: Fraction(rnd.randint(-20, 20), rnd.randint(1, 9)) for n in ("x2", "x4", "g")}
        direct = sum(Fraction(eval(t.replace("^", "**"), {}, dict(pt))) for t in terms)
        assert eval_num(r, pt) == pytest.approx(float(direct), rel=1e-12, abs=1e-12)


@given(rationals)
def test_canonicalize_idempotent(e):
    r = canonicalize(e)
    assert canonicalize(r) is r
    assert canonicalize(parse(str(r))) == r


@given(rationals)
def test_canonical_form_agrees_with_sympy(e):
    r = canonicalize(e)
    assert sp.simplify(to_sympy(str(r)) - _tree_sympy(e)) == 0


@given(st.lists(polys, min_size=2, max_size=4), st.randoms(use_true_random=False))
def test_canonical_form_ignores_order_and_grouping(parts, rnd):
    shuffled = list(parts)
    rnd.shuffle(shuffled)
    a = canonicalize(Add(tuple(parts)))
    b = canonicalize(Add((Add(tuple(shuffled[:1])), Add(tuple(shuffled[1:])))))
    assert a == b
    assert canonicalize(Mul(tuple(parts))) == canonicalize(Mul(tuple(reversed(parts))))


def test_denominator_normalization():
    a = rf("x2/(-x4 - g)")
    b = rf("-x2/(x4 + g)")
    assert a == b and str(a) == str(b)
    assert rf("(2*x2)/(4*x4)") == rf("x2/(2*x4)")


# ---------------------------------------------------------------------------
# diff

def test_diff_examples():
    assert diff(rf("x2^2 + x4^2"), "x2") == rf("2*x2")
    assert canonicalize(diff(parse("g - u*x2/x4"), "x4")) == rf("u*x2/x4^2")
    d = diff(rf("Lam_x2*u - Lam_x4*u*x2/x4"), "u")
    assert d == rf("Lam_x2 - Lam_x4*x2/x4")
    assert d == -rf("-Lam_x2 + Lam_x4*x2/x4")


@given(rationals, rationals, st.sampled_from(NAMES))
def test_diff_linearity_product_quotient(a, b, v):
    A, B = canonicalize(a), canonicalize(b)
    dA, dB = diff(A, v), diff(B, v)
    assert diff(A + B, v) == dA + dB
    assert diff(A * B, v) == dA * B + A * dB
    if not B.is_zero():
        assert diff(A / B, v) == (dA * B - A * dB) / (B * B)


@settings(max_examples=60)
@given(rationals, st.sampled_from(NAMES), points)
def test_diff_matches_central_difference(e, v, pt):
    r = canonicalize(e)
    h = 1e-6
    try:
        exact = eval_num(diff(r, v), pt)
        lo = eval_num(r, {**pt, v: pt[v] - h})
        hi = eval_num(r, {**pt, v: pt[v] + h})
        mid = eval_num(RationalForm(r.den), pt)
    except EvaluationError:
        return
    if abs(mid) < 1e-3:
        return
    approx = (hi - lo) / (2 * h)
    scale = max(1.0, abs(exact), abs(eval_num(r, pt)) / h * 1e-10)
    assert abs(approx - exact) <= 1e-5 * scale


@given(rationals, st.sampled_from(NAMES))
def test_tree_and_canonical_derivatives_agree(e, v):
    assert canonicalize(diff(e, v)) == diff(canonicalize(e), v)


# ---------------------------------------------------------------------------
# substitute

def test_substitute_examples():
    assert substitute(parse("p2 - Lam_x2"), {"p2": parse("Lam_x2")}).is_zero()
    got = substitute(parse("g - u*x2/x4"), {"u": parse("2*g*x2*x4/(x2^2 + x4^2)")})
    assert got == rf("g*(x4^2 - x2^2)/(x2^2 + x4^2)")


def test_substitute_is_simultaneous():
    # a -> b and b -> c form a chain, not a cycle; a is replaced by b, not by c
    assert substitute(rf("a + 2*b"), {"a": rf("b"), "b": rf("c")}) == rf("b + 2*c")
    assert substitute(rf("a*b"), {"a": rf("x"), "b": rf("y")}) == rf("x*y")


def test_substitute_rejects_cycles():
    with pytest.raises(SubstitutionCycleError):
        substitute(rf("a"), {"a": rf("b + 1"), "b": rf("a")})


def test_substitute_on_cycloid_points():
    # the control constraint vanishes on the optimal cycloid once u = u*
    z12 = rf("u*(x2^2 + x4^2) - 2*g*x2*x4")
    ustar = rf("2*g*x2*x4/(x2^2 + x4^2)")
    reduced = substitute(z12, {"u": ustar})
    import math
    for k in range(10):
        th = 0.2 + 0.29 * k
        c = math.sqrt(4 * 9.8)
        pt = {"g": 9.8, "x2": c / 2 * (1 - math.cos(th)), "x4": c / 2 * math.sin(th)}
        assert abs(eval_num(reduced, pt)) < 1e-12


# ---------------------------------------------------------------------------
# eval_num

def test_eval_examples():
    assert eval_num(parse("x2^2 + x4^2"), {"x2": 1, "x4": 2}) == 5
    assert eval_num(parse("2*g*x2*x4/(x2^2 + x4^2)"), {"x2": 1, "x4": 2, "g": 9.8}) == pytest.approx(7.84, rel=1e-14)
    with pytest.raises(EvaluationError, match="denominator"):
        eval_num(parse("1/x4"), {"x4": 0})
    with pytest.raises(EvaluationError, match="unbound"):
        eval_num(parse("x + y"), {"x": 1})


def test_eval_accepts_symbols_and_complex_values():
    assert eval_num(rf("I*x"), {Symbol("x"): 2.0}) == 2j
    assert eval_num(rf("x*y"), {"x": 1 + 1j, "y": 1 - 1j}) == pytest.approx(2)


@given(rationals, points)
def test_tree_and_canonical_evaluation_agree(e, pt):
    try:
        a = eval_num(e, pt)
        b = eval_num(canonicalize(e), pt)
    except EvaluationError:
        return
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)


# ---------------------------------------------------------------------------
# solve_linear

def test_solve_linear_state_multipliers():
    eqs = [rf(f"F{k} - lambda_x{k}") for k in range(1, 5)]
    sol = solve_linear(eqs, [f"lambda_x{k}" for k in range(1, 5)])
    assert sol.solved == {f"lambda_x{k}": rf(f"F{k}") for k in range(1, 5)}
    assert sol.residuals == []


def test_solve_linear_control_multiplier():
    lu = rf("lambda_u")
    eq = rf("(u*(x2^2 + x4^2)/x4^3)*(-Lam_x3 - g*Lam_x4/x4)").diff("u") * lu + rf(
        "(-3*u^2*x2^3 + 8*g*u*x2^2*x4 - 6*g^2*x2*x4^2 - 3*u^2*x2*x4^2 + 4*g*u*x4^3)"
        "/(x4^2*(x2^2 + x4^2))") * rf("(x2^2 + x4^2)*(Lam_x3*x4 + g*Lam_x4)/x4^4")
    sol = solve_linear([eq], ["lambda_u"])
    assert sol.solved["lambda_u"] == rf(
        "(-3*u^2*x2^3 + 8*g*u*x2^2*x4 - 6*g^2*x2*x4^2 - 3*u^2*x2*x4^2 + 4*g*u*x4^3)/(x4^2*(x2^2 + x4^2))")
    assert sol.assumptions


def test_solve_linear_residual_only():
    sol = solve_linear([rf("0*lam + x2 - x4")], ["lam"])
    assert sol.solved == {} and sol.residuals == [rf("x2 - x4")] and sol.free == ["lam"]


def test_solve_linear_rejects_nonlinear():
    with pytest.raises(NonlinearMultiplierError):
        solve_linear([rf("lam^2 - 1")], ["lam"])


# ---------------------------------------------------------------------------
# matrices

def test_inverse_of_one_by_one():
    found = []
    inv = mat_inverse([[rf("x4")]], found)
    assert inv == [[rf("1/x4")]]
    assert [str(a) for a in found] == ["x4 != 0"]


def test_singular_matrix_names_null_vector():
    m = [[rf("x"), rf("y")], [rf("2*x"), rf("2*y")]]
    with pytest.raises(SingularMatrixError) as info:
        mat_inverse(m)
    v = info.value.null_vector
    assert all(sum((m[i][j] * v[j] for j in range(2)), ZERO).is_zero() for i in range(2))


entries = st.recursive(_leaf(), _extend, max_leaves=3)
square = st.integers(1, 3).flatmap(
    lambda n: st.lists(st.lists(entries, min_size=n, max_size=n), min_size=n, max_size=n))


@given(square)
def test_inverse_times_matrix_is_identity(rows):
    m = [[canonicalize(x) for x in row] for row in rows]
    if det(m).is_zero():
        with pytest.raises(SingularMatrixError):
            mat_inverse(m)
        return
    inv = mat_inverse(m)
    assert mat_mul(m, inv) == identity(len(m))
    assert bareiss_inverse(m) == inv


def test_symbolic_twelve_by_twelve_inverse():
    # banded symbolic matrix of the classical size
    n = 12
    m = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        m[i][i] = rf(f"x2 + {i + 1}")
        if i + 1 < n:
            m[i][i + 1] = rf("x4")
            m[i + 1][i] = rf("-g")
    inv = mat_inverse(m)
    assert mat_mul(m, inv) == identity(n)


# ---------------------------------------------------------------------------
# gcd

small_polys = st.builds(
    lambda e: canonicalize(e).num,
    st.recursive(_leaf(), _extend, max_leaves=4))


@given(small_polys, small_polys, small_polys)
def test_gcd_matches_sympy(a, b, c):
    if a.has_imag() or b.has_imag() or c.has_imag():
        return
    pa, pb = a * c, b * c
    got = gcd(pa, pb)
    ref = sp.gcd(to_sympy(str(pa)), to_sympy(str(pb)))
    if ref == 0:
        assert got.is_zero()
    else:
        assert sp.cancel(to_sympy(str(got)) / ref) in (1, -1)
