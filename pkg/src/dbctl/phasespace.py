"""Canonical pairs, Poisson brackets and reduction modulo constraints."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .symkernel import (ZERO, RationalForm, Symbol, canonicalize,
                        merge_assumptions, nonzero_factors)
from .symkernel.expr import Assumption, EvaluationError, _name
from .symkernel.poly import Poly

MOMENTUM_KINDS = ("momentum", "conjugate-momentum")
COORDINATE_KINDS = ("coordinate", "conjugate-coordinate", "control")
_RANK = {k: 3 for k in MOMENTUM_KINDS} | {k: 2 for k in COORDINATE_KINDS} | {"multiplier": 1}


class SurfaceSamplingError(RuntimeError):
    pass


@dataclass
class PhaseSpace:
    """Registry of canonical pairs plus unpaired symbols, in declaration order."""

    pairs: list = field(default_factory=list)          # (coordinate Symbol, momentum Symbol)
    parameters: list = field(default_factory=list)     # Symbols with no conjugate
    assumptions: list = field(default_factory=list)
    velocities: dict = field(default_factory=dict)     # coordinate name -> velocity Symbol
    _order: dict = field(default_factory=dict)         # name -> (Symbol, declaration index)

    def _register(self, s: Symbol) -> None:
        if s.name in self._order:
            raise ValueError(f"symbol {s.name} already registered")
        if s.name == "I":
            raise ValueError("the name I is reserved for the imaginary unit")
        self._order[s.name] = (s, len(self._order))

    def add_coordinate(self, q: Symbol, velocity: str | None = None) -> None:
        self._register(q)
        self.pairs.append([q, None])
        self.velocities[q.name] = Symbol(velocity or f"{q.name}_dot", "velocity")

    def add_momentum(self, q, p: Symbol) -> None:
        qn = _name(q)
        for pair in self.pairs:
            if pair[0].name == qn:
                if pair[1] is not None:
                    raise ValueError(f"{qn} already has a conjugate momentum")
                self._register(p)
                pair[1] = p
                return
        raise KeyError(f"{qn} is not a registered coordinate")

    def add_pair(self, q: Symbol, p: Symbol) -> None:
        self.add_coordinate(q)
        self.add_momentum(q, p)

    def add_parameter(self, s: Symbol) -> None:
        self._register(s)
        self.parameters.append(s)

    def has(self, name) -> bool:
        return _name(name) in self._order

    def symbol(self, name) -> Symbol:
        return self._order[_name(name)][0]

    def kind(self, name) -> str:
        n = _name(name)
        return self._order[n][0].kind if n in self._order else "parameter"

    def index(self, name) -> int:
        n = _name(name)
        return self._order[n][1] if n in self._order else -1

    def coordinates(self) -> list[Symbol]:
        return [q for q, _ in self.pairs]

    def momenta(self) -> list[Symbol]:
        return [p for _, p in self.pairs if p is not None]

    def canonical_pairs(self) -> list[tuple[str, str]]:
        return [(q.name, p.name) for q, p in self.pairs if p is not None]

    def phase_symbols(self) -> list[Symbol]:
        out = []
        for q, p in self.pairs:
            out.append(q)
            if p is not None:
                out.append(p)
        return out

    def symbols(self) -> list[Symbol]:
        return [s for s, _ in sorted(self._order.values(), key=lambda t: t[1])]


def poisson_bracket(a, b, space: PhaseSpace) -> RationalForm:
    """{a, b} = sum over pairs of da/dq db/dp - da/dp db/dq."""
    A, B = canonicalize(a), canonicalize(b)
    if A.is_zero() or B.is_zero():
        return ZERO
    va, vb = A.free_symbols(), B.free_symbols()
    out = ZERO
    for q, p in space.canonical_pairs():
        if q in va and p in vb:
            out = out + A.diff(q) * B.diff(p)
        if p in va and q in vb:
            out = out - A.diff(p) * B.diff(q)
    return out


# ---------------------------------------------------------------------------
# reduction


@dataclass
class ReductionSystem:
    """Triangular substitution rules extracted from constraints.

    ``rules`` maps a distinguished symbol to an expression free of every
    rule target, so one simultaneous substitution reaches the fixed point.
    Constraints that could not be turned into a rule stay in ``residual``;
    they may still mention rule targets and are handled numerically.
    """

    rules: dict = field(default_factory=dict)          # name -> RationalForm (ordered)
    residual: list = field(default_factory=list)       # RationalForm
    sources: dict = field(default_factory=dict)        # target name -> constraint label
    assumptions: list = field(default_factory=list)
    _points: dict = field(default_factory=dict, repr=False, compare=False)

    def targets(self) -> list[str]:
        return list(self.rules)


def _label(c) -> str:
    return getattr(c, "label", str(c))


def _expr(c) -> RationalForm:
    return canonicalize(getattr(c, "expr", c))


def solve_for(e: RationalForm, v: str) -> tuple[RationalForm, RationalForm]:
    """Solve e = 0 for v (e affine in v); returns (value, coefficient)."""
    coeffs = e.num.coeffs_in(v)
    coef = RationalForm(coeffs[1])
    rest = RationalForm(coeffs.get(0, ZERO.num))
    return -rest / coef, coef


# Size limits that keep the exact reduction cheap; anything larger is left
# to the numeric surface sampler.
MAX_RULE_TERMS = 24
MAX_SOLVED_TERMS = 16
MAX_SUBS_TERMS = 4000


def _bulk(r: RationalForm) -> int:
    return len(r.num.terms) + len(r.den.terms)


def build_reduction(constraints, space: PhaseSpace) -> ReductionSystem:
    """Greedily turn constraints into substitution rules.

    A constraint is solved for a symbol in which it is affine with a
    coefficient whose denominator is free of symbols. Constraints with no
    such symbol are revisited once all others are in, and may then be
    solved through their numerator (denominators cleared). Among
    candidates momenta beat coordinates beat multipliers, and ties go to
    the symbol declared last. Monomial factors are divided out first, so
    x * g = 0 is read as g = 0 with x != 0 recorded. Large constraints
    and large solutions are not turned into rules.
    """
    red = ReductionSystem()
    pending = [(_label(c), _expr(c)) for c in constraints]
    for allow_cleared in (False, True, True):
        leftover = []
        for label, raw in pending:
            e = raw.subs_within(red.rules, MAX_SUBS_TERMS) if red.rules else raw
            if e is None:
                leftover.append((label, raw))
                continue
            if e.is_zero():
                continue
            e, stripped = _strip_monomial(e)
            if stripped:
                red.assumptions = merge_assumptions(red.assumptions, stripped)
            cands = []
            if _bulk(e) <= MAX_SOLVED_TERMS:
                cands = _strict_candidates(e, space)
                if not cands and allow_cleared:
                    cands = _cleared_candidates(e, space)
            if not cands:
                leftover.append((label, e))
                continue
            v = max(cands)[2]
            value, coef = solve_for(e, v)
            if _bulk(value) > MAX_RULE_TERMS:
                leftover.append((label, e))
                continue
            if not coef.is_constant():
                red.assumptions = merge_assumptions(red.assumptions, nonzero_factors(coef))
            if not e.den.is_const():
                red.assumptions = merge_assumptions(red.assumptions, nonzero_factors(RationalForm(e.den)))
            sub = {v: value}
            for k in list(red.rules):
                if red.rules[k].has(v):
                    red.rules[k] = red.rules[k].subs(sub)
            red.rules[v] = value
            red.sources[v] = label
        pending = leftover
        if not pending:
            break
    for _, e in pending:
        r = e.subs_within(red.rules, MAX_SUBS_TERMS) if red.rules else e
        r = e if r is None else r
        if not r.is_zero():
            red.residual.append(r)
    return red


def _strip_monomial(e: RationalForm):
    """Divide the numerator by its monomial content; x * g = 0 is read as g = 0, x != 0."""
    mono = None
    for t in e.num.terms:
        d = {v: k for v, k in t if v != "I"}
        mono = d if mono is None else {v: min(k, d.get(v, 0)) for v, k in mono.items()}
    mono = {v: k for v, k in (mono or {}).items() if k}
    if not mono or len(e.num.terms) < 2:
        return e, []
    m = Poly({tuple(sorted(mono.items())): 1})
    return RationalForm(e.num.exact_div(m), e.den), [Assumption(RationalForm.symbol(v)) for v in sorted(mono)]


def _strict_candidates(e: RationalForm, space: PhaseSpace):
    """Symbols in which e is affine with a coefficient of symbol-free denominator."""
    out = []
    for rank, idx, v in _cleared_candidates(e, space):
        coef = RationalForm(e.num.coeffs_in(v)[1], e.den)
        if coef.den.is_const():
            out.append((rank, idx, v))
    return out


def _cleared_candidates(e: RationalForm, space: PhaseSpace):
    """Symbols in which the numerator of e is affine.

    A symbol that merely multiplies the rest (e = v * f with f not
    constant) is demoted: solving for it would pick the v = 0 branch.
    """
    dv = e.den.variables()
    out = []
    for v in e.num.variables():
        rank = _RANK.get(space.kind(v))
        if rank is None or v in dv or e.num.degree(v) != 1:
            continue
        coeffs = e.num.coeffs_in(v)
        if 0 not in coeffs and not coeffs[1].is_const():
            rank -= 10
        out.append((rank, space.index(v), v))
    return out


def weak_reduce(e, red: ReductionSystem) -> RationalForm:
    r = canonicalize(e)
    return r.subs(red.rules) if red.rules else r


@dataclass(frozen=True)
class WeakVerdict:
    """Outcome of a weak-zero test; truthy when weakly zero."""

    value: bool
    how: str  # "exact" | "numeric"

    def __bool__(self) -> bool:
        return self.value

    def __str__(self) -> str:
        if not self.value:
            return "not weakly zero"
        return "weakly-zero (numeric)" if self.how == "numeric" else "weakly-zero"


def seed_from_env() -> int:
    try:
        return int(os.environ.get("DBCTL_SEED", "42"))
    except ValueError:
        return 42


def is_weakly_zero(e, red: ReductionSystem, space: PhaseSpace | None = None,
                   points: int = 50, seed: int | None = None) -> WeakVerdict:
    """Weak-zero test: exact reduction, plus numeric confirmation on residual surfaces."""
    r = canonicalize(e)
    if red.rules:
        reduced = r.subs_within(red.rules, MAX_SUBS_TERMS) if red.residual else r.subs(red.rules)
        if reduced is not None:
            r = reduced
    if r.is_zero():
        return WeakVerdict(True, "exact")
    if not red.residual:
        return WeakVerdict(False, "exact")
    seed = seed_from_env() if seed is None else seed
    pts = surface_points(red, sorted(r.free_symbols()), points, np.random.default_rng(seed),
                         complex_values=True)
    scale = 0.0
    worst = 0.0
    used = 0
    for pt in pts:
        try:
            val = r.evaluate(pt)
        except EvaluationError:
            continue  # the expression's own denominator vanishes here
        used += 1
        terms = sum(abs(c) * abs(_mono_val(m, pt)) for m, c in r.num.terms.items())
        scale = max(scale, terms / max(abs(r.den.evaluate({**pt, "I": 1j})), 1e-300))
        worst = max(worst, abs(val))
    if 2 * used < len(pts):
        raise SurfaceSamplingError("denominator vanishes on most sampled surface points")
    return WeakVerdict(worst <= 1e-8 * max(1.0, scale), "numeric")


def _mono_val(m, pt):
    out = 1.0
    for v, k in m:
        out *= (1j if v == "I" else pt[v]) ** k
    return out


def _closure(red: ReductionSystem, names) -> set:
    """names plus every symbol the rules for targets among them depend on."""
    out = set(names)
    for t in [t for t in red.rules if t in out]:
        out |= red.rules[t].free_symbols()
    return out


def surface_points(red: ReductionSystem, names, count: int, rng, complex_values: bool = False,
                   attempts: int = 1000, magnitude: tuple = (0.5, 2.0)) -> list[dict]:
    """Random numeric points on the constraint surface.

    Free symbols are drawn at random; residual constraints are then solved
    by Newton iteration on the free symbols they involve, and rule targets
    are filled in from their rules. Only regular points are kept, meaning
    the residual Jacobian has the largest rank seen, which steers clear
    of degenerate branches of the surface. Every returned dict binds
    ``names`` plus all symbols needed to evaluate them.
    """
    core = _closure(red, set().union(*(r.free_symbols() for r in red.residual)) if red.residual else set())
    key = (count, complex_values, attempts, magnitude)
    base = red._points.get(key)
    if base is None:
        base = _sample_core(red, core, count, rng, complex_values, attempts, magnitude)
        red._points[key] = base
    need = _closure(red, set(names) | core)
    extra = sorted(need - core - set(red.rules))
    targets = [t for t in red.rules if t in need and t not in core]
    lo, hi = magnitude
    out = []
    for pt in base:
        pt = dict(pt)
        for tries in range(attempts):
            trial = dict(pt)
            trial.update(zip(extra, _draw(rng, len(extra), complex_values, lo, hi)))
            try:
                for t in targets:
                    trial[t] = red.rules[t].evaluate(trial)
            except (ZeroDivisionError, ArithmeticError, ValueError, OverflowError):
                continue
            if all(np.isfinite(complex(v)) for v in trial.values()):
                out.append(trial)
                break
        else:
            raise SurfaceSamplingError("could not construct constraint-surface points after "
                                       f"{attempts} attempts")
    return out


def _draw(rng, n, complex_values, lo, hi):
    mags = rng.uniform(lo, hi, n)
    if complex_values:
        return (mags * np.exp(1j * rng.uniform(0, 2 * np.pi, n))).tolist()
    return (mags * rng.choice([-1.0, 1.0], n)).tolist()


def _sample_core(red, core, count, rng, complex_values, attempts, magnitude):
    """Points binding ``core`` (residual symbols and what their targets need)."""
    targets = [t for t in red.rules if t in core]
    free = sorted(core - set(red.rules))
    lo, hi = magnitude
    found: list[tuple[int, dict]] = []
    best = -1
    tries = 0
    while sum(1 for r, _ in found if r == best) < count:
        tries += 1
        if tries > attempts:
            raise SurfaceSamplingError("could not construct constraint-surface points after "
                                       f"{attempts} attempts")
        pt = dict(zip(free, _draw(rng, len(free), complex_values, lo, hi)))
        try:
            if red.residual:
                got = _newton(red, targets, free, pt, complex_values)
                if got is None:
                    continue
                pt, rank = got
            else:
                rank = 0
            for t in targets:
                pt[t] = red.rules[t].evaluate(pt)
        except (ZeroDivisionError, ArithmeticError, ValueError, OverflowError, np.linalg.LinAlgError):
            continue
        if not all(np.isfinite(complex(v)) for v in pt.values()):
            continue
        best = max(best, rank)
        found.append((rank, pt))
    return [pt for r, pt in found if r == best][:count]


def _residual_values(red, targets, free, x):
    pt = dict(zip(free, x.tolist()))
    for t in targets:
        pt[t] = red.rules[t].evaluate(pt)
    return np.array([r.evaluate(pt) for r in red.residual], dtype=complex), pt


def _jacobian(red, targets, free, x, f0, complex_values):
    h = 1e-6
    J = np.empty((len(f0), len(x)), dtype=complex)
    for k in range(len(x)):
        step = np.zeros(len(x), dtype=x.dtype)
        step[k] = h * max(1.0, abs(x[k]))
        fp, _ = _residual_values(red, targets, free, x + step)
        fm, _ = _residual_values(red, targets, free, x - step)
        J[:, k] = (fp - fm) / (2 * step[k])
    return J


def _newton(red, targets, free, pt, complex_values):
    """Gauss-Newton on the residuals; returns (point, Jacobian rank) or None."""
    x = np.array([pt[v] for v in free], dtype=complex if complex_values else float)
    for _ in range(60):
        f, cur = _residual_values(red, targets, free, x)
        J = _jacobian(red, targets, free, x, f, complex_values)
        if np.max(np.abs(f)) < 1e-12 * max(1.0, np.max(np.abs(x))):
            sv = np.linalg.svd(J, compute_uv=False)
            rank = int(np.sum(sv > 1e-7 * max(sv[0], 1e-300))) if len(sv) else 0
            return {v: cur[v] for v in free}, rank
        step = np.linalg.lstsq(J, f, rcond=None)[0]
        if not complex_values:
            step = step.real
        x = x - step
    return None
