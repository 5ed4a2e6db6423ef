"""Constraint chain, classification, second-class inversion and Dirac dynamics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .phasespace import (PhaseSpace, ReductionSystem, SurfaceSamplingError, build_reduction,
                         is_weakly_zero, poisson_bracket, seed_from_env, solve_for, surface_points,
                         weak_reduce)
from .symkernel.expr import EvaluationError
from .symkernel import (ONE_RF, ZERO, RationalForm, SingularMatrixError, Symbol, canonicalize,
                        mat_inverse, merge_assumptions, nonzero_factors, nullspace,
                        solve_linear)
from .symkernel.poly import Poly


class UnsupportedLagrangianError(ValueError):
    pass


class ChainNonTerminationError(RuntimeError):
    def __init__(self, message: str, report: "DiracReport"):
        super().__init__(message)
        self.report = report


class UnderdeterminedControlError(ValueError):
    pass


class UnsupportedControlError(ValueError):
    pass


class GaugeConditionsRequired(RuntimeError):
    """First-class constraints survived; the caller must add gauge conditions."""


@dataclass
class Constraint:
    label: str
    expr: RationalForm
    origin: str = "primary"          # primary | secondary
    generation: int = 0
    klass: str = "unknown"           # unknown | first | second
    zeta: str | None = None          # label in the second-class ordering
    scale: RationalForm = ONE_RF     # D-matrix row uses expr * scale

    @property
    def origin_tag(self) -> str:
        return "primary" if self.origin == "primary" else f"secondary({self.generation})"

    def d_expr(self) -> RationalForm:
        return self.expr if self.scale.is_one() else self.expr * self.scale

    def normalized(self) -> tuple[RationalForm, RationalForm]:
        """(polynomial form, unit factor) with expr = factor * form.

        The form is the numerator divided by its integer content with a
        positive leading coefficient.
        """
        num = self.expr.num
        k = num.content()
        if num.leading()[1] < 0:
            k = -k
        form = RationalForm(num.exact_div(Poly.const(k)))
        return form, self.expr / form


@dataclass
class DiracReport:
    canonical_hamiltonian: RationalForm
    primary_hamiltonian: RationalForm
    space: PhaseSpace
    constraints: list = field(default_factory=list)
    multipliers: dict = field(default_factory=dict)
    free_multipliers: list = field(default_factory=list)
    multiplier_of: dict = field(default_factory=dict)      # primary label -> multiplier name
    d_matrix: list | None = None
    d_inverse: list | None = None
    d_support: list = field(default_factory=list)          # indices into second_class used by d_inverse
    null_combinations: list = field(default_factory=list)  # weak null vectors of D
    first_class: list = field(default_factory=list)
    eom: dict = field(default_factory=dict)
    optimal_controls: dict = field(default_factory=dict)
    control_sources: dict = field(default_factory=dict)
    control_relations: dict = field(default_factory=dict)
    assumptions: list = field(default_factory=list)
    generations: int = 0
    reduction: ReductionSystem | None = None
    multiplier_status: dict = field(default_factory=dict)  # name -> fixed | zero | free
    numeric_generations: list = field(default_factory=list)

    def constraint(self, label: str) -> Constraint:
        for c in self.constraints:
            if c.label == label or c.zeta == label:
                return c
        raise KeyError(label)

    @property
    def second_class(self) -> list:
        return [c for c in self.constraints if c.klass == "second"]

    @property
    def effective_hamiltonian(self) -> RationalForm:
        if not self.multipliers:
            return self.primary_hamiltonian
        return self.primary_hamiltonian.subs(self.multipliers)

    def note(self, found) -> None:
        self.assumptions = merge_assumptions(self.assumptions, found)

    def refresh_reduction(self) -> ReductionSystem:
        self.reduction = build_reduction(self.constraints, self.space)
        self.note(self.reduction.assumptions)
        return self.reduction


# ---------------------------------------------------------------------------
# Legendre transform and primary Hamiltonian


def singular_legendre(lagrangian, space: PhaseSpace):
    """Legendre transform of a Lagrangian affine in every velocity.

    Returns (canonical Hamiltonian, primary constraints, space).
    """
    L = canonicalize(lagrangian)
    vel = {q: v.name for q, v in space.velocities.items()}
    vnames = set(vel.values())
    hc = -L
    primaries = []
    for q, p in space.pairs:
        v = vel[q.name]
        dl = L.diff(v)
        bad = dl.free_symbols() & vnames
        if bad:
            raise UnsupportedLagrangianError(
                f"Lagrangian is not linear in velocity {v} (derivative involves {', '.join(sorted(bad))})")
        if p is None:
            raise ValueError(f"coordinate {q.name} has no conjugate momentum")
        hc = hc + dl * RationalForm.symbol(v)
        primaries.append(Constraint(f"chi_{q.name}", RationalForm.symbol(p.name) - dl))
    left = hc.free_symbols() & vnames
    if left:
        raise UnsupportedLagrangianError(f"velocity {sorted(left)[0]} survives the Legendre transform")
    return hc, [c for c in primaries if not c.expr.is_zero()], space


def multiplier_name(c: Constraint) -> str:
    base = c.label[4:] if c.label.startswith("chi_") else c.label
    return f"lambda_{base}"


def primary_hamiltonian(hc, primaries, space: PhaseSpace | None = None) -> RationalForm:
    """H_c plus one fresh multiplier times each primary constraint."""
    hp = canonicalize(hc)
    for c in primaries:
        name = multiplier_name(c)
        if space is not None and not space.has(name):
            space.add_parameter(Symbol(name, "multiplier"))
        hp = hp + RationalForm.symbol(name) * c.expr
    return hp


# ---------------------------------------------------------------------------
# consistency iteration


def constraint_chain(hc, primaries, space: PhaseSpace, max_generations: int = 16) -> DiracReport:
    """Iterate consistency conditions until no new constraints appear.

    Each sweep brackets the constraints added by the previous sweep with
    the primary Hamiltonian (already-fixed multipliers substituted),
    solves for the remaining free multipliers and turns the leftover
    multiplier-free conditions that do not vanish weakly into secondary
    constraints.
    """
    if max_generations < 1:
        raise ValueError("max_generations must be at least 1")
    hc = canonicalize(hc)
    prims = [Constraint(c.label, canonicalize(c.expr)) for c in primaries]
    hp = primary_hamiltonian(hc, prims, space)
    report = DiracReport(hc, hp, space, constraints=list(prims))
    report.multiplier_of = {c.label: multiplier_name(c) for c in prims}
    free = [report.multiplier_of[c.label] for c in prims]
    fresh = list(prims)
    sigma = 0
    while fresh:
        report.generations += 1
        if report.generations > max_generations:
            raise ChainNonTerminationError(
                f"constraint chain did not close within {max_generations} generations", report)
        red = report.refresh_reduction()
        h_now = report.effective_hamiltonian
        eqs = [poisson_bracket(c.expr, h_now, space) for c in fresh]
        if red.residual:
            num = numeric_multiplier_analysis(eqs, free, red, space)
            if num.consistent:
                report.numeric_generations.append(report.generations)
                for m in num.determined:
                    report.multiplier_status[m] = "zero" if m in num.zero else "fixed"
                    if m in num.zero:
                        report.multipliers[m] = ZERO
                report.multipliers = {k: v.subs({m: ZERO for m in num.zero}) for k, v in
                                      report.multipliers.items()}
                free = [m for m in free if m not in num.determined]
                break
        sol = solve_linear(eqs, free, is_zero=lambda r: bool(is_weakly_zero(r, red, space)))
        report.note(sol.assumptions)
        if sol.solved:
            report.multipliers = {k: v.subs(sol.solved) for k, v in report.multipliers.items()}
            report.multipliers.update(sol.solved)
            free = [m for m in free if m not in sol.solved]
        fresh = []
        for r in sol.residuals:
            r = weak_reduce(r, red) if not red.residual else r
            if r.is_zero() or (red.residual and is_weakly_zero(r, red, space)):
                continue
            if any(_proportional(r, c.expr) for c in fresh):
                continue
            sigma += 1
            c = Constraint(f"Sigma_{sigma}", r, "secondary", report.generations)
            report.note(nonzero_factors(RationalForm(r.den)))
            report.constraints.append(c)
            fresh.append(c)
    report.free_multipliers = free
    red = report.refresh_reduction()
    for m, v in report.multipliers.items():
        if m not in report.multiplier_status:
            report.multiplier_status[m] = "zero" if is_weakly_zero(v, red, space) else "fixed"
    for m in free:
        report.multiplier_status[m] = "free"
    return report


@dataclass
class NumericMultipliers:
    """Multiplier structure of one sweep read off at regular surface points."""

    determined: list
    zero: list
    consistent: bool
    rank: int
    points: int


def numeric_multiplier_analysis(eqs, free, red: ReductionSystem, space: PhaseSpace,
                                points: int = 20, seed: int | None = None) -> NumericMultipliers:
    """Solve the consistency equations A(z) lam + b(z) = 0 pointwise.

    A multiplier is determined when every null vector of A has a vanishing
    component along it, and weakly zero when the particular solution also
    vanishes there at every sampled point. The sweep is consistent when b
    lies in the column space of A everywhere, so no new constraint arises.
    """
    eqs = [canonicalize(e) for e in eqs]
    coef = [[e.diff(m) for m in free] for e in eqs]
    const = [e.subs({m: ZERO for m in free if e.has(m)}) for e in eqs]
    names = set()
    for e in eqs:
        names |= e.free_symbols()
    names -= set(free)
    rng = np.random.default_rng(seed_from_env() if seed is None else seed)
    pts = surface_points(red, sorted(names), points, rng, complex_values=True)
    n = len(free)
    determined = [True] * n
    zero = [True] * n
    consistent = True
    rank = 0
    used = 0
    for pt in pts:
        try:
            A = np.array([[c.evaluate(pt) if not c.is_zero() else 0.0 for c in row] for row in coef],
                         dtype=complex).reshape(len(eqs), n)
            b = np.array([c.evaluate(pt) if not c.is_zero() else 0.0 for c in const], dtype=complex)
        except EvaluationError:
            continue
        used += 1
        _, sv, vh = np.linalg.svd(A)
        top = sv[0] if len(sv) else 0.0
        r = int(np.sum(sv > 1e-9 * max(top, 1.0)))
        rank = max(rank, r)
        null = vh[r:].conj().T
        x = np.linalg.lstsq(A, -b, rcond=None)[0]
        size = max(1.0, np.linalg.norm(x), np.linalg.norm(b))
        if np.linalg.norm(A @ x + b) > 1e-8 * size * max(1.0, top):
            consistent = False
        for j in range(n):
            if null.shape[1] and np.linalg.norm(null[j]) > 1e-7:
                determined[j] = False
            if abs(x[j]) > 1e-8 * size:
                zero[j] = False
    if 2 * used < len(pts):
        raise SurfaceSamplingError("multiplier coefficients are singular on most surface points")
    det = [m for j, m in enumerate(free) if determined[j]]
    return NumericMultipliers(det, [m for j, m in enumerate(free) if determined[j] and zero[j]],
                              consistent, rank, used)


def _proportional(a: RationalForm, b: RationalForm) -> bool:
    return (a / b).is_constant()


def classify(report: DiracReport) -> DiracReport:
    """Mark constraints first-class when all their brackets vanish weakly."""
    red = report.reduction or report.refresh_reduction()
    cs = report.constraints
    n = len(cs)
    nonzero = [[False] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            b = poisson_bracket(cs[i].expr, cs[j].expr, report.space)
            if not b.is_zero() and not is_weakly_zero(b, red, report.space):
                nonzero[i][j] = nonzero[j][i] = True
    report.first_class = []
    for i, c in enumerate(cs):
        c.klass = "second" if any(nonzero[i]) else "first"
        if c.klass == "first":
            report.first_class.append(c)
    return report


# ---------------------------------------------------------------------------
# optimal controls


def _affine_in(e: RationalForm, u: str) -> bool:
    return e.num.degree(u) == 1 and u not in e.den.variables()


def extract_optimal_controls(report: DiracReport, controls, operator: bool = False) -> DiracReport:
    """Impose the control-defining constraints strongly.

    Scalar controls are solved for explicitly from the first constraint
    affine in them, after the other constraints have been imposed. With
    ``operator=True`` the controls are entries of one operator and the
    defining constraints are returned as relations instead.
    """
    if report.first_class:
        labels = ", ".join(c.label for c in report.first_class)
        raise GaugeConditionsRequired(
            f"first-class constraints {labels} remain; supply gauge conditions before extracting controls")
    names = [c.name if isinstance(c, Symbol) else str(c) for c in controls]
    for u in names:
        if not any(c.expr.has(u) for c in report.constraints):
            raise UnderdeterminedControlError(f"control {u}: absent from every constraint")
    if operator:
        for c in report.constraints:
            if c.origin == "secondary" and any(c.expr.has(u) for u in names):
                report.control_relations[c.label] = c.expr
        return report
    for u in names:
        holders = [c for c in report.constraints if c.expr.has(u)]
        target = next((c for c in holders if _affine_in(c.expr, u)), None)
        if target is None:
            raise UnsupportedControlError(
                f"control {u} enters constraint {holders[0].label} nonlinearly: {holders[0].expr}")
        others = build_reduction([c for c in report.constraints if c is not target], report.space)
        reduced = weak_reduce(target.expr, others)
        if not reduced.has(u):
            raise UnderdeterminedControlError(
                f"control {u}: constraint {target.label} no longer depends on it on the constraint surface")
        if not _affine_in(reduced, u):
            raise UnsupportedControlError(f"control {u} enters constraint {target.label} nonlinearly")
        value, coef = solve_for(reduced, u)
        report.note(nonzero_factors(coef))
        report.note(nonzero_factors(RationalForm(reduced.den)))
        report.note(nonzero_factors(RationalForm(value.den)))
        report.optimal_controls[u] = value
        report.control_sources[u] = target.label
        raw_coef = target.expr.diff(u)
        if not raw_coef.has(u):
            target.scale = raw_coef.reciprocal()
            report.note(nonzero_factors(raw_coef))
    return report


# ---------------------------------------------------------------------------
# D matrix and Dirac bracket


def _independent_rows(m: list) -> list[int]:
    """Indices of a maximal set of linearly independent rows, greedily in order."""
    basis: list[tuple[int, list]] = []  # (pivot column, normalized row)
    keep = []
    for k, row in enumerate(m):
        r = list(row)
        for col, b in basis:
            f = r[col]
            if not f.is_zero():
                r = [x - f * y if not y.is_zero() else x for x, y in zip(r, b)]
        piv = next((j for j, x in enumerate(r) if not x.is_zero()), None)
        if piv is None:
            continue
        inv = r[piv].reciprocal()
        r = [x * inv for x in r]
        for idx, (col, b) in enumerate(basis):
            f = b[piv]
            if not f.is_zero():
                basis[idx] = (col, [x - f * y for x, y in zip(b, r)])
        basis.append((piv, r))
        keep.append(k)
    return keep


def d_matrix(report: DiracReport, on_singular: str = "raise") -> DiracReport:
    """Weakly reduced brackets among second-class constraints and their inverse.

    With ``on_singular="reduce"`` a singular matrix is not fatal: its null
    vectors are recorded as first-class combinations and the inverse is
    taken over a maximal independent subset of constraints.
    """
    sc = report.second_class
    if not sc:
        raise ValueError("no second-class constraints")
    for k, c in enumerate(sc, 1):
        c.zeta = f"zeta_{k}"
    red = report.reduction or report.refresh_reduction()
    rows = [c.d_expr() for c in sc]
    n = len(sc)
    D = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            b = weak_reduce(poisson_bracket(rows[i], rows[j], report.space), red)
            D[i][j], D[j][i] = b, -b
    report.d_matrix = D
    found: list = []
    try:
        report.d_inverse = mat_inverse(D, found)
        report.d_support = list(range(n))
    except SingularMatrixError as exc:
        null = nullspace(D)
        if on_singular != "reduce":
            raise SingularMatrixError(
                "D matrix is singular on the constraint surface; a first-class combination or "
                "gauge freedom was missed", null[0] if null else exc.null_vector) from None
        report.null_combinations = null
        keep = _independent_rows(D)
        sub = [[D[i][j] for j in keep] for i in keep]
        report.d_inverse = mat_inverse(sub, found)
        report.d_support = keep
    report.note(found)
    return report


def _support(report: DiracReport) -> list:
    sc = report.second_class
    return [sc[i].d_expr() for i in report.d_support]


def dirac_bracket(a, b, report: DiracReport) -> RationalForm:
    """{a, b} minus the second-class correction, weakly reduced."""
    if report.d_inverse is None:
        raise ValueError("d_inverse not available; run d_matrix first")
    red = report.reduction
    space = report.space
    zs = _support(report)
    left = [weak_reduce(poisson_bracket(a, z, space), red) for z in zs]
    right = [weak_reduce(poisson_bracket(z, b, space), red) for z in zs]
    out = weak_reduce(poisson_bracket(a, b, space), red)
    Dinv = report.d_inverse
    for i, la in enumerate(left):
        if la.is_zero():
            continue
        acc = ZERO
        for j, rb in enumerate(right):
            if not rb.is_zero() and not Dinv[i][j].is_zero():
                acc = acc + Dinv[i][j] * rb
        if not acc.is_zero():
            out = out - la * acc
    return out


def equations_of_motion(report: DiracReport) -> DiracReport:
    """Time derivative of every coordinate and momentum under the Dirac bracket."""
    hc = report.canonical_hamiltonian
    controls = report.optimal_controls
    for s in report.space.phase_symbols():
        if report.d_inverse is not None:
            e = dirac_bracket(s.name, hc, report)
        else:
            e = weak_reduce(poisson_bracket(s.name, report.effective_hamiltonian, report.space),
                            report.reduction)
        if controls:
            e = weak_reduce(e.subs(controls), report.reduction)
        report.eom[s.name] = e
    return report


def analyze(lagrangian, space: PhaseSpace, controls=(), operator_controls: bool = False,
            max_generations: int = 16, on_singular: str = "raise",
            chain_only: bool = False) -> DiracReport:
    """Run the whole algorithm on a velocity-linear Lagrangian."""
    hc, prims, space = singular_legendre(lagrangian, space)
    report = constraint_chain(hc, prims, space, max_generations)
    report.note(space.assumptions)
    if chain_only:
        return report
    classify(report)
    if controls:
        extract_optimal_controls(report, controls, operator=operator_controls)
    if report.second_class:
        d_matrix(report, on_singular)
    equations_of_motion(report)
    return report
