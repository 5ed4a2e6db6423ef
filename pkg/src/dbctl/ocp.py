"""Problem builders for classical, closed quantum and Lindblad control problems.

Each builder returns a Lagrangian that is linear in velocities together
with the phase space it lives on. Also hosts the weak Pontryagin check
used to cross-examine derived controls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .phasespace import PhaseSpace, is_weakly_zero, weak_reduce
from .symkernel import (ONE_RF, ZERO, Assumption, RationalForm, Symbol, canonicalize)
from .symkernel.expr import IMAG_UNIT

I = IMAG_UNIT


class UndeclaredSymbolError(ValueError):
    pass


def _rf(name: str) -> RationalForm:
    return RationalForm.symbol(name)


def _check_declared(e: RationalForm, allowed: set, where: str) -> None:
    extra = e.free_symbols() - allowed
    if extra:
        raise UndeclaredSymbolError(f"{where} references undeclared symbol {sorted(extra)[0]}")


# ---------------------------------------------------------------------------
# classical


@dataclass
class ControlProblem:
    states: list                    # state names
    dynamics: dict                  # state name -> expression (any canonicalizable form)
    controls: list = field(default_factory=list)
    running_cost: object = 1
    parameters: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)
    name: str = "problem"

    def __post_init__(self):
        if not self.states:
            raise ValueError("a control problem needs at least one state")
        missing = [x for x in self.states if x not in self.dynamics]
        if missing:
            raise ValueError(f"state {missing[0]}: no dynamics")

    def adjoint(self, x: str) -> str:
        return f"Lam_{x}"

    def rhs(self, x: str) -> RationalForm:
        return canonicalize(self.dynamics[x])

    def cost(self) -> RationalForm:
        return canonicalize(self.running_cost)


def build_classical(p: ControlProblem):
    """L = F0 + sum_a Lam_a (x_a' - F_a) over pairs for states, adjoints and controls."""
    allowed = set(p.states) | set(p.controls) | set(p.parameters)
    for x in p.states:
        _check_declared(p.rhs(x), allowed, f"dynamics of {x}")
    _check_declared(p.cost(), allowed, "running cost")

    space = PhaseSpace()
    for x in p.states:
        space.add_coordinate(Symbol(x, "coordinate"))
    for x in p.states:
        space.add_coordinate(Symbol(p.adjoint(x), "coordinate"))
    for u in p.controls:
        space.add_coordinate(Symbol(u, "control"))
    for x in p.states:
        space.add_momentum(x, Symbol(f"p_{x}", "momentum"))
    for x in p.states:
        space.add_momentum(p.adjoint(x), Symbol(f"pi_{x}", "momentum"))
    for u in p.controls:
        space.add_momentum(u, Symbol(f"eta_{u}", "momentum"))
    for k in p.parameters:
        space.add_parameter(Symbol(k, "parameter"))
    space.assumptions = [a if isinstance(a, Assumption) else Assumption(canonicalize(a))
                         for a in p.assumptions]

    L = p.cost()
    for x in p.states:
        v = _rf(space.velocities[x].name)
        L = L + _rf(p.adjoint(x)) * (v - p.rhs(x))
    return L, space


def pontryagin_hamiltonian(p: ControlProblem) -> RationalForm:
    out = -p.cost()
    for x in p.states:
        out = out + _rf(p.adjoint(x)) * p.rhs(x)
    return out


def pmp_checks(p: ControlProblem, report) -> list[tuple[str, bool]]:
    """Individual weak-PMP conditions as (description, verdict) pairs."""
    hp = pontryagin_hamiltonian(p)
    red = report.reduction
    u_star = report.optimal_controls
    out = []

    def on_surface(e):
        e = e.subs(u_star) if u_star else e
        return weak_reduce(e, red)

    for u in p.controls:
        if u not in u_star:
            out.append((f"d H_P / d {u} at optimum", False))
            continue
        out.append((f"d H_P / d {u} at optimum",
                    bool(is_weakly_zero(on_surface(hp.diff(u)), red, report.space))))
    for x in p.states:
        lam = p.adjoint(x)
        for s, rhs in ((x, hp.diff(lam)), (lam, -hp.diff(x))):
            got = report.eom.get(s)
            ok = got is not None and bool(is_weakly_zero(on_surface(got - rhs), red, report.space))
            out.append((f"{s}' matches Hamilton's equation", ok))
    return out


def pmp_oracle(p: ControlProblem, report) -> bool:
    return all(ok for _, ok in pmp_checks(p, report))


# ---------------------------------------------------------------------------
# closed quantum systems


@dataclass
class QuantumControlProblem:
    dimension: int
    mode: str = "brachistochrone"     # brachistochrone | generic
    omega: object = "omega"
    drift: list | None = None         # n x n matrix (generic mode)
    generators: list = field(default_factory=list)
    controls: list = field(default_factory=list)
    running_cost: object = 1
    parameters: list = field(default_factory=list)
    name: str = "quantum"

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("quantum problems need dimension at least 2")
        if self.mode not in ("brachistochrone", "generic"):
            raise ValueError(f"unknown quantum mode {self.mode!r}")
        if self.mode == "brachistochrone":
            w = canonicalize(self.omega)
            if w.is_constant() and w.constant_value() <= 0:
                raise ValueError("omega must be positive")
        if self.mode == "generic" and len(self.generators) != len(self.controls):
            raise ValueError("one generator matrix per control is required")


def qnames(n: int) -> dict:
    """Symbol names of the componentwise quantum objects."""
    r = range(1, n + 1)
    return {
        "psi": [f"psi{i}" for i in r], "psib": [f"psib{i}" for i in r],
        "phi": [f"phi{i}" for i in r], "phib": [f"phib{i}" for i in r],
        "H": [[f"H{i}{j}" for j in r] for i in r],
    }


def _matrix(m, n: int) -> list:
    if m is None:
        return [[ZERO] * n for _ in range(n)]
    return [[canonicalize(m[i][j]) for j in range(n)] for i in range(n)]


def traceless_part(H: list) -> list:
    n = len(H)
    tr = ZERO
    for i in range(n):
        tr = tr + H[i][i]
    shift = tr / n
    return [[H[i][j] - shift if i == j else H[i][j] for j in range(n)] for i in range(n)]


def trace_square_half(H: list) -> RationalForm:
    n = len(H)
    out = ZERO
    for i in range(n):
        for j in range(n):
            out = out + H[i][j] * H[j][i]
    return out / 2


def build_quantum(p: QuantumControlProblem):
    """Componentwise Lagrangian in the holomorphic variables.

    L = F0 - i<phi|psi'> + <phi|H|psi> + i<psi'|phi> + <psi|H|phi>, plus
    Lam (Tr Ht^2 / 2 - omega^2) with Ht the traceless part of H when the
    whole Hamiltonian is the control.
    """
    n = p.dimension
    nm = qnames(n)
    space = PhaseSpace()
    brach = p.mode == "brachistochrone"
    coords = [(s, "coordinate") for s in nm["psi"]] + [(s, "conjugate-coordinate") for s in nm["psib"]]
    if brach:
        coords += [(h, "control") for row in nm["H"] for h in row] + [("Lam", "coordinate")]
    else:
        coords += [(u, "control") for u in p.controls]
    coords += [(s, "coordinate") for s in nm["phi"]] + [(s, "conjugate-coordinate") for s in nm["phib"]]
    momentum = {}
    for s in nm["psi"]:
        momentum[s] = (f"P_{s}", "conjugate-momentum")
    for s in nm["psib"]:
        momentum[s] = (f"P_{s}", "momentum")
    for s in nm["phi"]:
        momentum[s] = (f"pi_{s}", "conjugate-momentum")
    for s in nm["phib"]:
        momentum[s] = (f"pi_{s}", "momentum")
    for name, kind in coords:
        space.add_coordinate(Symbol(name, kind))
        mname, mkind = momentum.get(name, (f"P_{name}" if brach else f"eta_{name}", "momentum"))
        space.add_momentum(name, Symbol(mname, mkind))
    params = list(p.parameters)
    if brach:
        w = canonicalize(p.omega)
        params += sorted(w.free_symbols())
    for k in dict.fromkeys(params):
        if not space.has(k):
            space.add_parameter(Symbol(k, "parameter"))

    if brach:
        H = [[_rf(h) for h in row] for row in nm["H"]]
    else:
        H = _matrix(p.drift, n)
        for u, G in zip(p.controls, p.generators):
            G = _matrix(G, n)
            H = [[H[i][j] + _rf(u) * G[i][j] for j in range(n)] for i in range(n)]
    psi = [_rf(s) for s in nm["psi"]]
    psib = [_rf(s) for s in nm["psib"]]
    phi = [_rf(s) for s in nm["phi"]]
    phib = [_rf(s) for s in nm["phib"]]
    vel = space.velocities
    L = canonicalize(p.running_cost)
    for i in range(n):
        L = L - I * phib[i] * _rf(vel[nm["psi"][i]].name)
        L = L + I * _rf(vel[nm["psib"][i]].name) * phi[i]
        for j in range(n):
            if H[i][j].is_zero():
                continue
            L = L + phib[i] * H[i][j] * psi[j] + psib[i] * H[i][j] * phi[j]
    if brach:
        w = canonicalize(p.omega)
        L = L + _rf("Lam") * (trace_square_half(traceless_part(H)) - w * w)
    return L, space


def quantum_identities(report, n: int, omega="omega") -> dict:
    """Check the operator relations implied by the constraint surface.

    Returns a map from relation name to weak-zero verdict (a list of
    verdicts for matrix relations). ``P`` is the projector built from the
    unnormalized state, so the identities are checked in the homogeneous
    form <psi|psi> Ht = Ht P + P Ht and <psi|psi>^2 (Delta E)^2 = omega^2 <psi|psi>^2.
    """
    nm = qnames(n)
    red = report.reduction
    psi = [_rf(s) for s in nm["psi"]]
    psib = [_rf(s) for s in nm["psib"]]
    H = traceless_part([[_rf(h) for h in row] for row in nm["H"]])
    norm = sum((psib[i] * psi[i] for i in range(n)), ZERO)
    Hpsi = [sum((H[i][j] * psi[j] for j in range(n)), ZERO) for i in range(n)]
    psiH = [sum((psib[i] * H[i][j] for i in range(n)), ZERO) for j in range(n)]
    mean = sum((psib[i] * Hpsi[i] for i in range(n)), ZERO)
    H2 = [[sum((H[i][k] * H[k][j] for k in range(n)), ZERO) for j in range(n)] for i in range(n)]
    mean2 = sum((psib[i] * H2[i][j] * psi[j] for i in range(n) for j in range(n)), ZERO)
    w = canonicalize(omega)

    def wz(e):
        return is_weakly_zero(e, red, report.space)

    rel = []
    for i in range(n):
        for j in range(n):
            # (Ht P + P Ht)_ij * <psi|psi> = Hpsi_i psib_j + psi_i psiH_j
            rel.append(wz(norm * H[i][j] - Hpsi[i] * psib[j] - psi[i] * psiH[j]))
    return {
        "mean_energy_zero": wz(mean),
        "projector_relation": rel,
        "variance_equals_omega_squared": wz(mean2 * norm - mean * mean - w * w * norm * norm),
    }


# ---------------------------------------------------------------------------
# Lindblad


@dataclass
class LindbladControlProblem:
    dimension: int
    lindblad_count: int = 1
    energy_constraint: object = None     # expression in H entries; default Tr H^2 - 2 omega^2
    rates: dict = field(default_factory=dict)   # Lindblad index -> value (symbol gamma<k> otherwise)
    parameters: list = field(default_factory=list)
    name: str = "lindblad"

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError("Lindblad problems need dimension at least 2")
        if self.lindblad_count < 1:
            raise ValueError("at least one Lindblad operator is required")

    def rate(self, a: int) -> RationalForm:
        if a in self.rates:
            return canonicalize(self.rates[a])
        return _rf(f"gamma{a}")


def lnames(N: int, K: int) -> dict:
    r = range(1, N + 1)
    return {
        "rho": [[f"rho{i}{j}" for j in r] for i in r],
        "sigma": [[f"sigma{i}{j}" for j in r] for i in r],
        "H": [[f"H{i}{j}" for j in r] for i in r],
        "L": [[[f"L{a}_{i}{j}" for j in r] for i in r] for a in range(1, K + 1)],
        "Ld": [[[f"Ld{a}_{i}{j}" for j in r] for i in r] for a in range(1, K + 1)],
        "mu": [[f"mu{a}{b}" for b in range(1, K + 1)] for a in range(1, K + 1)],
    }


def _traceless_entries(names: list) -> tuple[list, list]:
    """Matrix with the last diagonal entry eliminated, plus the independent names."""
    N = len(names)
    free = [names[i][j] for i in range(N) for j in range(N) if not (i == j == N - 1)]
    M = [[_rf(names[i][j]) for j in range(N)] for i in range(N)]
    last = ZERO
    for i in range(N - 1):
        last = last - M[i][i]
    M[N - 1][N - 1] = last
    return M, free


def _mm(A, B):
    n = len(A)
    return [[sum((A[i][k] * B[k][j] for k in range(n) if not A[i][k].is_zero() and not B[k][j].is_zero()),
                 ZERO) for j in range(n)] for i in range(n)]


def _madd(A, B, s=ONE_RF):
    return [[a + s * b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def _tr(A):
    return sum((A[i][i] for i in range(len(A))), ZERO)


def lindbladian(H, Ls, Lds, rho):
    """-i[H, rho] + sum_a (L rho Ld - (Ld L rho + rho Ld L) / 2)."""
    out = _madd(_mm(H, rho), _mm(rho, H), -ONE_RF)
    out = [[-I * x for x in row] for row in out]
    half = Fraction(1, 2)
    for L, Ld in zip(Ls, Lds):
        out = _madd(out, _mm(_mm(L, rho), Ld))
        LdL = _mm(Ld, L)
        out = _madd(out, _madd(_mm(LdL, rho), _mm(rho, LdL)), RationalForm.from_fraction(-half))
    return out


def lindblad_matrices(p: LindbladControlProblem):
    N, K = p.dimension, p.lindblad_count
    nm = lnames(N, K)
    rho = [[_rf(s) for s in row] for row in nm["rho"]]
    sigma = [[_rf(s) for s in row] for row in nm["sigma"]]
    H, hfree = _traceless_entries(nm["H"])
    Ls, Lds, lfree = [], [], []
    for a in range(K):
        L, f1 = _traceless_entries(nm["L"][a])
        Ld, f2 = _traceless_entries(nm["Ld"][a])
        Ls.append(L)
        Lds.append(Ld)
        lfree.append((f1, f2))
    return nm, rho, sigma, H, hfree, Ls, Lds, lfree


def energy_function(p: LindbladControlProblem, H) -> RationalForm:
    N = p.dimension
    last = f"H{N}{N}"
    if p.energy_constraint is None:
        return _tr(_mm(H, H)) - 2 * _rf("omega") * _rf("omega")
    f = canonicalize(p.energy_constraint)
    if f.has(last):
        f = f.subs({last: H[N - 1][N - 1]})
    return f


def build_lindblad(p: LindbladControlProblem):
    """L = 1 + Tr[sigma (rho' - Lindbladian(rho))] + lam f(H) + sum mu_ab (Tr(Ld_a L_b) - N gamma_a^2 delta_ab).

    H, L_a and their adjoints are traceless: their last diagonal entry is
    minus the sum of the others, so only the remaining entries are
    coordinates. The momentum conjugate to X_ij is named PX_ji.
    """
    N, K = p.dimension, p.lindblad_count
    nm, rho, sigma, H, hfree, Ls, Lds, lfree = lindblad_matrices(p)
    f = energy_function(p, H)
    allowed = set(hfree) | set(p.parameters) | {"omega"}
    _check_declared(f, allowed, "energy constraint")

    space = PhaseSpace()

    def pair(name: str, kind: str, prefix: str, ij: tuple | None):
        space.add_coordinate(Symbol(name, kind))
        if ij is None:
            mname = f"P{name}"
        else:
            i, j = ij
            mname = f"P{prefix}{j}{i}"
        space.add_momentum(name, Symbol(mname, "momentum"))

    r = range(N)
    for i in r:
        for j in r:
            pair(nm["rho"][i][j], "coordinate", "rho", (i + 1, j + 1))
    for i in r:
        for j in r:
            pair(nm["sigma"][i][j], "coordinate", "sigma", (i + 1, j + 1))
    for h in hfree:
        pair(h, "control", "H", (int(h[1]), int(h[2])))
    space.add_coordinate(Symbol("lam", "coordinate"))
    space.add_momentum("lam", Symbol("Plam", "momentum"))
    for a in range(K):
        for b in range(K):
            pair(nm["mu"][a][b], "coordinate", "mu", (a + 1, b + 1))
    for a in range(K):
        f1, f2 = lfree[a]
        for s in f1:
            i, j = int(s[-2]), int(s[-1])
            pair(s, "control", f"L{a + 1}_", (i, j))
        for s in f2:
            i, j = int(s[-2]), int(s[-1])
            pair(s, "control", f"Ld{a + 1}_", (i, j))
    extra = set(f.free_symbols()) - set(hfree)
    for a in range(1, K + 1):
        extra |= p.rate(a).free_symbols()
    for k in sorted(extra | set(p.parameters)):
        if not space.has(k):
            space.add_parameter(Symbol(k, "parameter"))

    vel = space.velocities
    rho_dot = [[_rf(vel[nm["rho"][i][j]].name) for j in r] for i in r]
    lind = lindbladian(H, Ls, Lds, rho)
    L = ONE_RF
    for i in r:
        for j in r:
            L = L + sigma[i][j] * (rho_dot[j][i] - lind[j][i])
    L = L + _rf("lam") * f
    for a in range(K):
        for b in range(K):
            t = _tr(_mm(Lds[a], Ls[b]))
            if a == b:
                g = p.rate(a + 1)
                t = t - N * g * g
            L = L + _rf(nm["mu"][a][b]) * t
    return L, space
