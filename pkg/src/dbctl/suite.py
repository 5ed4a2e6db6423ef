"""Built-in verification runs over the reference examples.

Each ``verify_*`` function returns a list of :class:`Check` records; the
command line prints them and exits nonzero when any fails.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import reference as ref
from .dsl import parse_problem
from .phasespace import is_weakly_zero, surface_points, weak_reduce
from .report import Analysis, run_analysis
from .simulate import (IntegratorConfig, compile_observables, compile_rhs, conserved_check,
                       cycloid_rate, cycloid_state, integrate, optimal_hamiltonian,
                       quantum_closed_form)
from .symkernel import ZERO, RationalForm, canonicalize, parse

OFFSET_THETA = 0.01
PRESET_STEP = 1e-4


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""
    info: bool = False

    def line(self) -> str:
        tag = "INFO" if self.info else ("PASS" if self.ok else "FAIL")
        return f"{tag}  {self.name}" + (f": {self.detail}" if self.detail else "")


def rf(text: str) -> RationalForm:
    return canonicalize(parse(text))


# ---------------------------------------------------------------------------
# shared numerics


def surface_monitors(analysis: Analysis, evaluator, params: dict):
    """Constraints expressed in the integrated states, with momenta and controls eliminated.

    Only constraints that close over the evaluator's states and ``params``
    are monitored.
    """
    rep = analysis.report
    space = rep.space
    rules = {k: v for k, v in rep.reduction.rules.items()
             if space.kind(k) in ("momentum", "conjugate-momentum", "control")}
    rules.update(rep.optimal_controls)
    known = set(evaluator.names) | set(params)
    exprs = {}
    for c in rep.constraints:
        e = c.expr.subs(rules)
        if e.free_symbols() <= known:
            exprs[c.label] = e
    return compile_observables(exprs, evaluator, params)


def brachistochrone_initial_state(a: float, g: float, theta: float, adjoint=None) -> dict:
    """Offset start on the exact cycloid; ``adjoint`` = (Lam_x3, Lam_x4) adds surface-consistent adjoints."""
    ic = cycloid_state(a, g, theta)
    if adjoint is not None:
        l3, l4 = adjoint
        x2, x4 = ic["x2"], ic["x4"]
        ic.update(Lam_x3=l3, Lam_x4=l4, Lam_x2=l4 * x2 / x4,
                  Lam_x1=(l3 * x2 * x4 + l4 * g * x2) / x4 ** 2)
    return ic


@dataclass
class ClassicalRun:
    trajectory: object
    rms: float
    final_error: float
    theta: np.ndarray


def brachistochrone_run(analysis: Analysis, a: float = 1.0, g: float = 9.8,
                        theta0: float = OFFSET_THETA, theta_final: float = math.pi,
                        step: float = 1e-3, adjoint=None) -> ClassicalRun:
    """Integrate the derived equations of motion from an offset start on the cycloid."""
    states = ["x1", "x2", "x3", "x4"]
    if adjoint is not None:
        states += ["Lam_x1", "Lam_x2", "Lam_x3", "Lam_x4"]
    params = {"g": g}
    ev = compile_rhs(analysis.report.eom, params, states=states)
    cons = surface_monitors(analysis, ev, params) if adjoint is not None else None
    cq = None
    if adjoint is not None:
        rules = {k: v for k, v in analysis.report.reduction.rules.items()
                 if analysis.report.space.kind(k) == "momentum"}
        rules.update(analysis.report.optimal_controls)
        cq = compile_observables({"H_c": analysis.report.canonical_hamiltonian.subs(rules)}, ev, params)
    w = cycloid_rate(a, g)
    T = (theta_final - theta0) / w
    tr = integrate(ev, brachistochrone_initial_state(a, g, theta0, adjoint),
                   IntegratorConfig(T, step), constraints=cons, conserved=cq)
    th = theta0 + w * tr.times
    xo = a * (th - np.sin(th))
    yo = a * (1 - np.cos(th))
    dev = np.hypot(tr.states["x1"] - xo, tr.states["x3"] - yo)
    return ClassicalRun(tr, float(np.sqrt(np.mean(dev ** 2))), float(dev[-1]), th)


@dataclass
class QuantumRun:
    trajectory: object
    max_deviation: float
    norm_drift: float
    variance_drift: float
    variance: float


def quantum_observables(n: int):
    H = [[rf(f"H{i}{j}") for j in range(1, n + 1)] for i in range(1, n + 1)]
    psi = [rf(f"psi{i}") for i in range(1, n + 1)]
    psib = [rf(f"psib{i}") for i in range(1, n + 1)]
    norm = sum((psib[i] * psi[i] for i in range(n)), ZERO)
    mean = sum((psib[i] * H[i][j] * psi[j] for i in range(n) for j in range(n)), ZERO)
    mean2 = sum((psib[i] * H[i][k] * H[k][j] * psi[j]
                 for i in range(n) for j in range(n) for k in range(n)), ZERO)
    return {"norm": norm, "DeltaE2": mean2 / norm - (mean / norm) ** 2}


def quantum_run(analysis: Analysis, psi0, psidot0, omega: float = 1.0, t_final: float = 10.0,
                step: float = 1e-3) -> QuantumRun:
    """Integrate the derived state equation with the constant optimal Hamiltonian."""
    n = len(psi0)
    Hm = optimal_hamiltonian(psi0, psidot0) * 1.0
    params = {f"H{i + 1}{j + 1}": complex(Hm[i, j]) for i in range(n) for j in range(n)}
    params["omega"] = omega
    names = [f"psi{i + 1}" for i in range(n)]
    conj = {f"psib{i + 1}": f"psi{i + 1}" for i in range(n)}
    ev = compile_rhs(analysis.report.eom, params, states=names, complex_state=True)
    cq = compile_observables(quantum_observables(n), ev, params, conj)
    tr = integrate(ev, dict(zip(names, psi0)), IntegratorConfig(t_final, step), conserved=cq)
    Z = np.array([tr.states[f"{s}_re"] + 1j * tr.states[f"{s}_im"] for s in names]).T
    exact = np.array([quantum_closed_form(psi0, psidot0, omega, t) for t in tr.times])
    return QuantumRun(tr, float(np.abs(Z - exact).max()), conserved_check(tr, "norm"),
                      conserved_check(tr, "DeltaE2"), float(np.real(tr.conserved["DeltaE2"][0])))


def dd_inverse_error(analysis: Analysis, points: int = 100, seed: int = 42) -> float:
    """max |D D^-1 - 1| with both matrices evaluated at random constraint-surface points."""
    rep = analysis.report
    keep = rep.d_support
    D = [[rep.d_matrix[i][j] for j in keep] for i in keep]
    inv = rep.d_inverse
    names = sorted(set().union(*(x.free_symbols() for m in (D, inv) for row in m for x in row)))
    pts = surface_points(rep.reduction, names, points, np.random.default_rng(seed))
    n = len(D)
    worst = 0.0
    for pt in pts:
        Dn = np.array([[complex(x.evaluate(pt)) for x in row] for row in D])
        In = np.array([[complex(x.evaluate(pt)) for x in row] for row in inv])
        worst = max(worst, float(np.abs(Dn @ In - np.eye(n)).max()))
    return worst


def proportional(a: RationalForm, b: RationalForm) -> RationalForm | None:
    """a / b when it is a nonzero constant, else None."""
    if b.is_zero():
        return None
    q = a / b
    return q if q.is_constant() and not q.is_zero() else None


# ---------------------------------------------------------------------------
# suites


def verify_brachistochrone(step: float = PRESET_STEP) -> list[Check]:
    t0 = time.perf_counter()
    a = run_analysis(parse_problem(ref.BRACHISTOCHRONE))
    rep = a.report
    red = rep.reduction
    out = []
    u = rep.optimal_controls.get("u")
    out.append(Check("optimal control", u is not None and u == rf(ref.U_STAR), f"u* = {u}"))
    lu = rep.multipliers.get("lambda_u")
    out.append(Check("control multiplier", lu is not None and lu == rf(ref.LAMBDA_U), f"lambda_u = {lu}"))
    secs = [c for c in rep.constraints if c.origin == "secondary"]
    facs = [proportional(c.expr, rf(s)) for c, s in zip(secs, ref.SECONDARIES)]
    out.append(Check("secondary constraints", len(secs) == 3 and all(f is not None for f in facs),
                     "factors " + ", ".join(str(f) for f in facs)))
    D = rep.d_matrix
    bad = [(i + 1, j + 1) for i in range(12) for j in range(12)
           if not weak_reduce(D[i][j] - rf(ref.D_ENTRIES.get((i + 1, j + 1), "0")), red).is_zero()]
    out.append(Check("bracket matrix", len(D) == 12 and not bad,
                     "all 144 entries agree" if not bad else f"differs at {bad}"))
    err = dd_inverse_error(a)
    out.append(Check("inverse bracket matrix", err < 1e-9, f"max |D D^-1 - 1| = {err:.2e} at 100 surface points"))
    wrong = [k for k, v in ref.EOM.items() if not is_weakly_zero(rep.eom[k] - rf(v), red, rep.space)]
    out.append(Check("equations of motion", not wrong, "weakly equal" if not wrong else f"differ: {wrong}"))
    out.append(Check("weak Pontryagin conditions", bool(a.pmp_ok)))
    run = brachistochrone_run(a, step=step)
    out.append(Check("cycloid trajectory", run.rms < 1e-6,
                     f"RMS {run.rms:.2e} over theta in [{OFFSET_THETA}, pi], step {step:g}"))
    run2 = brachistochrone_run(a, step=step, theta_final=3.0, adjoint=(-0.3, 1.0))
    res = max(run2.trajectory.residuals.values())
    out.append(Check("constraint residuals", res < 1e-6, f"max {res:.2e} up to theta = 3, step {step:g}"))
    out.append(Check("runtime", True, f"{time.perf_counter() - t0:.1f} s", info=True))
    return out


def verify_quantum() -> list[Check]:
    t0 = time.perf_counter()
    a = run_analysis(parse_problem(ref.QUANTUM))
    rep = a.report
    out = []
    prim = [c for c in rep.constraints if c.origin == "primary"]
    sec = [c for c in rep.constraints if c.origin == "secondary"]
    out.append(Check("constraint chain", rep.generations >= 1 and len(sec) == 5 and len(prim) == 13,
                     f"{len(prim)} primary and {len(sec)} secondary components"))
    out.append(Check("second-class", all(c.klass == "second" for c in rep.constraints)))
    for k, v in a.identities.items():
        out.append(Check(k.replace("_", " "), v))
    psi0 = np.array([1, 0], dtype=complex)
    v0 = np.array([0, -1j])
    q = quantum_run(a, psi0, v0, 1.0, 10.0, 1e-3)
    out.append(Check("closed-form trajectory", q.max_deviation < 1e-6, f"max deviation {q.max_deviation:.2e} to t = 10"))
    out.append(Check("energy variance conserved", q.variance_drift < 1e-8, f"drift {q.variance_drift:.2e}"))
    out.append(Check("norm conserved", q.norm_drift < 1e-8, f"drift {q.norm_drift:.2e}"))
    out.append(Check("runtime", True, f"{time.perf_counter() - t0:.1f} s", info=True))
    return out


def verify_lindblad() -> list[Check]:
    t0 = time.perf_counter()
    a = run_analysis(parse_problem(ref.LINDBLAD))
    rep = a.report
    out = []
    sec = [c for c in rep.constraints if c.origin == "secondary"]
    energy = rf("2*H11^2 + 2*H12*H21 - 2*omega^2")
    out.append(Check("energy constraint derived", any(proportional(c.expr, energy) for c in sec)))
    norm = rf("Ld1_11*L1_11*2 + Ld1_12*L1_21 + Ld1_21*L1_12 - 2*gamma1^2")
    out.append(Check("orthonormality constraint derived", any(proportional(c.expr, norm) for c in sec)))
    st = rep.multiplier_status
    for group in ("lambda_rho", "lambda_sigma"):
        names = [k for k in st if k.startswith(group)]
        out.append(Check(f"{group}* fixed", bool(names) and all(st[k] == "fixed" for k in names)))
    free = sorted(k for k, v in st.items() if v == "free")
    out.append(Check("multiplier analysis", True, "free: " + ", ".join(free) if free else "none free", info=True))
    out.append(Check("runtime", True, f"{time.perf_counter() - t0:.1f} s", info=True))
    return out


SUITES = {"brachistochrone": verify_brachistochrone, "quantum": verify_quantum,
          "lindblad": verify_lindblad}
