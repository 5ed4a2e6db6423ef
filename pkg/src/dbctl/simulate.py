"""Numeric evaluation and fixed-step integration of derived equations of motion.

Expressions are compiled to straight-line Python code once; the integrator
is classical RK4 on a real state vector. Complex states are stored as
interleaved (real, imaginary) pairs so one integrator serves both real and
holomorphic systems.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .symkernel import RationalForm, canonicalize
from .symkernel.expr import _name
from .symkernel.poly import IMAG, Poly

SINGULARITY_FLOOR = 1e-9


class UnboundParameterError(ValueError):
    pass


class SingularityError(ArithmeticError):
    def __init__(self, message: str, t: float | None = None):
        self.t = t
        if t is not None:
            message = f"{message} at t = {t:.17g}"
        super().__init__(message)


class InvalidInitialData(ValueError):
    pass


# ---------------------------------------------------------------------------
# code generation


def _poly_source(p: Poly, slot: Mapping[str, str]) -> str:
    if p.is_zero():
        return "0.0"
    terms = []
    for mono, c in p.terms.items():
        factors = []
        for v, e in mono:
            base = "1j" if v == IMAG else slot[v]
            factors.append(base if e == 1 else f"{base}**{e}")
        if not factors:
            terms.append(repr(float(c)) if abs(c) < 1 << 53 else repr(c))
        elif c == 1:
            terms.append("*".join(factors))
        elif c == -1:
            terms.append("-" + "*".join(factors))
        else:
            terms.append(f"{c}*" + "*".join(factors))
    return "(" + " + ".join(terms) + ")"


class _Compiled:
    """Straight-line evaluator of several rational functions at once."""

    def __init__(self, exprs: Sequence[RationalForm], states: Sequence[str],
                 params: Mapping[str, complex], conjugates: Mapping[str, str] | None = None):
        conjugates = dict(conjugates or {})
        index = {s: k for k, s in enumerate(states)}
        slot = {}
        lines = []
        for k, s in enumerate(states):
            slot[s] = f"s{k}"
            lines.append(f"    s{k} = y[{k}]")
        for c, s in conjugates.items():
            if s not in index:
                raise ValueError(f"conjugate {c} refers to unknown state {s}")
            slot[c] = f"c_{len(slot)}"
            lines.append(f"    {slot[c]} = y[{index[s]}].conjugate()")
        consts = {}
        for name, v in params.items():
            slot.setdefault(name, f"q_{len(consts)}")
            consts[slot[name]] = v
        needed = set()
        for e in exprs:
            needed |= e.free_symbols()
        missing = sorted(needed - set(slot))
        if missing:
            raise UnboundParameterError(f"unbound parameter {missing[0]}")
        out = []
        for k, e in enumerate(exprs):
            num = _poly_source(e.num, slot)
            if e.den.is_one():
                out.append(num)
                continue
            lines.append(f"    d{k} = {_poly_source(e.den, slot)}")
            lines.append(f"    if abs(d{k}) < FLOOR: raise SingularityError('denominator magnitude below 1e-9 in {e.den}')")
            out.append(f"{num} / d{k}")
        lines.append("    return (" + ", ".join(out) + ("," if len(out) == 1 else "") + ")")
        src = "def _f(y):\n" + "\n".join(lines) + "\n"
        env = {"SingularityError": SingularityError, "FLOOR": SINGULARITY_FLOOR, **consts}
        exec(compile(src, "<dbctl-compiled>", "exec"), env)
        self.source = src
        self.fn: Callable = env["_f"]

    def __call__(self, y):
        return self.fn(y)


def _bindings(params: Mapping | None) -> dict:
    out = {}
    for k, v in (params or {}).items():
        v = complex(v) if isinstance(v, complex) else float(v)
        out[_name(k)] = v
    return out


@dataclass(frozen=True)
class Evaluator:
    """State vector to derivative vector.

    ``names`` orders the state symbols. With ``complex_state`` the vector
    holds interleaved real and imaginary parts, twice as long as ``names``.
    """
    names: tuple
    complex_state: bool
    _impl: _Compiled = field(repr=False, compare=False)

    @property
    def size(self) -> int:
        return len(self.names) * (2 if self.complex_state else 1)

    def pack(self, values: Mapping) -> np.ndarray:
        vals = [values[n] for n in self.names]
        if not self.complex_state:
            return np.array([float(v) for v in vals], dtype=float)
        out = np.empty(2 * len(vals))
        z = np.array(vals, dtype=complex)
        out[0::2], out[1::2] = z.real, z.imag
        return out

    def unpack(self, y: np.ndarray):
        if self.complex_state:
            return y[0::2] + 1j * y[1::2]
        return y

    def __call__(self, y: np.ndarray) -> np.ndarray:
        z = self.unpack(np.asarray(y, dtype=float))
        d = self._impl([complex(v) for v in z] if self.complex_state else [float(v) for v in z])
        if self.complex_state:
            out = np.empty(2 * len(d))
            dz = np.array(d, dtype=complex)
            out[0::2], out[1::2] = dz.real, dz.imag
            return out
        return np.array([complex(v).real if isinstance(v, complex) else v for v in d], dtype=float)

    def columns(self) -> list[str]:
        if not self.complex_state:
            return list(self.names)
        return [f"{n}_{part}" for n in self.names for part in ("re", "im")]


def compile_rhs(eom: Mapping, params: Mapping | None = None, *, states: Sequence | None = None,
                complex_state: bool = False, conjugates: Mapping[str, str] | None = None) -> Evaluator:
    """Compile ``eom`` (state symbol -> time derivative) into an Evaluator.

    Every symbol in the right-hand sides must be a state, a key of
    ``params``, or a key of ``conjugates`` (a symbol evaluated as the
    complex conjugate of the named state).
    """
    names = tuple(_name(s) for s in (states if states is not None else eom))
    exprs = [canonicalize(eom[n]) for n in names]
    impl = _Compiled(exprs, names, _bindings(params), conjugates)
    return Evaluator(names, complex_state, impl)


@dataclass(frozen=True)
class Observables:
    """Scalar functions of the state, compiled against an Evaluator's layout."""
    labels: tuple
    _impl: _Compiled = field(repr=False, compare=False)
    complex_state: bool = False

    def __call__(self, z) -> np.ndarray:
        vals = self._impl([complex(v) for v in z] if self.complex_state else [float(v) for v in z])
        return np.array(vals, dtype=complex if self.complex_state else float)


def compile_observables(exprs: Mapping, evaluator: Evaluator, params: Mapping | None = None,
                        conjugates: Mapping[str, str] | None = None) -> Observables:
    labels = tuple(exprs)
    forms = [canonicalize(exprs[k]) for k in labels]
    impl = _Compiled(forms, evaluator.names, _bindings(params), conjugates)
    return Observables(labels, impl, evaluator.complex_state)


# ---------------------------------------------------------------------------
# integration


@dataclass(frozen=True)
class IntegratorConfig:
    t_final: float
    step: float = 1e-3
    scheme: str = "rk4"
    residual_tolerance: float = 1e-6

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError("step must be positive")
        if not self.t_final >= 0:
            raise ValueError("t_final must be non-negative")
        if self.scheme != "rk4":
            raise ValueError(f"unsupported scheme {self.scheme!r}; only fixed-step rk4 is available")


@dataclass
class Trajectory:
    times: np.ndarray
    states: dict                     # column name -> series
    residuals: dict = field(default_factory=dict)        # constraint label -> max |value|
    residual_max: np.ndarray | None = None               # per-sample max over constraints
    conserved: dict = field(default_factory=dict)        # quantity name -> series
    residual_tolerance: float = 1e-6

    @property
    def residuals_ok(self) -> bool:
        return all(v <= self.residual_tolerance for v in self.residuals.values())

    def final(self) -> dict:
        return {k: v[-1] for k, v in self.states.items()}

    def to_csv(self, path_or_file) -> None:
        cols = list(self.states)
        header = ["t"] + cols + ["residual_max"] + list(self.conserved)
        res = self.residual_max if self.residual_max is not None else np.zeros_like(self.times)
        rows = []
        for k, t in enumerate(self.times):
            row = [t] + [self.states[c][k] for c in cols] + [res[k]]
            row += [self.conserved[q][k] for q in self.conserved]
            rows.append([_fmt(v) for v in row])
        if hasattr(path_or_file, "write"):
            _write(path_or_file, header, rows)
        else:
            with open(path_or_file, "w", newline="") as fh:
                _write(fh, header, rows)


def _fmt(v) -> str:
    return f"{float(np.real(v)):.17g}"


def _write(fh, header, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)


def _rk4_step(f, y, h):
    k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(evaluator: Evaluator, ic, config: IntegratorConfig, *,
              constraints: Observables | None = None,
              conserved: Observables | None = None) -> Trajectory:
    """Fixed-step RK4 from t = 0 to ``config.t_final``.

    ``ic`` is a mapping from state names or an already packed vector.
    Constraint residuals and conserved quantities are evaluated at every
    sample. A denominator smaller than 1e-9 aborts with SingularityError
    carrying the time of the failing step.
    """
    y = evaluator.pack(ic) if isinstance(ic, Mapping) else np.asarray(ic, dtype=float).copy()
    if y.shape != (evaluator.size,):
        raise ValueError(f"initial state has {y.size} components, expected {evaluator.size}")
    if not np.all(np.isfinite(y)):
        raise ValueError("initial state is not finite")
    n = int(math.floor(config.t_final / config.step + 1e-9))
    times = [0.0]
    hs = [config.step] * n
    rest = config.t_final - n * config.step
    if rest > 1e-12 * max(1.0, config.t_final):
        hs.append(rest)
    ys = [y]
    t = 0.0
    for h in hs:
        try:
            y = _rk4_step(evaluator, y, h)
        except SingularityError as exc:
            raise SingularityError(str(exc).split(" at t = ")[0], t) from None
        if not np.all(np.isfinite(y)):
            raise SingularityError("state left the finite range", t)
        t += h
        times.append(t)
        ys.append(y)
    times_arr = np.array(times)
    if hs:
        times_arr[-1] = config.t_final
    Y = np.array(ys)
    Z = Y[:, 0::2] + 1j * Y[:, 1::2] if evaluator.complex_state else Y
    cols = evaluator.columns()
    states = {c: Y[:, k] for k, c in enumerate(cols)}
    traj = Trajectory(times_arr, states, residual_tolerance=config.residual_tolerance)
    if constraints is not None and constraints.labels:
        R = np.abs(np.array([constraints(z) for z in Z]))
        traj.residuals = {lab: float(R[:, k].max()) for k, lab in enumerate(constraints.labels)}
        traj.residual_max = R.max(axis=1)
    if conserved is not None:
        Q = np.array([conserved(z) for z in Z])
        for k, lab in enumerate(conserved.labels):
            col = Q[:, k]
            traj.conserved[lab] = col.real if np.iscomplexobj(col) and np.allclose(col.imag, 0, atol=1e-9) else col
    return traj


def conserved_check(traj: Trajectory, quantity) -> float:
    """Largest deviation of a conserved quantity from its initial value.

    ``quantity`` is the name of a monitored series or an explicit array.
    """
    q = traj.conserved[quantity] if isinstance(quantity, str) else np.asarray(quantity)
    return float(np.max(np.abs(q - q[0]))) if len(q) else 0.0


# ---------------------------------------------------------------------------
# closed-form references


def cycloid_oracle(a: float, g: float, theta: float) -> tuple[float, float]:
    """Point of the cycloid generated by a circle of radius ``a`` at phase ``theta``.

    ``g`` does not change the curve; it only sets the time scale (see
    :func:`cycloid_rate`).
    """
    if not a > 0:
        raise ValueError("cycloid radius must be positive")
    return a * (theta - math.sin(theta)), a * (1.0 - math.cos(theta))


def cycloid_rate(a: float, g: float) -> float:
    """d theta / dt along the time-optimal descent: 2g / sqrt(4 g a)."""
    return 2.0 * g / math.sqrt(4.0 * g * a)


def cycloid_state(a: float, g: float, theta: float) -> dict:
    """Positions and velocities (x1, x2, x3, x4) on the optimal cycloid."""
    x, y = cycloid_oracle(a, g, theta)
    k = math.sqrt(4.0 * g * a) / 2.0
    return {"x1": x, "x2": k * (1.0 - math.cos(theta)), "x3": y, "x4": k * math.sin(theta)}


def quantum_closed_form(psi0, psidot0, omega: float, t: float, tol: float = 1e-10) -> np.ndarray:
    """cos(wt) psi0 + sin(wt)/w psidot0, valid when psidot0 is orthogonal to psi0 with norm w."""
    psi0 = np.asarray(psi0, dtype=complex)
    psidot0 = np.asarray(psidot0, dtype=complex)
    if abs(np.vdot(psidot0, psi0)) > tol:
        raise InvalidInitialData("initial velocity is not orthogonal to the initial state")
    if abs(np.linalg.norm(psidot0) - omega) > tol:
        raise InvalidInitialData("initial velocity norm differs from omega")
    return math.cos(omega * t) * psi0 + (math.sin(omega * t) / omega) * psidot0


def optimal_hamiltonian(psi0, psidot0) -> np.ndarray:
    """Constant generator i(|v><p| - |p><v|) that moves a unit state p with velocity v."""
    p = np.asarray(psi0, dtype=complex).reshape(-1, 1)
    v = np.asarray(psidot0, dtype=complex).reshape(-1, 1)
    return 1j * (v @ p.conj().T - p @ v.conj().T)
