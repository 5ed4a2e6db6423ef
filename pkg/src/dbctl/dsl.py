"""Line-oriented problem files.

    problem brachistochrone
    kind classical
    param g
    state x1 x2 x3 x4
    control u
    dynamics
      x1' = x2
      x4' = g - u*x2/x4
    cost 1
    assume x4 != 0

Quantum files add ``dimension`` and ``omega``; Lindblad files add
``dimension``, ``lindblads``, ``f_H`` and ``gamma <k> = <expr>``. ``#``
starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .ocp import ControlProblem, LindbladControlProblem, QuantumControlProblem, lnames, qnames
from .symkernel import Assumption, ParseError, RationalForm, canonicalize, parse

KINDS = ("classical", "quantum", "lindblad")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*$")
_DYN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)'\s*=\s*(.*)$")


class ProblemSyntaxError(ValueError):
    def __init__(self, message: str, line: int, column: int = 1):
        self.line, self.column = line, column
        super().__init__(f"line {line}, column {column}: {message}")


class ProblemDefinitionError(ValueError):
    pass


@dataclass
class ProblemFile:
    name: str = "problem"
    kind: str = "classical"
    params: list = field(default_factory=list)
    states: list = field(default_factory=list)
    controls: list = field(default_factory=list)
    dynamics: dict = field(default_factory=dict)      # state -> RationalForm
    cost: RationalForm = field(default_factory=lambda: canonicalize(1))
    assumptions: list = field(default_factory=list)   # RationalForm, each != 0
    dimension: int | None = None
    omega: RationalForm | None = None
    lindblads: int | None = None
    f_H: RationalForm | None = None
    gammas: dict = field(default_factory=dict)        # index -> RationalForm

    def key(self) -> tuple:
        """Everything that defines the problem, in comparable form."""
        return (self.name, self.kind, tuple(self.params), tuple(self.states),
                tuple(self.controls), tuple(sorted(self.dynamics.items())), self.cost,
                tuple(self.assumptions), self.dimension, self.omega, self.lindblads, self.f_H,
                tuple(sorted(self.gammas.items())))

    def __eq__(self, other) -> bool:
        return isinstance(other, ProblemFile) and self.key() == other.key()


def _expr(text: str, line: int, col: int) -> RationalForm:
    try:
        return canonicalize(parse(text))
    except ParseError as exc:
        raise ProblemSyntaxError(str(exc).split(": ", 1)[-1], line,
                                 col + _char_index(text, exc.offset)) from None


def _char_index(text: str, byte_offset: int) -> int:
    raw = text.encode()[:byte_offset]
    return len(raw.decode(errors="ignore"))


def _names(rest: str, line: int, col: int) -> list:
    out = rest.split()
    for n in out:
        if not _IDENT.match(n):
            raise ProblemSyntaxError(f"invalid name {n!r}", line, col + rest.index(n))
    return out


def _int(rest: str, what: str, line: int, col: int) -> int:
    try:
        v = int(rest)
    except ValueError:
        raise ProblemSyntaxError(f"{what} must be an integer, found {rest!r}", line, col) from None
    return v


def parse_problem(text: str) -> ProblemFile:
    """Parse a problem file and check that every symbol is declared."""
    pf = ProblemFile()
    in_dynamics = False
    seen_kind = False
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        m = _DYN.match(line)
        if m and in_dynamics:
            x, rhs = m.group(1), m.group(2)
            if x in pf.dynamics:
                raise ProblemSyntaxError(f"state {x}: duplicate dynamics", ln, line.index(x) + 1)
            if not rhs.strip():
                raise ProblemSyntaxError("missing right-hand side", ln, len(line) + 1)
            pf.dynamics[x] = _expr(rhs, ln, m.start(2) + 1)
            continue
        in_dynamics = False
        stripped = line.lstrip()
        col0 = len(line) - len(stripped) + 1
        word, _, rest = stripped.partition(" ")
        rest_col = col0 + len(word) + 1 + (len(rest) - len(rest.lstrip()))
        rest = rest.strip()
        if word == "problem":
            if not rest:
                raise ProblemSyntaxError("problem needs a name", ln, rest_col)
            pf.name = rest
        elif word == "kind":
            if rest not in KINDS:
                raise ProblemSyntaxError(f"unknown kind {rest!r}; expected one of {', '.join(KINDS)}",
                                         ln, rest_col)
            pf.kind = rest
            seen_kind = True
        elif word == "param":
            pf.params += _names(rest, ln, rest_col)
        elif word == "state":
            pf.states += _names(rest, ln, rest_col)
        elif word == "control":
            pf.controls += _names(rest, ln, rest_col)
        elif word == "dynamics":
            if rest:
                raise ProblemSyntaxError("dynamics lines go on the following lines", ln, rest_col)
            in_dynamics = True
        elif word == "cost":
            pf.cost = _expr(rest, ln, rest_col)
        elif word == "assume":
            lhs, sep, rhs = rest.partition("!=")
            if not sep or rhs.strip() != "0":
                raise ProblemSyntaxError("assume lines read '<expr> != 0'", ln, rest_col)
            pf.assumptions.append(_expr(lhs, ln, rest_col))
        elif word == "dimension":
            pf.dimension = _int(rest, "dimension", ln, rest_col)
        elif word == "omega":
            pf.omega = _expr(rest, ln, rest_col)
        elif word == "lindblads":
            pf.lindblads = _int(rest, "lindblads", ln, rest_col)
        elif word == "f_H":
            pf.f_H = _expr(rest, ln, rest_col)
        elif word == "gamma":
            k, sep, val = rest.partition("=")
            if not sep:
                raise ProblemSyntaxError("gamma lines read 'gamma <index> = <expr>'", ln, rest_col)
            idx = _int(k.strip(), "gamma index", ln, rest_col)
            pf.gammas[idx] = _expr(val, ln, rest_col + rest.index("=") + 1)
        elif m:
            raise ProblemSyntaxError("dynamics line outside a dynamics block", ln, col0)
        else:
            raise ProblemSyntaxError(f"unknown directive {word!r}", ln, col0)
    if not seen_kind:
        pf.kind = "classical"
    validate(pf)
    return pf


def _declared(pf: ProblemFile) -> set:
    if pf.kind == "classical":
        return set(pf.params) | set(pf.states) | set(pf.controls)
    if pf.kind == "quantum":
        n = pf.dimension or 0
        return set(pf.params) | {h for row in qnames(n)["H"] for h in row} if n else set(pf.params)
    n, k = pf.dimension or 0, pf.lindblads or 1
    return set(pf.params) | ({h for row in lnames(n, k)["H"] for h in row} if n else set())


def validate(pf: ProblemFile) -> None:
    def check(e: RationalForm, where: str, allowed: set):
        extra = sorted(e.free_symbols() - allowed)
        if extra:
            raise ProblemDefinitionError(f"{where}: undeclared symbol {extra[0]}")

    allowed = _declared(pf)
    names = pf.params + pf.states + pf.controls
    dup = sorted({n for n in names if names.count(n) > 1})
    if dup:
        raise ProblemDefinitionError(f"symbol {dup[0]} declared twice")
    if pf.kind == "classical":
        if not pf.states:
            raise ProblemDefinitionError("no state declared")
        for x in pf.states:
            if x not in pf.dynamics:
                raise ProblemDefinitionError(f"state {x}: no dynamics")
        for x, rhs in pf.dynamics.items():
            if x not in pf.states:
                raise ProblemDefinitionError(f"dynamics for undeclared state {x}")
            check(rhs, f"dynamics of {x}", allowed)
        check(pf.cost, "cost", allowed)
    else:
        if pf.dimension is None:
            raise ProblemDefinitionError(f"{pf.kind} problems need a dimension line")
        if pf.dimension < 2:
            raise ProblemDefinitionError("dimension must be at least 2")
        if pf.states or pf.dynamics:
            raise ProblemDefinitionError(f"{pf.kind} problems take no state or dynamics lines")
    if pf.kind == "quantum":
        if pf.omega is None:
            raise ProblemDefinitionError("quantum problems need an omega line")
        check(pf.omega, "omega", set(pf.params))
        if pf.omega.is_constant() and pf.omega.constant_value() <= 0:
            raise ProblemDefinitionError("omega must be positive")
        check(pf.cost, "cost", allowed)
    if pf.kind == "lindblad":
        if pf.lindblads is not None and pf.lindblads < 1:
            raise ProblemDefinitionError("lindblads must be at least 1")
        if pf.f_H is not None:
            check(pf.f_H, "f_H", allowed)
        for k, g in pf.gammas.items():
            if not 1 <= k <= (pf.lindblads or 1):
                raise ProblemDefinitionError(f"gamma index {k} out of range")
            check(g, f"gamma {k}", set(pf.params))
    for a in pf.assumptions:
        check(a, "assume", allowed | set(pf.params))


def format_problem(pf: ProblemFile) -> str:
    """Pretty-print ``pf`` so that ``parse_problem`` reads it back unchanged."""
    out = [f"problem {pf.name}", f"kind {pf.kind}"]
    if pf.params:
        out.append("param " + " ".join(pf.params))
    if pf.dimension is not None:
        out.append(f"dimension {pf.dimension}")
    if pf.omega is not None:
        out.append(f"omega {pf.omega}")
    if pf.lindblads is not None:
        out.append(f"lindblads {pf.lindblads}")
    if pf.f_H is not None:
        out.append(f"f_H {pf.f_H}")
    for k in sorted(pf.gammas):
        out.append(f"gamma {k} = {pf.gammas[k]}")
    if pf.states:
        out.append("state " + " ".join(pf.states))
    if pf.controls:
        out.append("control " + " ".join(pf.controls))
    if pf.dynamics:
        out.append("dynamics")
        for x in pf.states:
            out.append(f"  {x}' = {pf.dynamics[x]}")
    out.append(f"cost {pf.cost}")
    for a in pf.assumptions:
        out.append(f"assume {a} != 0")
    return "\n".join(out) + "\n"


def to_problem(pf: ProblemFile):
    """Builder input for the problem kind."""
    if pf.kind == "classical":
        return ControlProblem(states=list(pf.states), dynamics=dict(pf.dynamics),
                              controls=list(pf.controls), running_cost=pf.cost,
                              parameters=list(pf.params),
                              assumptions=[Assumption(a) for a in pf.assumptions], name=pf.name)
    if pf.kind == "quantum":
        return QuantumControlProblem(pf.dimension, omega=pf.omega, running_cost=pf.cost,
                                     parameters=list(pf.params), name=pf.name)
    return LindbladControlProblem(pf.dimension, pf.lindblads or 1, energy_constraint=pf.f_H,
                                  rates=dict(pf.gammas), parameters=list(pf.params), name=pf.name)
