"""Command line: analyze, simulate and verify.

Exit status is 0 on success, 1 on a domain error (bad problem file,
failing check, singular trajectory) and 2 on a usage error.
"""

from __future__ import annotations

import argparse
import math
import sys

from .dsl import ProblemDefinitionError, ProblemSyntaxError, parse_problem
from .report import dumps, format_text, run_analysis
from .simulate import (IntegratorConfig, SingularityError, UnboundParameterError,
                       compile_observables, compile_rhs, cycloid_oracle, cycloid_rate, integrate)
from .suite import (OFFSET_THETA, PRESET_STEP, SUITES, brachistochrone_initial_state,
                    quantum_observables, surface_monitors)


class DomainError(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DomainError(f"cannot read {path}: {exc.strerror or exc}") from None


def _load(path: str):
    try:
        return parse_problem(_read(path))
    except ProblemSyntaxError as exc:
        raise DomainError(f"{path}: {exc}") from None
    except ProblemDefinitionError as exc:
        raise DomainError(str(exc)) from None


def _number(text: str):
    t = text.strip().replace(" ", "")
    try:
        return float(t)
    except ValueError:
        pass
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise DomainError(f"not a number: {text!r}") from None


def _pairs(spec: str | None) -> dict:
    out = {}
    if not spec:
        return out
    for item in spec.split(","):
        if not item.strip():
            continue
        k, sep, v = item.partition("=")
        if not sep:
            raise DomainError(f"expected name=value, found {item!r}")
        out[k.strip()] = _number(v)
    return out


def cmd_analyze(args) -> int:
    pf = _load(args.file)
    a = run_analysis(pf)
    if args.json == "-":
        sys.stdout.write(dumps(a))
        return 0
    sys.stdout.write(format_text(a))
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            fh.write(dumps(a))
    return 0


def _classical_setup(a, args, params, ic):
    rep = a.report
    if args.preset == "offset-start":
        if set(a.problem.states) != {"x1", "x2", "x3", "x4"} or "g" not in params:
            raise DomainError("the offset-start preset needs states x1..x4 and --param g=<value>")
        scale = float(params.pop("a", 1.0))
        g = float(params["g"])
        start = brachistochrone_initial_state(scale, g, OFFSET_THETA)
        start.update(ic)
        ic = start
        if args.t_final is None:
            args.t_final = (math.pi - OFFSET_THETA) / cycloid_rate(scale, g)
        if args.dt is None:
            args.dt = PRESET_STEP
        args.oracle = (scale, g)
    order = [s.name for s in rep.space.coordinates() if s.name in ic]
    unknown = sorted(set(ic) - set(order))
    if unknown:
        raise DomainError(f"initial value for unknown state {unknown[0]}")
    ev = compile_rhs(rep.eom, params, states=order)
    cons = surface_monitors(a, ev, params)
    conserved = None
    rules = {k: v for k, v in rep.reduction.rules.items() if rep.space.kind(k) == "momentum"}
    rules.update(rep.optimal_controls)
    hc = rep.canonical_hamiltonian.subs(rules)
    if hc.free_symbols() <= set(order) | set(params):
        conserved = compile_observables({"H_c": hc}, ev, params)
    return ev, ic, cons, conserved


def _quantum_setup(a, args, params, ic):
    n = a.problem.dimension
    order = [f"psi{i}" for i in range(1, n + 1)]
    missing = [s for s in order if s not in ic]
    if missing:
        raise DomainError(f"missing initial value for {missing[0]}")
    extra = sorted(set(ic) - set(order))
    if extra:
        raise DomainError(f"initial value for unknown state {extra[0]}")
    conj = {f"psib{i}": f"psi{i}" for i in range(1, n + 1)}
    ev = compile_rhs(a.report.eom, params, states=order, complex_state=True)
    conserved = compile_observables(quantum_observables(n), ev, params, conj)
    return ev, ic, None, conserved


def cmd_simulate(args) -> int:
    pf = _load(args.file)
    if pf.kind == "lindblad":
        raise DomainError("Lindblad analysis stops at the constraint chain; there is nothing to integrate")
    if args.preset and pf.kind != "classical":
        raise DomainError("the offset-start preset applies to classical problems")
    a = run_analysis(pf)
    params = _pairs(args.param)
    ic = _pairs(args.ic)
    args.oracle = None
    try:
        setup = _classical_setup if pf.kind == "classical" else _quantum_setup
        ev, ic, cons, conserved = setup(a, args, params, ic)
    except UnboundParameterError as exc:
        raise DomainError(f"{exc}; bind it with --param") from None
    if args.t_final is None:
        raise DomainError("--t-final is required")
    try:
        cfg = IntegratorConfig(args.t_final, args.dt if args.dt is not None else 1e-3)
    except ValueError as exc:
        raise DomainError(str(exc)) from None
    try:
        tr = integrate(ev, ic, cfg, constraints=cons, conserved=conserved)
    except SingularityError as exc:
        raise DomainError(f"integration aborted: {exc}") from None
    if args.out:
        tr.to_csv(args.out)
    else:
        tr.to_csv(sys.stdout)
    msg = f"integrated {len(tr.times) - 1} steps to t = {tr.times[-1]:.6g}"
    if tr.residuals:
        msg += f"; max constraint residual {max(tr.residuals.values()):.2e}"
    if args.oracle:
        scale, g = args.oracle
        th = OFFSET_THETA + cycloid_rate(scale, g) * tr.times[-1]
        x, y = cycloid_oracle(scale, g, th)
        dev = math.hypot(tr.states["x1"][-1] - x, tr.states["x3"][-1] - y)
        msg += f"; final deviation from the cycloid {dev:.2e}"
    print(msg, file=sys.stderr)
    return 0


def cmd_verify(args) -> int:
    names = list(SUITES) if args.example == "all" else [args.example]
    failed = 0
    for name in names:
        print(f"== {name}")
        for c in SUITES[name]():
            print(c.line())
            failed += not (c.ok or c.info)
    print(f"{'all checks passed' if not failed else f'{failed} check(s) failed'}")
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dbctl", description=(
        "Derive optimal controls and equations of motion by constrained Hamiltonian analysis."))
    sub = p.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="derive the constraint chain, controls and dynamics")
    an.add_argument("file")
    an.add_argument("--json", metavar="OUT", help="write the JSON report to OUT ('-' for stdout)")
    an.set_defaults(func=cmd_analyze)

    si = sub.add_parser("simulate", help="integrate the derived equations of motion")
    si.add_argument("file")
    si.add_argument("--ic", help="initial values, name=value,...")
    si.add_argument("--param", help="parameter values, name=value,...")
    si.add_argument("--t-final", type=float, dest="t_final")
    si.add_argument("--dt", type=float)
    si.add_argument("--out", help="CSV output path (default stdout)")
    si.add_argument("--preset", choices=["offset-start"],
                    help="start on the exact cycloid slightly past the singular origin")
    si.set_defaults(func=cmd_simulate)

    ve = sub.add_parser("verify", help="run the built-in example checks")
    ve.add_argument("example", choices=[*SUITES, "all"])
    ve.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DomainError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
