"""Analysis driver per problem kind and the JSON form of its results."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .diracberg import DiracReport, analyze
from .dsl import ProblemFile, to_problem
from .ocp import (build_classical, build_lindblad, build_quantum, pmp_oracle, qnames,
                  quantum_identities)
from .symkernel import RationalForm, canonicalize, parse


@dataclass
class Analysis:
    problem: ProblemFile
    report: DiracReport
    builder_input: object
    pmp_ok: bool | None = None
    identities: dict = field(default_factory=dict)


def run_analysis(pf: ProblemFile) -> Analysis:
    p = to_problem(pf)
    if pf.kind == "classical":
        L, space = build_classical(p)
        rep = analyze(L, space, controls=p.controls)
        ok = pmp_oracle(p, rep) if p.controls else None
        return Analysis(pf, rep, p, ok)
    if pf.kind == "quantum":
        L, space = build_quantum(p)
        hs = [h for row in qnames(p.dimension)["H"] for h in row]
        rep = analyze(L, space, controls=hs, operator_controls=True, on_singular="reduce")
        ids = quantum_identities(rep, p.dimension, omega=pf.omega)
        flat = {k: (all(bool(x) for x in v) if isinstance(v, list) else bool(v)) for k, v in ids.items()}
        return Analysis(pf, rep, p, None, flat)
    L, space = build_lindblad(p)
    rep = analyze(L, space, chain_only=True)
    return Analysis(pf, rep, p)


def _s(e) -> str:
    return str(e)


def _matrix(m) -> list | None:
    return None if m is None else [[_s(x) for x in row] for row in m]


def to_dict(a: Analysis) -> dict:
    r = a.report
    out = {
        "problem": a.problem.name,
        "kind": a.problem.kind,
        "constraints": [{"label": c.label, "origin": c.origin_tag, "class": c.klass,
                         "expr": _s(c.expr)} for c in r.constraints],
        "multipliers": {k: _s(v) for k, v in r.multipliers.items()},
        "free_multipliers": list(r.free_multipliers),
        "d_matrix": _matrix(r.d_matrix),
        "d_inverse": _matrix(r.d_inverse),
        "d_support": [r.second_class[i].label for i in r.d_support] if r.d_inverse is not None else [],
        "optimal_controls": {k: _s(v) for k, v in r.optimal_controls.items()},
        "control_relations": {k: _s(v) for k, v in r.control_relations.items()},
        "eom": {k: _s(v) for k, v in r.eom.items()},
        "assumptions": [_s(x.expression) + " != 0" for x in r.assumptions],
        "pmp_ok": a.pmp_ok,
        "generations": r.generations,
    }
    if r.multiplier_status:
        out["multiplier_status"] = dict(sorted(r.multiplier_status.items()))
    if a.identities:
        out["identities"] = dict(a.identities)
    return out


def dumps(a: Analysis) -> str:
    return json.dumps(to_dict(a), indent=2) + "\n"


_EXPR_MAPS = ("multipliers", "optimal_controls", "control_relations", "eom")


def from_dict(d: dict) -> dict:
    """Re-parse every expression string; the result maps to canonical forms."""
    out = dict(d)
    out["constraints"] = [dict(c, expr=canonicalize(parse(c["expr"]))) for c in d["constraints"]]
    for k in _EXPR_MAPS:
        out[k] = {n: canonicalize(parse(v)) for n, v in d[k].items()}
    for k in ("d_matrix", "d_inverse"):
        if d[k] is not None:
            out[k] = [[canonicalize(parse(x)) for x in row] for row in d[k]]
    out["assumptions"] = [canonicalize(parse(a.rsplit("!=", 1)[0])) for a in d["assumptions"]]
    return out


def reserialize(parsed: dict) -> dict:
    """Inverse of :func:`from_dict`."""
    out = dict(parsed)
    out["constraints"] = [dict(c, expr=_s(c["expr"])) for c in parsed["constraints"]]
    for k in _EXPR_MAPS:
        out[k] = {n: _s(v) for n, v in parsed[k].items()}
    for k in ("d_matrix", "d_inverse"):
        if parsed[k] is not None:
            out[k] = _matrix(parsed[k])
    out["assumptions"] = [_s(a) + " != 0" for a in parsed["assumptions"]]
    return out


def format_text(a: Analysis) -> str:
    """Human-readable summary."""
    r = a.report
    lines = [f"problem {a.problem.name} ({a.problem.kind}): {len(r.constraints)} constraints, "
             f"{r.generations} generation(s)"]
    for c in r.constraints:
        lines.append(f"  {c.label:<14} {c.origin_tag:<14} {c.klass:<7} {c.expr}")
    names = list(r.multipliers) + [k for k in sorted(r.multiplier_status) if k not in r.multipliers]
    if names:
        lines.append("multipliers:")
    for k in names:
        status = r.multiplier_status.get(k)
        if k in r.multipliers and status != "free":
            lines.append(f"  {k} = {r.multipliers[k]}")
        else:
            lines.append(f"  {k}: {status or 'free'}")
    for u, v in r.optimal_controls.items():
        lines.append(f"optimal {u} = {v}")
    for k, v in r.control_relations.items():
        lines.append(f"control relation {k}: {v} = 0")
    if r.eom:
        lines.append("equations of motion:")
        for k, v in r.eom.items():
            lines.append(f"  {k}' = {v}")
    if r.assumptions:
        lines.append("assuming: " + ", ".join(f"{x.expression} != 0" for x in r.assumptions))
    if a.pmp_ok is not None:
        lines.append(f"weak Pontryagin check: {'pass' if a.pmp_ok else 'FAIL'}")
    for k, v in a.identities.items():
        lines.append(f"{k.replace('_', ' ')}: {'holds' if v else 'FAILS'}")
    return "\n".join(lines) + "\n"
