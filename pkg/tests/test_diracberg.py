import numpy as np
import pytest

from dbctl import reference as ref
from dbctl.diracberg import (ChainNonTerminationError, Constraint, GaugeConditionsRequired,
                             UnderdeterminedControlError, UnsupportedLagrangianError, analyze,
                             classify, constraint_chain, dirac_bracket, extract_optimal_controls,
                             primary_hamiltonian, singular_legendre)
from dbctl.phasespace import PhaseSpace, is_weakly_zero, poisson_bracket, surface_points, weak_reduce
from dbctl.symkernel import Symbol, eval_num, rf


def one_dof(*extra):
    s = PhaseSpace()
    s.add_pair(Symbol("q", "coordinate"), Symbol("p", "momentum"))
    for name in extra:
        s.add_parameter(Symbol(name))
    return s


def two_dof():
    s = PhaseSpace()
    s.add_pair(Symbol("q1", "coordinate"), Symbol("p1", "momentum"))
    s.add_pair(Symbol("q2", "coordinate"), Symbol("p2", "momentum"))
    return s


# ---------------------------------------------------------------------------
# Legendre transform

def test_linear_lagrangian_gives_primary_and_zero_hamiltonian():
    hc, prims, _ = singular_legendre(rf("q_dot*q"), one_dof())
    assert hc.is_zero()
    assert [c.label for c in prims] == ["chi_q"]
    assert prims[0].expr == rf("p - q")


def test_potential_term_lands_in_hamiltonian():
    hc, prims, _ = singular_legendre(rf("q_dot*q - q^2/2"), one_dof())
    assert hc == rf("q^2/2")
    assert prims[0].expr == rf("p - q")


def test_quadratic_velocity_is_rejected():
    with pytest.raises(UnsupportedLagrangianError, match="q_dot"):
        singular_legendre(rf("q_dot^2"), one_dof())


def test_velocity_free_coordinate_keeps_bare_momentum():
    _, prims, _ = singular_legendre(rf("q1_dot*q2"), two_dof())
    assert {c.label: c.expr for c in prims} == {"chi_q1": rf("p1 - q2"), "chi_q2": rf("p2")}


def test_primary_hamiltonian_adds_multipliers():
    hc = rf("q^2")
    assert primary_hamiltonian(hc, []) == hc
    space = one_dof()
    hp = primary_hamiltonian(hc, [Constraint("chi_q", rf("p - q"))], space)
    assert hp == rf("q^2 + lambda_q*(p - q)")
    assert space.kind("lambda_q") == "multiplier"


# ---------------------------------------------------------------------------
# chain and classification

def test_gauge_toy_is_first_class():
    # primaries p1 and p2 with H_c = 0 commute with everything
    space = two_dof()
    rep = constraint_chain(rf("0"), [Constraint("chi_q1", rf("p1")), Constraint("chi_q2", rf("p2"))], space)
    classify(rep)
    assert [c.klass for c in rep.constraints] == ["first", "first"]
    assert sorted(rep.free_multipliers) == ["lambda_q1", "lambda_q2"]
    with pytest.raises(GaugeConditionsRequired):
        extract_optimal_controls(rep, ["q1"])


def test_second_class_pair_fixes_multipliers():
    space = two_dof()
    hc = rf("q1^2/2")
    rep = constraint_chain(hc, [Constraint("chi_q1", rf("p1 - q2")), Constraint("chi_q2", rf("p2"))], space)
    classify(rep)
    assert {c.klass for c in rep.constraints} == {"second"}
    assert rep.free_multipliers == []
    assert rep.multipliers == {"lambda_q1": rf("0"), "lambda_q2": rf("-q1")}
    assert rep.generations == 1


def test_secondary_constraint_is_generated():
    # p1 with H_c = q1*q2 gives {p1, H} = -q2 as a secondary
    space = two_dof()
    rep = constraint_chain(rf("q1*q2 + p2^2/2"), [Constraint("chi_q1", rf("p1"))], space)
    labels = [c.label for c in rep.constraints]
    assert labels[:2] == ["chi_q1", "Sigma_1"]
    assert rep.constraint("Sigma_1").expr == rf("-q2")
    assert rep.constraint("Sigma_1").origin_tag == "secondary(1)"


def test_generation_cap():
    # the second sweep would be needed for Sigma_1
    space = two_dof()
    with pytest.raises(ChainNonTerminationError) as info:
        constraint_chain(rf("q1*q2 + p2^2/2"), [Constraint("chi_q1", rf("p1"))], space, max_generations=1)
    assert info.value.report.generations == 2
    with pytest.raises(ValueError):
        constraint_chain(rf("0"), [], two_dof(), max_generations=0)


def test_control_absent_from_constraints_is_underdetermined():
    space = two_dof()
    rep = constraint_chain(rf("q1^2/2"), [Constraint("chi_q1", rf("p1 - q2")), Constraint("chi_q2", rf("p2"))], space)
    classify(rep)
    with pytest.raises(UnderdeterminedControlError):
        extract_optimal_controls(rep, ["nothing"])


# ---------------------------------------------------------------------------
# classical example

def test_classical_constraint_inventory(brach):
    rep = brach.report
    assert len(rep.constraints) == 12
    assert all(c.klass == "second" for c in rep.constraints)
    assert [c.label for c in rep.constraints if c.origin == "secondary"] == ["Sigma_1", "Sigma_2", "Sigma_3"]
    assert rep.free_multipliers == []


def test_classical_d_matrix_is_antisymmetric_with_unit_block(brach):
    D = brach.report.d_matrix
    assert len(D) == 12
    for i in range(12):
        assert D[i][i].is_zero()
        for j in range(12):
            assert D[i][j] == -D[j][i]
    assert D[0][4] == rf("-1")


def test_classical_d_entries_match_reference(brach):
    D = brach.report.d_matrix
    for i in range(12):
        for j in range(12):
            want = ref.D_ENTRIES.get((i + 1, j + 1), "0")
            assert D[i][j] == rf(want), (i + 1, j + 1)


def test_classical_optimal_control(brach):
    assert brach.report.optimal_controls["u"] == rf(ref.U_STAR)
    assert brach.pmp_ok is True


def test_dirac_bracket_values(brach):
    rep = brach.report
    assert dirac_bracket("x1", rep.canonical_hamiltonian, rep) == rf("x2")
    assert dirac_bracket("x2", "x2", rep).is_zero()
    a = rf("x1*Lam_x3 + x4^2")
    assert dirac_bracket(a, a, rep).is_zero()


def test_dirac_bracket_with_constraints_vanishes(brach):
    rep = brach.report
    for obs in ("x1*x2", "Lam_x4^2 + x3", "p_x1*u"):
        for c in rep.second_class:
            v = weak_reduce(dirac_bracket(obs, c.d_expr(), rep), rep.reduction)
            assert is_weakly_zero(v, rep.reduction, rep.space), (obs, c.label)


def test_dirac_bracket_antisymmetry(brach):
    rep = brach.report
    a, b = rf("x2*Lam_x1"), rf("x4 + pi_x3")
    assert dirac_bracket(a, b, rep) == -dirac_bracket(b, a, rep)


def test_classical_equations_of_motion(brach):
    rep = brach.report
    for s, want in ref.EOM.items():
        assert is_weakly_zero(rep.eom[s] - rf(want), rep.reduction, rep.space), s
    assert rep.eom["Lam_x1"].is_zero() and rep.eom["Lam_x3"].is_zero()


def test_eom_numerically_on_surface(brach):
    rep = brach.report
    names = sorted({n for e in rep.eom.values() for n in e.free_symbols()} | {"x2", "x4", "g"})
    pts = surface_points(rep.reduction, names, 5, np.random.default_rng(1))
    for pt in pts:
        x2, x4, g = pt["x2"], pt["x4"], pt["g"]
        assert eval_num(rep.eom["x4"], pt) == pytest.approx(g * (x4**2 - x2**2) / (x2**2 + x4**2))


# ---------------------------------------------------------------------------
# closed quantum example

def test_quantum_constraints_and_multipliers(quantum):
    rep = quantum.report
    assert len([c for c in rep.constraints if c.origin == "primary"]) == 13
    assert [c.label for c in rep.constraints if c.origin == "secondary"] == [f"Sigma_{k}" for k in range(1, 6)]
    st = rep.multiplier_status
    assert st["lambda_H22"] == "free"
    assert st["lambda_H12"] == st["lambda_H21"] == st["lambda_Lam"] == "zero"


def test_quantum_pairing_blocks(quantum):
    space = quantum.report.space
    for k in (1, 2):
        a = quantum.report.constraint(f"chi_psi{k}").expr
        b = quantum.report.constraint(f"chi_phib{k}").expr
        c = quantum.report.constraint(f"chi_psib{k}").expr
        d = quantum.report.constraint(f"chi_phi{k}").expr
        assert poisson_bracket(a, b, space) == rf("I")
        assert poisson_bracket(c, d, space) == rf("-I")


def test_quantum_d_matrix_is_singular_but_reduced(quantum):
    rep = quantum.report
    assert len(rep.d_matrix) == 18
    assert rep.null_combinations
    assert len(rep.d_support) == 16
    assert 7 not in rep.d_support and 16 not in rep.d_support


def test_quantum_schroedinger_flow(quantum):
    rep = quantum.report
    red, space = rep.reduction, rep.space
    assert rep.eom["psi1"] == rf("-I*(H11*psi1 + H12*psi2)")
    assert is_weakly_zero(rep.eom["psi2"] + rf("I*(H21*psi1 + H22*psi2)"), red, space)


def test_quantum_identities(quantum):
    assert quantum.identities and all(quantum.identities.values())


def test_analyze_rejects_singular_by_default():
    from dbctl.dsl import parse_problem, to_problem
    from dbctl.ocp import build_quantum, qnames
    from dbctl.symkernel import SingularMatrixError
    p = to_problem(parse_problem(ref.QUANTUM))
    L, space = build_quantum(p)
    hs = [h for row in qnames(2)["H"] for h in row]
    with pytest.raises(SingularMatrixError):
        analyze(L, space, controls=hs, operator_controls=True)
