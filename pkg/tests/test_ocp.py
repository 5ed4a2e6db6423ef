import pytest

from dbctl.diracberg import analyze
from dbctl.ocp import (ControlProblem, LindbladControlProblem, QuantumControlProblem,
                       UndeclaredSymbolError, build_classical, build_lindblad, build_quantum,
                       lindblad_matrices, lindbladian, pmp_checks, pmp_oracle, pontryagin_hamiltonian, qnames,
                       trace_square_half, traceless_part)
from dbctl.symkernel import ZERO, rf


def toy():
    return ControlProblem(states=["x"], dynamics={"x": "u"}, controls=["u"], running_cost="u^2")


def test_classical_lagrangian_and_space():
    L, space = build_classical(toy())
    assert L == rf("u^2 + Lam_x*(x_dot - u)")
    assert space.canonical_pairs() == [("x", "p_x"), ("Lam_x", "pi_x"), ("u", "eta_u")]
    assert space.kind("u") == "control"


def test_toy_problem_end_to_end():
    p = toy()
    L, space = build_classical(p)
    rep = analyze(L, space, controls=p.controls)
    assert rep.optimal_controls["u"] == rf("Lam_x/2")
    assert pontryagin_hamiltonian(p) == rf("Lam_x*u - u^2")
    assert all(ok for _, ok in pmp_checks(p, rep))
    assert pmp_oracle(p, rep)


def test_perturbed_control_fails_pontryagin_check():
    p = toy()
    L, space = build_classical(p)
    rep = analyze(L, space, controls=p.controls)
    rep.optimal_controls["u"] = rf("Lam_x/2 + x^2")
    assert not pmp_oracle(p, rep)


def test_zero_cost_gives_bare_adjoint_hamiltonian():
    p = ControlProblem(states=["x", "y"], dynamics={"x": "y", "y": "-x + c"}, running_cost=0,
                       parameters=["c"])
    assert pontryagin_hamiltonian(p) == rf("Lam_x*y + Lam_y*(c - x)")


def test_problem_validation():
    with pytest.raises(ValueError):
        ControlProblem(states=[], dynamics={})
    with pytest.raises(ValueError, match="no dynamics"):
        ControlProblem(states=["x", "y"], dynamics={"x": "1"})
    with pytest.raises(UndeclaredSymbolError, match="k"):
        build_classical(ControlProblem(states=["x"], dynamics={"x": "k*x"}))
    with pytest.raises(UndeclaredSymbolError):
        build_classical(ControlProblem(states=["x"], dynamics={"x": "1"}, running_cost="w"))


# ---------------------------------------------------------------------------
# closed quantum

def test_quantum_names():
    nm = qnames(3)
    assert nm["psi"] == ["psi1", "psi2", "psi3"]
    assert nm["H"][1][2] == "H23"


def test_quantum_validation():
    with pytest.raises(ValueError):
        QuantumControlProblem(dimension=1)
    with pytest.raises(ValueError):
        QuantumControlProblem(dimension=2, mode="other")
    with pytest.raises(ValueError):
        QuantumControlProblem(dimension=2, omega=0)
    with pytest.raises(ValueError):
        QuantumControlProblem(dimension=2, mode="generic", controls=["u"])


def test_traceless_energy_form():
    H = [[rf("H11"), rf("H12")], [rf("H21"), rf("H22")]]
    t = traceless_part(H)
    assert (t[0][0] + t[1][1]).is_zero()
    assert trace_square_half(t) == rf("(H11 - H22)^2/4 + H12*H21")


def _generic(drift):
    p = QuantumControlProblem(dimension=2, mode="generic", drift=drift)
    L, space = build_quantum(p)
    return analyze(L, space)


def test_generic_quantum_without_hamiltonian_is_static():
    rep = _generic(None)
    assert rep.eom["psi1"].is_zero() and rep.eom["psi2"].is_zero()


def test_generic_quantum_with_pauli_x_drift():
    rep = _generic([[0, 1], [1, 0]])
    assert rep.eom["psi1"] == rf("-I*psi2")
    assert rep.eom["psi2"] == rf("-I*psi1")
    assert rep.eom["psib1"] == rf("I*psib2")


def test_brachistochrone_lagrangian_has_energy_term():
    L, space = build_quantum(QuantumControlProblem(dimension=2))
    assert L.has("Lam") and L.has("omega")
    assert space.kind("H12") == "control"
    assert space.kind("psib1") == "conjugate-coordinate"


# ---------------------------------------------------------------------------
# Lindblad

def test_lindbladian_is_trace_free():
    p = LindbladControlProblem(dimension=2)
    _, rho, _, H, _, Ls, Lds, _ = lindblad_matrices(p)
    out = lindbladian(H, Ls, Lds, rho)
    assert (out[0][0] + out[1][1]).is_zero()


def test_lindbladian_without_dissipation_is_commutator():
    H = [[rf("a"), rf("b")], [rf("c"), rf("-a")]]
    rho = [[rf("r11"), rf("r12")], [rf("r21"), rf("r22")]]
    zero = [[ZERO, ZERO], [ZERO, ZERO]]
    out = lindbladian(H, [zero], [zero], rho)
    assert out[0][0] == rf("-I*(b*r21 - r12*c)")


def test_lindblad_builder():
    L, space = build_lindblad(LindbladControlProblem(dimension=2))
    assert space.has("PH21") and not space.has("H22")
    assert space.kind("L1_12") == "control"
    assert L.has("gamma1") and L.has("omega")


def test_lindblad_zero_rate_and_validation():
    L, space = build_lindblad(LindbladControlProblem(dimension=2, rates={1: 0}))
    assert not L.has("gamma1")
    with pytest.raises(ValueError):
        LindbladControlProblem(dimension=1)
    with pytest.raises(ValueError):
        LindbladControlProblem(dimension=2, lindblad_count=0)
    with pytest.raises(UndeclaredSymbolError):
        build_lindblad(LindbladControlProblem(dimension=2, energy_constraint="H11 + z"))


def test_lindblad_chain_on_reference(lindblad):
    rep = lindblad.report
    assert len([c for c in rep.constraints if c.origin == "primary"]) == 19
    assert len([c for c in rep.constraints if c.origin == "secondary"]) == 11
    st = rep.multiplier_status
    assert st["lambda_lam"] == "zero" and st["lambda_mu11"] == "zero"
    assert all(st[k] == "fixed" for k in st if k.startswith(("lambda_rho", "lambda_sigma")))


def test_quantum_identities_hold(quantum):
    assert quantum.identities == {"mean_energy_zero": True, "projector_relation": True,
                                  "variance_equals_omega_squared": True}
