"""Built-in example problems and the closed-form results they must reproduce."""

from __future__ import annotations

BRACHISTOCHRONE = """\
problem brachistochrone
kind classical
param g
state x1 x2 x3 x4
control u
dynamics
  x1' = x2
  x2' = u
  x3' = x4
  x4' = g - u*x2/x4
cost 1
assume x4 != 0
"""

QUANTUM = """\
problem quantum_brachistochrone
kind quantum
param omega
dimension 2
omega omega
cost 1
"""

LINDBLAD = """\
problem open_system
kind lindblad
param omega
dimension 2
lindblads 1
f_H H11^2 + H12*H21 + H21*H12 + H22^2 - 2*omega^2
"""

# classical brachistochrone, adjoints written Lam_<state>
U_STAR = "2*g*x2*x4/(x2^2 + x4^2)"
LAMBDA_U = ("(-3*u^2*x2^3 + 8*g*u*x2^2*x4 - 6*g^2*x2*x4^2 - 3*u^2*x2*x4^2 + 4*g*u*x4^3)"
            "/(x4^2*(x2^2 + x4^2))")
SECONDARIES = (
    "-Lam_x2 + Lam_x4*x2/x4",
    "Lam_x1 - Lam_x3*x2/x4 - g*Lam_x4*x2/x4^2",
    "u*((x4^2 + x2^2)/x4^3)*(-Lam_x3 - g*Lam_x4/x4) + 2*g*x2*((Lam_x3*x4 + g*Lam_x4)/x4^3)",
)
MULTIPLIERS = {
    "lambda_x1": "x2", "lambda_x2": "u", "lambda_x3": "x4", "lambda_x4": "g - u*x2/x4",
    "lambda_Lam_x1": "0", "lambda_Lam_x2": "-Lam_x1 + Lam_x4*u/x4",
    "lambda_Lam_x3": "0", "lambda_Lam_x4": "-Lam_x3 - Lam_x4*u*x2/x4^2",
}
EOM = {
    "x1": "x2",
    "x2": "2*g*x2*x4/(x2^2 + x4^2)",
    "x3": "x4",
    "x4": "g*(x4^2 - x2^2)/(x2^2 + x4^2)",
    "Lam_x1": "0",
    "Lam_x2": "-Lam_x1 + Lam_x4*2*g*x2/(x2^2 + x4^2)",
    "Lam_x3": "0",
    "Lam_x4": "-Lam_x3 - Lam_x4*2*g*x2^2/(x4*(x2^2 + x4^2))",
}

# 12 x 12 bracket matrix of the second-class set, 1-based (row, column) -> entry;
# all other entries vanish
D_ENTRIES = {
    (1, 5): "-1",
    (2, 6): "-1",
    (2, 10): "-Lam_x4/x4",
    (2, 11): "(Lam_x3*x4 + Lam_x4*g)/x4^2",
    (2, 12): "2*g*x4*(-x2^2 + x4^2)/(x2^2 + x4^2)^2",
    (3, 7): "-1",
    (4, 8): "-1",
    (4, 10): "Lam_x4*x2/x4^2",
    (4, 11): "-x2*(Lam_x3*x4 + 2*Lam_x4*g)/x4^3",
    (4, 12): "2*g*x2*(x2^2 - x4^2)/(x2^2 + x4^2)^2",
    (5, 1): "1",
    (5, 11): "-1",
    (6, 2): "1",
    (6, 10): "1",
    (7, 3): "1",
    (7, 11): "x2/x4",
    (8, 4): "1",
    (8, 10): "-x2/x4",
    (8, 11): "g*x2/x4^2",
    (9, 12): "-1",
    (10, 2): "Lam_x4/x4",
    (10, 4): "-Lam_x4*x2/x4^2",
    (10, 6): "-1",
    (10, 8): "x2/x4",
    (11, 2): "-(Lam_x3*x4 + Lam_x4*g)/x4^2",
    (11, 4): "x2*(Lam_x3*x4 + 2*Lam_x4*g)/x4^3",
    (11, 5): "1",
    (11, 7): "-x2/x4",
    (11, 8): "-g*x2/x4^2",
    (12, 2): "2*g*x4*(x2^2 - x4^2)/(x2^2 + x4^2)^2",
    (12, 4): "-2*g*x2*(x2^2 - x4^2)/(x2^2 + x4^2)^2",
    (12, 9): "1",
}
