"""Exact symbolic kernel: expressions, canonical rational forms and linear algebra."""

from .expr import (IMAG_UNIT, ONE_RF, ZERO, Add, Assumption, Div, EvaluationError, Expr,
                   Mul, Num, Pow, RationalForm, SubstitutionCycleError, Sym, Symbol,
                   canonicalize, diff, eval_num, free_symbols, merge_assumptions,
                   nonzero_factors, rf, substitute)
from .linalg import (LinearSolution, NonlinearMultiplierError, SingularMatrixError, det,
                     identity, mat_inverse, mat_mul, nullspace, solve_linear, transpose)
from .parser import ParseError, parse
from .poly import Poly, gcd

__all__ = [
    "Add", "Assumption", "Div", "EvaluationError", "Expr", "IMAG_UNIT", "LinearSolution",
    "Mul", "NonlinearMultiplierError", "Num", "ONE_RF", "ParseError", "Poly", "Pow",
    "RationalForm", "SingularMatrixError", "SubstitutionCycleError", "Sym", "Symbol", "ZERO",
    "canonicalize", "det", "diff", "eval_num", "free_symbols", "gcd", "identity",
    "mat_inverse", "mat_mul", "merge_assumptions", "nonzero_factors", "nullspace", "parse",
    "rf", "solve_linear", "substitute", "transpose",
]
