"""
Sparse polynomial and matrix-polynomial arithmetic
"""

from polyalg.matrix import MatrixPolynomial, hessian, matpoly_eval, quad_form
from polyalg.monomials import Monomial, Universe, enum_monomials, one
from polyalg.polynomial import Polynomial, poly_det, poly_eval, poly_mul
from polyalg.textio import format_number, format_polynomial, parse_polynomial

__all__ = [
    "Monomial",
    "Universe",
    "enum_monomials",
    "one",
    "Polynomial",
    "poly_mul",
    "poly_eval",
    "poly_det",
    "MatrixPolynomial",
    "matpoly_eval",
    "quad_form",
    "hessian",
    "parse_polynomial",
    "format_polynomial",
    "format_number",
]
