"""PolyField arithmetic and calculus, cross-checked against sympy."""

from fractions import Fraction

import numpy as np
import pytest
import sympy

from bergerhopf.polynomials import PolyField


def _to_sympy(f: PolyField, symbols):
    expr = sympy.Integer(0)
    for exps, coeff in f.iter_terms():
        term = sympy.Rational(coeff.numerator, coeff.denominator)
        for x, e in zip(symbols, exps):
            term *= x**e
        expr += term
    return sympy.expand(expr)


@pytest.fixture
def xyzw():
    return sympy.symbols("x0 x1 x2 x3")


def test_construction_and_coefficients():
    f = PolyField.from_terms({(2, 0): Fraction(1, 3), (0, 1): -2}, 2)
    assert f.coefficient((2, 0)) == Fraction(1, 3)
    assert f.coefficient((0, 1)) == -2
    assert f.coefficient((5, 5)) == 0
    assert f.degree() == 2
    assert not f.is_homogeneous()


def test_float_coefficients_rejected():
    with pytest.raises(TypeError):
        PolyField.from_terms({(1, 0): 0.5}, 2)


def test_arithmetic_matches_sympy(xyzw):
    f = PolyField.from_terms({(2, 0, 0, 0): 1, (0, 1, 1, 0): Fraction(-3, 2)}, 4)
    g = PolyField.from_terms({(1, 0, 0, 1): 2, (0, 0, 0, 0): Fraction(1, 5)}, 4)
    for ours, theirs in [
        (f + g, _to_sympy(f, xyzw) + _to_sympy(g, xyzw)),
        (f - g, _to_sympy(f, xyzw) - _to_sympy(g, xyzw)),
        (f * g, _to_sympy(f, xyzw) * _to_sympy(g, xyzw)),
        (f**3, _to_sympy(f, xyzw) ** 3),
    ]:
        assert sympy.expand(_to_sympy(ours, xyzw) - sympy.expand(theirs)) == 0


def test_calculus_matches_sympy(xyzw):
    f = PolyField.from_terms(
        {(3, 1, 0, 0): 2, (0, 2, 2, 0): Fraction(7, 4), (1, 1, 1, 1): -1}, 4
    )
    fs = _to_sympy(f, xyzw)
    for i in range(4):
        assert (
            sympy.expand(_to_sympy(f.diff(i), xyzw) - sympy.diff(fs, xyzw[i])) == 0
        )
    lap = sum(sympy.diff(fs, x, 2) for x in xyzw)
    assert sympy.expand(_to_sympy(f.euclidean_laplacian(), xyzw) - lap) == 0
    euler = sum(x * sympy.diff(fs, x) for x in xyzw)
    assert sympy.expand(_to_sympy(f.radial_derivative(), xyzw) - euler) == 0


def test_euler_identity_on_homogeneous():
    f = PolyField.from_terms({(4, 0): 1, (2, 2): -6, (0, 4): 1}, 2)
    assert f.is_homogeneous()
    assert (f.radial_derivative() - f * 4).is_zero()


def test_evaluation_exact_and_float():
    f = PolyField.from_terms({(2, 1): Fraction(1, 2), (0, 0): -1}, 2)
    assert f.eval_exact((Fraction(2), Fraction(3))) == Fraction(5)
    pts = np.array([[2.0, 3.0], [0.0, 0.0], [1.0, -1.0]])
    np.testing.assert_allclose(f(pts), [5.0, -1.0, -1.5], rtol=1e-14)
    assert f(np.array([2.0, 3.0])) == pytest.approx(5.0)


def test_power_and_zero():
    x = PolyField.variable(0, 2)
    assert (x**0).coefficient((0, 0)) == 1
    assert ((x + 1) ** 2 - (x * x + 2 * x + 1)).is_zero()
    z = PolyField.zero(2)
    assert z.is_zero() and z.degree() == -1


def test_overflow_guard():
    x = PolyField.variable(0, 2)
    tall = x**200
    with pytest.raises(OverflowError):
        tall * tall


def test_json_terms_order_and_format():
    f = PolyField.from_terms({(0, 1): Fraction(-1, 3), (1, 0): 2}, 2)
    terms = f.to_json_terms()
    assert terms == [
        {"exponents": [0, 1], "coeff": "-1/3"},
        {"exponents": [1, 0], "coeff": "2"},
    ]


def test_dimension_mismatch_errors():
    f = PolyField.variable(0, 2)
    g = PolyField.variable(0, 3)
    with pytest.raises(ValueError):
        f * g
    with pytest.raises(ValueError):
        f(np.zeros((4, 3)))
