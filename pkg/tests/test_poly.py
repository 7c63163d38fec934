"""Exact polynomial arithmetic, parsing, and formatting."""

from fractions import Fraction
from random import Random

import pytest

from lyra.poly import (
    Polynomial,
    PolyParseError,
    VectorField,
    parse_polynomial,
    total_degree,
    unit_index,
)


def p2(text: str) -> Polynomial:
    return parse_polynomial(text, 2)


def random_poly(rng: Random, dimension: int, max_degree: int = 3, terms: int = 4) -> Polynomial:
    acc = {}
    for _ in range(terms):
        alpha = tuple(rng.randint(0, max_degree) for _ in range(dimension))
        acc[alpha] = Fraction(rng.randint(-9, 9), rng.randint(1, 5))
    return Polynomial(dimension, acc)


# -- construction -------------------------------------------------------


def test_zero_coefficients_are_dropped():
    q = Polynomial(2, {(1, 0): 2, (0, 1): 0})
    assert q.terms == {(1, 0): Fraction(2)}
    assert not Polynomial.zero(3)
    assert Polynomial.zero(3).is_zero()


def test_constructors():
    assert Polynomial.constant(2, Fraction(5, 3)).terms == {(0, 0): Fraction(5, 3)}
    assert Polynomial.variable(3, 1).terms == {(0, 1, 0): Fraction(1)}
    assert Polynomial.monomial(2, (2, 1), -3).terms == {(2, 1): Fraction(-3)}
    assert unit_index(4, 2) == (0, 0, 1, 0)


def test_bad_construction():
    with pytest.raises(ValueError):
        Polynomial(0)
    with pytest.raises(ValueError):
        Polynomial(2, {(1,): 1})
    with pytest.raises(ValueError):
        Polynomial(2, {(-1, 0): 1})
    with pytest.raises(ValueError):
        Polynomial.variable(2, 2)


def test_immutable():
    q = p2("x1 + x2")
    with pytest.raises(AttributeError):
        q.dimension = 3


# -- degree queries -----------------------------------------------------


def test_degree_queries():
    q = p2("x1^2*x2 + 3*x1 - 1/2")
    assert total_degree((2, 1)) == 3
    assert q.lowest_degree == 0
    assert q.highest_degree == 3
    assert q.degrees_present() == [0, 1, 3]
    assert q.max_exponent(0) == 2
    assert q.max_exponent(1) == 1
    assert Polynomial.zero(2).lowest_degree is None
    assert Polynomial.zero(2).highest_degree is None


def test_homogeneous_layer():
    q = p2("x1^2 + x1*x2 + x2 + 4")
    assert q.homogeneous_layer(2) == p2("x1^2 + x1*x2")
    assert q.homogeneous_layer(1) == p2("x2")
    assert q.homogeneous_layer(5).is_zero()


# -- arithmetic ---------------------------------------------------------


def test_square_of_binomial():
    assert p2("x1 + x2") ** 2 == p2("x1^2 + 2*x1*x2 + x2^2")


def test_difference_of_squares():
    assert p2("x1 - x2") * p2("x1 + x2") == p2("x1^2 - x2^2")


def test_scalar_operations():
    q = p2("x1^2 - x2")
    assert 2 * q == p2("2*x1^2 - 2*x2")
    assert q.scale(Fraction(1, 3)) == p2("x1^2/3 - x2/3")
    assert q - q == Polynomial.zero(2)
    assert -q + q == Polynomial.zero(2)
    assert q + 1 == p2("x1^2 - x2 + 1")
    assert 1 - q == p2("1 - x1^2 + x2")


def test_power():
    q = p2("x1 + 1")
    assert q**0 == Polynomial.constant(2, 1)
    assert q**3 == p2("x1^3 + 3*x1^2 + 3*x1 + 1")
    with pytest.raises(ValueError):
        q ** (-1)


def test_evaluate():
    q = p2("x1^2*x2 - x2^3/2")
    assert q.evaluate([2, 3]) == Fraction(12) - Fraction(27, 2)
    assert q.evaluate([Fraction(1, 2), Fraction(-1, 3)]) == Fraction(-1, 12) + Fraction(1, 54)
    with pytest.raises(ValueError):
        q.evaluate([1])


def test_partial_derivatives():
    q = p2("x1^3*x2^2 + 2*x2")
    assert q.partial(0) == p2("3*x1^2*x2^2")
    assert q.partial(1) == p2("2*x1^3*x2 + 2")
    assert q.gradient() == (q.partial(0), q.partial(1))


def test_substitute_keeps_dimension():
    q = p2("x1^2*x2 + x2^2")
    r = q.substitute({0: Fraction(3)})
    assert r.dimension == 2
    assert r == p2("9*x2 + x2^2")
    assert q.substitute({0: 0, 1: 0}).is_zero()


def test_ring_laws_random():
    rng = Random(7)
    for _ in range(50):
        dim = rng.randint(1, 3)
        a = random_poly(rng, dim)
        b = random_poly(rng, dim)
        c = random_poly(rng, dim)
        assert a * (b + c) == a * b + a * c
        assert (a + b) * c == a * c + b * c
        assert a * b == b * a
        assert (a - b) + b == a


def test_evaluation_is_a_homomorphism():
    rng = Random(11)
    for _ in range(50):
        dim = rng.randint(1, 3)
        a = random_poly(rng, dim)
        b = random_poly(rng, dim)
        pt = [Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(dim)]
        assert (a + b).evaluate(pt) == a.evaluate(pt) + b.evaluate(pt)
        assert (a * b).evaluate(pt) == a.evaluate(pt) * b.evaluate(pt)


def test_product_rule():
    rng = Random(13)
    for _ in range(30):
        dim = rng.randint(1, 3)
        a = random_poly(rng, dim)
        b = random_poly(rng, dim)
        for i in range(dim):
            assert (a * b).partial(i) == a.partial(i) * b + a * b.partial(i)


# -- parsing ------------------------------------------------------------


def test_parse_basic_forms():
    assert p2("x1^2 - 3*x1*x2").terms == {(2, 0): Fraction(1), (1, 1): Fraction(-3)}
    assert p2("-x2^3 - x1^6").terms == {(0, 3): Fraction(-1), (6, 0): Fraction(-1)}
    assert p2("0").is_zero()
    assert p2("7").terms == {(0, 0): Fraction(7)}


def test_parse_rational_coefficients():
    assert p2("x1^2/3").terms == {(2, 0): Fraction(1, 3)}
    assert p2("3/2*x2").terms == {(0, 1): Fraction(3, 2)}
    assert p2("x1/2/5").terms == {(1, 0): Fraction(1, 10)}


def test_parse_decimals_exactly():
    assert p2("1.5*x1").terms == {(1, 0): Fraction(3, 2)}
    assert p2("0.9999*x1").terms == {(1, 0): Fraction(9999, 10000)}
    assert p2("-0.5*x1^3*x2^2").terms == {(3, 2): Fraction(-1, 2)}


def test_parse_implicit_multiplication():
    assert p2("2x1*x2") == p2("2*x1*x2")
    assert p2("x1 x2") == p2("x1*x2")
    assert p2("x1*x1") == p2("x1^2")


def test_parse_repeated_terms_merge():
    assert p2("x1 + x1") == p2("2*x1")
    assert p2("x1 - x1").is_zero()
    assert p2("x2^2 + +x1") == p2("x1 + x2^2")


def test_parse_custom_variable_names():
    q = parse_polynomial("2*a*b - b^2", 2, {"a": 0, "b": 1})
    assert q.terms == {(1, 1): Fraction(2), (0, 2): Fraction(-1)}


def test_parse_errors_carry_positions():
    cases = [
        ("x3", 0, "unknown variable 'x3'"),
        ("x1^", 2, "expected integer exponent after '^'"),
        ("x1 + ", 3, "dangling sign"),
        ("x1^2 @ x2", 5, "unexpected character '@'"),
        ("x1*-x2", 3, "unexpected token '-'"),
        ("", 0, "empty polynomial"),
    ]
    for text, position, reason in cases:
        with pytest.raises(PolyParseError) as info:
            parse_polynomial(text, 2)
        assert info.value.position == position
        assert info.value.reason == reason


def test_parse_division_errors():
    with pytest.raises(PolyParseError):
        p2("x1/x2")
    with pytest.raises(PolyParseError):
        p2("x1/0")


def test_format_round_trip():
    rng = Random(17)
    for _ in range(100):
        dim = rng.randint(1, 4)
        q = random_poly(rng, dim, max_degree=4)
        assert parse_polynomial(str(q), dim) == q
    assert str(Polynomial.zero(2)) == "0"


def test_format_is_readable():
    assert str(p2("x1^2 + x2^2")) == "x1^2 + x2^2"
    assert str(p2("-2*x1^4 - 2*x2^4")) == "-2*x1^4 - 2*x2^4"
    assert str(p2("x1^2/3 + x2^2")) == "1/3*x1^2 + x2^2"


# -- vector fields ------------------------------------------------------


def test_vector_field_construction():
    f = VectorField([p2("x2"), p2("-x1 - x2^3")])
    assert f.dimension == 2
    assert f.evaluate([1, 2]) == (Fraction(2), Fraction(-9))
    assert f.max_degree() == 3


def test_vector_field_rejects_constant_terms():
    with pytest.raises(ValueError):
        VectorField([p2("x2 + 1"), p2("x1")])
    with pytest.raises(ValueError):
        VectorField([p2("x1")])  # one component for dimension 2


def test_linear_part():
    f = VectorField([p2("-10*x1 + 10*x2 + x1*x2"), p2("x1 - x2 - x1^2")])
    assert f.linear_part() == [
        [Fraction(-10), Fraction(10)],
        [Fraction(1), Fraction(-1)],
    ]
