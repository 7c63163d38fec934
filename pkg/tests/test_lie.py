"""Lie derivatives against hand expansions and numeric integration."""

from fractions import Fraction
from random import Random

import pytest

from lyra.lie import ChainTermLimitError, LieChain, lie_chain, lie_derivative
from lyra.poly import Polynomial, VectorField, parse_polynomial
from lyra.sysfile import benchmark_names, load_benchmark
from lyra.template import TemplateSpec, build_template


def p2(text: str) -> Polynomial:
    return parse_polynomial(text, 2)


def sum_of_squares(dimension: int) -> Polynomial:
    acc = Polynomial.zero(dimension)
    for i in range(dimension):
        acc = acc + Polynomial.variable(dimension, i) ** 2
    return acc


def rk4_step(field: VectorField, x: list[float], h: float) -> list[float]:
    def f(y):
        return [float(c) for c in field.evaluate([Fraction(v).limit_denominator(10**12) for v in y])]

    k1 = f(x)
    k2 = f([xi + h / 2 * ki for xi, ki in zip(x, k1)])
    k3 = f([xi + h / 2 * ki for xi, ki in zip(x, k2)])
    k4 = f([xi + h * ki for xi, ki in zip(x, k3)])
    return [
        xi + h / 6 * (a + 2 * b + 2 * c + d)
        for xi, a, b, c, d in zip(x, k1, k2, k3, k4)
    ]


def test_cubic_system_derivative_collapses():
    field = VectorField([p2("-x1^3 + x1^5*x2"), p2("-x2^3 - x1^6")])
    V = p2("x1^2 + x2^2")
    assert lie_derivative(V, field) == p2("-2*x1^4 - 2*x2^4")


def test_double_integrator_like_chain():
    field = VectorField([p2("x2"), p2("-x1^3 - x2^3")])
    V = p2("2*x2^2 + x1^4")
    assert lie_derivative(V, field) == p2("-4*x2^4")


def test_dimension_mismatch():
    field = VectorField([p2("x2"), p2("-x1")])
    with pytest.raises(ValueError):
        lie_derivative(parse_polynomial("x1^2", 3), field)


def test_parametric_derivative_matches_instantiated():
    field = VectorField([p2("-x1 - 1.5*x1^2*x2^3"), p2("-x2^3 + 0.5*x1^3*x2^2")])
    template = build_template(TemplateSpec(2, 2, 2, "even", True))
    lie_template = lie_derivative(template, field)
    assignment = {p: Fraction(k + 1, 2) for k, p in enumerate(template.params())}
    assert lie_template.substitute(assignment) == lie_derivative(
        template.substitute(assignment), field
    )


def test_chain_caches_prefixes():
    field = VectorField([p2("x2"), p2("-x1^3 - x2^3")])
    chain = LieChain(p2("2*x2^2 + x1^4"), field)
    assert chain.computed_order == 0
    assert chain.derivative(0) == p2("2*x2^2 + x1^4")
    d3 = chain.derivative(3)
    assert chain.computed_order == 3
    assert chain.derivative(3) is d3
    assert chain.derivative(1) == p2("-4*x2^4")
    assert chain.derivative(2) == lie_derivative(p2("-4*x2^4"), field)


def test_chain_term_limit():
    field = VectorField([p2("-x1^7 + x1*x2"), p2("-x2^7 - x1^2")])
    chain = LieChain(p2("x1^2 + x2^2"), field, term_limit=5)
    with pytest.raises(ChainTermLimitError):
        chain.derivative(3)


def test_lie_chain_precomputes():
    field = VectorField([p2("x2"), p2("-x1 - 7*x2^5")])
    chain = lie_chain(p2("x1^2 + x2^2"), field, 4)
    assert chain.computed_order >= 4


def random_point(rng: Random, dimension: int) -> list[Fraction]:
    return [Fraction(rng.randint(-10, 10), 100) for _ in range(dimension)]


@pytest.mark.parametrize("name", benchmark_names())
def test_numeric_integration_consistency(name):
    """One RK4 step of the flow reproduces the symbolic derivative of V."""
    system = load_benchmark(name)
    field = system.field
    rng = Random(42)
    V = sum_of_squares(field.dimension)
    exact = lie_derivative(V, field)
    for _ in range(10):
        x0 = random_point(rng, field.dimension)
        expected = float(exact.evaluate(x0))
        for h in (1e-3, 1e-4):
            x1 = rk4_step(field, [float(v) for v in x0], h)
            v0 = float(V.evaluate(x0))
            v1 = float(
                V.evaluate([Fraction(v).limit_denominator(10**12) for v in x1])
            )
            assert abs((v1 - v0) / h - expected) <= 10 * h
