"""Symbolic reduction: exactness on known systems and rule soundness."""

from fractions import Fraction
from itertools import combinations

import pytest

from lyra.lie import lie_derivative
from lyra.poly import Polynomial, VectorField, parse_polynomial
from lyra.reduction import (
    STATUS_COLLAPSED,
    STATUS_INFEASIBLE,
    STATUS_OK,
    reduce_to_fixpoint,
)
from lyra.sysfile import load_benchmark
from lyra.template import ParamPoly, TemplateSpec, build_template, solve_affine_system
from lyra.verify import falsify_numeric


def quad_template():
    return build_template(TemplateSpec(2, 2, 2, "even", True))


def as_map(substitutions):
    return {str(p): str(f) for p, f in substitutions.items()}


def test_cubic_benchmark_reduces_to_circle_family():
    result = reduce_to_fixpoint(quad_template(), load_benchmark("e1").field)
    assert result.status == STATUS_OK
    assert as_map(result.substitutions) == {"c0": "c1", "c2": "0"}
    assert str(result.template) == "c1*x1^2 + c1*x2^2"
    assert str(result.lie) == "(-2*c1)*x1^4 + (-2*c1)*x2^4"
    assert [str(c.form) for c in result.pending] == ["-2*c1"]


def test_degree_seven_benchmark_reduces_to_circle_family():
    result = reduce_to_fixpoint(quad_template(), load_benchmark("e2").field)
    assert result.status == STATUS_OK
    assert as_map(result.substitutions) == {"c0": "c1", "c2": "0"}
    assert str(result.lie) == "(-2*c1)*x1^8 + (-2*c1)*x2^8"


def test_weak_benchmark_quartic_family():
    template = build_template(TemplateSpec(2, 2, 4, "even", False))
    result = reduce_to_fixpoint(template, load_benchmark("e8").field)
    assert result.status == STATUS_OK
    assert as_map(result.substitutions) == {"c0": "0", "c1": "2*c2", "c3": "0"}
    assert str(result.template) == "2*c2*x2^2 + c2*x1^4"
    assert str(result.lie) == "(-4*c2)*x2^4"


def test_scaled_circle_family():
    # the damping coefficients 3/2 and 1/2 force c1 = 3 c0
    result = reduce_to_fixpoint(quad_template(), load_benchmark("e3").field)
    assert result.status == STATUS_OK
    reduced = result.template
    params = reduced.params()
    assert len(params) == 1
    concrete = reduced.substitute({params[0]: 1})
    ratio = concrete.terms[(0, 2)] / concrete.terms[(2, 0)]
    assert ratio == 3


def test_collapse_when_no_even_quadratic_survives():
    # V = c0 x1^2 against x' = x1^2 gives Vdot = 2 c0 x1^3, so c0 = 0
    field = VectorField([parse_polynomial("x1^2", 1)])
    template = build_template(TemplateSpec(1, 2, 2, "even", True))
    result = reduce_to_fixpoint(template, field)
    assert result.status == STATUS_COLLAPSED
    assert result.template.is_zero()
    assert as_map(result.substitutions) == {"c0": "0"}


def test_concrete_candidate_can_be_infeasible():
    # V = x1^2 against x' = x1 gives Vdot = 2 x1^2, never nonpositive
    field = VectorField([parse_polynomial("x1", 1)])
    candidate = ParamPoly.from_polynomial(parse_polynomial("x1^2", 1))
    result = reduce_to_fixpoint(candidate, field)
    assert result.status == STATUS_INFEASIBLE
    assert result.detail is not None


def test_fixpoint_is_idempotent():
    for name in ("e1", "e2", "e8"):
        spec = (
            TemplateSpec(2, 2, 2, "even", True)
            if name != "e8"
            else TemplateSpec(2, 2, 4, "even", False)
        )
        field = load_benchmark(name).field
        first = reduce_to_fixpoint(build_template(spec), field)
        again = reduce_to_fixpoint(first.template, field)
        assert again.status == STATUS_OK
        assert not again.substitutions
        assert again.template == first.template


def test_constraint_strings_name_their_rule():
    result = reduce_to_fixpoint(quad_template(), load_benchmark("e1").field)
    rendered = [str(c) for c in result.equalities]
    assert any("R1-extreme-layer" in s and "= 0" in s for s in rendered)
    assert all("@" in s for s in rendered)


def violating_assignments(equalities, index):
    """Assignments satisfying all equalities except the chosen one."""
    others = [c.form for i, c in enumerate(equalities) if i != index]
    solution = solve_affine_system(others)
    violated = equalities[index].form.substitute(solution)
    if violated.is_zero():
        return None  # implied by the others; cannot be violated in isolation
    free = violated.params()
    for trial in range(1, 6):
        values = {p: Fraction(trial if p == free[0] else 1) for p in free}
        if violated.evaluate(values) != 0:
            full = dict(values)
            for p, f in solution.items():
                full[p] = f.evaluate(values)
            return full
    return None


@pytest.mark.parametrize(
    "name,spec",
    [
        ("e1", TemplateSpec(2, 2, 2, "even", True)),
        ("e2", TemplateSpec(2, 2, 2, "even", True)),
        ("e8", TemplateSpec(2, 2, 4, "even", False)),
    ],
)
def test_each_equality_is_necessary(name, spec):
    """Violating any single derived equality makes Vdot positive somewhere."""
    field = load_benchmark(name).field
    template = build_template(spec)
    result = reduce_to_fixpoint(template, field)
    assert result.status == STATUS_OK
    all_params = template.params()
    checked = 0
    for index in range(len(result.equalities)):
        assignment = violating_assignments(result.equalities, index)
        if assignment is None:
            continue
        for p in all_params:
            assignment.setdefault(p, Fraction(1))
        vdot = lie_derivative(template.substitute(assignment), field)
        point = falsify_numeric(vdot, ">")
        assert point is not None, f"no witness for violated {result.equalities[index]}"
        assert vdot.evaluate(point) > 0
        checked += 1
    assert checked >= 1
