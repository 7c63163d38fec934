"""Parametric templates and affine parameter algebra."""

from fractions import Fraction

import pytest

from lyra.poly import parse_polynomial
from lyra.template import (
    AffineForm,
    InconsistentSystemError,
    Param,
    ParamPoly,
    TemplateSpec,
    apply_equalities,
    build_template,
    enumerate_template_indices,
    solve_affine_system,
)

c0, c1, c2 = Param(0, "c0"), Param(1, "c1"), Param(2, "c2")


def test_spec_validation():
    with pytest.raises(ValueError):
        TemplateSpec(0, 2, 2, "even", True)
    with pytest.raises(ValueError):
        TemplateSpec(2, 3, 2, "even", True)
    with pytest.raises(ValueError):
        TemplateSpec(2, 0, 2, "even", True)
    with pytest.raises(ValueError):
        TemplateSpec(2, 1, 2, "odd", True)


def test_quadratic_monomials_pure_powers_first():
    spec = TemplateSpec(2, 2, 2, "even", True)
    assert enumerate_template_indices(spec) == [(2, 0), (0, 2), (1, 1)]


def test_monomials_without_cross_terms():
    spec = TemplateSpec(3, 2, 4, "even", False)
    assert enumerate_template_indices(spec) == [
        (2, 0, 0), (0, 2, 0), (0, 0, 2),
        (4, 0, 0), (0, 4, 0), (0, 0, 4),
    ]


def test_monomials_all_parities():
    spec = TemplateSpec(2, 1, 2, "all", True)
    assert enumerate_template_indices(spec) == [
        (1, 0), (0, 1),
        (2, 0), (0, 2), (1, 1),
    ]


def test_even_parity_skips_odd_layers():
    spec = TemplateSpec(2, 2, 4, "even", True)
    degrees = {sum(a) for a in enumerate_template_indices(spec)}
    assert degrees == {2, 4}


def test_mixed_monomials_descending_lex():
    spec = TemplateSpec(3, 2, 2, "even", True)
    assert enumerate_template_indices(spec) == [
        (2, 0, 0), (0, 2, 0), (0, 0, 2),
        (1, 1, 0), (1, 0, 1), (0, 1, 1),
    ]


def test_build_template_names_follow_order():
    template = build_template(TemplateSpec(2, 2, 2, "even", True))
    assert str(template) == "c0*x1^2 + c1*x2^2 + c2*x1*x2"
    assert [p.name for p in template.params()] == ["c0", "c1", "c2"]


def test_affine_form_arithmetic():
    f = AffineForm.of(c0, 2) + AffineForm.of(c1, -1) + 3
    assert f.coeff(c0) == 2
    assert f.coeff(c1) == -1
    assert f.constant == 3
    assert (f - f).is_zero()
    assert f.scale(Fraction(1, 2)).coeff(c0) == 1
    assert f.evaluate({c0: 1, c1: 5}) == 0
    assert str(AffineForm.of(c0)) == "c0"


def test_affine_form_substitute():
    f = AffineForm.of(c0) + AffineForm.of(c2, 3)
    g = f.substitute({c2: AffineForm.of(c1, Fraction(1, 3))})
    assert g.coeff(c1) == 1
    assert g.coeff(c2) == 0
    assert g.coeff(c0) == 1


def test_solve_affine_system_back_substitutes():
    # c0 - c1 = 0 and c1 - 2 c2 = 0  =>  c0 = 2 c2, c1 = 2 c2
    eq1 = AffineForm.of(c0) - AffineForm.of(c1)
    eq2 = AffineForm.of(c1) - AffineForm.of(c2, 2)
    solution = solve_affine_system([eq1, eq2])
    assert solution[c0].coeff(c2) == 2
    assert solution[c1].coeff(c2) == 2
    assert set(solution) == {c0, c1}


def test_solve_affine_system_inconsistent():
    eq = AffineForm.of(c0) - AffineForm.of(c0) + 5
    with pytest.raises(InconsistentSystemError):
        solve_affine_system([eq])


def test_apply_equalities_reduces_template():
    template = build_template(TemplateSpec(2, 2, 2, "even", True))
    p0, p1, p2 = template.params()
    reduced, solution = apply_equalities(
        template, [AffineForm.of(p2), AffineForm.of(p0) - AffineForm.of(p1)]
    )
    assert str(reduced) == "c1*x1^2 + c1*x2^2"
    assert solution[p2].is_zero()
    assert solution[p0].coeff(p1) == 1


def test_param_poly_instantiation():
    template = build_template(TemplateSpec(2, 2, 2, "even", True))
    p0, p1, p2 = template.params()
    concrete = template.substitute({p0: 1, p1: Fraction(1, 2), p2: 0})
    assert concrete == parse_polynomial("x1^2 + x2^2/2", 2)


def test_param_poly_partial_matches_concrete():
    template = build_template(TemplateSpec(2, 2, 4, "even", True))
    assignment = {p: Fraction(i + 1, 3) for i, p in enumerate(template.params())}
    for i in range(2):
        assert template.partial(i).substitute(assignment) == template.substitute(
            assignment
        ).partial(i)


def test_param_poly_mul_poly_matches_concrete():
    template = build_template(TemplateSpec(2, 2, 2, "even", True))
    assignment = {p: Fraction(i - 1, 2) for i, p in enumerate(template.params())}
    q = parse_polynomial("x1^3 - 2*x2", 2)
    assert template.mul_poly(q).substitute(assignment) == template.substitute(assignment) * q


def test_zero_forms_are_dropped():
    poly = ParamPoly(2, {(1, 0): AffineForm()})
    assert poly.is_zero()
