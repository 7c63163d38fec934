"""Parametric polynomial templates.

A template is a polynomial whose coefficients are affine expressions in
unknown parameters c0, c1, ...  Lie derivatives of a template along a
concrete vector field stay affine in the parameters, which is what makes
the whole synthesis pipeline linear on the parameter side.

Equality constraints between parameters are solved by exact Gauss-Jordan
elimination over the rationals.  Within every equation the parameter
with the smallest id becomes the pivot, so later parameters survive as
the free ones; solving ``2*c0 - 2*c1 = 0`` therefore substitutes
``c0 -> c1`` and leaves c1 in the reduced template.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Mapping, Sequence

from lyra.poly import MultiIndex, Polynomial, Scalar, grlex_key, total_degree

__all__ = [
    "AffineForm",
    "InconsistentSystemError",
    "Param",
    "ParamPoly",
    "TemplateSpec",
    "apply_equalities",
    "build_template",
    "enumerate_template_indices",
    "solve_affine_system",
]


@dataclass(frozen=True)
class Param:
    """A template parameter, identified by a small integer id."""

    id: int
    name: str

    def __str__(self) -> str:
        return self.name


class AffineForm:
    """An affine expression ``sum_i q_i * c_i + q0`` over parameters."""

    __slots__ = ("terms", "constant")

    terms: dict[Param, Fraction]
    constant: Fraction

    def __init__(self, terms: Mapping[Param, Scalar] | None = None, constant: Scalar = 0):
        canonical: dict[Param, Fraction] = {}
        if terms:
            for p, q in terms.items():
                q = Fraction(q)
                if q != 0:
                    canonical[p] = canonical.get(p, Fraction(0)) + q
                    if canonical[p] == 0:
                        del canonical[p]
        object.__setattr__(self, "terms", canonical)
        object.__setattr__(self, "constant", Fraction(constant))

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError("AffineForm is immutable")

    @classmethod
    def of(cls, param: Param, coeff: Scalar = 1) -> "AffineForm":
        return cls({param: coeff})

    @classmethod
    def const(cls, c: Scalar) -> "AffineForm":
        return cls(None, c)

    def is_zero(self) -> bool:
        return not self.terms and self.constant == 0

    def is_constant(self) -> bool:
        return not self.terms

    def params(self) -> list[Param]:
        return sorted(self.terms, key=lambda p: p.id)

    def coeff(self, param: Param) -> Fraction:
        return self.terms.get(param, Fraction(0))

    def __add__(self, other: "AffineForm | Scalar") -> "AffineForm":
        if isinstance(other, (int, Fraction)):
            return AffineForm(self.terms, self.constant + other)
        acc = dict(self.terms)
        for p, q in other.terms.items():
            acc[p] = acc.get(p, Fraction(0)) + q
        return AffineForm(acc, self.constant + other.constant)

    def __neg__(self) -> "AffineForm":
        return AffineForm({p: -q for p, q in self.terms.items()}, -self.constant)

    def __sub__(self, other: "AffineForm | Scalar") -> "AffineForm":
        if isinstance(other, (int, Fraction)):
            return AffineForm(self.terms, self.constant - other)
        return self + (-other)

    def scale(self, q: Scalar) -> "AffineForm":
        q = Fraction(q)
        if q == 0:
            return AffineForm()
        return AffineForm({p: q * v for p, v in self.terms.items()}, q * self.constant)

    __mul__ = scale
    __rmul__ = scale

    def substitute(self, solution: Mapping[Param, "AffineForm"]) -> "AffineForm":
        """Replace solved parameters by their affine values."""
        out = AffineForm.const(self.constant)
        for p, q in self.terms.items():
            if p in solution:
                out = out + solution[p].scale(q)
            else:
                out = out + AffineForm.of(p, q)
        return out

    def evaluate(self, assignment: Mapping[Param, Scalar]) -> Fraction:
        total = self.constant
        for p, q in self.terms.items():
            if p not in assignment:
                raise KeyError(f"no value for parameter {p.name}")
            total += q * Fraction(assignment[p])
        return total

    def _key(self):
        return (frozenset(self.terms.items()), self.constant)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.is_constant() and self.constant == other
        if not isinstance(other, AffineForm):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash(self._key())

    def __str__(self) -> str:
        parts: list[str] = []
        for p in self.params():
            q = self.terms[p]
            mag = abs(q)
            body = p.name if mag == 1 else f"{mag}*{p.name}"
            if not parts:
                parts.append(body if q > 0 else f"-{body}")
            else:
                parts.append(f"+ {body}" if q > 0 else f"- {body}")
        if self.constant != 0 or not parts:
            c = self.constant
            if not parts:
                parts.append(str(c))
            else:
                parts.append(f"+ {abs(c)}" if c > 0 else f"- {abs(c)}")
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"AffineForm({self})"


class ParamPoly:
    """A polynomial whose coefficients are affine forms in parameters."""

    __slots__ = ("dimension", "terms")

    dimension: int
    terms: dict[MultiIndex, AffineForm]

    def __init__(self, dimension: int, terms: Mapping[MultiIndex, AffineForm] | None = None):
        if dimension < 1:
            raise ValueError("dimension must be at least 1")
        canonical: dict[MultiIndex, AffineForm] = {}
        if terms:
            for alpha, form in terms.items():
                alpha = tuple(alpha)
                if len(alpha) != dimension:
                    raise ValueError(f"multi-index {alpha} has wrong length")
                if not form.is_zero():
                    canonical[alpha] = form
        object.__setattr__(self, "dimension", dimension)
        object.__setattr__(self, "terms", canonical)

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError("ParamPoly is immutable")

    @classmethod
    def from_polynomial(cls, p: Polynomial) -> "ParamPoly":
        return cls(p.dimension, {a: AffineForm.const(c) for a, c in p.terms.items()})

    def is_zero(self) -> bool:
        return not self.terms

    def params(self) -> list[Param]:
        seen: set[Param] = set()
        for form in self.terms.values():
            seen.update(form.terms)
        return sorted(seen, key=lambda p: p.id)

    @property
    def lowest_degree(self) -> int | None:
        if not self.terms:
            return None
        return min(total_degree(a) for a in self.terms)

    @property
    def highest_degree(self) -> int | None:
        if not self.terms:
            return None
        return max(total_degree(a) for a in self.terms)

    def homogeneous_layer(self, degree: int) -> "ParamPoly":
        return ParamPoly(
            self.dimension,
            {a: f for a, f in self.terms.items() if total_degree(a) == degree},
        )

    def max_exponent(self, i: int) -> int:
        if not self.terms:
            return 0
        return max(a[i] for a in self.terms)

    def iter_terms(self):
        for alpha in sorted(self.terms, key=grlex_key):
            yield alpha, self.terms[alpha]

    def __add__(self, other: "ParamPoly") -> "ParamPoly":
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        acc = dict(self.terms)
        for alpha, form in other.terms.items():
            acc[alpha] = acc[alpha] + form if alpha in acc else form
        return ParamPoly(self.dimension, acc)

    def __neg__(self) -> "ParamPoly":
        return ParamPoly(self.dimension, {a: -f for a, f in self.terms.items()})

    def __sub__(self, other: "ParamPoly") -> "ParamPoly":
        return self + (-other)

    def scale(self, q: Scalar) -> "ParamPoly":
        q = Fraction(q)
        if q == 0:
            return ParamPoly(self.dimension)
        return ParamPoly(self.dimension, {a: f.scale(q) for a, f in self.terms.items()})

    def mul_poly(self, p: Polynomial) -> "ParamPoly":
        """Multiply by a concrete polynomial; coefficients stay affine."""
        if p.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        acc: dict[MultiIndex, AffineForm] = {}
        for a, form in self.terms.items():
            for b, c in p.terms.items():
                gamma = tuple(x + y for x, y in zip(a, b))
                part = form.scale(c)
                acc[gamma] = acc[gamma] + part if gamma in acc else part
        return ParamPoly(self.dimension, acc)

    def partial(self, i: int) -> "ParamPoly":
        acc: dict[MultiIndex, AffineForm] = {}
        for alpha, form in self.terms.items():
            e = alpha[i]
            if e == 0:
                continue
            beta = alpha[:i] + (e - 1,) + alpha[i + 1 :]
            part = form.scale(e)
            acc[beta] = acc[beta] + part if beta in acc else part
        return ParamPoly(self.dimension, acc)

    def gradient(self) -> tuple["ParamPoly", ...]:
        return tuple(self.partial(i) for i in range(self.dimension))

    def substitute(self, assignment: Mapping[Param, Scalar]) -> Polynomial:
        """Instantiate all parameters, producing a concrete polynomial."""
        return Polynomial(
            self.dimension,
            {a: form.evaluate(assignment) for a, form in self.terms.items()},
        )

    def evaluate_form(self, point: Sequence[Scalar]) -> AffineForm:
        """Evaluate at a state point, leaving the parameters symbolic."""
        pt = [Fraction(v) for v in point]
        if len(pt) != self.dimension:
            raise ValueError("point has wrong dimension")
        powers: list[dict[int, Fraction]] = [{0: Fraction(1)} for _ in pt]
        total = AffineForm()
        for alpha, form in self.terms.items():
            weight = Fraction(1)
            for i, e in enumerate(alpha):
                cache = powers[i]
                if e not in cache:
                    cache[e] = pt[i] ** e
                weight *= cache[e]
            if weight:
                total = total + form.scale(weight)
        return total

    def substitute_forms(self, solution: Mapping[Param, AffineForm]) -> "ParamPoly":
        return ParamPoly(
            self.dimension,
            {a: form.substitute(solution) for a, form in self.terms.items()},
        )

    def to_polynomial(self) -> Polynomial:
        """Convert a parameter-free ParamPoly into a Polynomial."""
        out: dict[MultiIndex, Fraction] = {}
        for alpha, form in self.terms.items():
            if not form.is_constant():
                raise ValueError(f"coefficient of {alpha} still mentions {form.params()}")
            out[alpha] = form.constant
        return Polynomial(self.dimension, out)

    def coefficient_vector(self) -> list[tuple[MultiIndex, AffineForm]]:
        return list(self.iter_terms())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ParamPoly):
            return NotImplemented
        return self.dimension == other.dimension and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.dimension, frozenset((a, f) for a, f in self.terms.items())))

    def _monomial_str(self, alpha: MultiIndex) -> str:
        factors = []
        for i, e in enumerate(alpha):
            if e == 0:
                continue
            factors.append(f"x{i + 1}" if e == 1 else f"x{i + 1}^{e}")
        return "*".join(factors) if factors else "1"

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for alpha, form in self.iter_terms():
            body = str(form)
            wrapped = body if (len(form.terms) + (form.constant != 0)) == 1 and not body.startswith("-") else f"({body})"
            parts.append(f"{wrapped}*{self._monomial_str(alpha)}")
        return " + ".join(parts)

    def grouped_str(self) -> str:
        """Render grouped by parameter, e.g. ``c1*(x1^2 + x2^2)``."""
        if not self.terms:
            return "0"
        by_param: dict[Param | None, dict[MultiIndex, Fraction]] = {}
        for alpha, form in self.terms.items():
            for p, q in form.terms.items():
                by_param.setdefault(p, {})[alpha] = q
            if form.constant != 0:
                by_param.setdefault(None, {})[alpha] = form.constant
        parts = []
        params = sorted((p for p in by_param if p is not None), key=lambda p: p.id)
        for p in params:
            poly = Polynomial(self.dimension, by_param[p])
            parts.append(f"{p.name}*({poly})")
        if None in by_param:
            parts.append(str(Polynomial(self.dimension, by_param[None])))
        return " + ".join(parts)

    def __repr__(self) -> str:
        return f"ParamPoly({self})"


@dataclass(frozen=True)
class TemplateSpec:
    """Shape of a candidate template.

    parity "even" keeps only monomials of even total degree; "all" keeps
    every degree in range.  With cross_terms disabled only pure powers
    x_i^d are generated.
    """

    dimension: int
    min_degree: int = 2
    max_degree: int = 2
    parity: str = "even"
    cross_terms: bool = True

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be at least 1")
        if not 1 <= self.min_degree <= self.max_degree:
            raise ValueError("need 1 <= min_degree <= max_degree")
        if self.parity not in ("even", "all"):
            raise ValueError("parity must be 'even' or 'all'")


def enumerate_template_indices(spec: TemplateSpec) -> list[MultiIndex]:
    """Monomials of a template, in parameter-creation order.

    Within each total degree (ascending) the pure powers x_i^d come
    first in variable order, then the mixed monomials in descending
    lexicographic order.  Parameter naming below follows this order.
    """
    out: list[MultiIndex] = []
    n = spec.dimension
    for d in range(spec.min_degree, spec.max_degree + 1):
        if spec.parity == "even" and d % 2 == 1:
            continue
        pure = []
        mixed = []
        for combo in combinations_with_replacement(range(n), d):
            alpha = [0] * n
            for i in combo:
                alpha[i] += 1
            alpha_t = tuple(alpha)
            (pure if max(alpha_t) == d else mixed).append(alpha_t)
        pure.sort(key=lambda a: a.index(d))
        mixed.sort(reverse=True)
        if spec.cross_terms:
            out.extend(pure + mixed)
        else:
            out.extend(pure)
    return out


def build_template(spec: TemplateSpec, name_prefix: str = "c") -> ParamPoly:
    """Create a fresh template with one parameter per monomial."""
    terms: dict[MultiIndex, AffineForm] = {}
    for k, alpha in enumerate(enumerate_template_indices(spec)):
        terms[alpha] = AffineForm.of(Param(k, f"{name_prefix}{k}"))
    if not terms:
        raise ValueError("template spec admits no monomials")
    return ParamPoly(spec.dimension, terms)


class InconsistentSystemError(ValueError):
    """An equality system forces a nonzero constant to vanish."""


def solve_affine_system(equalities: Iterable[AffineForm]) -> dict[Param, AffineForm]:
    """Solve a list of affine forms, each read as ``form = 0``.

    Returns a map from eliminated parameters to affine expressions in
    the surviving ones, fully back-substituted.  The pivot in every row
    is the present parameter with the smallest id.
    """
    rows = [eq for eq in equalities if not eq.is_zero()]
    solution: dict[Param, AffineForm] = {}
    for row in rows:
        row = row.substitute(solution)
        if row.is_zero():
            continue
        if row.is_constant():
            raise InconsistentSystemError(f"inconsistent constraint {row} = 0")
        pivot = min(row.terms, key=lambda p: p.id)
        q = row.terms[pivot]
        # pivot = -(row - q*pivot)/q
        rest = row - AffineForm.of(pivot, q)
        value = rest.scale(Fraction(-1) / q)
        # eliminate the pivot from earlier solutions
        solution = {p: f.substitute({pivot: value}) for p, f in solution.items()}
        solution[pivot] = value
    return solution


def apply_equalities(
    template: ParamPoly, equalities: Iterable[AffineForm]
) -> tuple[ParamPoly, dict[Param, AffineForm]]:
    """Substitute the solution of ``equalities`` into the template.

    Returns the reduced template together with the substitution map for
    the eliminated parameters.  If every parameter is forced to zero the
    result is the zero template; callers treat that as a status, not an
    error.  An unsatisfiable system raises InconsistentSystemError.
    """
    solution = solve_affine_system(equalities)
    return template.substitute_forms(solution), solution
