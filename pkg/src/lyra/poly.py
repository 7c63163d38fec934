"""Sparse multivariate polynomials over the rationals.

A polynomial in n variables is stored as a mapping from exponent tuples
(multi-indices) to nonzero Fraction coefficients.  The zero polynomial is
the empty mapping.  Variables are canonically named ``x1 .. xn``; a
multi-index ``(4, 0)`` in dimension 2 denotes the monomial ``x1^4``.

Terms are always iterated and printed in graded lexicographic order:
ascending total degree, and descending lexicographic exponent order
within a degree.  That makes rendering, hashing-adjacent comparisons and
SMT emission deterministic.

The text format produced by :func:`format_polynomial` (e.g.
``-2*x1^4 - 2*x2^4``) is exactly the grammar accepted by
:func:`parse_polynomial`, so rendering and parsing round-trip.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

MultiIndex = tuple[int, ...]

Scalar = Fraction | int

__all__ = [
    "MultiIndex",
    "PolyParseError",
    "Polynomial",
    "VectorField",
    "format_polynomial",
    "grlex_key",
    "parse_polynomial",
    "total_degree",
    "unit_index",
]


def total_degree(alpha: MultiIndex) -> int:
    return sum(alpha)


def unit_index(dimension: int, i: int) -> MultiIndex:
    """Multi-index of the single variable ``x_{i+1}`` (i is 0-based)."""
    return tuple(1 if j == i else 0 for j in range(dimension))


def grlex_key(alpha: MultiIndex) -> tuple[int, tuple[int, ...]]:
    """Sort key for graded lexicographic term order."""
    return (sum(alpha), tuple(-a for a in alpha))


class Polynomial:
    """Immutable sparse polynomial with exact rational coefficients."""

    __slots__ = ("dimension", "terms")

    dimension: int
    terms: dict[MultiIndex, Fraction]

    def __init__(self, dimension: int, terms: Mapping[MultiIndex, Scalar] | None = None):
        if dimension < 1:
            raise ValueError("dimension must be at least 1")
        canonical: dict[MultiIndex, Fraction] = {}
        if terms:
            for alpha, c in terms.items():
                alpha = tuple(alpha)
                if len(alpha) != dimension:
                    raise ValueError(f"multi-index {alpha} has wrong length for dimension {dimension}")
                if any(e < 0 or not isinstance(e, int) for e in alpha):
                    raise ValueError(f"multi-index {alpha} must contain nonnegative integers")
                c = Fraction(c)
                if c != 0:
                    acc = canonical.get(alpha)
                    canonical[alpha] = c if acc is None else acc + c
                    if canonical[alpha] == 0:
                        del canonical[alpha]
        object.__setattr__(self, "dimension", dimension)
        object.__setattr__(self, "terms", canonical)

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError("Polynomial is immutable")

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls, dimension: int) -> "Polynomial":
        return cls(dimension)

    @classmethod
    def constant(cls, dimension: int, c: Scalar) -> "Polynomial":
        return cls(dimension, {(0,) * dimension: Fraction(c)})

    @classmethod
    def variable(cls, dimension: int, i: int) -> "Polynomial":
        """The polynomial ``x_{i+1}`` (i is 0-based)."""
        if not 0 <= i < dimension:
            raise ValueError(f"variable index {i} out of range for dimension {dimension}")
        return cls(dimension, {unit_index(dimension, i): Fraction(1)})

    @classmethod
    def monomial(cls, dimension: int, alpha: MultiIndex, c: Scalar = 1) -> "Polynomial":
        return cls(dimension, {tuple(alpha): Fraction(c)})

    # -- basic queries --------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def term_count(self) -> int:
        return len(self.terms)

    @property
    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.dimension, Fraction(0))

    @property
    def lowest_degree(self) -> int | None:
        """Minimal total degree among present terms, None for the zero polynomial."""
        if not self.terms:
            return None
        return min(total_degree(a) for a in self.terms)

    @property
    def highest_degree(self) -> int | None:
        if not self.terms:
            return None
        return max(total_degree(a) for a in self.terms)

    def degrees_present(self) -> list[int]:
        return sorted({total_degree(a) for a in self.terms})

    def max_exponent(self, i: int) -> int:
        """Largest exponent of variable i (0-based) over all present terms."""
        if not self.terms:
            return 0
        return max(a[i] for a in self.terms)

    def iter_terms(self) -> Iterator[tuple[MultiIndex, Fraction]]:
        """Terms in graded lexicographic order."""
        for alpha in sorted(self.terms, key=grlex_key):
            yield alpha, self.terms[alpha]

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other: "Polynomial | Scalar") -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.dimension, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        acc = dict(self.terms)
        for alpha, c in other.terms.items():
            acc[alpha] = acc.get(alpha, Fraction(0)) + c
        return Polynomial(self.dimension, acc)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dimension, {a: -c for a, c in self.terms.items()})

    def __sub__(self, other: "Polynomial | Scalar") -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.dimension, other)
        return self + (-other)

    def __rsub__(self, other: Scalar) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other: "Polynomial | Scalar") -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        if other.dimension != self.dimension:
            raise ValueError("dimension mismatch")
        acc: dict[MultiIndex, Fraction] = {}
        for a, ca in self.terms.items():
            for b, cb in other.terms.items():
                gamma = tuple(x + y for x, y in zip(a, b))
                acc[gamma] = acc.get(gamma, Fraction(0)) + ca * cb
        return Polynomial(self.dimension, acc)

    def __rmul__(self, other: Scalar) -> "Polynomial":
        return self.scale(other)

    def scale(self, q: Scalar) -> "Polynomial":
        q = Fraction(q)
        if q == 0:
            return Polynomial.zero(self.dimension)
        return Polynomial(self.dimension, {a: q * c for a, c in self.terms.items()})

    def __pow__(self, e: int) -> "Polynomial":
        if e < 0:
            raise ValueError("negative exponent")
        out = Polynomial.constant(self.dimension, 1)
        for _ in range(e):
            out = out * self
        return out

    def __eq__(self, other: object) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.dimension, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.dimension == other.dimension and self.terms == other.terms

    def __hash__(self) -> int:
        return hash((self.dimension, frozenset(self.terms.items())))

    # -- calculus and structure -----------------------------------------

    def partial(self, i: int) -> "Polynomial":
        """Partial derivative with respect to variable i (0-based)."""
        acc: dict[MultiIndex, Fraction] = {}
        for alpha, c in self.terms.items():
            e = alpha[i]
            if e == 0:
                continue
            beta = alpha[:i] + (e - 1,) + alpha[i + 1 :]
            acc[beta] = acc.get(beta, Fraction(0)) + c * e
        return Polynomial(self.dimension, acc)

    def gradient(self) -> tuple["Polynomial", ...]:
        return tuple(self.partial(i) for i in range(self.dimension))

    def homogeneous_layer(self, degree: int) -> "Polynomial":
        """The sum of terms of the given total degree."""
        return Polynomial(
            self.dimension,
            {a: c for a, c in self.terms.items() if total_degree(a) == degree},
        )

    def evaluate(self, point: Sequence[Scalar]) -> Fraction:
        if len(point) != self.dimension:
            raise ValueError("point has wrong dimension")
        pt = [Fraction(v) for v in point]
        total = Fraction(0)
        for alpha, c in self.terms.items():
            v = c
            for x, e in zip(pt, alpha):
                if e:
                    v *= x**e
            total += v
        return total

    def substitute(self, values: Mapping[int, Scalar]) -> "Polynomial":
        """Partially substitute variables (0-based index -> rational value).

        The result keeps the original dimension; substituted variables
        simply no longer occur.
        """
        acc: dict[MultiIndex, Fraction] = {}
        for alpha, c in self.terms.items():
            v = c
            beta = list(alpha)
            for i, val in values.items():
                e = alpha[i]
                if e:
                    v *= Fraction(val) ** e
                beta[i] = 0
            if v != 0:
                key = tuple(beta)
                acc[key] = acc.get(key, Fraction(0)) + v
        return Polynomial(self.dimension, acc)

    def __str__(self) -> str:
        return format_polynomial(self)

    def __repr__(self) -> str:
        return f"Polynomial({self.dimension}, {format_polynomial(self)!r})"


# -- rendering ----------------------------------------------------------


def _format_coeff(c: Fraction) -> str:
    return str(c)  # Fraction renders as p/q or p


def _format_term(alpha: MultiIndex, c: Fraction) -> str:
    factors = []
    for i, e in enumerate(alpha):
        if e == 0:
            continue
        name = f"x{i + 1}"
        factors.append(name if e == 1 else f"{name}^{e}")
    mag = abs(c)
    if not factors:
        return _format_coeff(mag)
    if mag == 1:
        return "*".join(factors)
    return "*".join([_format_coeff(mag)] + factors)


def format_polynomial(p: Polynomial) -> str:
    if p.is_zero():
        return "0"
    parts: list[str] = []
    for alpha, c in p.iter_terms():
        body = _format_term(alpha, c)
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f"+ {body}" if c > 0 else f"- {body}")
    return " ".join(parts)


# -- parsing ------------------------------------------------------------


class PolyParseError(ValueError):
    """Raised when polynomial text does not match the grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.reason = message
        self.position = position


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d+|\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens: list[tuple[str, str, int]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip() == "":
                break
            while text[pos].isspace():
                pos += 1
            raise PolyParseError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        assert kind is not None
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return tokens


def parse_polynomial(
    text: str,
    dimension: int,
    variables: Mapping[str, int] | None = None,
) -> Polynomial:
    """Parse polynomial text into a Polynomial.

    ``variables`` maps variable names to 0-based indices; by default the
    canonical names ``x1 .. xn`` are used.  The accepted grammar is the
    one produced by :func:`format_polynomial`: a signed sum of terms,
    where each term is a product of integer/decimal/rational literals
    and powers like ``x1^4``, with ``*`` optional.  Decimal literals are
    converted exactly (``0.9999`` becomes 9999/10000).  A ``/`` divides
    the accumulated coefficient by an integer literal, so ``x1^2/3``
    reads as (1/3)*x1^2.
    """
    if variables is None:
        variables = {f"x{i + 1}": i for i in range(dimension)}
    tokens = _tokenize(text)
    if not tokens:
        raise PolyParseError("empty polynomial", 0)

    terms: dict[MultiIndex, Fraction] = {}
    i = 0
    n_tok = len(tokens)

    while i < n_tok:
        sign = Fraction(1)
        # leading sign(s) of the term
        while i < n_tok and tokens[i][0] == "op" and tokens[i][1] in "+-":
            if tokens[i][1] == "-":
                sign = -sign
            i += 1
        if i >= n_tok:
            raise PolyParseError("dangling sign", tokens[-1][2])

        coeff = sign
        expo = [0] * dimension
        saw_factor = False

        while i < n_tok:
            kind, value, pos = tokens[i]
            if kind == "op" and value in "+-":
                break
            if kind == "op" and value in "*/":
                if not saw_factor:
                    raise PolyParseError(f"unexpected {value!r}", pos)
                divide = value == "/"
                i += 1
                if i >= n_tok:
                    raise PolyParseError(f"dangling {value!r}", pos)
                kind, value, pos = tokens[i]
                if divide:
                    if kind != "number":
                        raise PolyParseError("can only divide by a numeric literal", pos)
                    q = Fraction(value)
                    if q == 0:
                        raise PolyParseError("division by zero", pos)
                    coeff /= q
                    i += 1
                    saw_factor = True
                    continue
                # fall through: the token after '*' is parsed as a factor below
            elif kind == "op" and value == "^":
                raise PolyParseError("unexpected '^'", pos)
            elif saw_factor and kind in ("number", "name"):
                pass  # implicit multiplication by juxtaposition
            if kind == "number":
                coeff *= Fraction(value)
                i += 1
                saw_factor = True
                continue
            if kind == "name":
                if value not in variables:
                    raise PolyParseError(f"unknown variable {value!r}", pos)
                vi = variables[value]
                power = 1
                i += 1
                if i < n_tok and tokens[i][0] == "op" and tokens[i][1] == "^":
                    caret = tokens[i][2]
                    i += 1
                    if i >= n_tok or tokens[i][0] != "number" or "." in tokens[i][1]:
                        where = tokens[i][2] if i < n_tok else caret
                        raise PolyParseError("expected integer exponent after '^'", where)
                    power = int(tokens[i][1])
                    i += 1
                expo[vi] += power
                saw_factor = True
                continue
            raise PolyParseError(f"unexpected token {value!r}", pos)

        if not saw_factor:
            raise PolyParseError("empty term", tokens[i - 1][2] if i else 0)
        key = tuple(expo)
        terms[key] = terms.get(key, Fraction(0)) + coeff

    return Polynomial(dimension, terms)


# -- vector fields ------------------------------------------------------


class VectorField:
    """A polynomial vector field f with f(0) = 0.

    Components are indexed from 0; component i gives dx_{i+1}/dt.
    """

    __slots__ = ("dimension", "components")

    dimension: int
    components: tuple[Polynomial, ...]

    def __init__(self, components: Iterable[Polynomial]):
        comps = tuple(components)
        if not comps:
            raise ValueError("vector field needs at least one component")
        dim = comps[0].dimension
        if len(comps) != dim:
            raise ValueError(f"{len(comps)} components for dimension {dim}")
        for j, p in enumerate(comps):
            if p.dimension != dim:
                raise ValueError(f"component {j + 1} has dimension {p.dimension}, expected {dim}")
            if p.constant_term != 0:
                raise ValueError(f"component {j + 1} has a constant term; the origin must be an equilibrium")
        object.__setattr__(self, "dimension", dim)
        object.__setattr__(self, "components", comps)

    def __setattr__(self, name: str, value) -> None:
        raise AttributeError("VectorField is immutable")

    def evaluate(self, point: Sequence[Scalar]) -> tuple[Fraction, ...]:
        return tuple(p.evaluate(point) for p in self.components)

    def max_degree(self) -> int:
        return max(p.highest_degree or 0 for p in self.components)

    def linear_part(self) -> list[list[Fraction]]:
        """Jacobian at the origin as a dense row-major matrix."""
        jac = []
        for p in self.components:
            row = [Fraction(0)] * self.dimension
            for alpha, c in p.terms.items():
                if total_degree(alpha) == 1:
                    row[alpha.index(1)] = c
            jac.append(row)
        return jac

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, VectorField):
            return NotImplemented
        return self.components == other.components

    def __repr__(self) -> str:
        body = ", ".join(str(p) for p in self.components)
        return f"VectorField([{body}])"
