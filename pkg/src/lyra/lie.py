"""Lie derivatives of scalar functions along polynomial vector fields.

The first Lie derivative of V along f is grad(V) . f, the time
derivative of V along trajectories.  Higher orders iterate the same
operator.  Both concrete polynomials and parametric templates are
supported; for templates the derivative stays affine in the parameters.
"""

from __future__ import annotations

from lyra.poly import Polynomial, VectorField
from lyra.template import ParamPoly

__all__ = ["ChainTermLimitError", "LieChain", "lie_chain", "lie_derivative"]

DEFAULT_TERM_LIMIT = 20000


class ChainTermLimitError(RuntimeError):
    """A Lie derivative grew past the configured term budget."""

    def __init__(self, order: int, count: int, limit: int):
        super().__init__(
            f"Lie derivative of order {order} has {count} terms, over the limit of {limit}"
        )
        self.order = order
        self.count = count
        self.limit = limit


def lie_derivative(V: Polynomial | ParamPoly, field: VectorField) -> Polynomial | ParamPoly:
    """grad(V) . f, for concrete or parametric V."""
    if V.dimension != field.dimension:
        raise ValueError("V and the field have different dimensions")
    if isinstance(V, ParamPoly):
        total = ParamPoly(V.dimension)
        for i, fi in enumerate(field.components):
            total = total + V.partial(i).mul_poly(fi)
        return total
    total = Polynomial.zero(V.dimension)
    for i, fi in enumerate(field.components):
        total = total + V.partial(i) * fi
    return total


class LieChain:
    """Lazily extended sequence V, L_f V, L_f^2 V, ...

    Derivatives are cached as they are computed so that scans over
    increasing orders reuse every prefix.
    """

    def __init__(
        self,
        V: Polynomial | ParamPoly,
        field: VectorField,
        term_limit: int = DEFAULT_TERM_LIMIT,
    ):
        if V.dimension != field.dimension:
            raise ValueError("V and the field have different dimensions")
        self.base = V
        self.field = field
        self.term_limit = term_limit
        self._derivs: list[Polynomial | ParamPoly] = []

    def derivative(self, order: int) -> Polynomial | ParamPoly:
        """L_f^order V; order 0 is V itself."""
        if order < 0:
            raise ValueError("order must be nonnegative")
        if order == 0:
            return self.base
        while len(self._derivs) < order:
            prev = self._derivs[-1] if self._derivs else self.base
            nxt = lie_derivative(prev, self.field)
            count = len(nxt.terms)
            if count > self.term_limit:
                raise ChainTermLimitError(len(self._derivs) + 1, count, self.term_limit)
            self._derivs.append(nxt)
        return self._derivs[order - 1]

    @property
    def computed_order(self) -> int:
        return len(self._derivs)


def lie_chain(
    V: Polynomial | ParamPoly,
    field: VectorField,
    order: int,
    term_limit: int = DEFAULT_TERM_LIMIT,
) -> LieChain:
    """Build a chain with derivatives up to the given order precomputed."""
    chain = LieChain(V, field, term_limit)
    chain.derivative(order)
    return chain
