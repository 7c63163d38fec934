"""Invariance-based relaxation of strict Lyapunov decrease.

A weak certificate only guarantees V_dot <= 0.  Asymptotic stability
then follows if no trajectory other than the origin stays inside
{V_dot = 0} forever.  A checkable sufficient condition: on that set
(minus the origin) some higher-order Lie derivative must be nonzero,
since a trajectory trapped in the common zero set of all derivatives
up to every order would have V frozen along it.

Two encodings are provided for a given order r:

* single: (L_f V = 0 and x != 0)  implies  L_f^r V != 0
* disjunctive: (L_f V = 0 and x != 0)  implies
  (L_f^2 V != 0 or ... or L_f^r V != 0)

The single form at some r implies the disjunctive form at the same r,
and is cheaper for the solver, so scans try single orders first and
fall back to the disjunctive form once at the largest order.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

from lyra.lie import ChainTermLimitError, DEFAULT_TERM_LIMIT, LieChain
from lyra.poly import Polynomial, VectorField
from lyra.smt import (
    And,
    Atom,
    Implies,
    Or,
    QuantifiedFormula,
    SolverRunner,
    atom,
    sum_of_squares_positive,
)
from lyra.template import ParamPoly

__all__ = [
    "DEFAULT_R_MAX",
    "LaSalleScan",
    "build_lasalle",
    "counterexample_query",
    "lasalle_scan",
]

# Largest single-order encoding tried by default.  The benchmark corpus
# needs orders up to 7 (a derivative chain loses one power of the
# blocking variable per order), plus one step of margin.
DEFAULT_R_MAX = 8


def _state_names(dimension: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(dimension))


def build_lasalle(
    V: Polynomial | ParamPoly,
    field: VectorField,
    r: int,
    variant: str = "single",
    chain: LieChain | None = None,
) -> QuantifiedFormula:
    """The universal validity formula for order r.

    For a concrete V this has no free constants; for a parametric V the
    template parameters become the free constants, which is how the
    condition is conjoined into a synthesis query.
    """
    if r < 2:
        raise ValueError("the order must be at least 2")
    if variant not in ("single", "disjunctive"):
        raise ValueError(f"unknown variant {variant!r}")
    if chain is None:
        chain = LieChain(V, field)
    names = _state_names(field.dimension)
    first = chain.derivative(1)
    antecedent = And((atom(first, names, "="), sum_of_squares_positive(names)))
    if variant == "single":
        consequent: Atom | Or = atom(chain.derivative(r), names, "!=")
    else:
        consequent = Or(tuple(atom(chain.derivative(k), names, "!=") for k in range(2, r + 1)))
    params = tuple(p.name for p in V.params()) if isinstance(V, ParamPoly) else ()
    return QuantifiedFormula(
        free_consts=params,
        universal_vars=names,
        matrix=Implies(antecedent, consequent),
    )


def counterexample_query(chain: LieChain, r: int, variant: str = "single") -> QuantifiedFormula:
    """Existential query refuting the order-r condition for concrete V.

    Satisfiable iff some nonzero point has L_f V = 0 but every
    derivative required by the variant also zero; unsat certifies the
    condition.
    """
    names = _state_names(chain.field.dimension)
    side = [sum_of_squares_positive(names), atom(chain.derivative(1), names, "=")]
    orders = range(2, r + 1) if variant == "disjunctive" else (r,)
    for k in orders:
        side.append(atom(chain.derivative(k), names, "="))
    return QuantifiedFormula(free_consts=names, side=tuple(side))


@dataclass
class LaSalleScan:
    """Result of scanning orders 2..r_max.

    status: "verified" with the succeeding order and variant,
    "exhausted" when every encoding had a counterexample, "timeout"
    when no encoding verified and at least the final attempts timed
    out, or "blowup" when the derivative chain exceeded its term
    budget.
    """

    status: str
    r: int | None = None
    variant: str | None = None
    attempts: list[tuple[int, str, str]] = dataclass_field(default_factory=list)
    counterexample: tuple | None = None


def lasalle_scan(
    V: Polynomial,
    field: VectorField,
    r_max: int = DEFAULT_R_MAX,
    runner: SolverRunner | None = None,
    timeout_s: float | None = 10.0,
    term_limit: int = DEFAULT_TERM_LIMIT,
) -> LaSalleScan:
    """Find the smallest order whose condition the solver certifies."""
    if runner is None:
        from lyra.smt import get_default_runner

        runner = get_default_runner()
    chain = LieChain(V, field, term_limit)
    names = _state_names(field.dimension)
    scan = LaSalleScan("exhausted")
    saw_timeout = False
    plans = [(r, "single") for r in range(2, r_max + 1)]
    plans.append((r_max, "disjunctive"))
    for r, variant in plans:
        try:
            query = counterexample_query(chain, r, variant)
        except ChainTermLimitError:
            scan.status = "blowup"
            scan.attempts.append((r, variant, "term-limit"))
            return scan
        from lyra.smt import emit

        result = runner.run(emit(query), timeout_s=timeout_s, model_names=names)
        scan.attempts.append((r, variant, result.verdict))
        if result.verdict == "unsat":
            scan.status = "verified"
            scan.r = r
            scan.variant = variant
            return scan
        if result.verdict == "sat":
            if result.model is not None:
                scan.counterexample = tuple(result.model[n] for n in names)
            continue
        if result.verdict == "timeout":
            saw_timeout = True
    if scan.status != "verified" and saw_timeout:
        scan.status = "timeout"
    return scan
