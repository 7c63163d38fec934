"""Exact certification of candidate Lyapunov functions.

Every check here is sound by construction: VALID is only ever reported
when an SMT solver proves the defining inequality over all of R^n (or
when a conservative syntactic rule applies), and INVALID always carries
a counterexample point that has been re-confirmed in exact rational
arithmetic.  The numeric falsifier is a cheap incomplete search used to
short-circuit obviously bad candidates and as a last resort when no
solver is configured; it can only ever produce INVALID or nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from random import Random
from typing import Sequence

from lyra.lasalle import DEFAULT_R_MAX, lasalle_scan
from lyra.lie import lie_derivative
from lyra.poly import Polynomial, VectorField, total_degree
from lyra.smt import (
    And,
    QuantifiedFormula,
    SolverNotFoundError,
    SolverRunner,
    atom,
    emit,
    sum_of_squares_positive,
)

__all__ = [
    "VerificationOutcome",
    "certificate_ok",
    "check_instability",
    "check_lasalle",
    "check_pd",
    "check_ru",
    "check_sign",
    "falsify_numeric",
    "first_counterexample",
    "shrink_counterexample",
    "verify_certificate",
]

VALID = "VALID"
INVALID = "INVALID"
UNKNOWN = "UNKNOWN"
TIMEOUT = "TIMEOUT"


@dataclass
class VerificationOutcome:
    check: str
    verdict: str
    counterexample: tuple[Fraction, ...] | None = None
    detail: str | None = None
    lasalle_r: int | None = None

    def __post_init__(self) -> None:
        if self.verdict == INVALID and self.counterexample is None:
            raise ValueError("INVALID requires a confirmed counterexample")

    @property
    def ok(self) -> bool:
        return self.verdict == VALID


def _names(dim: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(dim))


_GOAL_TESTS = {
    ">": lambda v: v > 0,
    ">=": lambda v: v >= 0,
    "<": lambda v: v < 0,
    "<=": lambda v: v <= 0,
}


def falsify_numeric(
    p: Polynomial,
    goal: str,
    budget: int = 10000,
    rng: Random | None = None,
    halfwidth: int = 10,
) -> tuple[Fraction, ...] | None:
    """Search for a nonzero rational point with ``p(x) goal 0``.

    Three probe families share the budget: uniform rational points in a
    box, scaled rays lambda * d with lambda = +/- 2^j (monomials of the
    extreme degrees dominate far out or near zero along rays), and
    per-coordinate scalings d_i * 2^(j_i) which catch sign changes that
    only show up under very skewed aspect ratios.  All evaluation is
    exact, so a returned point is a genuine witness, but failure to find
    one proves nothing.
    """
    if goal not in _GOAL_TESTS:
        raise ValueError(f"goal must be one of {sorted(_GOAL_TESTS)}")
    test = _GOAL_TESTS[goal]
    rng = rng or Random(0)
    n = p.dimension

    def hit(point: Sequence[Fraction]) -> bool:
        return any(point) and test(p.evaluate(point))

    def random_point() -> tuple[Fraction, ...]:
        return tuple(
            Fraction(rng.randint(-100 * halfwidth, 100 * halfwidth), 100) for _ in range(n)
        )

    spent = 0
    box_budget = (2 * budget) // 5
    while spent < box_budget:
        pt = random_point()
        spent += 1
        if hit(pt):
            return pt

    ray_budget = spent + (3 * (budget - spent)) // 5
    while spent < ray_budget:
        d = random_point()
        if not any(d):
            spent += 1
            continue
        j = rng.randint(0, 20)
        lam = Fraction(2) ** j if rng.random() < 0.5 else -(Fraction(2) ** j)
        pt = tuple(lam * di for di in d)
        spent += 1
        if hit(pt):
            return pt

    while spent < budget:
        d = random_point()
        pt = tuple(
            di * (Fraction(2) ** rng.randint(0, 40)) * (1 if rng.random() < 0.5 else -1)
            for di in d
        )
        spent += 1
        if hit(pt):
            return pt
    return None


def _confirmed(p: Polynomial, point: Sequence[Fraction], goal: str) -> bool:
    return any(point) and _GOAL_TESTS[goal](p.evaluate(point))


def shrink_counterexample(
    p: Polynomial, goal: str, point: Sequence[Fraction], floor: int = 1
) -> tuple[Fraction, ...]:
    """Halve a witness toward the origin while it still witnesses.

    Probe searches tend to return points of astronomical magnitude
    (violations along skewed rays first become visible far out); the
    smallest-scale witness carries the same information and keeps the
    numbers manageable for reporting and for CEGIS sample rows.  Points
    already inside the box of half-width ``floor`` are left alone.
    """
    current = tuple(Fraction(v) for v in point)
    test = _GOAL_TESTS[goal]
    while max(abs(v) for v in current) > floor:
        half = tuple(v / 2 for v in current)
        if any(half) and test(p.evaluate(half)):
            current = half
        else:
            break
    return current


def _refutation_query(p: Polynomial, goal: str, exclude_origin: bool) -> QuantifiedFormula:
    names = _names(p.dimension)
    side = [atom(p, names, goal)]
    if exclude_origin:
        side.insert(0, sum_of_squares_positive(names))
    return QuantifiedFormula(free_consts=names, side=tuple(side))


def _run_refutation(
    check: str,
    p: Polynomial,
    goal: str,
    exclude_origin: bool,
    runner: SolverRunner | None,
    timeout_s: float | None,
    rng: Random | None,
    falsify_budget: int = 400,
) -> VerificationOutcome:
    """Shared engine: VALID iff no nonzero x satisfies ``p goal 0``."""
    pt = falsify_numeric(p, goal, budget=falsify_budget, rng=rng)
    if pt is not None:
        pt = shrink_counterexample(p, goal, pt)
        return VerificationOutcome(check, INVALID, counterexample=pt, detail="numeric probe")
    if runner is None:
        try:
            from lyra.smt import get_default_runner

            runner = get_default_runner()
        except SolverNotFoundError:
            return VerificationOutcome(check, UNKNOWN, detail="no SMT solver configured")
    names = _names(p.dimension)
    query = _refutation_query(p, goal, exclude_origin)
    result = runner.run(emit(query), timeout_s=timeout_s, model_names=names)
    if result.verdict == "unsat":
        return VerificationOutcome(check, VALID)
    if result.verdict == "sat":
        assert result.model is not None
        point = tuple(result.model[n] for n in names)
        if _confirmed(p, point, goal) and (not exclude_origin or any(point)):
            point = shrink_counterexample(p, goal, point)
            return VerificationOutcome(check, INVALID, counterexample=point, detail="solver model")
        return VerificationOutcome(
            check, UNKNOWN, detail="solver model failed exact confirmation"
        )
    if result.verdict == "timeout":
        return VerificationOutcome(check, TIMEOUT, detail="solver timeout")
    return VerificationOutcome(check, UNKNOWN, detail=result.detail or result.verdict)


def check_pd(
    V: Polynomial,
    runner: SolverRunner | None = None,
    timeout_s: float | None = 10.0,
    rng: Random | None = None,
) -> VerificationOutcome:
    """Is V zero at the origin and positive everywhere else?"""
    if V.constant_term > 0:
        return VerificationOutcome(
            "positive-definite", UNKNOWN, detail="V(0) > 0, so V cannot vanish at the origin"
        )
    # V(0) < 0 falls through: continuity guarantees nearby nonzero
    # points with V <= 0, which the refutation search will find.
    return _run_refutation("positive-definite", V, "<=", True, runner, timeout_s, rng)


def _pure_even_positive(V: Polynomial) -> bool:
    covered = set()
    for alpha, c in V.terms.items():
        nonzero = [(i, e) for i, e in enumerate(alpha) if e > 0]
        if len(nonzero) != 1 or nonzero[0][1] % 2 == 1 or c <= 0:
            return False
        covered.add(nonzero[0][0])
    return covered == set(range(V.dimension))


def check_ru(
    V: Polynomial,
    runner: SolverRunner | None = None,
    timeout_s: float | None = 10.0,
    rng: Random | None = None,
) -> VerificationOutcome:
    """Is V radially unbounded?  Conservative sufficient checks only.

    Either every monomial is a positively weighted pure even power (so
    V grows without bound in every direction), or the top homogeneous
    layer is positive definite (it eventually dominates along every
    ray).  Anything else is UNKNOWN, never INVALID.
    """
    if V.is_zero():
        return VerificationOutcome("radially-unbounded", UNKNOWN, detail="zero candidate")
    if _pure_even_positive(V):
        return VerificationOutcome(
            "radially-unbounded", VALID, detail="positively weighted pure even powers"
        )
    top = V.homogeneous_layer(V.highest_degree or 0)
    outcome = _run_refutation(
        "radially-unbounded", top, "<=", True, runner, timeout_s, rng
    )
    if outcome.verdict == VALID:
        outcome.detail = "top homogeneous layer is positive definite"
        return outcome
    if outcome.verdict == TIMEOUT:
        return outcome
    return VerificationOutcome(
        "radially-unbounded", UNKNOWN, detail="sufficient conditions inconclusive"
    )


def check_sign(
    p: Polynomial,
    strictness: str,
    runner: SolverRunner | None = None,
    timeout_s: float | None = 10.0,
    rng: Random | None = None,
    check_name: str | None = None,
) -> VerificationOutcome:
    """Certify a sign condition for p over R^n.

    strictness "negative-definite" requires p < 0 away from the origin;
    "nonpositive" requires p <= 0 everywhere.
    """
    if strictness == "negative-definite":
        name = check_name or "derivative-negative-definite"
        return _run_refutation(name, p, ">=", True, runner, timeout_s, rng)
    if strictness == "nonpositive":
        name = check_name or "derivative-nonpositive"
        return _run_refutation(name, p, ">", False, runner, timeout_s, rng)
    raise ValueError(f"unknown strictness {strictness!r}")


def check_lasalle(
    V: Polynomial,
    field: VectorField,
    r_max: int = DEFAULT_R_MAX,
    runner: SolverRunner | None = None,
    timeout_s: float | None = 10.0,
) -> VerificationOutcome:
    """Scan derivative orders for an invariance certificate.

    The condition is only sufficient, so a counterexample at every
    order leaves the overall question open: the verdict is then UNKNOWN
    rather than INVALID.
    """
    scan = lasalle_scan(V, field, r_max=r_max, runner=runner, timeout_s=timeout_s)
    if scan.status == "verified":
        return VerificationOutcome(
            "lasalle", VALID, lasalle_r=scan.r, detail=f"{scan.variant} order {scan.r}"
        )
    if scan.status == "timeout":
        return VerificationOutcome("lasalle", TIMEOUT, detail="solver timeout at every order")
    if scan.status == "blowup":
        return VerificationOutcome("lasalle", UNKNOWN, detail="derivative chain too large")
    return VerificationOutcome(
        "lasalle", UNKNOWN, detail=f"no order up to {r_max} certified"
    )


def check_instability(
    V: Polynomial,
    field: VectorField,
    z: Sequence[Fraction],
    runner: SolverRunner | None = None,
    timeout_s: float | None = 10.0,
    rng: Random | None = None,
    spot_checks: int = 10000,
) -> dict[str, VerificationOutcome]:
    """Confirm an instability certificate (V, z).

    Requires V(z) < V(0) by exact evaluation and the global implication
    V(x) <= 0  =>  V_dot(x) <= 0, checked both at random integer points
    and by an UNSAT proof of its negation.
    """
    rng = rng or Random(0)
    outcomes: dict[str, VerificationOutcome] = {}
    z = tuple(Fraction(v) for v in z)
    v0 = V.evaluate([Fraction(0)] * V.dimension)
    if V.evaluate(z) < v0:
        outcomes["witness-point"] = VerificationOutcome("witness-point", VALID)
    else:
        outcomes["witness-point"] = VerificationOutcome(
            "witness-point", UNKNOWN, detail=f"V(z) = {V.evaluate(z)} is not below V(0) = {v0}"
        )
        return outcomes

    vdot = lie_derivative(V, field)
    assert isinstance(vdot, Polynomial)
    for _ in range(spot_checks):
        pt = [rng.randint(-10, 10) for _ in range(V.dimension)]
        if V.evaluate(pt) <= 0 and vdot.evaluate(pt) > 0:
            outcomes["instability-implication"] = VerificationOutcome(
                "instability-implication",
                INVALID,
                counterexample=tuple(Fraction(v) for v in pt),
                detail="random spot check",
            )
            return outcomes

    if runner is None:
        try:
            from lyra.smt import get_default_runner

            runner = get_default_runner()
        except SolverNotFoundError:
            outcomes["instability-implication"] = VerificationOutcome(
                "instability-implication", UNKNOWN, detail="no SMT solver configured"
            )
            return outcomes
    names = _names(V.dimension)
    query = QuantifiedFormula(
        free_consts=names,
        side=(atom(V, names, "<="), atom(vdot, names, ">")),
    )
    result = runner.run(emit(query), timeout_s=timeout_s, model_names=names)
    if result.verdict == "unsat":
        outcomes["instability-implication"] = VerificationOutcome(
            "instability-implication", VALID
        )
    elif result.verdict == "sat":
        assert result.model is not None
        point = tuple(result.model[n] for n in names)
        if V.evaluate(point) <= 0 and vdot.evaluate(point) > 0:
            outcomes["instability-implication"] = VerificationOutcome(
                "instability-implication", INVALID, counterexample=point
            )
        else:
            outcomes["instability-implication"] = VerificationOutcome(
                "instability-implication", UNKNOWN, detail="model failed exact confirmation"
            )
    elif result.verdict == "timeout":
        outcomes["instability-implication"] = VerificationOutcome(
            "instability-implication", TIMEOUT
        )
    else:
        outcomes["instability-implication"] = VerificationOutcome(
            "instability-implication", UNKNOWN, detail=result.detail or result.verdict
        )
    return outcomes


def verify_certificate(
    V: Polynomial,
    field: VectorField,
    mode: str,
    runner: SolverRunner | None = None,
    timeout_s: float | None = 10.0,
    r_max: int = DEFAULT_R_MAX,
    rng: Random | None = None,
) -> dict[str, VerificationOutcome]:
    """Run the full check pipeline for a stability certificate.

    mode "strict" checks positive definiteness, radial unboundedness
    and strictly negative drift; mode "weak" swaps the drift check for
    nonpositivity plus the invariance scan.  Checks run in that order
    and the pipeline stops at the first non-VALID outcome.
    """
    if mode not in ("strict", "weak"):
        raise ValueError(f"unknown mode {mode!r}")
    outcomes: dict[str, VerificationOutcome] = {}

    out = check_pd(V, runner, timeout_s, rng)
    outcomes[out.check] = out
    if not out.ok:
        return outcomes

    out = check_ru(V, runner, timeout_s, rng)
    outcomes[out.check] = out
    if not out.ok:
        return outcomes

    vdot = lie_derivative(V, field)
    assert isinstance(vdot, Polynomial)
    if mode == "strict":
        out = check_sign(vdot, "negative-definite", runner, timeout_s, rng)
        outcomes[out.check] = out
        return outcomes

    out = check_sign(vdot, "nonpositive", runner, timeout_s, rng)
    outcomes[out.check] = out
    if not out.ok:
        return outcomes
    out = check_lasalle(V, field, r_max, runner, timeout_s)
    outcomes[out.check] = out
    return outcomes


def certificate_ok(outcomes: dict[str, VerificationOutcome]) -> bool:
    return bool(outcomes) and all(o.ok for o in outcomes.values())


def first_counterexample(
    outcomes: dict[str, VerificationOutcome],
) -> tuple[Fraction, ...] | None:
    for o in outcomes.values():
        if o.counterexample is not None:
            return o.counterexample
    return None
