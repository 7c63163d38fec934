"""Symbolic pruning of Lyapunov templates via nonpositivity constraints.

For V_dot = grad(V) . f to be nonpositive everywhere, its monomial
structure must satisfy a handful of necessary conditions.  Writing l and
k for the lowest and highest total degree present, and treating every
parametric coefficient as generically nonzero:

* extreme layers: if l (or k) is odd, the whole homogeneous layer of
  that degree must vanish, because the layer dominates the sign of
  V_dot near zero (resp. near infinity) along some ray and an
  odd-degree layer changes sign with the ray direction;
* max exponent: for each variable x_i, the largest exponent of x_i
  over all monomials must be even, otherwise scaling x_i alone makes
  the dominating sub-sum change sign, so every monomial attaining an
  odd maximum must vanish;
* layer max exponent: the same per-variable test applied inside the
  extreme layers l and k separately;
* pure powers: among monomials c * x_i^d in x_i alone, the lowest and
  highest degree d dominate on the x_i axis, so d odd forces c = 0 and
  d even forces c <= 0.

Equalities are affine in the template parameters, so they can be solved
exactly and substituted back, after which the analysis repeats on the
smaller template until no new equality appears.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction

from lyra.lie import lie_derivative
from lyra.poly import MultiIndex, VectorField, total_degree
from lyra.template import AffineForm, Param, ParamPoly, apply_equalities

__all__ = [
    "ReductionConstraint",
    "ReductionResult",
    "extract_constraints",
    "reduce_to_fixpoint",
]

RULE_EXTREME_LAYER = "R1-extreme-layer"
RULE_MAX_EXPONENT = "R2-max-exponent"
RULE_LAYER_MAX_EXPONENT = "R3-layer-max-exponent"
RULE_PURE_POWER = "R4-pure-power"


@dataclass(frozen=True)
class ReductionConstraint:
    """One necessary condition on the template parameters.

    kind is "equality" (form = 0) or "nonpositive" (form <= 0); rule
    records which structural test produced it and monomial which term
    it came from.
    """

    kind: str
    form: AffineForm
    rule: str
    monomial: MultiIndex

    def __str__(self) -> str:
        rel = "= 0" if self.kind == "equality" else "<= 0"
        return f"{self.form} {rel}  [{self.rule} @ {self.monomial}]"


def _pure_power_variable(alpha: MultiIndex) -> int | None:
    """Index of the single variable if alpha is a pure power, else None."""
    nz = [i for i, e in enumerate(alpha) if e > 0]
    return nz[0] if len(nz) == 1 else None


def _max_exponent_constraints(
    terms: dict[MultiIndex, AffineForm], rule: str
) -> list[ReductionConstraint]:
    """Equalities for monomials attaining an odd per-variable max exponent."""
    out: list[ReductionConstraint] = []
    if not terms:
        return out
    dim = len(next(iter(terms)))
    for i in range(dim):
        m = max(a[i] for a in terms)
        if m > 0 and m % 2 == 1:
            for alpha, form in terms.items():
                if alpha[i] == m:
                    out.append(ReductionConstraint("equality", form, rule, alpha))
    return out


def extract_constraints(p: ParamPoly) -> list[ReductionConstraint]:
    """Necessary conditions for ``p <= 0`` on all of R^n.

    Every affine coefficient is treated as generically nonzero.  The
    returned list is deduplicated on (kind, form): when several rules
    force the same form, only the first occurrence is kept, in rule
    order R1, R2, R3, R4.
    """
    constraints: list[ReductionConstraint] = []
    if p.is_zero():
        return constraints
    lo = p.lowest_degree
    hi = p.highest_degree
    assert lo is not None and hi is not None

    layer_lo = p.homogeneous_layer(lo).terms
    layer_hi = p.homogeneous_layer(hi).terms

    # R1: odd extreme layers must vanish entirely.
    for deg, layer in ((lo, layer_lo), (hi, layer_hi)):
        if deg % 2 == 1:
            for alpha, form in layer.items():
                constraints.append(
                    ReductionConstraint("equality", form, RULE_EXTREME_LAYER, alpha)
                )

    # R2: per-variable max exponent over the whole polynomial must be even.
    constraints.extend(_max_exponent_constraints(p.terms, RULE_MAX_EXPONENT))

    # R3: the same, within each extreme layer.
    constraints.extend(_max_exponent_constraints(layer_lo, RULE_LAYER_MAX_EXPONENT))
    if hi != lo:
        constraints.extend(_max_exponent_constraints(layer_hi, RULE_LAYER_MAX_EXPONENT))

    # R4: extreme pure powers of each variable dominate on the axis.
    pure_by_var: dict[int, list[tuple[int, MultiIndex, AffineForm]]] = {}
    for alpha, form in p.terms.items():
        i = _pure_power_variable(alpha)
        if i is not None:
            pure_by_var.setdefault(i, []).append((total_degree(alpha), alpha, form))
    for i, entries in sorted(pure_by_var.items()):
        entries.sort(key=lambda t: (t[0], t[1]))
        extremes = [entries[0]]
        if entries[-1] is not entries[0]:
            extremes.append(entries[-1])
        for deg, alpha, form in extremes:
            if deg % 2 == 1:
                constraints.append(
                    ReductionConstraint("equality", form, RULE_PURE_POWER, alpha)
                )
            else:
                constraints.append(
                    ReductionConstraint("nonpositive", form, RULE_PURE_POWER, alpha)
                )

    seen: set[tuple[str, AffineForm]] = set()
    unique: list[ReductionConstraint] = []
    for c in constraints:
        key = (c.kind, c.form)
        if key not in seen:
            seen.add(key)
            unique.append(c)
    return unique


STATUS_OK = "OK"
STATUS_COLLAPSED = "COLLAPSED"
STATUS_INFEASIBLE = "INFEASIBLE"


@dataclass
class ReductionResult:
    """Outcome of iterating extraction and substitution to a fixpoint.

    status is OK for a nonzero reduced template, COLLAPSED when every
    parameter was eliminated to zero, and INFEASIBLE when a constraint
    with no parameters is violated outright (a concrete coefficient
    that cannot be fixed by any parameter choice).
    """

    status: str
    template: ParamPoly
    lie: ParamPoly
    substitutions: dict[Param, AffineForm]
    equalities: list[ReductionConstraint] = dataclass_field(default_factory=list)
    pending: list[ReductionConstraint] = dataclass_field(default_factory=list)
    iterations: int = 0
    detail: str | None = None

    @property
    def infeasible(self) -> bool:
        return self.status != STATUS_OK


def _violated_constant(c: ReductionConstraint) -> bool:
    form = c.form
    if not form.is_constant():
        return False
    if c.kind == "equality":
        return form.constant != 0
    return form.constant > 0


def reduce_to_fixpoint(
    template: ParamPoly, field: VectorField, max_iterations: int | None = None
) -> ReductionResult:
    """Apply every derivable equality to the template until none remain.

    Each round recomputes the Lie derivative of the current template,
    extracts constraints, and substitutes the solved equalities.  The
    parameter count strictly decreases each applied round, so the loop
    terminates after at most (number of parameters) rounds.  Pending
    nonpositivity constraints from the final round are reported in the
    surviving parameters for downstream solvers to assert.
    """
    current = template
    substitutions: dict[Param, AffineForm] = {}
    applied: list[ReductionConstraint] = []
    iterations = 0
    if max_iterations is None:
        max_iterations = len(template.params()) + 1

    for _ in itertools.count():
        vdot = lie_derivative(current, field)
        assert isinstance(vdot, ParamPoly)
        constraints = extract_constraints(vdot)

        for c in constraints:
            if _violated_constant(c):
                return ReductionResult(
                    STATUS_INFEASIBLE,
                    current,
                    vdot,
                    substitutions,
                    applied,
                    [],
                    iterations,
                    detail=f"unsatisfiable constraint: {c}",
                )

        equalities = [c for c in constraints if c.kind == "equality" and not c.form.is_zero()]
        if not equalities:
            pending = []
            for c in constraints:
                if c.kind == "nonpositive" and not c.form.is_constant():
                    pending.append(c)
            return ReductionResult(
                STATUS_OK, current, vdot, substitutions, applied, pending, iterations
            )

        reduced, solution = apply_equalities(current, [c.form for c in equalities])
        applied.extend(equalities)
        # fold the new solution into the accumulated substitution map
        substitutions = {p: f.substitute(solution) for p, f in substitutions.items()}
        substitutions.update(solution)
        iterations += 1
        current = reduced

        if current.is_zero():
            return ReductionResult(
                STATUS_COLLAPSED,
                current,
                ParamPoly(template.dimension),
                substitutions,
                applied,
                [],
                iterations,
                detail="all template parameters were eliminated",
            )
        if iterations > max_iterations:
            raise RuntimeError("reduction failed to reach a fixpoint; this is a bug")
