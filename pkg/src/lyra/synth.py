"""Certificate synthesis.

Three routes produce candidate Lyapunov functions from a parametric
template, always after the symbolic reduction pass has eliminated
parameters that necessary conditions force to fixed values:

* complete: one exists-forall query over nonlinear real arithmetic;
  the solver picks the parameters and proves the conditions in the
  same call.
* lp CEGIS: strengthened sample constraints (a margin proportional to
  min(|y|^l, |y|^k) keeps the zero solution infeasible) are solved as
  a linear program in floating point, the solution is rounded to small
  rationals, and exact verification either accepts it or supplies a
  new counterexample sample.
* smt-sample CEGIS: the same loop, but the sample constraints are
  solved exactly as a quantifier-free SMT query without margins.

Instability certificates use the same machinery with the conditional
drift condition (V <= 0 implies V_dot <= 0) plus a point z where V is
negative; a verified pair (V, z) shows trajectories near z can never
reach the origin, refuting global asymptotic stability.

Reported witnesses are always exact rationals and every reported
status is backed by the verification module; a solver model that fails
exact re-checking downgrades the run to UNKNOWN, never to a wrong
certificate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field as dataclass_field, replace
from fractions import Fraction
from random import Random
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from lyra.lasalle import DEFAULT_R_MAX
from lyra.lie import LieChain, lie_derivative
from lyra.poly import Polynomial, VectorField, total_degree
from lyra.reduction import (
    STATUS_COLLAPSED,
    STATUS_INFEASIBLE,
    STATUS_OK,
    ReductionResult,
    reduce_to_fixpoint,
)
from lyra.smt import (
    And,
    Atom,
    Implies,
    QuantifiedFormula,
    SolverRunner,
    atom,
    emit,
    get_default_runner,
    spot_check_model,
    sum_of_squares_positive,
)
from lyra.template import (
    AffineForm,
    Param,
    ParamPoly,
    TemplateSpec,
    build_template,
)
from lyra.verify import (
    VerificationOutcome,
    certificate_ok,
    check_instability,
    falsify_numeric,
    first_counterexample,
    shrink_counterexample,
    verify_certificate,
)

__all__ = [
    "CertificateReport",
    "LinearConstraint",
    "SampleSet",
    "SynthesisConfig",
    "build_sample_constraints",
    "cegis",
    "default_template_spec",
    "synth_complete",
    "synth_instability",
]

GAS = "GAS"
GAS_LASALLE = "GAS_LASALLE"
NOT_GAS = "NOT_GAS"
UNKNOWN = "UNKNOWN"
TIMEOUT = "TIMEOUT"
TEMPLATE_INFEASIBLE = "TEMPLATE_INFEASIBLE"


@dataclass
class SynthesisConfig:
    """Knobs shared by all synthesis routes.

    mode "weak" synthesizes a nonstrict certificate and then runs the
    invariance scan during verification; with inline_lasalle the order
    condition is instead conjoined into the synthesis query for
    increasing orders.
    """

    method: str = "complete"  # complete | lp | smt-sample
    mode: str = "strict"  # strict | weak
    use_reduction: bool = True
    mu: Fraction = Fraction(1, 100)
    samples: int | None = None  # default 3000 for lp, 300 for smt-sample
    cegis_steps: int = 10
    rounding: bool = True
    rounding_denominator: int = 100
    box: int = 10
    timeout_s: float | None = 60.0
    verify_timeout_s: float | None = None
    r_max: int = DEFAULT_R_MAX
    inline_lasalle: bool = False
    seed: int = 0
    falsify_budget: int = 2000
    spot_checks: int = 10000
    term_limit: int = 20000

    def sample_count(self) -> int:
        if self.samples is not None:
            return self.samples
        return 3000 if self.method == "lp" else 300

    def verify_timeout(self) -> float | None:
        return self.verify_timeout_s if self.verify_timeout_s is not None else self.timeout_s


@dataclass
class CertificateReport:
    status: str
    witness: Polynomial | None = None
    witness_point: tuple[Fraction, ...] | None = None
    method: str = "complete"
    mode: str = "strict"
    system: str | None = None
    timings: dict[str, float] = dataclass_field(default_factory=dict)
    cegis_iterations: int = 0
    counterexamples_used: int = 0
    lasalle_r: int | None = None
    diagnostics: str | None = None
    checks: dict[str, VerificationOutcome] = dataclass_field(default_factory=dict)
    steps: list[dict] = dataclass_field(default_factory=list)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.status in (GAS, GAS_LASALLE, NOT_GAS) and self.witness is None:
            raise ValueError(f"status {self.status} requires a witness")

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "witness": str(self.witness) if self.witness is not None else None,
            "witness_point": [str(v) for v in self.witness_point]
            if self.witness_point is not None
            else None,
            "method": self.method,
            "mode": self.mode,
            "system": self.system,
            "timings": {k: round(v, 6) for k, v in self.timings.items()},
            "cegis_iterations": self.cegis_iterations,
            "counterexamples_used": self.counterexamples_used,
            "lasalle_r": self.lasalle_r,
            "diagnostics": self.diagnostics,
            "checks": {k: o.verdict for k, o in self.checks.items()},
            "seed": self.seed,
        }


def default_template_spec(field: VectorField) -> TemplateSpec:
    return TemplateSpec(field.dimension, 2, 2, "even", True)


def instability_template_spec(field: VectorField) -> TemplateSpec:
    """Default template for instability searches.

    Unlike a Lyapunov candidate, a certificate of instability need not
    be positive definite, and the most useful witnesses are often odd
    (a half-space functional a.x whose derivative is nonpositive where
    a.x <= 0).  So the default admits every monomial of degree 1 or 2.
    """
    return TemplateSpec(field.dimension, 1, 2, "all", True)


def _state_names(dim: int) -> tuple[str, ...]:
    return tuple(f"x{i + 1}" for i in range(dim))


def _pending_side_atoms(
    pending: Iterable[AffineForm], dim: int, names: tuple[str, ...]
) -> tuple[Atom, ...]:
    zero = (0,) * dim
    return tuple(Atom(ParamPoly(dim, {zero: form}), names, "<=") for form in pending)


@dataclass
class _Prepared:
    template: ParamPoly
    vdot: ParamPoly
    pending: list[AffineForm]
    reduction: ReductionResult | None
    infeasible_detail: str | None = None


def _prepare(field: VectorField, spec: TemplateSpec, config: SynthesisConfig) -> _Prepared:
    template = build_template(spec)
    if not config.use_reduction:
        vdot = lie_derivative(template, field)
        assert isinstance(vdot, ParamPoly)
        return _Prepared(template, vdot, [], None)
    result = reduce_to_fixpoint(template, field)
    if result.status in (STATUS_COLLAPSED, STATUS_INFEASIBLE):
        return _Prepared(
            result.template,
            result.lie,
            [],
            result,
            infeasible_detail=result.detail or result.status,
        )
    assert result.status == STATUS_OK
    pending = [c.form for c in result.pending]
    return _Prepared(result.template, result.lie, pending, result)


def _rationalize(
    assignment: dict[str, Fraction | float], max_denominator: int | None
) -> dict[str, Fraction]:
    out: dict[str, Fraction] = {}
    for name, value in assignment.items():
        q = Fraction(value)
        if max_denominator is not None:
            q = q.limit_denominator(max_denominator)
        out[name] = q
    return out


def _grid_round(
    assignment: dict[str, Fraction],
    denominator: int,
    scales: dict[str, Fraction] | None = None,
) -> dict[str, Fraction]:
    """Snap each value so its scaled image lands on the k/denominator grid.

    ``scales`` maps a parameter to the largest coefficient it carries in
    the template: constraint propagation can leave a parameter appearing
    as, say, ``2*c`` on one monomial and ``c`` on another, and the grid
    should apply to the polynomial's coefficients, not the bare
    parameter.  A parameter with scale 2 may therefore end up on the
    twice-finer grid.
    """
    out: dict[str, Fraction] = {}
    for name, value in assignment.items():
        m = scales.get(name, Fraction(1)) if scales else Fraction(1)
        if m <= 0:
            m = Fraction(1)
        out[name] = Fraction(round(float(value * m) * denominator), denominator) / m
    return out


def _param_form_scales(template: ParamPoly) -> dict[str, Fraction]:
    """Largest absolute coefficient each parameter carries in the template."""
    scales: dict[str, Fraction] = {}
    for form in template.terms.values():
        for p, q in form.terms.items():
            mag = abs(q)
            if mag > scales.get(p.name, Fraction(0)):
                scales[p.name] = mag
    return scales


def _cancellation_repairs(
    base: dict[str, Fraction],
    vdot: ParamPoly,
    denominator: int,
    scales: dict[str, Fraction] | None,
    limit: int = 6,
) -> list[dict[str, Fraction]]:
    """Grid neighbours of ``base`` that zero an almost-vanishing drift term.

    A valid certificate often requires some coefficient of V̇ to cancel
    exactly, and independent per-parameter rounding can land one grid
    step off that cancellation.  For every drift coefficient that some
    single parameter can zero by moving at most a few grid units, the
    adjusted assignment is proposed as an extra reading.
    """
    repairs: list[tuple[Fraction, str, dict[str, Fraction]]] = []
    seen: set[tuple] = set()
    for form in vdot.terms.values():
        val = form.constant + sum(
            (q * base[p.name] for p, q in form.terms.items()), Fraction(0)
        )
        if val == 0:
            continue
        for p, q in sorted(form.terms.items(), key=lambda it: it[0].name):
            if q == 0:
                continue
            m = scales.get(p.name, Fraction(1)) if scales else Fraction(1)
            if m <= 0:
                m = Fraction(1)
            # movement in grid units of p's own (scaled) grid
            steps = -val * denominator * m / q
            if steps.denominator != 1 or not 1 <= abs(steps) <= 3:
                continue
            moved = base[p.name] + Fraction(steps.numerator, denominator * m)
            variant = dict(base)
            variant[p.name] = moved
            key = tuple(sorted(variant.items()))
            if key not in seen:
                seen.add(key)
                repairs.append((abs(steps), p.name, variant))
    repairs.sort(key=lambda it: (it[0], it[1]))
    return [variant for _, _, variant in repairs[:limit]]


def _cegis_candidates(
    raw: dict[str, Fraction],
    config: SynthesisConfig,
    scales: dict[str, Fraction] | None = None,
    vdot: ParamPoly | None = None,
) -> list[dict[str, Fraction]]:
    """Rounded readings of a solver assignment, most promising first.

    Grid rounding to multiples of 1/denominator comes before the best
    rational approximation: margin floors sit at multiples of mu, and
    snapping to the grid restores exact cancellations between
    coefficients that the solver only achieves approximately.
    """
    raw = {name: Fraction(value) for name, value in raw.items()}
    if not config.rounding:
        return [raw]
    base = _grid_round(raw, config.rounding_denominator, scales)
    candidates = [base]
    if vdot is not None:
        for variant in _cancellation_repairs(
            base, vdot, config.rounding_denominator, scales
        ):
            if variant not in candidates:
                candidates.append(variant)
    approx = _rationalize(raw, config.rounding_denominator)
    if approx not in candidates:
        candidates.append(approx)
    if raw not in candidates:
        candidates.append(raw)
    return candidates


def _rows_hold(
    rows: list[LinearConstraint],
    pending: list[AffineForm],
    params: list[Param],
    named: dict[str, Fraction],
) -> bool:
    """Exact check of every sample row at a rounded assignment."""
    assignment = {p: named[p.name] for p in params}
    tests = {
        ">=": lambda v, r: v >= r,
        "<=": lambda v, r: v <= r,
        ">": lambda v, r: v > r,
        "<": lambda v, r: v < r,
    }
    for row in rows:
        if not tests[row.op](row.form.evaluate(assignment), row.rhs):
            return False
    return all(form.evaluate(assignment) <= 0 for form in pending)


def _points_hold(
    points: Iterable[tuple[Fraction, ...]],
    template: ParamPoly,
    vdot: ParamPoly,
    pending: list[AffineForm],
    named: dict[str, Fraction],
    strict: bool,
) -> bool:
    """Exact sign check of a candidate at every known sample point.

    Unlike the LP rows, this ignores the synthesis margins: a rounded
    candidate that satisfies the plain Lyapunov inequalities at every
    collected point is worth sending to the verifier even if it misses
    a strengthened margin somewhere.
    """
    assignment = {p: named[p.name] for p in template.params()}
    if any(form.evaluate(assignment) > 0 for form in pending):
        return False
    value = template.substitute(assignment)
    drift = vdot.substitute(assignment)
    for pt in points:
        if not any(pt):
            continue
        if value.evaluate(pt) <= 0:
            return False
        dv = drift.evaluate(pt)
        if dv > 0 or (strict and dv == 0):
            return False
    return True


def _instantiate(template: ParamPoly, named: dict[str, Fraction]) -> Polynomial:
    assignment = {p: named[p.name] for p in template.params()}
    return template.substitute(assignment)


# ---------------------------------------------------------------------------
# complete synthesis


def _synthesis_query(
    prepared: _Prepared,
    field: VectorField,
    strict: bool,
    inline_order: int | None = None,
    chain: LieChain | None = None,
) -> QuantifiedFormula:
    names = _state_names(field.dimension)
    params = tuple(p.name for p in prepared.template.params())
    not_origin = sum_of_squares_positive(names)
    conds: list = [atom(prepared.template, names, ">")]
    conds.append(atom(prepared.vdot, names, "<" if strict else "<="))
    if inline_order is not None:
        assert chain is not None
        conds.append(
            Implies(
                atom(prepared.vdot, names, "="),
                atom(chain.derivative(inline_order), names, "!="),
            )
        )
    matrix = Implies(not_origin, And(tuple(conds)))
    side = _pending_side_atoms(prepared.pending, field.dimension, names)
    return QuantifiedFormula(params, names, matrix, side)


def _model_candidates(
    model: dict[str, Fraction], config: SynthesisConfig, raw_first: bool
) -> list[dict[str, Fraction]]:
    raw = {k: Fraction(v) for k, v in model.items()}
    candidates = [raw]
    if config.rounding:
        rounded = _rationalize(raw, config.rounding_denominator)
        if rounded != raw:
            candidates.append(rounded)
    if not raw_first:
        candidates.reverse()
    return candidates


def synth_complete(
    field: VectorField,
    spec: TemplateSpec | None = None,
    config: SynthesisConfig | None = None,
    runner: SolverRunner | None = None,
    system: str | None = None,
) -> CertificateReport:
    """One-shot exists-forall synthesis with exact re-verification."""
    config = config or SynthesisConfig()
    spec = spec or default_template_spec(field)
    runner = runner or get_default_runner()
    timings = {"reduction": 0.0, "solve": 0.0, "verify": 0.0}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    prepared = _prepare(field, spec, config)
    timings["reduction"] = time.perf_counter() - t0

    def finish(report: CertificateReport) -> CertificateReport:
        timings["total"] = time.perf_counter() - t_start
        report.timings = timings
        report.method = "complete"
        report.mode = config.mode
        report.system = system
        report.seed = config.seed
        return report

    if prepared.infeasible_detail is not None:
        return finish(
            CertificateReport(TEMPLATE_INFEASIBLE, diagnostics=prepared.infeasible_detail)
        )

    strict = config.mode == "strict"
    inline_orders: list[int | None]
    chain: LieChain | None = None
    if not strict and config.inline_lasalle:
        chain = LieChain(prepared.template, field, config.term_limit)
        inline_orders = list(range(2, config.r_max + 1))
    else:
        inline_orders = [None]

    params = tuple(p.name for p in prepared.template.params())
    verdicts: list[str] = []
    for order in inline_orders:
        qf = _synthesis_query(prepared, field, strict, order, chain)
        result = runner.run(emit(qf), timeout_s=config.timeout_s, model_names=params)
        timings["solve"] += result.solve_time
        verdicts.append(result.verdict)
        if result.verdict != "sat":
            continue
        assert result.model is not None
        if not spot_check_model(qf, result.model, Random(config.seed)):
            return finish(
                CertificateReport(UNKNOWN, diagnostics="solver model failed spot check")
            )
        for named in _model_candidates(result.model, config, raw_first=True):
            candidate = _instantiate(prepared.template, named)
            if candidate.is_zero():
                continue
            t0 = time.perf_counter()
            outcomes = verify_certificate(
                candidate,
                field,
                "strict" if strict else "weak",
                runner,
                config.verify_timeout(),
                config.r_max,
                Random(config.seed),
            )
            timings["verify"] += time.perf_counter() - t0
            if certificate_ok(outcomes):
                lasalle_r = outcomes.get("lasalle")
                return finish(
                    CertificateReport(
                        GAS if strict else GAS_LASALLE,
                        witness=candidate,
                        lasalle_r=lasalle_r.lasalle_r if lasalle_r else None,
                        checks=outcomes,
                    )
                )
        return finish(
            CertificateReport(
                UNKNOWN,
                diagnostics="solver model failed exact verification",
            )
        )

    if all(v == "unsat" for v in verdicts):
        return finish(
            CertificateReport(
                TEMPLATE_INFEASIBLE,
                diagnostics="no instance of the template satisfies the conditions",
            )
        )
    if "timeout" in verdicts:
        return finish(CertificateReport(TIMEOUT, diagnostics="solver timeout"))
    return finish(CertificateReport(UNKNOWN, diagnostics=f"solver verdicts: {verdicts}"))


# ---------------------------------------------------------------------------
# sample constraints and the CEGIS loop


@dataclass(frozen=True)
class LinearConstraint:
    """An affine constraint ``form (op) rhs`` on the template parameters."""

    form: AffineForm
    op: str  # >= | <= | > | <
    rhs: Fraction
    kind: str  # "value" for V rows, "drift" for V_dot rows


class SampleSet:
    """Deduplicated nonzero sample points."""

    def __init__(self) -> None:
        self.points: list[tuple[Fraction, ...]] = []
        self._seen: set[tuple[Fraction, ...]] = set()

    def add(self, point: Sequence[Fraction]) -> bool:
        pt = tuple(Fraction(v) for v in point)
        if not any(pt) or pt in self._seen:
            return False
        self._seen.add(pt)
        self.points.append(pt)
        return True

    def extend(self, points: Iterable[Sequence[Fraction]]) -> int:
        return sum(1 for p in points if self.add(p))

    def __len__(self) -> int:
        return len(self.points)


def draw_samples(
    count: int, dimension: int, box: int, rng: Random
) -> list[tuple[Fraction, ...]]:
    """Uniform rational points on a 1/100 grid over [-box, box]^n.

    Coordinates avoid exact zero: a continuous uniform draw hits a
    coordinate hyperplane with probability zero, and keeping that
    genericity matters — points sitting exactly on an axis pin single
    parameters to the margin constant and manufacture ties a float
    solver would otherwise never produce.
    """
    out = []
    span = 100 * box
    while len(out) < count:
        pt = []
        for _ in range(dimension):
            k = 0
            while k == 0:
                k = rng.randint(-span, span)
            pt.append(Fraction(k, 100))
        out.append(tuple(pt))
    return out


def _norm_power_upper(norm_sq: Fraction, degree: int) -> Fraction:
    """Upper bound on |y|^degree, exact for even degrees.

    Odd degrees use a rational overestimate of the square root accurate
    to six digits; overestimating the margin only strengthens the
    constraint, so soundness of the sample rows is preserved.
    """
    if degree % 2 == 0:
        return norm_sq ** (degree // 2)
    scaled = norm_sq * 10**12
    root = math.isqrt(scaled.numerator // scaled.denominator)
    while Fraction(root, 10**6) ** 2 < norm_sq:
        root += 1
    return norm_sq ** (degree // 2) * Fraction(root, 10**6)


def build_sample_constraints(
    template: ParamPoly,
    vdot: ParamPoly,
    points: Iterable[Sequence[Fraction]],
    mu: Fraction = Fraction(1, 100),
    strengthened: bool = True,
    strict: bool = True,
) -> list[LinearConstraint]:
    """Affine constraints on the parameters from sample points.

    Strengthened rows demand V(y) >= mu * min(|y|^l, |y|^k) with l, k
    the extreme degrees of the template (and likewise a matching upper
    margin for the drift rows); min of the two norm powers keeps the
    margin meaningful both inside and outside the unit sphere.
    Unstrengthened rows are the plain strict inequalities, which are
    homogeneous in the parameters.  With strict=False the drift rows
    only require V̇(y) <= 0: a weak certificate's derivative may
    legitimately vanish off the origin, so a decrease margin there
    would exclude every valid candidate.
    """
    lv, kv = template.lowest_degree, template.highest_degree
    ld, kd = vdot.lowest_degree, vdot.highest_degree
    if lv is None or ld is None:
        raise ValueError("template and drift must be nonzero")
    rows: list[LinearConstraint] = []
    for point in points:
        pt = tuple(Fraction(v) for v in point)
        if not any(pt):
            continue
        v_form = template.evaluate_form(pt)
        d_form = vdot.evaluate_form(pt)
        if strengthened:
            norm_sq = sum((c * c for c in pt), Fraction(0))
            margin_v = mu * min(_norm_power_upper(norm_sq, lv), _norm_power_upper(norm_sq, kv))
            rows.append(LinearConstraint(v_form, ">=", margin_v, "value"))
            if strict:
                margin_d = mu * min(
                    _norm_power_upper(norm_sq, ld), _norm_power_upper(norm_sq, kd)
                )
                rows.append(LinearConstraint(d_form, "<=", -margin_d, "drift"))
            else:
                rows.append(LinearConstraint(d_form, "<=", Fraction(0), "drift"))
        else:
            rows.append(LinearConstraint(v_form, ">", Fraction(0), "value"))
            if strict:
                rows.append(LinearConstraint(d_form, "<", Fraction(0), "drift"))
            else:
                rows.append(LinearConstraint(d_form, "<=", Fraction(0), "drift"))
    return rows


def _param_scale_weights(template: ParamPoly, box: int) -> dict[Param, float]:
    """Relative size of each parameter's monomial over the sample box.

    Used to weight the L1 objective so that a unit of every parameter
    counts roughly by how much it can move V on the box: without this,
    the LP prefers absorbing counterexample cuts with microscopic
    adjustments to high-degree coefficients (whose monomials are huge
    at the cut points) instead of fixing the low-degree structure.
    """
    degrees: dict[Param, int] = {}
    for alpha, form in template.terms.items():
        d = total_degree(alpha)
        for p in form.terms:
            degrees[p] = max(degrees.get(p, 0), d)
    if not degrees:
        return {}
    base = min(degrees.values())
    return {p: float(box) ** (d - base) for p, d in degrees.items()}


def _solve_lp(
    rows: list[LinearConstraint],
    pending: list[AffineForm],
    params: list[Param],
    box: int,
    weights: dict[Param, float] | None = None,
    regularize: bool = True,
) -> dict[str, float] | None:
    """Feasibility LP: hard value rows, slack-minimized drift rows.

    Each row is divided by its largest absolute entry before solving;
    counterexamples can lie far from the origin and produce rows whose
    raw coefficients overflow the solver's working precision.  A small
    weighted L1 term on the parameters makes the returned vertex the
    minimal-norm feasible point, which zeroes unneeded coefficients and
    lands on values that survive rationalization.  The term only exists
    to serve rounding, so callers that keep raw float solutions disable
    it and get a plain feasibility solve.
    """
    index = {p: i for i, p in enumerate(params)}
    n = len(params)
    n_slack = sum(1 for r in rows if r.kind == "drift")
    # columns: params | abs-value bounds t_i >= |c_i| | drift slacks
    n_cols = 2 * n + n_slack
    data: list[float] = []
    lines: list[int] = []
    cols: list[int] = []
    b_ub: list[float] = []
    slack_seen = 0

    def add_row(entries: list[tuple[int, float]], rhs: float, extra=()) -> None:
        scale = max([abs(v) for _, v in entries] + [abs(rhs)])
        if scale == 0.0:
            scale = 1.0
        r = len(b_ub)
        for j, v in entries:
            if v:
                data.append(v / scale)
                lines.append(r)
                cols.append(j)
        for j, v in extra:
            data.append(v)
            lines.append(r)
            cols.append(j)
        b_ub.append(rhs / scale)

    for row in rows:
        entries = [(index[p], float(q)) for p, q in row.form.terms.items()]
        rhs = float(row.rhs - row.form.constant)
        if row.op in (">=", ">"):
            add_row([(j, -v) for j, v in entries], -rhs)
        else:
            extra = ()
            if row.kind == "drift":
                extra = ((2 * n + slack_seen, -1.0),)
                slack_seen += 1
            add_row(entries, rhs, extra)
    for form in pending:
        add_row(
            [(index[p], float(q)) for p, q in form.terms.items()], float(-form.constant)
        )
    for i in range(n):  # c_i <= t_i and -c_i <= t_i
        add_row([(i, 1.0), (n + i, -1.0)], 0.0)
        add_row([(i, -1.0), (n + i, -1.0)], 0.0)
    a_ub = sparse.coo_matrix((data, (lines, cols)), shape=(len(b_ub), n_cols)).tocsr()
    scale = [1.0] * n
    if weights:
        top = max(weights.values()) or 1.0
        for i, p in enumerate(params):
            scale[i] = weights.get(p, 1.0) / top
    l1 = 1e-3 if regularize else 0.0
    cost = [0.0] * n + [l1 * s for s in scale] + [1.0] * n_slack
    bounds = (
        [(-float(box), float(box))] * n
        + [(0.0, float(box))] * n
        + [(0.0, None)] * n_slack
    )
    res = linprog(
        c=cost, A_ub=a_ub, b_ub=np.array(b_ub), bounds=bounds, method="highs"
    )
    if not res.success or res.x is None:
        return None
    if sum(res.x[2 * n :]) > 1e-7:
        # nonzero slack: the drift rows could not all be met
        return None
    return {params[i].name: float(res.x[i]) for i in range(n)}


def _harvest_cuts(
    candidate: Polynomial,
    field: VectorField,
    config: SynthesisConfig,
    seed_point: tuple[Fraction, ...] | None,
    step: int,
    limit: int = 12,
) -> list[tuple[Fraction, ...]]:
    """Gather several violation points for a rejected candidate.

    One counterexample cuts one vertex; an invalid candidate usually
    violates its conditions on a whole region, and batching a few
    independent probe hits (plus mirror images, since odd cross terms
    flip sign under negation) collapses the remaining polytope much
    faster than one cut per CEGIS step.
    """
    drift = lie_derivative(candidate, field)
    assert isinstance(drift, Polynomial)
    strict = config.mode == "strict"

    def violates(pt: tuple[Fraction, ...]) -> bool:
        if not any(pt):
            return False
        if candidate.evaluate(pt) <= 0:
            return True
        dv = drift.evaluate(pt)
        return dv >= 0 if strict else dv > 0

    found: list[tuple[Fraction, ...]] = []
    if seed_point is not None:
        found.append(tuple(Fraction(v) for v in seed_point))
    conditions = [(candidate, "<="), (drift, ">=" if strict else ">")]
    for attempt in range(3):
        rng = Random((config.seed + 1) * 100003 + step * 211 + attempt)
        for poly, goal in conditions:
            pt = falsify_numeric(poly, goal, budget=600, rng=rng)
            if pt is not None:
                found.append(shrink_counterexample(poly, goal, pt))
    out: list[tuple[Fraction, ...]] = []
    seen: set[tuple[Fraction, ...]] = set()
    for pt in found:
        variants = [pt, tuple(-v for v in pt)]
        for i in range(len(pt)):
            if pt[i]:
                variants.append(tuple(-v if j == i else v for j, v in enumerate(pt)))
        for variant in variants:
            if variant not in seen and violates(variant):
                seen.add(variant)
                out.append(variant)
    return out[:limit]


def _solve_samples_smt(
    rows: list[LinearConstraint],
    pending: list[AffineForm],
    params: list[Param],
    runner: SolverRunner,
    timeout_s: float | None,
) -> tuple[str, dict[str, Fraction] | None, float]:
    names = tuple(p.name for p in params)
    dim = 1  # constraint polynomials are constants in a dummy variable
    zero = (0,)
    side = []
    dummy = ("x1",)
    for row in rows:
        form = row.form - row.rhs
        side.append(Atom(ParamPoly(dim, {zero: form}), dummy, row.op))
    for form in pending:
        side.append(Atom(ParamPoly(dim, {zero: form}), dummy, "<="))
    qf = QuantifiedFormula(names, side=tuple(side))
    result = runner.run(emit(qf), timeout_s=timeout_s, model_names=names)
    return result.verdict, result.model, result.solve_time


def cegis(
    field: VectorField,
    spec: TemplateSpec | None = None,
    config: SynthesisConfig | None = None,
    runner: SolverRunner | None = None,
    system: str | None = None,
) -> CertificateReport:
    """Counterexample-guided synthesis with an LP or SMT sample solver."""
    config = config or SynthesisConfig(method="lp")
    if config.method not in ("lp", "smt-sample"):
        raise ValueError(f"cegis cannot use method {config.method!r}")
    spec = spec or default_template_spec(field)
    runner = runner or get_default_runner()
    rng = Random(config.seed)
    timings = {"reduction": 0.0, "solve": 0.0, "verify": 0.0}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    prepared = _prepare(field, spec, config)
    timings["reduction"] = time.perf_counter() - t0

    def finish(report: CertificateReport) -> CertificateReport:
        timings["total"] = time.perf_counter() - t_start
        report.timings = timings
        report.method = config.method
        report.mode = config.mode
        report.system = system
        report.seed = config.seed
        return report

    if prepared.infeasible_detail is not None:
        return finish(
            CertificateReport(TEMPLATE_INFEASIBLE, diagnostics=prepared.infeasible_detail)
        )

    params = prepared.template.params()
    strengthened = config.method == "lp"
    strict_mode = config.mode == "strict"
    weights = _param_scale_weights(prepared.template, config.box)
    form_scales = _param_form_scales(prepared.template)
    mu = config.mu
    samples = SampleSet()
    samples.extend(draw_samples(config.sample_count(), field.dimension, config.box, rng))
    cuts = SampleSet()
    counterexamples = 0
    steps: list[dict] = []
    proposed: set[tuple] = set()

    def all_points() -> list[tuple[Fraction, ...]]:
        return samples.points + cuts.points

    def make_rows(margin: Fraction) -> list[LinearConstraint]:
        return build_sample_constraints(
            prepared.template, prepared.vdot, all_points(), margin, strengthened, strict_mode
        )

    rows = make_rows(mu)

    def redraw_samples() -> None:
        # a margin-infeasible draw is bad luck, not evidence; replace it
        # wholesale while keeping every confirmed counterexample
        nonlocal rows, samples
        samples = SampleSet()
        samples.extend(draw_samples(config.sample_count(), field.dimension, config.box, rng))
        rows = make_rows(mu)

    def refresh_samples() -> None:
        nonlocal rows
        samples.extend(draw_samples(100, field.dimension, config.box, rng))
        rows = make_rows(mu)

    for step in range(1, config.cegis_steps + 1):
        raw: dict[str, Fraction] | None = None
        if config.method == "lp":
            t0 = time.perf_counter()
            solution = _solve_lp(
                rows, prepared.pending, params, config.box, weights, config.rounding
            )
            if solution is None:
                retry_rows = make_rows(mu / 2)
                solution = _solve_lp(
                    retry_rows, prepared.pending, params, config.box, weights, config.rounding
                )
                if solution is not None:
                    mu = mu / 2
                    rows = retry_rows
            timings["solve"] += time.perf_counter() - t0
            if solution is None:
                redraw_samples()
                steps.append({"step": step, "result": "lp-infeasible"})
                continue
            raw = {name: Fraction(value) for name, value in solution.items()}
        else:
            verdict, model, solve_time = _solve_samples_smt(
                rows, prepared.pending, params, runner, config.timeout_s
            )
            timings["solve"] += solve_time
            if verdict == "unsat":
                return finish(
                    CertificateReport(
                        TEMPLATE_INFEASIBLE,
                        cegis_iterations=step,
                        counterexamples_used=counterexamples,
                        steps=steps,
                        diagnostics="sample constraints are unsatisfiable for the template",
                    )
                )
            if verdict == "timeout":
                return finish(
                    CertificateReport(
                        TIMEOUT,
                        cegis_iterations=step,
                        counterexamples_used=counterexamples,
                        steps=steps,
                        diagnostics="sample query timeout",
                    )
                )
            if verdict != "sat" or model is None:
                return finish(
                    CertificateReport(
                        UNKNOWN,
                        cegis_iterations=step,
                        counterexamples_used=counterexamples,
                        steps=steps,
                        diagnostics=f"sample query verdict: {verdict}",
                    )
                )
            raw = model

        unproposed = [
            cand
            for cand in _cegis_candidates(raw, config, form_scales, prepared.vdot)
            if tuple(sorted(cand.items())) not in proposed
        ]
        named = next(
            (
                c
                for c in unproposed
                if _points_hold(
                    all_points(),
                    prepared.template,
                    prepared.vdot,
                    prepared.pending,
                    c,
                    config.mode == "strict",
                )
            ),
            None,
        )
        if named is None and unproposed:
            named = unproposed[-1]  # the raw assignment is the most faithful reading
        if named is None:
            # Every reading of this assignment was already rejected; cut
            # the vertex itself so the next solve must move elsewhere.
            stuck = _instantiate(prepared.template, raw)
            batch = _harvest_cuts(stuck, field, config, None, step + 500)
            added = [pt for pt in batch if cuts.add(pt)]
            counterexamples += len(added)
            if added:
                rows.extend(
                    build_sample_constraints(
                        prepared.template, prepared.vdot, added, mu, strengthened, strict_mode
                    )
                )
            else:
                refresh_samples()
            steps.append({"step": step, "result": "repeated-candidate"})
            continue
        proposed.add(tuple(sorted(named.items())))

        candidate = _instantiate(prepared.template, named)
        record: dict = {
            "step": step,
            "assignment": {k: str(v) for k, v in named.items()},
            "candidate": str(candidate),
        }
        if candidate.is_zero():
            refresh_samples()
            record["result"] = "zero-candidate"
            steps.append(record)
            continue

        t0 = time.perf_counter()
        outcomes = verify_certificate(
            candidate,
            field,
            config.mode if config.mode in ("strict", "weak") else "weak",
            runner,
            config.verify_timeout(),
            config.r_max,
            Random(config.seed + step),
        )
        timings["verify"] += time.perf_counter() - t0
        if certificate_ok(outcomes):
            lasalle = outcomes.get("lasalle")
            record["result"] = "verified"
            steps.append(record)
            return finish(
                CertificateReport(
                    GAS if config.mode == "strict" else GAS_LASALLE,
                    witness=candidate,
                    lasalle_r=lasalle.lasalle_r if lasalle else None,
                    checks=outcomes,
                    cegis_iterations=step,
                    counterexamples_used=counterexamples,
                    steps=steps,
                )
            )
        point = first_counterexample(outcomes)
        failed = next((o for o in outcomes.values() if not o.ok), None)
        record["result"] = "rejected"
        record["failed_check"] = failed.check if failed else None
        record["counterexample"] = [str(v) for v in point] if point else None
        steps.append(record)
        batch = _harvest_cuts(candidate, field, config, point, step)
        added = [pt for pt in batch if cuts.add(pt)]
        counterexamples += len(added)
        if added:
            rows.extend(
                build_sample_constraints(
                    prepared.template, prepared.vdot, added, mu, strengthened, strict_mode
                )
            )
        else:
            refresh_samples()

    return finish(
        CertificateReport(
            UNKNOWN,
            cegis_iterations=config.cegis_steps,
            counterexamples_used=counterexamples,
            steps=steps,
            diagnostics="CEGIS step budget exhausted without a verified certificate",
        )
    )


# ---------------------------------------------------------------------------
# instability


def synth_instability(
    field: VectorField,
    spec: TemplateSpec | None = None,
    config: SynthesisConfig | None = None,
    runner: SolverRunner | None = None,
    system: str | None = None,
) -> CertificateReport:
    """Search for a certificate that the origin is not globally stable.

    The query asks for template parameters and a point z with
    V(z) < V(0) such that V <= 0 is invariant under the flow in the
    sense that V can never increase back toward zero: whenever
    V(x) <= 0, also V_dot(x) <= 0.  Trajectories starting at such a z
    keep V nonincreasing, hence stay away from the origin forever.
    """
    config = config or SynthesisConfig()
    runner = runner or get_default_runner()
    timings = {"reduction": 0.0, "solve": 0.0, "verify": 0.0}
    t_start = time.perf_counter()
    deadline = None if config.timeout_s is None else t_start + config.timeout_s

    # With no explicit template the search is staged: the tiny all-linear
    # family first (half-space witnesses a.x are both the most common
    # certificates and the cheapest queries), then degree <= 2.
    if spec is not None:
        stage_specs = [spec]
    else:
        stage_specs = [
            TemplateSpec(field.dimension, 1, 1, "all", True),
            instability_template_spec(field),
        ]

    def finish(report: CertificateReport) -> CertificateReport:
        timings["total"] = time.perf_counter() - t_start
        report.timings = timings
        report.method = "instability"
        report.mode = "instability"
        report.system = system
        report.seed = config.seed
        return report

    dim = field.dimension
    names = _state_names(dim)
    znames = tuple(f"z{i + 1}" for i in range(dim))
    fallback: CertificateReport | None = None
    for stage in stage_specs:
        # The reduction rules encode necessary conditions for
        # V_dot <= 0 on all of R^n.  An instability certificate only
        # needs V_dot <= 0 on the sublevel set {V <= 0}, so here the
        # reduced family is merely a cheap place to look first: when it
        # is empty, or yields nothing, retry with the raw template
        # before concluding anything.
        t0 = time.perf_counter()
        prepared = _prepare(field, stage, config)
        timings["reduction"] += time.perf_counter() - t0
        variants = []
        if prepared.infeasible_detail is None:
            variants.append(prepared)
            restricted = bool(prepared.pending) or bool(
                prepared.reduction is not None and prepared.reduction.substitutions
            )
        else:
            restricted = True
        if restricted and config.use_reduction:
            variants.append(_prepare(field, stage, replace(config, use_reduction=False)))

        for attempt in variants:
            budget = None if deadline is None else deadline - time.perf_counter()
            if budget is not None and budget <= 0.005:
                return finish(CertificateReport(TIMEOUT, diagnostics="solver timeout"))
            params = tuple(p.name for p in attempt.template.params())
            matrix = Implies(
                atom(attempt.template, names, "<="), atom(attempt.vdot, names, "<=")
            )
            side = list(_pending_side_atoms(attempt.pending, dim, names))
            side.append(Atom(attempt.template, znames, "<"))
            qf = QuantifiedFormula(params + znames, names, matrix, tuple(side))

            result = runner.run(emit(qf), timeout_s=budget, model_names=params + znames)
            timings["solve"] += result.solve_time
            if result.verdict == "unsat":
                fallback = CertificateReport(
                    TEMPLATE_INFEASIBLE,
                    diagnostics="no instance of the template certifies instability",
                )
                continue
            if result.verdict == "timeout":
                return finish(CertificateReport(TIMEOUT, diagnostics="solver timeout"))
            if result.verdict != "sat" or result.model is None:
                fallback = CertificateReport(
                    UNKNOWN, diagnostics=f"solver verdict: {result.verdict}"
                )
                continue
            if not spot_check_model(qf, result.model, Random(config.seed)):
                fallback = CertificateReport(
                    UNKNOWN, diagnostics="solver model failed spot check"
                )
                continue

            for named in _model_candidates(result.model, config, raw_first=True):
                candidate = _instantiate(attempt.template, named)
                if candidate.is_zero():
                    continue
                z = tuple(named[zn] for zn in znames)
                t0 = time.perf_counter()
                outcomes = check_instability(
                    candidate,
                    field,
                    z,
                    runner,
                    config.verify_timeout(),
                    Random(config.seed),
                    config.spot_checks,
                )
                timings["verify"] += time.perf_counter() - t0
                if certificate_ok(outcomes):
                    return finish(
                        CertificateReport(
                            NOT_GAS,
                            witness=candidate,
                            witness_point=z,
                            checks=outcomes,
                        )
                    )
            fallback = CertificateReport(
                UNKNOWN, diagnostics="solver model failed exact verification"
            )
    assert fallback is not None
    return finish(fallback)
