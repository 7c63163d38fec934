"""Random polynomial vector fields and the stability/instability survey.

Generates seeded benchmark systems (three monomials per component,
small integer coefficients), screens out trivially unstable or
degenerate ones, and runs both provers — strict Lyapunov synthesis for
stability and the instability certificate search — against each kept
system under a per-call timeout.  The survey aggregates per-cell
percentages and mean proof times.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from random import Random
from typing import Callable, Sequence

import numpy as np

from lyra.poly import Polynomial, VectorField
from lyra.smt import SolverRunner, get_default_runner
from lyra.synth import (
    GAS,
    NOT_GAS,
    TIMEOUT,
    CertificateReport,
    SynthesisConfig,
    synth_complete,
    synth_instability,
)

__all__ = [
    "EXCLUDED_TRIVIAL",
    "EXCLUDED_ZERO_COMPONENT",
    "KEEP",
    "STABLE_PROVEN",
    "TIMEOUT_BOTH",
    "UNRESOLVED",
    "UNSTABLE_PROVEN",
    "CellStats",
    "ContradictoryProofs",
    "RandomSystemSpec",
    "TrialRecord",
    "gen_system",
    "run_table",
    "run_trial",
    "screen",
    "trial_seed",
]

UNSTABLE_PROVEN = "UNSTABLE_PROVEN"
STABLE_PROVEN = "STABLE_PROVEN"
TIMEOUT_BOTH = "TIMEOUT_BOTH"
UNRESOLVED = "UNRESOLVED"
EXCLUDED_TRIVIAL = "EXCLUDED_TRIVIAL"
EXCLUDED_ZERO_COMPONENT = "EXCLUDED_ZERO_COMPONENT"
KEEP = "keep"


class ContradictoryProofs(RuntimeError):
    """Both provers succeeded on one system: a soundness bug somewhere."""


@dataclass(frozen=True)
class RandomSystemSpec:
    """Shape of a random benchmark system."""

    dimension: int
    max_degree: int
    terms_per_dim: int = 3
    coeff_bound: int = 3

    def __post_init__(self) -> None:
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.max_degree < 1:
            raise ValueError("max_degree must be positive")
        if self.terms_per_dim < 1 or self.coeff_bound < 1:
            raise ValueError("terms_per_dim and coeff_bound must be positive")


@lru_cache(maxsize=None)
def _admissible_exponents(dimension: int, max_degree: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices with total degree between 1 and max_degree."""
    out = [
        alpha
        for alpha in product(range(max_degree + 1), repeat=dimension)
        if 1 <= sum(alpha) <= max_degree
    ]
    return tuple(sorted(out))


def gen_system(spec: RandomSystemSpec, seed: int) -> VectorField:
    """Deterministically sample a random vector field with f(0) = 0.

    Each component is a sum of ``terms_per_dim`` monomials with uniform
    multi-indices of degree 1..max_degree and uniform nonzero integer
    coefficients in [-coeff_bound, coeff_bound].  Duplicate monomials
    within a component merge (and may cancel), so a component can end
    up with fewer terms or even vanish; screening deals with that.
    """
    rng = Random(seed)
    alphas = _admissible_exponents(spec.dimension, spec.max_degree)
    coeffs = [c for c in range(-spec.coeff_bound, spec.coeff_bound + 1) if c]
    components = []
    for _ in range(spec.dimension):
        terms: dict[tuple[int, ...], Fraction] = {}
        for _ in range(spec.terms_per_dim):
            alpha = alphas[rng.randrange(len(alphas))]
            c = Fraction(coeffs[rng.randrange(len(coeffs))])
            terms[alpha] = terms.get(alpha, Fraction(0)) + c
        components.append(Polynomial(spec.dimension, terms))
    return VectorField(tuple(components))


def jacobian_at_origin(field: VectorField) -> list[list[Fraction]]:
    """The linearization matrix read off the degree-1 terms."""
    n = field.dimension
    rows = []
    for f in field.components:
        row = [Fraction(0)] * n
        for alpha, c in f.terms.items():
            if sum(alpha) == 1:
                row[alpha.index(1)] = c
        rows.append(row)
    return rows


def screen(field: VectorField, tol: float = 1e-9) -> str:
    """Classify a system as kept or excluded before any solver work.

    A component that is identically zero makes the origin a non-isolated
    equilibrium slice, and a linearization eigenvalue with positive real
    part makes instability trivial; both cases are excluded.  Borderline
    eigenvalues (real part within tol of zero) are kept and left to the
    provers.
    """
    if any(f.is_zero() for f in field.components):
        return EXCLUDED_ZERO_COMPONENT
    jac = np.array([[float(v) for v in row] for row in jacobian_at_origin(field)])
    eigenvalues = np.linalg.eigvals(jac)
    if float(np.max(eigenvalues.real)) > tol:
        return EXCLUDED_TRIVIAL
    return KEEP


@dataclass
class TrialRecord:
    """Outcome of both prover directions on one generated system."""

    seed: int
    system: VectorField
    classification: str
    instability_status: str | None = None
    stability_status: str | None = None
    instability_time: float = 0.0
    stability_time: float = 0.0
    unstable_proof_time: float | None = None

    def to_record(self) -> dict:
        return {
            "seed": self.seed,
            "system": [str(f) for f in self.system.components],
            "classification": self.classification,
            "instability_status": self.instability_status,
            "stability_status": self.stability_status,
            "instability_time": round(self.instability_time, 6),
            "stability_time": round(self.stability_time, 6),
            "unstable_proof_time": (
                round(self.unstable_proof_time, 6)
                if self.unstable_proof_time is not None
                else None
            ),
        }


Prover = Callable[[VectorField], CertificateReport]


def _default_stability_prover(
    timeout_s: float, runner: SolverRunner, use_reduction: bool
) -> Prover:
    def prove(field: VectorField) -> CertificateReport:
        config = SynthesisConfig(
            mode="strict", use_reduction=use_reduction, timeout_s=timeout_s
        )
        return synth_complete(field, config=config, runner=runner)

    return prove


def _default_instability_prover(
    timeout_s: float, runner: SolverRunner, use_reduction: bool
) -> Prover:
    def prove(field: VectorField) -> CertificateReport:
        config = SynthesisConfig(use_reduction=use_reduction, timeout_s=timeout_s)
        return synth_instability(field, config=config, runner=runner)

    return prove


def run_trial(
    field: VectorField,
    seed: int,
    timeout_s: float = 1.0,
    runner: SolverRunner | None = None,
    use_reduction: bool = True,
    stability_prover: Prover | None = None,
    instability_prover: Prover | None = None,
) -> TrialRecord:
    """Run both provers on one kept system and classify the outcome.

    Raises ContradictoryProofs if both directions claim a proof; that
    would mean an unsound certificate slipped through somewhere and the
    whole survey is suspect.
    """
    if stability_prover is None or instability_prover is None:
        runner = runner or get_default_runner()
    stability_prover = stability_prover or _default_stability_prover(
        timeout_s, runner, use_reduction
    )
    instability_prover = instability_prover or _default_instability_prover(
        timeout_s, runner, use_reduction
    )

    t0 = time.perf_counter()
    instab = instability_prover(field)
    instab_time = time.perf_counter() - t0
    t0 = time.perf_counter()
    stab = stability_prover(field)
    stab_time = time.perf_counter() - t0

    unstable = instab.status == NOT_GAS
    stable = stab.status == GAS
    if unstable and stable:
        raise ContradictoryProofs(
            f"system proved both stable and unstable (seed {seed}): "
            f"{[str(f) for f in field.components]}"
        )
    if unstable:
        classification = UNSTABLE_PROVEN
        proof_time = instab.timings.get("reduction", 0.0) + instab.timings.get("solve", 0.0)
    elif stable:
        classification = STABLE_PROVEN
        proof_time = None
    elif instab.status == TIMEOUT and stab.status == TIMEOUT:
        classification = TIMEOUT_BOTH
        proof_time = None
    else:
        classification = UNRESOLVED
        proof_time = None
    return TrialRecord(
        seed=seed,
        system=field,
        classification=classification,
        instability_status=instab.status,
        stability_status=stab.status,
        instability_time=instab_time,
        stability_time=stab_time,
        unstable_proof_time=proof_time,
    )


def trial_seed(base_seed: int, dimension: int, max_degree: int, index: int) -> int:
    """Deterministic per-trial seed, distinct across cells and indices."""
    return ((base_seed * 1_000_003 + dimension) * 10_007 + max_degree) * 100_003 + index


@dataclass
class CellStats:
    """Aggregated outcomes for one (dimension, degree) survey cell."""

    dimension: int
    max_degree: int
    records: list[TrialRecord] = dataclass_field(default_factory=list)
    excluded: list[TrialRecord] = dataclass_field(default_factory=list)

    def _fraction_of(self, classification: str) -> float:
        if not self.records:
            return 0.0
        hits = sum(1 for r in self.records if r.classification == classification)
        return hits / len(self.records)

    @property
    def unstable_fraction(self) -> float:
        return self._fraction_of(UNSTABLE_PROVEN)

    @property
    def stable_fraction(self) -> float:
        return self._fraction_of(STABLE_PROVEN)

    @property
    def timeout_fraction(self) -> float:
        return self._fraction_of(TIMEOUT_BOTH)

    @property
    def unresolved_fraction(self) -> float:
        return self._fraction_of(UNRESOLVED)

    @property
    def mean_unstable_proof_time(self) -> float | None:
        times = [
            r.unstable_proof_time
            for r in self.records
            if r.unstable_proof_time is not None
        ]
        if not times:
            return None
        return sum(times) / len(times)

    def summary(self) -> dict:
        mean_t = self.mean_unstable_proof_time
        return {
            "dimension": self.dimension,
            "max_degree": self.max_degree,
            "trials": len(self.records),
            "excluded": len(self.excluded),
            "unstable_proven": round(100.0 * self.unstable_fraction, 1),
            "stable_proven": round(100.0 * self.stable_fraction, 1),
            "timeout_both": round(100.0 * self.timeout_fraction, 1),
            "unresolved": round(100.0 * self.unresolved_fraction, 1),
            "mean_unstable_proof_time": round(mean_t, 4) if mean_t is not None else None,
            "coefficient_law": "uniform nonzero integers in [-3, 3]",
        }


def _trial_task(task: tuple[VectorField, int, float, bool]) -> TrialRecord:
    # Worker-pool entry point; each process builds its own solver pool.
    field, seed, timeout_s, use_reduction = task
    return run_trial(field, seed, timeout_s=timeout_s, use_reduction=use_reduction)


def run_table(
    dims: Sequence[int],
    degs: Sequence[int],
    trials_per_cell: int,
    timeout_s: float = 1.0,
    runner: SolverRunner | None = None,
    base_seed: int = 0,
    use_reduction: bool = True,
    workers: int = 1,
) -> list[CellStats]:
    """Survey every (dimension, degree) cell with seeded random systems.

    Generation keeps drawing until ``trials_per_cell`` systems survive
    screening; excluded draws are recorded but not counted as trials.
    Identical arguments reproduce identical classifications.  With
    ``workers`` > 1, trials run in a process pool (each trial owns its
    solver subprocesses) and ``runner`` is ignored.
    """
    cells = []
    for n in dims:
        for deg in degs:
            spec = RandomSystemSpec(n, deg)
            cell = CellStats(n, deg)
            kept: list[tuple[VectorField, int]] = []
            index = 0
            while len(kept) < trials_per_cell:
                seed = trial_seed(base_seed, n, deg, index)
                index += 1
                field = gen_system(spec, seed)
                verdict = screen(field)
                if verdict != KEEP:
                    cell.excluded.append(
                        TrialRecord(seed=seed, system=field, classification=verdict)
                    )
                    continue
                kept.append((field, seed))
            if workers > 1:
                tasks = [(f, s, timeout_s, use_reduction) for f, s in kept]
                with ProcessPoolExecutor(max_workers=workers) as pool:
                    cell.records = list(pool.map(_trial_task, tasks))
            else:
                for field, seed in kept:
                    cell.records.append(
                        run_trial(
                            field,
                            seed,
                            timeout_s=timeout_s,
                            runner=runner,
                            use_reduction=use_reduction,
                        )
                    )
            cells.append(cell)
    return cells
