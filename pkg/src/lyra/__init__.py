"""Exact-arithmetic Lyapunov certificate synthesis for polynomial vector fields.

The package synthesizes candidate Lyapunov functions from parametric
templates, prunes the parameter space with necessary conditions for
polynomial nonpositivity, and certifies the result with an SMT solver
over nonlinear real arithmetic.  All symbolic computation is done over
exact rationals; floating point only ever appears inside the LP solver
and in numeric falsification heuristics, and every certificate is
re-checked exactly before it is reported.
"""

from lyra.poly import Polynomial, VectorField, parse_polynomial
from lyra.template import (
    AffineForm,
    Param,
    ParamPoly,
    TemplateSpec,
    apply_equalities,
    build_template,
)
from lyra.lie import LieChain, lie_chain, lie_derivative
from lyra.reduction import ReductionResult, extract_constraints, reduce_to_fixpoint
from lyra.verify import VerificationOutcome, check_instability, verify_certificate
from lyra.synth import (
    GAS,
    GAS_LASALLE,
    NOT_GAS,
    TEMPLATE_INFEASIBLE,
    TIMEOUT,
    UNKNOWN,
    CertificateReport,
    SynthesisConfig,
    cegis,
    synth_complete,
    synth_instability,
)

__version__ = "0.1.0"

__all__ = [
    "AffineForm",
    "CertificateReport",
    "GAS",
    "GAS_LASALLE",
    "LieChain",
    "NOT_GAS",
    "Param",
    "ParamPoly",
    "Polynomial",
    "ReductionResult",
    "SynthesisConfig",
    "TEMPLATE_INFEASIBLE",
    "TIMEOUT",
    "TemplateSpec",
    "UNKNOWN",
    "VectorField",
    "VerificationOutcome",
    "apply_equalities",
    "build_template",
    "cegis",
    "check_instability",
    "extract_constraints",
    "lie_chain",
    "lie_derivative",
    "parse_polynomial",
    "reduce_to_fixpoint",
    "synth_complete",
    "synth_instability",
    "verify_certificate",
]
