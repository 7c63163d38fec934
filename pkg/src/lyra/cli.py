"""Command line interface.

Subcommands:

* ``reduce``  — symbolically reduce a template against a system.
* ``synth``   — synthesize a certificate (complete, lp-cegis, smt-sample).
* ``verify``  — check a given candidate function against a system.
* ``bench``   — run the shipped benchmark suite and print a table.
* ``instab``  — random stability/instability survey over (dim, degree) cells.

Exit codes: 0 when a certificate was produced (or all checks passed),
2 for UNKNOWN/TIMEOUT outcomes, 3 for TEMPLATE_INFEASIBLE, and 1 for
usage or input errors.  ``--json`` switches the report to one JSON
object per line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from .poly import PolyParseError, parse_polynomial
from .randsys import run_table
from .reduction import STATUS_OK, reduce_to_fixpoint
from .smt import SolverNotFoundError, SolverRunner, resolve_solver
from .synth import (
    GAS,
    GAS_LASALLE,
    NOT_GAS,
    TEMPLATE_INFEASIBLE,
    CertificateReport,
    SynthesisConfig,
    cegis,
    default_template_spec,
    synth_complete,
    synth_instability,
)
from .sysfile import (
    SystemFile,
    SystemFileError,
    benchmark_names,
    benchmark_template,
    corpus_path,
    load_benchmark,
    load_system,
)
from .template import TemplateSpec, build_template
from .verify import certificate_ok, check_instability, verify_certificate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNKNOWN = 2
EXIT_INFEASIBLE = 3

_STATUS_EXIT = {
    GAS: EXIT_OK,
    GAS_LASALLE: EXIT_OK,
    NOT_GAS: EXIT_OK,
    TEMPLATE_INFEASIBLE: EXIT_INFEASIBLE,
}


class _UsageError(Exception):
    """Input problem that should exit with code 1."""


def _load_file(arg: str) -> SystemFile:
    path = Path(arg)
    if path.exists():
        return load_system(path)
    # allow bare benchmark names like "e1" or "e1.sys" from anywhere
    stem = path.name[:-4] if path.name.endswith(".sys") else path.name
    if path.parent == Path(".") and stem in benchmark_names():
        return load_system(corpus_path(stem))
    raise _UsageError(f"no such file: {arg}")


def _add_template_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--min-deg", type=int, default=None, help="lowest template degree")
    parser.add_argument(
        "--deg", type=int, default=None, help="highest template degree (default per system)"
    )
    parser.add_argument(
        "--parity",
        choices=["even", "all"],
        default=None,
        help="keep only even-degree monomials, or all of them",
    )
    cross = parser.add_mutually_exclusive_group()
    cross.add_argument(
        "--cross", dest="cross", action="store_true", default=None,
        help="include mixed monomials",
    )
    cross.add_argument(
        "--no-cross", dest="cross", action="store_false",
        help="pure powers x_i^d only",
    )


def _template_spec(args: argparse.Namespace, system: SystemFile) -> TemplateSpec:
    base = benchmark_template(system) or default_template_spec(system.field)
    min_deg = args.min_deg if args.min_deg is not None else base.min_degree
    max_deg = args.deg if args.deg is not None else base.max_degree
    if args.min_deg is not None and args.deg is None:
        max_deg = max(max_deg, min_deg)
    if args.deg is not None and args.min_deg is None:
        min_deg = min(min_deg, max_deg)
    parity = args.parity if args.parity is not None else base.parity
    cross = args.cross if args.cross is not None else base.cross_terms
    try:
        return TemplateSpec(system.dimension, min_deg, max_deg, parity, cross)
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _make_runner(args: argparse.Namespace) -> SolverRunner:
    config = resolve_solver(getattr(args, "solver", None))
    if config is None:
        raise _UsageError(
            "no SMT solver available: install the z3-solver npm package, put z3 "
            "on PATH, or set LYRA_SMT_CMD"
        )
    return SolverRunner(config)


def _export_solver(args: argparse.Namespace) -> None:
    """Make --solver visible to library defaults and worker processes."""
    if getattr(args, "solver", None):
        os.environ["LYRA_SMT_CMD"] = args.solver


def _parse_fraction(text: str, what: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise _UsageError(f"cannot read {what} {text!r} as a rational") from exc


def _parse_point(text: str, dimension: int) -> tuple[Fraction, ...]:
    parts = [p for p in text.replace("(", " ").replace(")", " ").replace(",", " ").split() if p]
    if len(parts) != dimension:
        raise _UsageError(f"point needs {dimension} coordinates, got {len(parts)}")
    return tuple(_parse_fraction(p, "coordinate") for p in parts)


def _emit(record: dict, as_json: bool, lines: list[str]) -> None:
    if as_json:
        print(json.dumps(record))
    else:
        for line in lines:
            print(line)


def _fmt_seconds(value: float) -> str:
    return f"{value:.3f}s"


# ---------------------------------------------------------------------------
# reduce


def cmd_reduce(args: argparse.Namespace) -> int:
    system = _load_file(args.system)
    spec = _template_spec(args, system)
    template = build_template(spec)
    result = reduce_to_fixpoint(template, system.field)

    record = {
        "command": "reduce",
        "system": system.name or args.system,
        "status": result.status,
        "template": str(result.template),
        "substitutions": {str(p): str(f) for p, f in result.substitutions.items()},
        "equalities": [str(c.form) + " = 0" for c in result.equalities],
        "pending": [str(c.form) + " <= 0" for c in result.pending],
        "detail": result.detail,
    }
    lines = [f"status: {result.status}", f"V = {result.template}"]
    if result.substitutions:
        subs = ", ".join(f"{p} -> {f}" for p, f in sorted(
            result.substitutions.items(), key=lambda kv: kv[0].id
        ))
        lines.append(f"substitutions: {subs}")
    for c in result.equalities:
        lines.append(f"equality: {c.form} = 0  [{c.rule}]")
    for c in result.pending:
        lines.append(f"pending: {c.form} <= 0  [{c.rule}]")
    if result.detail:
        lines.append(f"detail: {result.detail}")
    _emit(record, args.json, lines)
    return EXIT_OK if result.status == STATUS_OK else EXIT_INFEASIBLE


# ---------------------------------------------------------------------------
# synth


def _report_lines(report: CertificateReport) -> list[str]:
    lines = [f"status: {report.status}"]
    if report.witness is not None:
        lines.append(f"V = {report.witness}")
    if report.witness_point is not None:
        lines.append("z = (" + ", ".join(str(v) for v in report.witness_point) + ")")
    if report.lasalle_r is not None:
        lines.append(f"lasalle_r: {report.lasalle_r}")
    if report.method in ("lp", "smt-sample"):
        lines.append(
            f"cegis: {report.cegis_iterations} steps, "
            f"{report.counterexamples_used} counterexamples"
        )
    if report.timings:
        shown = ["reduction", "solve", "verify", "total"]
        parts = [f"{k} {_fmt_seconds(report.timings[k])}" for k in shown if k in report.timings]
        lines.append("time: " + "  ".join(parts))
    if report.diagnostics:
        lines.append(f"diagnostics: {report.diagnostics}")
    return lines


def cmd_synth(args: argparse.Namespace) -> int:
    system = _load_file(args.system)
    runner = _make_runner(args)
    mode = "weak" if args.lasalle else "strict"
    method = {"complete": "complete", "lp-cegis": "lp", "smt-sample": "smt-sample"}[args.method]
    config = SynthesisConfig(
        method=method,
        mode=mode,
        use_reduction=args.sr,
        mu=_parse_fraction(args.mu, "mu"),
        samples=args.samples,
        cegis_steps=args.cegis_steps,
        rounding=not args.no_round,
        box=args.domain,
        timeout_s=args.timeout,
        r_max=args.lasalle_r,
        seed=args.seed,
    )
    with runner:
        if args.instability:
            spec = _template_spec(args, system) if _explicit_template(args) else None
            report = synth_instability(
                system.field, spec, config, runner, system=system.name or args.system
            )
        else:
            spec = _template_spec(args, system)
            if method == "complete":
                report = synth_complete(
                    system.field, spec, config, runner, system=system.name or args.system
                )
            else:
                report = cegis(
                    system.field, spec, config, runner, system=system.name or args.system
                )
    _emit(report.to_json(), args.json, _report_lines(report))
    return _STATUS_EXIT.get(report.status, EXIT_UNKNOWN)


def _explicit_template(args: argparse.Namespace) -> bool:
    return any(
        getattr(args, name) is not None for name in ("min_deg", "deg", "parity", "cross")
    )


# ---------------------------------------------------------------------------
# verify


def cmd_verify(args: argparse.Namespace) -> int:
    system = _load_file(args.system)
    try:
        candidate = parse_polynomial(args.candidate, system.dimension)
    except PolyParseError as exc:
        raise _UsageError(f"cannot parse candidate: {exc}") from exc
    runner = _make_runner(args)
    with runner:
        if args.z is not None:
            z = _parse_point(args.z, system.dimension)
            outcomes = check_instability(
                candidate, system.field, z, runner, args.timeout
            )
        else:
            mode = "weak" if args.lasalle else "strict"
            outcomes = verify_certificate(
                candidate, system.field, mode, runner, args.timeout, r_max=args.lasalle_r
            )

    record = {
        "command": "verify",
        "system": system.name or args.system,
        "candidate": str(candidate),
        "checks": {
            tag: {
                "verdict": o.verdict,
                "counterexample": [str(v) for v in o.counterexample]
                if o.counterexample is not None
                else None,
                "lasalle_r": o.lasalle_r,
            }
            for tag, o in outcomes.items()
        },
        "valid": certificate_ok(outcomes),
    }
    lines = []
    for tag, o in outcomes.items():
        line = f"{tag}: {o.verdict}"
        if o.counterexample is not None:
            line += " at (" + ", ".join(str(v) for v in o.counterexample) + ")"
        if o.lasalle_r is not None:
            line += f" (r={o.lasalle_r})"
        lines.append(line)
    lines.append("valid" if record["valid"] else "not valid")
    _emit(record, args.json, lines)
    return EXIT_OK if record["valid"] else EXIT_UNKNOWN


# ---------------------------------------------------------------------------
# bench


def _parse_suite(text: str) -> list[str]:
    names = benchmark_names()
    if text in ("all", ""):
        return names
    out: list[str] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            lo_i, hi_i = int(lo.lstrip("e")), int(hi.lstrip("e"))
            chunk = [f"e{i}" for i in range(lo_i, hi_i + 1)]
        else:
            chunk = [part if part.startswith("e") else f"e{part}"]
        for name in chunk:
            if name not in names:
                raise _UsageError(f"unknown benchmark {name!r}")
            out.append(name)
    if not out:
        raise _UsageError("empty suite selection")
    return out


def _bench_one(task: tuple[str, str, float, int]) -> dict:
    name, method_label, timeout_s, seed = task
    system = load_benchmark(name)
    spec = benchmark_template(system)
    mode = "weak" if system.expect == GAS_LASALLE else "strict"
    method = {"complete": "complete", "lp-cegis": "lp", "smt-sample": "smt-sample"}[method_label]
    config = SynthesisConfig(method=method, mode=mode, timeout_s=timeout_s, seed=seed)
    t0 = time.perf_counter()
    if method == "complete":
        report = synth_complete(system.field, spec, config, system=name)
    else:
        report = cegis(system.field, spec, config, system=name)
    wall = time.perf_counter() - t0
    row = report.to_json()
    row.update({"command": "bench", "system": name, "method": method_label, "wall": round(wall, 3)})
    return row


def cmd_bench(args: argparse.Namespace) -> int:
    suite = _parse_suite(args.suite)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    for m in methods:
        if m not in ("complete", "lp-cegis", "smt-sample"):
            raise _UsageError(f"unknown method {m!r}")
    if not methods:
        raise _UsageError("empty method selection")
    _export_solver(args)
    _make_runner(args).close()  # fail early if no solver is configured

    tasks = [(name, m, args.timeout, args.seed) for name in suite for m in methods]
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_bench_one, tasks))
    else:
        rows = [_bench_one(t) for t in tasks]

    if args.json:
        for row in rows:
            print(json.dumps(row))
        return EXIT_OK
    header = f"{'system':<8} {'method':<12} {'status':<20} {'time':>8}  witness"
    print(header)
    print("-" * len(header))
    for row in rows:
        total = row["timings"].get("total", row["wall"])
        witness = row["witness"] or ""
        print(
            f"{row['system']:<8} {row['method']:<12} {row['status']:<20} "
            f"{total:>7.2f}s  {witness}"
        )
    return EXIT_OK


# ---------------------------------------------------------------------------
# instab


def _parse_int_list(text: str, what: str) -> list[int]:
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise _UsageError(f"empty {what} selection")
    return out


def cmd_instab(args: argparse.Namespace) -> int:
    dims = _parse_int_list(args.dims, "dims")
    degs = _parse_int_list(args.degs, "degs")
    _export_solver(args)
    _make_runner(args).close()  # fail early if no solver is configured
    cells = run_table(
        dims,
        degs,
        args.trials,
        timeout_s=args.timeout,
        base_seed=args.seed,
        use_reduction=args.sr,
        workers=args.workers,
    )
    if args.json:
        for cell in cells:
            print(json.dumps(cell.summary()))
        return EXIT_OK
    header = (
        f"{'n':>3} {'deg':>4} {'trials':>7} {'excl':>5} {'unstable%':>10} "
        f"{'stable%':>8} {'t.o.%':>6} {'unres%':>7} {'mean t(unst)':>13}"
    )
    print(header)
    print("-" * len(header))
    for cell in cells:
        s = cell.summary()
        mean_t = s["mean_unstable_proof_time"]
        print(
            f"{s['dimension']:>3} {s['max_degree']:>4} {s['trials']:>7} "
            f"{s['excluded']:>5} {s['unstable_proven']:>10.1f} {s['stable_proven']:>8.1f} "
            f"{s['timeout_both']:>6.1f} {s['unresolved']:>7.1f} "
            f"{mean_t if mean_t is not None else '-':>13}"
        )
    print(f"coefficient law: {cells[0].summary()['coefficient_law']}" if cells else "")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument wiring


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lyra",
        description="Synthesize, reduce, and verify global Lyapunov certificates "
        "for polynomial vector fields.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_reduce = sub.add_parser("reduce", help="symbolically reduce a template")
    p_reduce.add_argument("system", help="system file (or shipped benchmark name)")
    _add_template_flags(p_reduce)
    p_reduce.add_argument("--json", action="store_true")
    p_reduce.set_defaults(func=cmd_reduce)

    p_synth = sub.add_parser("synth", help="synthesize a certificate")
    p_synth.add_argument("system")
    p_synth.add_argument(
        "--method",
        choices=["complete", "lp-cegis", "smt-sample"],
        default="complete",
    )
    sr = p_synth.add_mutually_exclusive_group()
    sr.add_argument("--sr", dest="sr", action="store_true", default=True,
                    help="apply symbolic reduction first (default)")
    sr.add_argument("--no-sr", dest="sr", action="store_false")
    p_synth.add_argument("--lasalle", action="store_true",
                         help="weak mode: nonpositive drift plus the LaSalle check")
    p_synth.add_argument("--instability", action="store_true",
                         help="search for a certificate that the origin is not GAS")
    p_synth.add_argument("--no-round", action="store_true",
                         help="keep solver coefficients unrounded")
    _add_template_flags(p_synth)
    p_synth.add_argument("--samples", type=int, default=None,
                         help="initial sample count (default 3000 lp / 300 smt-sample)")
    p_synth.add_argument("--cegis-steps", type=int, default=10)
    p_synth.add_argument("--mu", default="1/100", help="margin constant (rational)")
    p_synth.add_argument("--domain", type=int, default=10,
                         help="half-width of the sampling box")
    p_synth.add_argument("--lasalle-r", type=int, default=6,
                         help="highest Lie-derivative order tried")
    p_synth.add_argument("--timeout", type=float, default=60.0)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--solver", default=None, help="solver command override")
    p_synth.add_argument("--json", action="store_true")
    p_synth.set_defaults(func=cmd_synth)

    p_verify = sub.add_parser("verify", help="verify a candidate function")
    p_verify.add_argument("system")
    p_verify.add_argument("candidate", help="polynomial in x1..xn")
    p_verify.add_argument("--lasalle", action="store_true",
                          help="weak mode plus the LaSalle condition")
    p_verify.add_argument("--z", default=None,
                          help="check the instability conditions with this witness point")
    p_verify.add_argument("--lasalle-r", type=int, default=6)
    p_verify.add_argument("--timeout", type=float, default=60.0)
    p_verify.add_argument("--solver", default=None)
    p_verify.add_argument("--json", action="store_true")
    p_verify.set_defaults(func=cmd_verify)

    p_bench = sub.add_parser("bench", help="run the shipped benchmarks")
    p_bench.add_argument("--suite", default="all", help="e.g. e1-e10 or e1,e3,e8")
    p_bench.add_argument("--methods", default="complete,lp-cegis")
    p_bench.add_argument("--timeout", type=float, default=60.0)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--solver", default=None)
    p_bench.add_argument("--json", action="store_true")
    p_bench.set_defaults(func=cmd_bench)

    p_instab = sub.add_parser("instab", help="random instability survey")
    p_instab.add_argument("--dims", default="2", help="e.g. 2..4 or 2,6")
    p_instab.add_argument("--degs", default="2", help="e.g. 2,3")
    p_instab.add_argument("--trials", type=int, default=20)
    p_instab.add_argument("--timeout", type=float, default=1.0)
    p_instab.add_argument("--seed", type=int, default=0)
    sr2 = p_instab.add_mutually_exclusive_group()
    sr2.add_argument("--sr", dest="sr", action="store_true", default=True)
    sr2.add_argument("--no-sr", dest="sr", action="store_false")
    p_instab.add_argument("--workers", type=int, default=1)
    p_instab.add_argument("--solver", default=None)
    p_instab.add_argument("--json", action="store_true")
    p_instab.set_defaults(func=cmd_instab)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SolverNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
