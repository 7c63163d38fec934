"""SMT-LIB v2 emission and solver subprocess management.

Queries are built as data (a small formula AST over polynomial atoms),
rendered to SMT-LIB text, and handed to an external solver process over
stdin/stdout.  The package is solver-agnostic: anything that reads
SMT-LIB v2 and prints ``sat``/``unsat``/``unknown`` plus ``get-value``
s-expressions works.  Discovery order is: an explicit command, the
``LYRA_CONFIG`` JSON file, the ``LYRA_SMT_CMD`` environment variable, a
``z3`` binary on PATH, and finally the bundled Node wrapper around the
z3 WebAssembly build.

Each query runs in a fresh single-use process that is killed on a
wall-clock deadline, so a hung solver can never stall the pipeline.  To
hide interpreter startup cost (the WASM build takes a fraction of a
second to boot) the runner keeps a small pool of prewarmed processes;
a worker signals readiness with a ``READY`` line before it will accept
a query, and the solve clock starts only when the query is dispatched.
"""

from __future__ import annotations

import json
import os
import shlex
import shutil
import subprocess
import threading
import time
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from random import Random
from typing import Mapping, Sequence

from lyra.poly import Polynomial
from lyra.template import AffineForm, ParamPoly

__all__ = [
    "And",
    "Atom",
    "Implies",
    "Not",
    "Or",
    "QuantifiedFormula",
    "SolverConfig",
    "SolverNotFoundError",
    "SolverResult",
    "SolverRunner",
    "atom",
    "emit",
    "eval_formula",
    "get_default_runner",
    "parse_script",
    "resolve_solver",
    "shutdown_default_runner",
    "solver_available",
    "spot_check_model",
    "sum_of_squares_positive",
]


# ---------------------------------------------------------------------------
# formula AST


@dataclass(frozen=True)
class Atom:
    """A polynomial comparison against zero: ``poly op 0``.

    poly is a ParamPoly whose state variables are named by ``names``
    (one name per dimension) and whose coefficient parameters refer to
    free constants of the enclosing query.
    """

    poly: ParamPoly
    names: tuple[str, ...]
    op: str  # one of < <= = != >= >

    def __post_init__(self) -> None:
        if self.op not in ("<", "<=", "=", "!=", ">=", ">"):
            raise ValueError(f"bad comparison operator {self.op!r}")
        if len(self.names) != self.poly.dimension:
            raise ValueError("one variable name per dimension is required")


@dataclass(frozen=True)
class And:
    parts: tuple


@dataclass(frozen=True)
class Or:
    parts: tuple


@dataclass(frozen=True)
class Not:
    part: object


@dataclass(frozen=True)
class Implies:
    left: object
    right: object


Formula = Atom | And | Or | Not | Implies


def atom(poly: Polynomial | ParamPoly, names: Sequence[str], op: str) -> Atom:
    if isinstance(poly, Polynomial):
        poly = ParamPoly.from_polynomial(poly)
    return Atom(poly, tuple(names), op)


def sum_of_squares_positive(names: Sequence[str]) -> Atom:
    """The atom ``x1^2 + ... + xn^2 > 0``, i.e. x is not the origin."""
    n = len(names)
    p = Polynomial(n, {tuple(2 if j == i else 0 for j in range(n)): 1 for i in range(n)})
    return atom(p, names, ">")


@dataclass(frozen=True)
class QuantifiedFormula:
    """A query: free constants, optional universal block, side asserts.

    The emitted script asserts every formula in ``side`` (constraints on
    the free constants alone) and, when ``universal_vars`` is nonempty,
    one ``(forall ...)`` assert with ``matrix`` as its body.
    """

    free_consts: tuple[str, ...]
    universal_vars: tuple[str, ...] = ()
    matrix: object | None = None
    side: tuple = ()

    def __post_init__(self) -> None:
        if self.universal_vars and self.matrix is None:
            raise ValueError("a universal block needs a matrix")
        if len(set(self.free_consts) | set(self.universal_vars)) != len(
            self.free_consts
        ) + len(self.universal_vars):
            raise ValueError("duplicate names between constants and bound variables")


# ---------------------------------------------------------------------------
# emission


def _rational_sexpr(q: Fraction) -> str:
    if q < 0:
        return f"(- {_rational_sexpr(-q)})"
    if q.denominator == 1:
        return str(q.numerator)
    return f"(/ {q.numerator} {q.denominator})"


def _affine_sexpr(form: AffineForm) -> str:
    parts = []
    for p in form.params():
        q = form.terms[p]
        parts.append(p.name if q == 1 else f"(* {_rational_sexpr(q)} {p.name})")
    if form.constant != 0 or not parts:
        parts.append(_rational_sexpr(form.constant))
    if len(parts) == 1:
        return parts[0]
    return f"(+ {' '.join(parts)})"


def _term_sexpr(form: AffineForm, alpha: tuple[int, ...], names: Sequence[str]) -> str:
    factors: list[str] = []
    coeff = _affine_sexpr(form)
    if coeff != "1":
        factors.append(coeff)
    for name, e in zip(names, alpha):
        factors.extend([name] * e)
    if not factors:
        return "1"
    if len(factors) == 1:
        return factors[0]
    return f"(* {' '.join(factors)})"


def _poly_sexpr(poly: ParamPoly, names: Sequence[str]) -> str:
    if poly.is_zero():
        return "0"
    terms = [_term_sexpr(form, alpha, names) for alpha, form in poly.iter_terms()]
    if len(terms) == 1:
        return terms[0]
    return f"(+ {' '.join(terms)})"


def _formula_sexpr(f: Formula) -> str:
    if isinstance(f, Atom):
        body = _poly_sexpr(f.poly, f.names)
        if f.op == "!=":
            return f"(not (= {body} 0))"
        return f"({f.op} {body} 0)"
    if isinstance(f, And):
        return f"(and {' '.join(_formula_sexpr(p) for p in f.parts)})"
    if isinstance(f, Or):
        return f"(or {' '.join(_formula_sexpr(p) for p in f.parts)})"
    if isinstance(f, Not):
        return f"(not {_formula_sexpr(f.part)})"
    if isinstance(f, Implies):
        return f"(=> {_formula_sexpr(f.left)} {_formula_sexpr(f.right)})"
    raise TypeError(f"not a formula: {f!r}")


def emit(qf: QuantifiedFormula) -> str:
    """Render a query as SMT-LIB v2 text.

    The output is byte-deterministic for a given formula: terms are
    ordered graded-lexicographically, parameters by id, and names as
    given.
    """
    lines: list[str] = []
    logic = "NRA" if qf.universal_vars else "QF_NRA"
    lines.append(f"(set-logic {logic})")
    for name in qf.free_consts:
        lines.append(f"(declare-const {name} Real)")
    for f in qf.side:
        lines.append(f"(assert {_formula_sexpr(f)})")
    if qf.universal_vars:
        binders = " ".join(f"({v} Real)" for v in qf.universal_vars)
        lines.append(f"(assert (forall ({binders}) {_formula_sexpr(qf.matrix)}))")
    elif qf.matrix is not None:
        lines.append(f"(assert {_formula_sexpr(qf.matrix)})")
    lines.append("(check-sat)")
    if qf.free_consts:
        lines.append(f"(get-value ({' '.join(qf.free_consts)}))")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# s-expression utilities (model parsing and the test-support re-parser)


class NonRationalModelError(ValueError):
    """A model value is an algebraic irrational we refuse to approximate."""


def _tokenize_sexpr(text: str) -> list[str]:
    out: list[str] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            out.append(ch)
            i += 1
        elif ch == ";":
            while i < n and text[i] != "\n":
                i += 1
        elif ch == '"':
            j = i + 1
            while j < n and text[j] != '"':
                j += 1
            out.append(text[i : j + 1])
            i = j + 1
        elif ch == "|":
            j = i + 1
            while j < n and text[j] != "|":
                j += 1
            out.append(text[i : j + 1])
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "();":
                j += 1
            out.append(text[i:j])
            i = j
    return out


def _read_sexpr(tokens: list[str], pos: int) -> tuple[object, int]:
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while pos < len(tokens) and tokens[pos] != ")":
            node, pos = _read_sexpr(tokens, pos)
            items.append(node)
        return items, pos + 1
    if tok == ")":
        raise ValueError("unbalanced s-expression")
    return tok, pos + 1


def _parse_all_sexprs(text: str) -> list[object]:
    tokens = _tokenize_sexpr(text)
    out = []
    pos = 0
    while pos < len(tokens):
        node, pos = _read_sexpr(tokens, pos)
        out.append(node)
    return out


def _eval_numeric(node: object) -> Fraction:
    if isinstance(node, str):
        try:
            return Fraction(node)
        except ValueError as exc:
            raise NonRationalModelError(f"non-numeric model value {node!r}") from exc
    assert isinstance(node, list)
    if not node:
        raise NonRationalModelError("empty model value")
    head = node[0]
    if head == "-" and len(node) == 2:
        return -_eval_numeric(node[1])
    if head == "/" and len(node) == 3:
        return _eval_numeric(node[1]) / _eval_numeric(node[2])
    if head == "+":
        return sum((_eval_numeric(x) for x in node[1:]), Fraction(0))
    if head == "*":
        out = Fraction(1)
        for x in node[1:]:
            out *= _eval_numeric(x)
        return out
    raise NonRationalModelError(f"cannot interpret model value {node!r}")


def parse_model(raw: str, names: Sequence[str]) -> dict[str, Fraction]:
    """Extract rational values for ``names`` from get-value output.

    Raises NonRationalModelError for algebraic values such as root
    objects, which downstream code maps to an UNKNOWN verdict.
    """
    wanted = set(names)
    model: dict[str, Fraction] = {}
    for node in _parse_all_sexprs(raw):
        if not isinstance(node, list):
            continue
        for entry in node:
            if (
                isinstance(entry, list)
                and len(entry) == 2
                and isinstance(entry[0], str)
                and entry[0] in wanted
            ):
                model[entry[0]] = _eval_numeric(entry[1])
    missing = wanted - set(model)
    if missing:
        raise ValueError(f"model is missing values for {sorted(missing)}")
    return model


def _flatten_atom(a: Atom, order: Mapping[str, int], dim: int) -> Polynomial:
    """Atom polynomial as a concrete polynomial over consts and vars."""
    terms: dict[tuple[int, ...], Fraction] = {}

    def bump(expo: list[int], coeff: Fraction) -> None:
        key = tuple(expo)
        terms[key] = terms.get(key, Fraction(0)) + coeff

    for alpha, form in a.poly.terms.items():
        base = [0] * dim
        for name, e in zip(a.names, alpha):
            base[order[name]] += e
        for p, q in form.terms.items():
            expo = list(base)
            expo[order[p.name]] += 1
            bump(expo, q)
        if form.constant != 0:
            bump(base, form.constant)
    return Polynomial(dim, terms)


def _sexpr_to_polynomial(node: object, order: Mapping[str, int], dim: int) -> Polynomial:
    if isinstance(node, str):
        if node in order:
            return Polynomial.variable(dim, order[node])
        return Polynomial.constant(dim, Fraction(node))
    assert isinstance(node, list) and node
    head = node[0]
    args = [_sexpr_to_polynomial(x, order, dim) for x in node[1:]]
    if head == "+":
        out = args[0]
        for a in args[1:]:
            out = out + a
        return out
    if head == "-":
        if len(args) == 1:
            return -args[0]
        out = args[0]
        for a in args[1:]:
            out = out - a
        return out
    if head == "*":
        out = args[0]
        for a in args[1:]:
            out = out * a
        return out
    if head == "/":
        num, den = args
        if den.highest_degree not in (None, 0):
            raise ValueError("cannot divide by a non-constant")
        return num.scale(Fraction(1) / den.constant_term)
    raise ValueError(f"unsupported arithmetic head {head!r}")


def parse_script(text: str) -> dict:
    """Re-parse emitted SMT-LIB text (test support).

    Returns the logic, the declared constants, the bound variables of
    the universal assert (if any), and every comparison atom found, each
    flattened to a concrete polynomial over all names so that emission
    and parsing can be compared for equivalence.
    """
    consts: list[str] = []
    bound: list[str] = []
    logic = None
    raw_atoms: list[tuple[str, object]] = []

    def walk(node: object) -> None:
        if not isinstance(node, list) or not node:
            return
        head = node[0]
        if head in ("and", "or", "not", "=>"):
            for child in node[1:]:
                walk(child)
        elif head == "forall":
            for name, _sort in node[1]:
                bound.append(name)
            walk(node[2])
        elif head in ("<", "<=", "=", ">=", ">"):
            raw_atoms.append((head, node))
        else:
            raise ValueError(f"unexpected formula head {head!r}")

    for node in _parse_all_sexprs(text):
        if not isinstance(node, list) or not node:
            continue
        if node[0] == "set-logic":
            logic = node[1]
        elif node[0] == "declare-const":
            consts.append(node[1])
        elif node[0] == "assert":
            walk(node[1])

    names = consts + bound
    order = {name: i for i, name in enumerate(names)}
    dim = len(names)
    atoms = []
    for op, node in raw_atoms:
        lhs = _sexpr_to_polynomial(node[1], order, dim)
        rhs = _sexpr_to_polynomial(node[2], order, dim)
        atoms.append((op, lhs - rhs))
    return {
        "logic": logic,
        "consts": consts,
        "bound": bound,
        "atoms": atoms,
        "names": names,
    }


# ---------------------------------------------------------------------------
# evaluation (model spot checks)


def eval_formula(f: Formula, env: Mapping[str, Fraction]) -> bool:
    """Evaluate a formula under a full assignment of names to rationals."""
    if isinstance(f, Atom):
        assignment = {p: env[p.name] for p in f.poly.params()}
        concrete = f.poly.substitute(assignment)
        # variables absent from the polynomial need no binding
        point = [
            env[name] if any(a[i] for a in concrete.terms) else Fraction(0)
            for i, name in enumerate(f.names)
        ]
        value = concrete.evaluate(point)
        return {
            "<": value < 0,
            "<=": value <= 0,
            "=": value == 0,
            "!=": value != 0,
            ">=": value >= 0,
            ">": value > 0,
        }[f.op]
    if isinstance(f, And):
        return all(eval_formula(p, env) for p in f.parts)
    if isinstance(f, Or):
        return any(eval_formula(p, env) for p in f.parts)
    if isinstance(f, Not):
        return not eval_formula(f.part, env)
    if isinstance(f, Implies):
        return (not eval_formula(f.left, env)) or eval_formula(f.right, env)
    raise TypeError(f"not a formula: {f!r}")


def spot_check_model(
    qf: QuantifiedFormula,
    model: Mapping[str, Fraction],
    rng: Random | None = None,
    trials: int = 100,
) -> bool:
    """Sanity-check a SAT model by random instantiation.

    Substitutes the model for the free constants and tries ``trials``
    random rational points for the universal variables; returns False if
    any instance of the asserted formulas evaluates to false.  A failure
    indicates a solver inconsistency and downgrades the result to
    UNKNOWN downstream.
    """
    rng = rng or Random(0)
    env: dict[str, Fraction] = {name: Fraction(model[name]) for name in qf.free_consts}
    for f in qf.side:
        if not eval_formula(f, env):
            return False
    if qf.matrix is None:
        return True
    if not qf.universal_vars:
        return eval_formula(qf.matrix, env)
    for _ in range(trials):
        point = {
            v: Fraction(rng.randint(-100, 100), rng.choice((1, 2, 3, 5, 10)))
            for v in qf.universal_vars
        }
        if not eval_formula(qf.matrix, {**env, **point}):
            return False
    return True


# ---------------------------------------------------------------------------
# solver processes


class SolverNotFoundError(RuntimeError):
    """No SMT solver is configured or discoverable.

    This is a configuration error, deliberately distinct from an
    UNKNOWN verdict: it means no solver ran at all.
    """


@dataclass(frozen=True)
class SolverConfig:
    cmd: tuple[str, ...]
    handshake: bool = False
    name: str = "solver"
    soft_timeout: bool = True  # prepend (set-option :timeout ms)


@dataclass
class SolverResult:
    verdict: str  # sat | unsat | unknown | timeout | error
    model: dict[str, Fraction] | None = None
    raw: str = ""
    solve_time: float = 0.0
    detail: str | None = None


def bundled_wrapper_path() -> Path:
    return Path(__file__).resolve().parent / "solvers" / "z3wasm.js"


_wrapper_probe_cache: dict[str, bool] = {}


def _wrapper_usable() -> bool:
    """True if node can resolve the z3-solver package for the wrapper."""
    key = "wrapper"
    if key not in _wrapper_probe_cache:
        node = shutil.which("node")
        ok = False
        if node is not None and bundled_wrapper_path().exists():
            try:
                proc = subprocess.run(
                    [node, "-e", "require.resolve('z3-solver')"],
                    cwd=bundled_wrapper_path().parent,
                    stdout=subprocess.DEVNULL,
                    stderr=subprocess.DEVNULL,
                    timeout=15,
                )
                ok = proc.returncode == 0
            except (OSError, subprocess.TimeoutExpired):
                ok = False
        _wrapper_probe_cache[key] = ok
    return _wrapper_probe_cache[key]


def resolve_solver(command: Sequence[str] | str | None = None) -> SolverConfig | None:
    """Locate an SMT solver command.

    Priority: the ``LYRA_CONFIG`` JSON file (key ``solver_cmd``), then
    an explicit ``command``, then ``LYRA_SMT_CMD``, then ``z3`` on
    PATH, then the bundled WASM wrapper.  Returns None when nothing is
    available.
    """
    config_path = os.environ.get("LYRA_CONFIG")
    if config_path and Path(config_path).exists():
        data = json.loads(Path(config_path).read_text())
        if "solver_cmd" in data:
            cmd = data["solver_cmd"]
            if isinstance(cmd, str):
                cmd = shlex.split(cmd)
            return SolverConfig(
                tuple(cmd),
                handshake=bool(data.get("handshake", False)),
                name=data.get("name", "configured"),
            )
    if command:
        if isinstance(command, str):
            command = shlex.split(command)
        cmd = tuple(command)
        is_wrapper = any(str(part).endswith("z3wasm.js") for part in cmd)
        return SolverConfig(cmd, handshake=is_wrapper, name="explicit")
    env_cmd = os.environ.get("LYRA_SMT_CMD")
    if env_cmd:
        cmd = tuple(shlex.split(env_cmd))
        is_wrapper = any(str(part).endswith("z3wasm.js") for part in cmd)
        return SolverConfig(cmd, handshake=is_wrapper, name="env")
    z3 = shutil.which("z3")
    if z3 is not None:
        return SolverConfig((z3, "-in"), handshake=False, name="z3")
    if _wrapper_usable():
        node = shutil.which("node")
        assert node is not None
        return SolverConfig((node, str(bundled_wrapper_path())), handshake=True, name="z3-wasm")
    return None


def solver_available() -> bool:
    return resolve_solver() is not None


class SolverRunner:
    """Dispatches queries to single-use, prewarmed solver processes.

    Every query consumes one process: the process is fed the script on
    stdin, its stdout is read to completion under a wall-clock deadline,
    and it is then killed and discarded.  A small pool of processes is
    kept spawned ahead of time so that interpreter startup (significant
    for the WASM backend) does not count against query deadlines.
    """

    def __init__(
        self,
        config: SolverConfig | None = None,
        pool_size: int = 2,
        startup_timeout: float = 120.0,
    ):
        if config is None:
            config = resolve_solver()
        if config is None:
            raise SolverNotFoundError(
                "no SMT solver found: install z3 on PATH, run 'npm install' for the "
                "bundled WASM backend, or set LYRA_SMT_CMD"
            )
        self.config = config
        self.pool_size = max(1, pool_size)
        self.startup_timeout = startup_timeout
        self._pool: deque[subprocess.Popen] = deque()
        self._lock = threading.Lock()
        self._closed = False
        self.queries_run = 0

    def _spawn(self) -> subprocess.Popen:
        try:
            return subprocess.Popen(
                self.config.cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except FileNotFoundError as exc:
            raise SolverNotFoundError(
                f"solver command {self.config.cmd[0]!r} not found"
            ) from exc

    def _take(self) -> subprocess.Popen:
        with self._lock:
            if self._closed:
                raise RuntimeError("runner is closed")
            if self._pool:
                return self._pool.popleft()
            return self._spawn()

    def _refill(self) -> None:
        # Called after a query finishes, so replacement workers do their
        # startup while the caller is busy with non-solver work instead
        # of competing with a running query for CPU.
        with self._lock:
            if self._closed:
                return
            while len(self._pool) < self.pool_size:
                self._pool.append(self._spawn())

    def prewarm(self) -> None:
        """Fill the pool ahead of the first query."""
        self._refill()

    @staticmethod
    def _kill(proc: subprocess.Popen) -> None:
        try:
            proc.kill()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired):
            pass

    def _await_ready(self, proc: subprocess.Popen) -> None:
        assert proc.stdout is not None
        deadline = time.monotonic() + self.startup_timeout
        line = b""
        while True:
            if time.monotonic() > deadline:
                self._kill(proc)
                raise SolverNotFoundError(
                    f"solver {self.config.cmd[0]!r} did not report READY within "
                    f"{self.startup_timeout:.0f}s"
                )
            line = proc.stdout.readline()
            if not line:
                self._kill(proc)
                raise SolverNotFoundError(
                    f"solver {self.config.cmd[0]!r} exited before READY; "
                    "is the z3-solver npm package installed?"
                )
            if line.strip() == b"READY":
                return

    def run(
        self,
        script: str,
        timeout_s: float | None = None,
        model_names: Sequence[str] = (),
    ) -> SolverResult:
        """Run one SMT-LIB script and parse the verdict and model."""
        proc = self._take()
        try:
            if self.config.handshake:
                self._await_ready(proc)
            payload = script
            if timeout_s is not None and self.config.soft_timeout:
                payload = f"(set-option :timeout {int(timeout_s * 1000)})\n" + payload
            out_chunks: list[bytes] = []

            def read_output() -> None:
                assert proc.stdout is not None
                out_chunks.append(proc.stdout.read())

            start = time.perf_counter()
            assert proc.stdin is not None
            reader = threading.Thread(target=read_output, daemon=True)
            reader.start()
            try:
                proc.stdin.write(payload.encode())
                proc.stdin.flush()
                proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass
            reader.join(timeout=timeout_s if timeout_s is not None else None)
            elapsed = time.perf_counter() - start
            self.queries_run += 1
            if reader.is_alive():
                self._kill(proc)
                reader.join(timeout=5)
                return SolverResult("timeout", raw="", solve_time=elapsed)
            raw = (out_chunks[0] if out_chunks else b"").decode(errors="replace")
            return self._interpret(raw, elapsed, model_names)
        finally:
            self._kill(proc)
            self._refill()

    @staticmethod
    def _interpret(raw: str, elapsed: float, model_names: Sequence[str]) -> SolverResult:
        verdict = None
        for line in raw.splitlines():
            token = line.strip()
            if token in ("sat", "unsat", "unknown"):
                verdict = token
                break
            if token == "timeout":
                verdict = "timeout"
                break
        if verdict is None:
            return SolverResult("error", raw=raw, solve_time=elapsed, detail="no verdict in output")
        if verdict == "sat" and model_names:
            try:
                model = parse_model(raw, model_names)
            except NonRationalModelError as exc:
                return SolverResult(
                    "unknown", raw=raw, solve_time=elapsed, detail=str(exc)
                )
            except ValueError as exc:
                return SolverResult("error", raw=raw, solve_time=elapsed, detail=str(exc))
            return SolverResult("sat", model=model, raw=raw, solve_time=elapsed)
        return SolverResult(verdict, raw=raw, solve_time=elapsed)

    def close(self) -> None:
        with self._lock:
            self._closed = True
            while self._pool:
                self._kill(self._pool.popleft())

    def __enter__(self) -> "SolverRunner":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


_default_runner: SolverRunner | None = None
_default_lock = threading.Lock()


def get_default_runner() -> SolverRunner:
    global _default_runner
    with _default_lock:
        if _default_runner is None:
            _default_runner = SolverRunner()
        return _default_runner


def shutdown_default_runner() -> None:
    global _default_runner
    with _default_lock:
        if _default_runner is not None:
            _default_runner.close()
            _default_runner = None
