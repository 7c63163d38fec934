"""Text files describing polynomial dynamical systems.

The format is line oriented::

    # anything after a hash is a comment
    name: e1
    expect: GAS
    vars: x1 x2
    f1: -x1^3 + x1^5*x2
    f2: -x2^3 - x1^6

``vars`` must come before the component lines and declares the
canonical variable names ``x1 .. xn`` in order.  ``name`` and
``expect`` are optional metadata.  Parse errors report the offending
line and column.

A small corpus of benchmark systems ships with the package; see
:func:`corpus_dir`, :func:`load_benchmark` and
``BENCHMARK_TEMPLATES`` for their customary template shapes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .poly import Polynomial, PolyParseError, VectorField, parse_polynomial
from .template import TemplateSpec

__all__ = [
    "BENCHMARK_TEMPLATES",
    "SystemFile",
    "SystemFileError",
    "benchmark_names",
    "benchmark_template",
    "corpus_dir",
    "corpus_path",
    "load_benchmark",
    "load_system",
    "parse_system_text",
]


class SystemFileError(ValueError):
    """A system description that does not follow the format.

    Carries the 1-based ``line`` and ``column`` of the problem plus the
    originating ``path`` (or ``<string>`` for in-memory text).
    """

    def __init__(self, message: str, path: str, line: int, column: int):
        super().__init__(f"{path}:{line}:{column}: {message}")
        self.path = path
        self.line = line
        self.column = column


@dataclass(frozen=True)
class SystemFile:
    """A parsed system description."""

    field: VectorField
    variables: tuple[str, ...]
    name: str | None = None
    expect: str | None = None
    path: str | None = None

    @property
    def dimension(self) -> int:
        return self.field.dimension


def parse_system_text(text: str, path: str = "<string>") -> SystemFile:
    """Parse the contents of a system file."""
    name: str | None = None
    expect: str | None = None
    variables: tuple[str, ...] | None = None
    components: dict[int, Polynomial] = {}
    seen_vars_line = 0

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if ":" not in line:
            col = len(line) - len(line.lstrip()) + 1
            raise SystemFileError(
                "expected 'key: value' (one of name, expect, vars, fN)",
                path,
                lineno,
                col,
            )
        key_part, value = line.split(":", 1)
        key = key_part.strip()
        key_col = raw_line.index(key) + 1
        value_col = raw_line.index(":", raw_line.index(key)) + 2
        value_stripped = value.strip()
        if value_stripped:
            value_col = raw_line.index(value_stripped, value_col - 1) + 1

        if key == "name":
            name = value_stripped or None
        elif key == "expect":
            expect = value_stripped or None
        elif key == "vars":
            if variables is not None:
                raise SystemFileError("duplicate vars line", path, lineno, key_col)
            names = tuple(value_stripped.split())
            if not names:
                raise SystemFileError("vars line declares no variables", path, lineno, value_col)
            expected = tuple(f"x{i + 1}" for i in range(len(names)))
            if names != expected:
                raise SystemFileError(
                    f"variables must be named {' '.join(expected)} in order",
                    path,
                    lineno,
                    value_col,
                )
            variables = names
            seen_vars_line = lineno
        elif key.startswith("f") and key[1:].isdigit():
            if variables is None:
                raise SystemFileError(
                    "component line before vars line", path, lineno, key_col
                )
            index = int(key[1:])
            if not 1 <= index <= len(variables):
                raise SystemFileError(
                    f"component f{index} out of range for {len(variables)} variables",
                    path,
                    lineno,
                    key_col,
                )
            if index in components:
                raise SystemFileError(f"duplicate component f{index}", path, lineno, key_col)
            if not value_stripped:
                raise SystemFileError(f"empty polynomial for f{index}", path, lineno, value_col)
            try:
                poly = parse_polynomial(value_stripped, len(variables))
            except PolyParseError as exc:
                raise SystemFileError(
                    exc.reason, path, lineno, value_col + exc.position
                ) from exc
            components[index] = poly
        else:
            raise SystemFileError(
                f"unknown key {key!r} (expected name, expect, vars, or fN)",
                path,
                lineno,
                key_col,
            )

    if variables is None:
        raise SystemFileError("missing vars line", path, max(seen_vars_line, 1), 1)
    missing = [i for i in range(1, len(variables) + 1) if i not in components]
    if missing:
        raise SystemFileError(
            f"missing component f{missing[0]}", path, seen_vars_line, 1
        )

    try:
        field = VectorField([components[i] for i in range(1, len(variables) + 1)])
    except ValueError as exc:
        raise SystemFileError(str(exc), path, seen_vars_line, 1) from exc
    return SystemFile(field, variables, name=name, expect=expect, path=path)


def load_system(path: str | Path) -> SystemFile:
    """Read and parse a system file from disk."""
    p = Path(path)
    return parse_system_text(p.read_text(), str(p))


# ---------------------------------------------------------------------------
# shipped corpus


def corpus_dir() -> Path:
    """Directory holding the benchmark system files."""
    return Path(__file__).resolve().parent / "corpus"


def benchmark_names() -> list[str]:
    """Names of the shipped benchmarks, in numeric order."""
    paths = sorted(corpus_dir().glob("e*.sys"), key=lambda p: int(p.stem[1:]))
    return [p.stem for p in paths]


def corpus_path(name: str) -> Path:
    path = corpus_dir() / f"{name}.sys"
    if not path.exists():
        raise FileNotFoundError(f"no benchmark named {name!r} in {corpus_dir()}")
    return path


def load_benchmark(name: str) -> SystemFile:
    """Load a shipped benchmark by name, e.g. ``e1``."""
    return load_system(corpus_path(name))


# The template shapes customarily used with each benchmark: quadratics
# with cross terms for the 2-3 dimensional systems, even templates up
# to degree 4 without cross terms for the larger ones, and the shapes
# the weak/LaSalle witnesses of e8-e10 need.
BENCHMARK_TEMPLATES: dict[str, TemplateSpec] = {
    "e1": TemplateSpec(2, 2, 2, "even", True),
    "e2": TemplateSpec(2, 2, 2, "even", True),
    "e3": TemplateSpec(2, 2, 2, "even", True),
    "e4": TemplateSpec(2, 2, 2, "even", True),
    "e5": TemplateSpec(3, 2, 2, "even", True),
    "e6": TemplateSpec(4, 2, 4, "even", False),
    "e7": TemplateSpec(6, 2, 4, "even", False),
    "e8": TemplateSpec(2, 2, 4, "even", False),
    "e9": TemplateSpec(2, 2, 6, "even", False),
    "e10": TemplateSpec(2, 2, 2, "even", True),
}


def benchmark_template(system: SystemFile) -> TemplateSpec | None:
    """Customary template shape for a named benchmark, if known."""
    if system.name is None:
        return None
    return BENCHMARK_TEMPLATES.get(system.name)
