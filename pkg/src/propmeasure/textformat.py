"""Canonical plain-text serialization of :class:`ProblemInstance`.

Grammar (whitespace separated tokens, ``#`` starts a comment line)::

    problem <name>                  # '-' for an unnamed instance
    variables <n>
    <j> <name> <C|I> <lower> <upper>            # n lines, j = 0..n-1
    constraints <m>
    <i> <name> <lhs> <rhs> <k> <j_1> <a_1> ... <j_k> <a_k>   # m lines
    end

Numbers are written with ``repr`` so a dump/load cycle is bit-exact.
Infinities are written ``inf`` / ``-inf``.  Names must not contain
whitespace.
"""

from __future__ import annotations

from pathlib import Path

from .core import (
    LinearConstraint,
    ProblemInstance,
    ValidationError,
    VariableDomain,
    build_instance,
    format_ext,
    make_ext,
)


class FormatError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def dumps(instance: ProblemInstance) -> str:
    out = [f"problem {instance.name or '-'}", f"variables {instance.num_vars}"]
    for j, d in enumerate(instance.domains):
        kind = "I" if d.is_integer else "C"
        out.append(f"{j} {instance.var_name(j)} {kind} {format_ext(d.lower)} {format_ext(d.upper)}")
    out.append(f"constraints {instance.num_constraints}")
    for i, c in enumerate(instance.constraints):
        terms = " ".join(f"{j} {a!r}" for j, a in zip(c.indices, c.coefs))
        line = f"{i} {instance.row_name(i)} {format_ext(c.lhs)} {format_ext(c.rhs)} {len(c.indices)}"
        out.append(f"{line} {terms}" if terms else line)
    out.append("end")
    return "\n".join(out) + "\n"


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if stripped and not stripped.startswith("#"):
            yield lineno, stripped.split()


def _expect(it, keyword: str) -> tuple[int, list[str]]:
    try:
        lineno, tok = next(it)
    except StopIteration:
        raise FormatError(0, f"unexpected end of input, expected '{keyword}'") from None
    if tok[0] != keyword:
        raise FormatError(lineno, f"expected '{keyword}', got '{tok[0]}'")
    return lineno, tok


def loads(text: str) -> ProblemInstance:
    """Parse the canonical text format; errors carry the offending line number."""
    state = {"line": 0}

    def lines():
        for lineno, tok in _lines(text):
            state["line"] = lineno
            yield lineno, tok

    try:
        return _parse(lines())
    except FormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise FormatError(state["line"], f"malformed line: {exc}") from None


def _parse(it) -> ProblemInstance:
    lineno, tok = _expect(it, "problem")
    name = "" if len(tok) < 2 or tok[1] == "-" else tok[1]

    lineno, tok = _expect(it, "variables")
    n = int(tok[1])
    domains, var_names = [], []
    for j in range(n):
        lineno, tok = next(it, (lineno, None))
        if tok is None or len(tok) != 5 or int(tok[0]) != j:
            raise FormatError(lineno, f"malformed variable line, expected index {j}")
        if tok[2] not in ("C", "I"):
            raise FormatError(lineno, f"unknown variable kind '{tok[2]}'")
        try:
            domains.append(VariableDomain(make_ext(tok[3]), make_ext(tok[4]), tok[2] == "I"))
        except ValidationError as exc:
            raise FormatError(lineno, str(exc)) from None
        var_names.append(tok[1])

    lineno, tok = _expect(it, "constraints")
    m = int(tok[1])
    constraints, row_names = [], []
    for i in range(m):
        lineno, tok = next(it, (lineno, None))
        if tok is None or len(tok) < 5 or int(tok[0]) != i:
            raise FormatError(lineno, f"malformed constraint line, expected index {i}")
        k = int(tok[4])
        if len(tok) != 5 + 2 * k:
            raise FormatError(lineno, f"expected {k} terms")
        idx = tuple(int(t) for t in tok[5::2])
        coefs = tuple(float(t) for t in tok[6::2])
        try:
            constraints.append(LinearConstraint(idx, coefs, make_ext(tok[2]), make_ext(tok[3])))
        except ValidationError as exc:
            raise FormatError(lineno, str(exc)) from None
        row_names.append(tok[1])
    _expect(it, "end")

    try:
        return build_instance(domains, constraints, name=name, var_names=var_names, row_names=row_names)
    except ValidationError as exc:
        raise FormatError(lineno, str(exc)) from None


def read_instance(path: str | Path) -> ProblemInstance:
    """Load an instance from a ``.mps`` file or a canonical text file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".mps":
        from .mps import parse_mps

        instance, _ = parse_mps(text, name=path.stem)
        return instance
    instance = loads(text)
    if not instance.name:
        instance = ProblemInstance(
            instance.domains, instance.constraints, instance.columns,
            path.stem, instance.var_names, instance.row_names,
        )
    return instance


def write_instance(instance: ProblemInstance, path: str | Path) -> None:
    Path(path).write_text(dumps(instance))
