"""Free-format MPS reader.

Only the constraint system and variable domains are kept; the objective row
is parsed and dropped.

Row senses map to sides as ``L -> (-inf, b)``, ``G -> (b, inf)``,
``E -> (b, b)``.  A RANGES value ``R`` widens a row as follows:

====  ==========  ===================
sense  sign of R   sides
====  ==========  ===================
G      any         ``(b, b + |R|)``
L      any         ``(b - |R|, b)``
E      R > 0       ``(b, b + R)``
E      R < 0       ``(b + R, b)``
====  ==========  ===================

Columns default to ``[0, inf)``, integer columns included.  A negative
``UP`` bound on a column whose lower bound is still the default 0 moves the
lower bound to ``-inf`` (with a warning), following common solver readers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from .core import INF, NEG_INF, LinearConstraint, VariableDomain, build_instance, make_ext

SKIPPED_SECTIONS = {"SOS", "INDICATORS", "QUADOBJ", "QSECTION", "QMATRIX", "QCMATRIX", "OBJSENSE", "OBJNAME"}


class MpsError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MalformedSectionError(MpsError):
    pass


class DuplicateRowError(MpsError):
    pass


class UnknownRowError(MpsError):
    pass


class UnknownColumnError(MpsError):
    pass


@dataclass
class ParseDiagnostics:
    warnings: list[tuple[int, str]] = field(default_factory=list)
    rows: int = 0
    columns: int = 0
    entries: int = 0

    def warn(self, line: int, message: str) -> None:
        self.warnings.append((line, message))


@dataclass
class _Column:
    name: str
    is_integer: bool = False
    lower: float = 0.0
    upper: float = INF
    lower_set: bool = False
    upper_set: bool = False
    entries: dict = field(default_factory=dict)


def _number(tok: str, lineno: int) -> float:
    try:
        return make_ext(tok)
    except ValueError:
        raise MpsError(lineno, f"invalid number '{tok}'") from None


def parse_mps(text: str, name: str = ""):
    """Parse MPS text into ``(ProblemInstance, ParseDiagnostics)``."""
    diag = ParseDiagnostics()
    section = None
    objective_rows: set[str] = set()
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    rhs: dict[str, float] = {}
    ranges: dict[str, float] = {}
    cols: dict[str, _Column] = {}
    integer_block = False
    problem_name = name

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip() or raw.lstrip().startswith("*"):
            continue
        tok = raw.split()
        if not raw[0].isspace():
            header = tok[0].upper()
            if header == "NAME":
                section = "NAME"
                if len(tok) > 1 and not name:
                    problem_name = tok[1]
                continue
            if header in SKIPPED_SECTIONS:
                diag.warn(lineno, f"section {header} skipped")
                section = "SKIP"
                continue
            if header in {"ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"}:
                if len(tok) > 1:
                    raise MalformedSectionError(lineno, f"unexpected tokens after section {header}")
                section = header
                continue
            if header == "ENDATA":
                section = "END"
                break
            raise MalformedSectionError(lineno, f"unknown section header '{tok[0]}'")

        if section is None:
            raise MalformedSectionError(lineno, "data line before any section header")
        if section in ("SKIP", "NAME"):
            continue

        if section == "ROWS":
            if len(tok) != 2:
                raise MpsError(lineno, "ROWS entry needs a sense and a name")
            sense, rname = tok[0].upper(), tok[1]
            if rname in row_sense or rname in objective_rows:
                raise DuplicateRowError(lineno, f"duplicate row '{rname}'")
            if sense == "N":
                objective_rows.add(rname)
                continue
            if sense not in ("L", "G", "E"):
                raise MpsError(lineno, f"unknown row sense '{sense}'")
            row_sense[rname] = sense
            row_order.append(rname)

        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1].strip("'").upper() == "MARKER":
                marker = tok[2].strip("'").upper()
                if marker == "INTORG":
                    integer_block = True
                elif marker == "INTEND":
                    integer_block = False
                else:
                    diag.warn(lineno, f"unknown marker '{tok[2]}'")
                continue
            if len(tok) not in (3, 5):
                raise MpsError(lineno, "COLUMNS entry needs one or two (row, value) pairs")
            cname = tok[0]
            col = cols.get(cname)
            if col is None:
                col = cols[cname] = _Column(cname, is_integer=integer_block)
            for rname, val in zip(tok[1::2], tok[2::2]):
                value = _number(val, lineno)
                if rname in objective_rows:
                    continue
                if rname not in row_sense:
                    raise UnknownRowError(lineno, f"unknown row '{rname}'")
                diag.entries += 1
                if not math.isfinite(value):
                    raise MpsError(lineno, f"infinite coefficient for '{cname}' in '{rname}'")
                if value == 0.0:
                    diag.warn(lineno, f"zero coefficient for '{cname}' in '{rname}' ignored")
                    continue
                if rname in col.entries:
                    diag.warn(lineno, f"duplicate entry for '{cname}' in '{rname}' summed")
                    value += col.entries[rname]
                col.entries[rname] = value

        elif section in ("RHS", "RANGES"):
            pairs = tok[1:] if len(tok) % 2 == 1 else tok
            if not pairs or len(pairs) % 2:
                raise MpsError(lineno, f"malformed {section} entry")
            target = rhs if section == "RHS" else ranges
            for rname, val in zip(pairs[::2], pairs[1::2]):
                value = _number(val, lineno)
                if rname in objective_rows:
                    if section == "RANGES":
                        diag.warn(lineno, f"range on objective row '{rname}' ignored")
                    continue
                if rname not in row_sense:
                    raise UnknownRowError(lineno, f"unknown row '{rname}'")
                target[rname] = value

        elif section == "BOUNDS":
            _parse_bound(tok, lineno, cols, diag)

    if section != "END":
        diag.warn(len(text.splitlines()), "missing ENDATA")

    return _assemble(problem_name, row_order, row_sense, rhs, ranges, cols, diag)


_VALUE_BOUNDS = {"LO", "UP", "FX", "LI", "UI"}
_FLAG_BOUNDS = {"FR", "MI", "PL", "BV"}


def _parse_bound(tok, lineno, cols, diag):
    btype = tok[0].upper()
    if btype not in _VALUE_BOUNDS | _FLAG_BOUNDS:
        raise MpsError(lineno, f"unknown bound type '{tok[0]}'")
    rest = tok[1:]
    # optional bound-set name: disambiguate by whether rest[1] names a column
    if len(rest) == 3:
        cname, val = rest[1], rest[2]
    elif len(rest) == 2:
        if btype in _VALUE_BOUNDS:
            cname, val = rest
        elif rest[1] in cols:
            cname, val = rest[1], None
        else:
            cname, val = rest
    elif len(rest) == 1 and btype in _FLAG_BOUNDS:
        cname, val = rest[0], None
    else:
        raise MpsError(lineno, f"malformed BOUNDS entry for type {btype}")
    col = cols.get(cname)
    if col is None:
        raise UnknownColumnError(lineno, f"unknown column '{cname}'")
    if btype in _VALUE_BOUNDS and val is None:
        raise MpsError(lineno, f"bound type {btype} needs a value")
    value = _number(val, lineno) if val is not None else None

    if btype in ("LO", "LI"):
        col.lower, col.lower_set = value, True
    elif btype in ("UP", "UI"):
        if value < 0 and col.lower == 0.0 and not col.lower_set:
            diag.warn(lineno, f"negative upper bound on '{cname}' sets lower bound to -inf")
            col.lower = NEG_INF
        col.upper, col.upper_set = value, True
    elif btype == "FX":
        col.lower = col.upper = value
        col.lower_set = col.upper_set = True
    elif btype == "FR":
        col.lower, col.upper = NEG_INF, INF
        col.lower_set = col.upper_set = True
    elif btype == "MI":
        col.lower, col.lower_set = NEG_INF, True
    elif btype == "PL":
        col.upper, col.upper_set = INF, True
    elif btype == "BV":
        if col.lower_set or col.upper_set:
            diag.warn(lineno, f"BV on '{cname}' overrides earlier bounds")
        col.lower, col.upper = 0.0, 1.0
        col.lower_set = col.upper_set = True
        col.is_integer = True
    if btype in ("LI", "UI"):
        col.is_integer = True


def _row_sides(sense: str, b: float, r: float | None) -> tuple[float, float]:
    if sense == "L":
        lhs, rhs = NEG_INF, b
        if r is not None:
            lhs = b - abs(r)
    elif sense == "G":
        lhs, rhs = b, INF
        if r is not None:
            rhs = b + abs(r)
    else:
        lhs = rhs = b
        if r is not None:
            if r > 0:
                rhs = b + r
            elif r < 0:
                lhs = b + r
    return make_ext(lhs), make_ext(rhs)


def _assemble(problem_name, row_order, row_sense, rhs, ranges, cols, diag):
    row_index = {r: i for i, r in enumerate(row_order)}
    row_terms: list[list[tuple[int, float]]] = [[] for _ in row_order]
    domains, var_names = [], []
    for j, col in enumerate(cols.values()):
        lower, upper = col.lower, col.upper
        if col.is_integer:
            if not col.upper_set and upper == INF:
                diag.warn(0, f"integer column '{col.name}' has no upper bound")
            if math.isfinite(lower) and lower != math.ceil(lower):
                diag.warn(0, f"fractional lower bound of integer column '{col.name}' rounded up")
                lower = float(math.ceil(lower))
            if math.isfinite(upper) and upper != math.floor(upper):
                diag.warn(0, f"fractional upper bound of integer column '{col.name}' rounded down")
                upper = float(math.floor(upper))
        domains.append(VariableDomain(lower, upper, col.is_integer))
        var_names.append(col.name)
        for rname, value in col.entries.items():
            row_terms[row_index[rname]].append((j, value))

    constraints = []
    for rname, terms in zip(row_order, row_terms):
        lhs, rhs_ = _row_sides(row_sense[rname], rhs.get(rname, 0.0), ranges.get(rname))
        constraints.append(LinearConstraint.from_terms(terms, lhs, rhs_))

    diag.rows = len(row_order)
    diag.columns = len(cols)
    instance = build_instance(
        domains, constraints, name=problem_name, var_names=var_names, row_names=row_order,
    )
    return instance, diag


def read_mps(path: str | Path):
    path = Path(path)
    return parse_mps(path.read_text(), name=path.stem)
