"""Extended reals and the immutable linear constraint system.

Extended reals are plain Python floats: ``math.inf`` and ``-math.inf`` stand
for the infinities and every finite value is kept strictly below
``INF_THRESHOLD`` in magnitude.  :func:`make_ext` is the single entry point
that canonicalizes raw numbers read from files or user input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

INF_THRESHOLD = 1e20

INF = math.inf
NEG_INF = -math.inf


class ExtArithmeticError(ArithmeticError):
    """Raised for the undefined form ``+inf + -inf``."""


class ValidationError(ValueError):
    """An instance violates a structural invariant.

    ``row`` and ``col`` name the offending constraint / variable index when
    known.
    """

    def __init__(self, message: str, row: int | None = None, col: int | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if col is not None:
            where.append(f"column {col}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)
        self.row = row
        self.col = col


_INF_TOKENS = {
    "inf": INF, "+inf": INF, "infinity": INF, "+infinity": INF,
    "-inf": NEG_INF, "-infinity": NEG_INF,
}


def make_ext(raw: float | int | str) -> float:
    """Canonicalize ``raw`` into an extended real.

    Magnitudes at or beyond ``INF_THRESHOLD`` become the matching infinity.
    Strings ``"inf"``, ``"-inf"``, ``"infinity"`` (any case) are accepted as
    infinity tokens.  NaN is rejected.
    """
    if isinstance(raw, str):
        token = raw.strip().lower()
        if token in _INF_TOKENS:
            return _INF_TOKENS[token]
        value = float(token)
    else:
        value = float(raw)
    if math.isnan(value):
        raise ValueError("NaN is not an extended real")
    if value >= INF_THRESHOLD:
        return INF
    if value <= -INF_THRESHOLD:
        return NEG_INF
    return value


def is_finite(value: float) -> bool:
    return -INF < value < INF


def ext_compare(a: float, b: float) -> int:
    """Three-way comparison: -1, 0 or 1."""
    return (a > b) - (a < b)


def ext_add(a: float, b: float) -> float:
    if (a == INF and b == NEG_INF) or (a == NEG_INF and b == INF):
        raise ExtArithmeticError("+inf + -inf is undefined")
    return a + b


def ext_mul(a: float, b: float) -> float:
    """Product of extended reals.

    ``0 * inf`` is taken as 0, the usual convention for activities (a zero
    coefficient never contributes).
    """
    if a == 0.0 or b == 0.0:
        return 0.0
    return a * b


def format_ext(value: float) -> str:
    """Render for text output; ``repr`` keeps finite floats bit-exact."""
    if value == INF:
        return "inf"
    if value == NEG_INF:
        return "-inf"
    return repr(float(value))


@dataclass(frozen=True)
class VariableDomain:
    lower: float = 0.0
    upper: float = INF
    is_integer: bool = False

    def __post_init__(self):
        lower = make_ext(self.lower)
        upper = make_ext(self.upper)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if lower == INF:
            raise ValidationError("lower bound cannot be +inf")
        if upper == NEG_INF:
            raise ValidationError("upper bound cannot be -inf")
        if lower > upper:
            raise ValidationError(f"empty domain [{lower}, {upper}]")
        if self.is_integer:
            for b in (lower, upper):
                if is_finite(b) and b != math.floor(b):
                    raise ValidationError(f"integer variable has fractional bound {b}")


@dataclass(frozen=True)
class LinearConstraint:
    """``lhs <= sum(coefs[k] * x[indices[k]]) <= rhs`` in canonical sparse form."""

    indices: tuple[int, ...]
    coefs: tuple[float, ...]
    lhs: float = NEG_INF
    rhs: float = INF

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        coefs = tuple(float(a) for a in self.coefs)
        if len(indices) != len(coefs):
            raise ValidationError("indices and coefficients differ in length")
        for pos, (j, a) in enumerate(zip(indices, coefs)):
            if not math.isfinite(a) or abs(a) >= INF_THRESHOLD:
                raise ValidationError(f"non-finite coefficient {a}", col=j)
            if a == 0.0:
                raise ValidationError("zero coefficient", col=j)
            if pos and indices[pos - 1] >= j:
                raise ValidationError("variable indices must be strictly increasing", col=j)
        lhs = make_ext(self.lhs)
        rhs = make_ext(self.rhs)
        if lhs == INF or rhs == NEG_INF:
            raise ValidationError("side has the wrong infinity")
        if lhs == NEG_INF and rhs == INF:
            raise ValidationError("constraint is free on both sides")
        if lhs > rhs:
            raise ValidationError(f"lhs {lhs} exceeds rhs {rhs}")
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "coefs", coefs)
        object.__setattr__(self, "lhs", lhs)
        object.__setattr__(self, "rhs", rhs)

    @property
    def terms(self) -> list[tuple[int, float]]:
        return list(zip(self.indices, self.coefs))

    def coef_of(self, j: int) -> float:
        for i, a in zip(self.indices, self.coefs):
            if i == j:
                return a
        raise KeyError(j)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[int, float]], lhs=NEG_INF, rhs=INF) -> "LinearConstraint":
        """Build from unordered ``(index, coef)`` pairs; duplicates are rejected."""
        pairs = sorted((int(j), float(a)) for j, a in terms)
        for (j0, _), (j1, _) in zip(pairs, pairs[1:]):
            if j0 == j1:
                raise ValidationError("duplicate variable in constraint", col=j0)
        return cls(tuple(j for j, _ in pairs), tuple(a for _, a in pairs), lhs, rhs)


@dataclass(frozen=True)
class ProblemInstance:
    domains: tuple[VariableDomain, ...]
    constraints: tuple[LinearConstraint, ...]
    columns: tuple[tuple[int, ...], ...] = field(compare=False)
    name: str = ""
    var_names: tuple[str, ...] = ()
    row_names: tuple[str, ...] = ()

    @property
    def num_vars(self) -> int:
        return len(self.domains)

    @property
    def num_constraints(self) -> int:
        return len(self.constraints)

    @property
    def start_lower(self) -> list[float]:
        return [d.lower for d in self.domains]

    @property
    def start_upper(self) -> list[float]:
        return [d.upper for d in self.domains]

    @property
    def integer_mask(self) -> list[bool]:
        return [d.is_integer for d in self.domains]

    def var_name(self, j: int) -> str:
        return self.var_names[j] if self.var_names else f"x{j}"

    def row_name(self, i: int) -> str:
        return self.row_names[i] if self.row_names else f"c{i}"


def build_instance(
    domains: Sequence[VariableDomain | tuple],
    constraints: Sequence[LinearConstraint | tuple],
    *,
    name: str = "",
    var_names: Sequence[str] = (),
    row_names: Sequence[str] = (),
) -> ProblemInstance:
    """Validate and assemble a :class:`ProblemInstance`.

    ``domains`` items may be ``VariableDomain`` or ``(lower, upper[, is_integer])``
    tuples.  ``constraints`` items may be ``LinearConstraint`` or
    ``(terms, lhs, rhs)`` tuples with ``terms`` an iterable of
    ``(index, coef)``.
    """
    doms = []
    for j, d in enumerate(domains):
        if isinstance(d, VariableDomain):
            doms.append(d)
            continue
        try:
            doms.append(VariableDomain(*d))
        except ValidationError as exc:
            raise ValidationError(str(exc), col=j) from None
    n = len(doms)

    cons = []
    for i, c in enumerate(constraints):
        try:
            if not isinstance(c, LinearConstraint):
                terms, lhs, rhs = c
                c = LinearConstraint.from_terms(terms, lhs, rhs)
        except ValidationError as exc:
            raise ValidationError(str(exc), row=i, col=exc.col) from None
        except ValueError as exc:
            raise ValidationError(str(exc), row=i) from None
        for j in c.indices:
            if not 0 <= j < n:
                raise ValidationError(f"unknown variable {j}", row=i, col=j)
        cons.append(c)

    if var_names and len(var_names) != n:
        raise ValidationError("var_names length does not match number of variables")
    if row_names and len(row_names) != len(cons):
        raise ValidationError("row_names length does not match number of constraints")

    columns: list[list[int]] = [[] for _ in range(n)]
    for i, c in enumerate(cons):
        for j in c.indices:
            columns[j].append(i)

    return ProblemInstance(
        domains=tuple(doms),
        constraints=tuple(cons),
        columns=tuple(tuple(col) for col in columns),
        name=name,
        var_names=tuple(var_names),
        row_names=tuple(row_names),
    )
