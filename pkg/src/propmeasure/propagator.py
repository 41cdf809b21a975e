"""Activity-based bounds propagation for linear constraints.

Two schedules are provided:

* ``immediate`` writes every accepted bound change into the working state at
  once, so constraints later in the same round see it (the classic
  sequential scheme).
* ``deferred`` evaluates every candidate against the state frozen at the
  start of the round and applies, per bound, the strongest candidate at the
  end of the round (the semantics of a parallel sweep).

Both converge to the same fixed point.  Residual activities are always
recomputed by summing the remaining terms in stored order, so a residual is
bit-identical to the activity of the constraint with that term deleted.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal, Sequence

from .core import INF, INF_THRESHOLD, NEG_INF, LinearConstraint, ProblemInstance

Variant = Literal["immediate", "deferred"]
StopMode = Literal["fixpoint", "tolerance"]
VARIANTS = ("immediate", "deferred")


@dataclass(frozen=True)
class ActivityValue:
    """Activity split into its finite part and counts of infinite contributions."""

    finite_part: float = 0.0
    pos_inf_count: int = 0
    neg_inf_count: int = 0

    @property
    def is_mixed(self) -> bool:
        return self.pos_inf_count > 0 and self.neg_inf_count > 0

    @property
    def value(self) -> float | None:
        """Rendered extended real, or ``None`` when infinities of both signs are present."""
        if self.pos_inf_count and self.neg_inf_count:
            return None
        if self.pos_inf_count:
            return INF
        if self.neg_inf_count:
            return NEG_INF
        return self.finite_part


@dataclass
class BoundsState:
    lower: list[float]
    upper: list[float]
    infeasible: bool = False
    # first variable with lower > upper, or the constraint found infeasible
    infeasible_var: int | None = None
    infeasible_row: int | None = None

    @classmethod
    def from_instance(cls, instance: ProblemInstance) -> "BoundsState":
        return cls(instance.start_lower, instance.start_upper)

    def copy(self) -> "BoundsState":
        return BoundsState(list(self.lower), list(self.upper), self.infeasible,
                           self.infeasible_var, self.infeasible_row)

    def __len__(self) -> int:
        return len(self.lower)


@dataclass(frozen=True)
class PropagationConfig:
    variant: Variant = "immediate"
    max_rounds: int = 100
    significance_rel_tol: float = 1e-3
    accept_abs_tol: float = 1e-9
    integrality_eps: float = 1e-6
    stop_mode: StopMode = "fixpoint"
    status_checks: bool = True

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.stop_mode not in ("fixpoint", "tolerance"):
            raise ValueError(f"unknown stop mode {self.stop_mode!r}")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be positive")
        if self.accept_abs_tol <= 0 or self.integrality_eps <= 0 or self.significance_rel_tol < 0:
            raise ValueError("tolerances must be positive")
        if self.stop_mode == "tolerance" and not self.accept_abs_tol < self.significance_rel_tol:
            raise ValueError("accept_abs_tol must be below significance_rel_tol in tolerance mode")


@dataclass(frozen=True)
class BoundChange:
    var: int
    side: Literal["lower", "upper"]
    old: float
    new: float
    constraint: int

    @property
    def is_infinite_reduction(self) -> bool:
        return math.isinf(self.old) and not math.isinf(self.new)

    @property
    def relative_size(self) -> float:
        if math.isinf(self.old):
            return INF
        return abs(self.new - self.old) / max(1.0, abs(self.old))


@dataclass
class RoundStats:
    index: int
    changes: list[BoundChange] = field(default_factory=list)
    duration_ns: int = 0

    @property
    def num_changes(self) -> int:
        return len(self.changes)

    @property
    def inf_reductions(self) -> int:
        return sum(1 for ch in self.changes if ch.is_infinite_reduction)

    @property
    def max_relative_change(self) -> float:
        return max((ch.relative_size for ch in self.changes), default=0.0)


@dataclass
class PropagationTrace:
    rounds: list[RoundStats] = field(default_factory=list)
    fixpoint_reached: bool = False
    infeasible: bool = False
    # one of "fixpoint", "tolerance", "max_rounds", "infeasible"
    stopped_by: str = ""

    @property
    def total_rounds(self) -> int:
        return len(self.rounds)

    @property
    def rounds_with_infinite_reductions(self) -> int:
        return sum(1 for r in self.rounds if r.inf_reductions)

    @property
    def total_time_ns(self) -> int:
        return sum(r.duration_ns for r in self.rounds)

    @property
    def total_changes(self) -> int:
        return sum(r.num_changes for r in self.rounds)

    def change_sequence(self) -> list[tuple]:
        return [(r.index, ch.var, ch.side, ch.new) for r in self.rounds for ch in r.changes]


def _contributions(constraint: LinearConstraint, lower, upper, minimum: bool):
    """Finite contributions (infinite ones stored as 0.0) plus inf flags."""
    finite, infinite = [], []
    for j, a in zip(constraint.indices, constraint.coefs):
        b = (lower[j] if a > 0 else upper[j]) if minimum else (upper[j] if a > 0 else lower[j])
        if b == INF or b == NEG_INF:
            finite.append(0.0)
            infinite.append(1 if a * b > 0 else -1)
        else:
            finite.append(a * b)
            infinite.append(0)
    return finite, infinite


def _seqsum(values: Iterable[float]) -> float:
    # plain left-to-right accumulation; builtin sum() may compensate on newer Pythons
    total = 0.0
    for x in values:
        total += x
    return total


def _summed(finite: list[float], skip: int) -> float:
    """Sum of ``finite`` without entry ``skip``, in the same order as :func:`_seqsum`."""
    total = 0.0
    for k, x in enumerate(finite):
        if k != skip:
            total += x
    return total


def _activity_from(finite: Sequence[float], infinite: Sequence[int], skip: int | None) -> ActivityValue:
    if skip is None:
        total = _seqsum(finite)
        pos = sum(1 for s in infinite if s > 0)
        neg = sum(1 for s in infinite if s < 0)
    else:
        total = _summed(finite, skip)
        pos = sum(1 for k, s in enumerate(infinite) if s > 0 and k != skip)
        neg = sum(1 for k, s in enumerate(infinite) if s < 0 and k != skip)
    return ActivityValue(total, pos, neg)


def min_activity(constraint: LinearConstraint, bounds: BoundsState) -> ActivityValue:
    return _activity_from(*_contributions(constraint, bounds.lower, bounds.upper, True), None)


def max_activity(constraint: LinearConstraint, bounds: BoundsState) -> ActivityValue:
    return _activity_from(*_contributions(constraint, bounds.lower, bounds.upper, False), None)


def _position(constraint: LinearConstraint, j: int) -> int:
    try:
        return constraint.indices.index(j)
    except ValueError:
        raise KeyError(f"variable {j} does not appear in the constraint") from None


def activity_residual(constraint: LinearConstraint, bounds: BoundsState, j: int,
                      kind: Literal["min", "max"]) -> float | None:
    """Min or max activity with variable ``j``'s term left out.

    Returns ``None`` when the residual holds infinities of both signs; no
    deduction may be drawn from it.
    """
    if kind not in ("min", "max"):
        raise ValueError(f"kind must be 'min' or 'max', not {kind!r}")
    pos = _position(constraint, j)
    finite, infinite = _contributions(constraint, bounds.lower, bounds.upper, kind == "min")
    return _activity_from(finite, infinite, pos).value




def _candidates_at(constraint, pos, min_f, min_i, max_f, max_i, n_min_neg, n_min_pos,
                   n_max_pos, n_max_neg, is_integer, eps):
    a = constraint.coefs[pos]
    own_min, own_max = min_i[pos], max_i[pos]
    mneg = n_min_neg - (own_min < 0)
    mpos = n_min_pos - (own_min > 0)
    xpos = n_max_pos - (own_max > 0)
    xneg = n_max_neg - (own_max < 0)

    if mneg and mpos:
        minres = None
    elif mneg:
        minres = NEG_INF
    elif mpos:
        minres = INF
    else:
        minres = _summed(min_f, pos)
    if xpos and xneg:
        maxres = None
    elif xpos:
        maxres = INF
    elif xneg:
        maxres = NEG_INF
    else:
        maxres = _summed(max_f, pos)

    # surplus numerator: rhs - minres ; slack numerator: lhs - maxres
    rhs, lhs = constraint.rhs, constraint.lhs
    if minres is None or rhs == INF or minres == NEG_INF:
        surplus = INF
    else:
        surplus = rhs - minres
    if maxres is None or lhs == NEG_INF or maxres == INF:
        slack = NEG_INF
    else:
        slack = lhs - maxres

    if a > 0:
        lnew = slack / a if slack != NEG_INF else NEG_INF
        unew = surplus / a if surplus != INF else INF
    else:
        lnew = surplus / a if surplus != INF else NEG_INF
        unew = slack / a if slack != NEG_INF else INF

    if lnew <= -INF_THRESHOLD or lnew != lnew:
        lnew = NEG_INF
    if unew >= INF_THRESHOLD or unew != unew:
        unew = INF
    if is_integer:
        if lnew != NEG_INF:
            lnew = float(math.ceil(lnew - eps))
        if unew != INF:
            unew = float(math.floor(unew + eps))
    return lnew, unew


class _RowEval:
    """Per-constraint activity pieces reused for all its variables."""

    __slots__ = ("constraint", "min_f", "min_i", "max_f", "max_i", "counts")

    def __init__(self, constraint, lower, upper):
        self.constraint = constraint
        self.min_f, self.min_i = _contributions(constraint, lower, upper, True)
        self.max_f, self.max_i = _contributions(constraint, lower, upper, False)
        self.counts = (
            sum(1 for s in self.min_i if s < 0), sum(1 for s in self.min_i if s > 0),
            sum(1 for s in self.max_i if s > 0), sum(1 for s in self.max_i if s < 0),
        )

    def candidates(self, pos, is_integer, eps):
        return _candidates_at(self.constraint, pos, self.min_f, self.min_i, self.max_f,
                              self.max_i, *self.counts, is_integer, eps)


def bound_candidates(constraint: LinearConstraint, bounds: BoundsState, j: int,
                     is_integer: bool = False, integrality_eps: float = 1e-6) -> tuple[float, float]:
    """New ``(lower, upper)`` for variable ``j`` implied by one constraint.

    Infinite sides or residuals give vacuous (infinite) candidates.  Integer
    variables get ``ceil(l - eps)`` / ``floor(u + eps)``.
    """
    pos = _position(constraint, j)
    return _RowEval(constraint, bounds.lower, bounds.upper).candidates(pos, is_integer, integrality_eps)


def constraint_status(constraint: LinearConstraint, bounds: BoundsState,
                      feastol: float = 0.0) -> Literal["redundant", "infeasible", "active"]:
    """Classify a constraint under the given bounds.

    ``feastol`` is an absolute slack applied to the infeasibility test only.
    """
    lo = min_activity(constraint, bounds).value
    hi = max_activity(constraint, bounds).value
    if lo is None or hi is None:
        return "active"
    if lo > constraint.rhs + feastol or constraint.lhs > hi + feastol:
        return "infeasible"
    if constraint.lhs <= lo and hi <= constraint.rhs:
        return "redundant"
    return "active"


def _row_status(row: _RowEval, feastol: float) -> str:
    c = row.constraint
    n_min_neg, n_min_pos, n_max_pos, n_max_neg = row.counts
    if (n_min_neg and n_min_pos) or (n_max_pos and n_max_neg):
        return "active"
    lo = NEG_INF if n_min_neg else INF if n_min_pos else _seqsum(row.min_f)
    hi = INF if n_max_pos else NEG_INF if n_max_neg else _seqsum(row.max_f)
    if lo > c.rhs + feastol or c.lhs > hi + feastol:
        return "infeasible"
    if c.lhs <= lo and hi <= c.rhs:
        return "redundant"
    return "active"


def _improves_lower(new: float, old: float, tol: float) -> bool:
    return new > old + tol if old != NEG_INF else new != NEG_INF


def _improves_upper(new: float, old: float, tol: float) -> bool:
    return new < old - tol if old != INF else new != INF


def propagate_round(instance: ProblemInstance, state: BoundsState,
                    config: PropagationConfig | Variant = "immediate",
                    round_index: int = 1,
                    order: Iterable[int] | None = None) -> tuple[BoundsState, RoundStats]:
    """One pass over all constraints; returns the successor state and its stats."""
    if isinstance(config, str):
        config = PropagationConfig(variant=config)
    if state.infeasible:
        raise ValueError("cannot propagate an infeasible state")
    order = range(instance.num_constraints) if order is None else list(order)
    if config.variant == "immediate":
        return _round_immediate(instance, state.copy(), config, round_index, order)
    return _round_deferred(instance, state.copy(), config, round_index, order)


def _round_immediate(instance, state, config, round_index, order):
    lower, upper = state.lower, state.upper
    integer = instance.integer_mask
    tol, eps = config.accept_abs_tol, config.integrality_eps
    stats = RoundStats(round_index)
    for i in order:
        c = instance.constraints[i]
        row = _RowEval(c, lower, upper)
        if config.status_checks:
            status = _row_status(row, tol)
            if status == "redundant":
                continue
            if status == "infeasible":
                state.infeasible, state.infeasible_row = True, i
                return state, stats
        for pos, j in enumerate(c.indices):
            lnew, unew = row.candidates(pos, integer[j], eps)
            changed = False
            if _improves_lower(lnew, lower[j], tol):
                stats.changes.append(BoundChange(j, "lower", lower[j], lnew, i))
                lower[j] = lnew
                changed = True
            if _improves_upper(unew, upper[j], tol):
                stats.changes.append(BoundChange(j, "upper", upper[j], unew, i))
                upper[j] = unew
                changed = True
            if changed:
                if lower[j] > upper[j] + tol:
                    state.infeasible, state.infeasible_var, state.infeasible_row = True, j, i
                    return state, stats
                row = _RowEval(c, lower, upper)
    return state, stats


def _round_deferred(instance, state, config, round_index, order):
    lower, upper = state.lower, state.upper
    integer = instance.integer_mask
    tol, eps = config.accept_abs_tol, config.integrality_eps
    stats = RoundStats(round_index)
    best_lower: dict[int, tuple[float, int]] = {}
    best_upper: dict[int, tuple[float, int]] = {}
    for i in order:
        c = instance.constraints[i]
        row = _RowEval(c, lower, upper)
        if config.status_checks:
            status = _row_status(row, tol)
            if status == "redundant":
                continue
            if status == "infeasible":
                state.infeasible, state.infeasible_row = True, i
                return state, stats
        for pos, j in enumerate(c.indices):
            lnew, unew = row.candidates(pos, integer[j], eps)
            if lnew != NEG_INF:
                cur = best_lower.get(j)
                if cur is None or lnew > cur[0] or (lnew == cur[0] and i < cur[1]):
                    best_lower[j] = (lnew, i)
            if unew != INF:
                cur = best_upper.get(j)
                if cur is None or unew < cur[0] or (unew == cur[0] and i < cur[1]):
                    best_upper[j] = (unew, i)

    for j in sorted(set(best_lower) | set(best_upper)):
        if j in best_lower:
            new, i = best_lower[j]
            if _improves_lower(new, lower[j], tol):
                stats.changes.append(BoundChange(j, "lower", lower[j], new, i))
                lower[j] = new
        if j in best_upper:
            new, i = best_upper[j]
            if _improves_upper(new, upper[j], tol):
                stats.changes.append(BoundChange(j, "upper", upper[j], new, i))
                upper[j] = new
    for j in range(len(lower)):
        if lower[j] > upper[j] + tol:
            state.infeasible, state.infeasible_var = True, j
            break
    return state, stats


def propagate_to_fixpoint(
    instance: ProblemInstance,
    config: PropagationConfig | None = None,
    *,
    order: Sequence[int] | None = None,
    on_round: Callable[[BoundsState, RoundStats], None] | None = None,
) -> tuple[BoundsState, PropagationTrace]:
    """Run rounds until nothing changes, the tolerance criterion fires, or ``max_rounds``.

    ``on_round`` is called after every round, outside the timed region, with
    the state reached and the round's stats.
    """
    config = config or PropagationConfig()
    state = BoundsState.from_instance(instance)
    trace = PropagationTrace()
    clock = time.perf_counter_ns
    for r in range(1, config.max_rounds + 1):
        t0 = clock()
        state, stats = propagate_round(instance, state, config, r, order)
        stats.duration_ns = clock() - t0
        trace.rounds.append(stats)
        if on_round is not None:
            on_round(state, stats)
        if state.infeasible:
            trace.infeasible = True
            trace.stopped_by = "infeasible"
            break
        if stats.num_changes == 0:
            trace.fixpoint_reached = True
            trace.stopped_by = "fixpoint"
            break
        if (config.stop_mode == "tolerance" and stats.inf_reductions == 0
                and stats.max_relative_change < config.significance_rel_tol):
            trace.stopped_by = "tolerance"
            break
    else:
        trace.stopped_by = "max_rounds"
    return state, trace


def fixpoints_agree(a: BoundsState, b: BoundsState, rel_tol: float = 1e-6) -> bool:
    """Compare two limit states bound by bound.

    Two infeasible states agree; an infeasible and a feasible one do not.
    """
    if len(a.lower) != len(b.lower) or len(a.upper) != len(b.upper):
        raise ValueError("states have different dimensions")
    if a.infeasible or b.infeasible:
        return a.infeasible and b.infeasible
    for x, y in zip(a.lower + a.upper, b.lower + b.upper):
        if math.isinf(x) or math.isinf(y):
            if x != y:
                return False
        elif abs(x - y) > rel_tol * max(1.0, abs(x)):
            return False
    return True
