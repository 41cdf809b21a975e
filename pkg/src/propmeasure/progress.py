"""Algorithm-independent progress scores for bounds propagation.

Progress is tracked in two separate phases:

* infinite reductions: the share of bounds that go from infinite to finite
  at the fixed point and are already finite now;
* finite reductions: per bound, how far the current value has moved from its
  weakest value towards its fixed-point value, summed over all bounds and
  scaled so that the fixed point scores 100.

A score that cannot be formed (no bound to reduce) is ``None`` throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

from .core import INF, NEG_INF, ProblemInstance
from .propagator import (
    BoundsState,
    PropagationConfig,
    PropagationTrace,
    RoundStats,
    propagate_to_fixpoint,
)
from .weakest import WeakestBounds, compute_weakest_bounds

SCORE_SLACK = 1e-9


class ScoreContractError(ValueError):
    """A current bound lies outside ``[weakest, limit]``."""


class InfeasibleRunError(RuntimeError):
    def __init__(self, message: str, trace: PropagationTrace):
        super().__init__(message)
        self.trace = trace


class NondeterminismError(RuntimeError):
    """The scoring and timing passes visited different bound sequences."""


@dataclass
class ProgressReference:
    start: BoundsState
    weakest: WeakestBounds
    limit: BoundsState
    n_total: int
    max_score: int
    excluded_lower: frozenset[int] = frozenset()
    excluded_upper: frozenset[int] = frozenset()
    diagnostics: list[str] = field(default_factory=list)


def _finite(x: float) -> bool:
    return x != INF and x != NEG_INF


def count_infinite_reductions(start: BoundsState, limit: BoundsState) -> int:
    n = sum(1 for s, l in zip(start.lower, limit.lower) if s == NEG_INF and _finite(l))
    return n + sum(1 for s, u in zip(start.upper, limit.upper) if s == INF and _finite(u))


def count_current(start: BoundsState, current: BoundsState) -> int:
    """Number of initially infinite bounds that are finite in ``current``."""
    return count_infinite_reductions(start, current)


def progress_inf(start: BoundsState, current: BoundsState, n_total: int) -> float | None:
    if n_total < 0:
        raise ValueError("n_total must be non-negative")
    if n_total == 0:
        return None
    return count_current(start, current) / n_total


def bound_score(reference: float, current: float, limit: float,
                side: Literal["lower", "upper"], *, label: str = "") -> float:
    """Share of the way ``current`` has moved from ``reference`` to ``limit``.

    Zero while ``current`` is infinite, has not passed the reference, or when
    the reference already equals the limit.
    """
    if side not in ("lower", "upper"):
        raise ValueError(f"side must be 'lower' or 'upper', not {side!r}")
    if not _finite(current):
        return 0.0
    if side == "upper":
        # mirror onto the lower-bound case
        reference, current, limit = -reference, -current, -limit
    if not (_finite(reference) and _finite(limit)
            and reference - SCORE_SLACK * max(1.0, abs(reference)) <= current
            <= limit + SCORE_SLACK * max(1.0, abs(limit))):
        name = f" {label}" if label else ""
        raise ScoreContractError(f"{side} bound{name}: current value outside [weakest, limit]")
    if current > reference and reference != limit:
        return min(1.0, (current - reference) / (limit - reference))
    return 0.0


def make_reference(start: BoundsState, weakest: WeakestBounds, limit: BoundsState) -> ProgressReference:
    """Assemble the score reference, excluding bounds without a usable weakest value."""
    if limit.infeasible:
        raise ValueError("the limit state is infeasible")
    n = len(start.lower)
    diagnostics = []
    excluded_lower, excluded_upper = set(), set()
    for j in range(n):
        grew_lower = start.lower[j] == NEG_INF and _finite(limit.lower[j])
        grew_upper = start.upper[j] == INF and _finite(limit.upper[j])
        if grew_lower and (weakest.cap_hit or not _finite(weakest.lower[j])):
            excluded_lower.add(j)
        if grew_upper and (weakest.cap_hit or not _finite(weakest.upper[j])):
            excluded_upper.add(j)
    if excluded_lower or excluded_upper:
        diagnostics.append(
            f"{len(excluded_lower) + len(excluded_upper)} bound(s) without a converged "
            "weakest value excluded from finite scoring"
        )
    max_score = sum(1 for j in range(n) if j not in excluded_lower
                    and weakest.lower[j] != limit.lower[j])
    max_score += sum(1 for j in range(n) if j not in excluded_upper
                     and weakest.upper[j] != limit.upper[j])
    return ProgressReference(
        start=start, weakest=weakest, limit=limit,
        n_total=count_infinite_reductions(start, limit), max_score=max_score,
        excluded_lower=frozenset(excluded_lower), excluded_upper=frozenset(excluded_upper),
        diagnostics=diagnostics,
    )


def build_reference(instance: ProblemInstance, config: PropagationConfig | None = None,
                    weakest_max_iterations: int = 100) -> ProgressReference:
    """Weakest bounds plus a fixed-point run of ``config``'s variant."""
    config = config or PropagationConfig()
    if config.stop_mode != "fixpoint":
        config = PropagationConfig(**{**config.__dict__, "stop_mode": "fixpoint"})
    limit, trace = propagate_to_fixpoint(instance, config)
    if trace.infeasible:
        raise InfeasibleRunError("instance is infeasible", trace)
    weakest = compute_weakest_bounds(instance, weakest_max_iterations,
                                     integrality_eps=config.integrality_eps)
    ref = make_reference(BoundsState.from_instance(instance), weakest, limit)
    if not trace.fixpoint_reached:
        ref.diagnostics.append(f"limit state is not a fixed point (stopped by {trace.stopped_by})")
    return ref


def progress_fin(reference: ProgressReference, current: BoundsState) -> tuple[float, float | None]:
    """Raw finite score and its normalization to ``[0, 100]``."""
    w, lim = reference.weakest, reference.limit
    raw = 0.0
    for j in range(len(current.lower)):
        if j not in reference.excluded_lower:
            raw += bound_score(w.lower[j], current.lower[j], lim.lower[j], "lower", label=str(j))
        if j not in reference.excluded_upper:
            raw += bound_score(w.upper[j], current.upper[j], lim.upper[j], "upper", label=str(j))
    if reference.max_score == 0:
        return raw, None
    return raw, 100.0 * raw / reference.max_score


@dataclass
class ProgressSnapshot:
    round: int
    time_ns: int
    n_current: int
    p_inf: float | None
    p_fin_raw: float
    p_fin_normalized: float | None


def snapshot(reference: ProgressReference, current: BoundsState, round_index: int,
             time_ns: int = 0) -> ProgressSnapshot:
    raw, norm = progress_fin(reference, current)
    return ProgressSnapshot(
        round=round_index,
        time_ns=time_ns,
        n_current=count_current(reference.start, current),
        p_inf=progress_inf(reference.start, current, reference.n_total),
        p_fin_raw=raw,
        p_fin_normalized=norm,
    )


@dataclass
class ProgressCurve:
    """Piecewise-linear progress over normalized time.

    ``raw_times`` are wall-clock nanoseconds of the kept samples; ``times``
    the same points rescaled to ``[0, 100]``.  ``round_times`` and
    ``round_has_inf`` describe every round ``1..k`` of the run, including
    rounds whose samples were dropped.
    """

    raw_times: list[float]
    times: list[float]
    progress: list[float]
    rounds: list[int]
    round_times: list[float] = field(default_factory=list)
    round_has_inf: list[bool] = field(default_factory=list)
    trivial: bool = False

    def __post_init__(self):
        if not (len(self.raw_times) == len(self.times) == len(self.progress) == len(self.rounds)):
            raise ValueError("curve columns differ in length")

    @classmethod
    def from_points(cls, times: Sequence[float], progress: Sequence[float],
                    raw_times: Sequence[float] | None = None,
                    round_has_inf: Sequence[bool] | None = None) -> "ProgressCurve":
        """Curve whose samples after the first are rounds ``1..k`` (synthetic use)."""
        times = [float(t) for t in times]
        raw = [float(t) for t in raw_times] if raw_times is not None else list(times)
        k = len(times) - 1
        return cls(raw, times, [float(p) for p in progress], list(range(k + 1)),
                   round_times=times[1:],
                   round_has_inf=list(round_has_inf) if round_has_inf is not None else [False] * k)

    @property
    def total_time(self) -> float:
        return self.raw_times[-1]

    def value_at(self, t: float) -> float:
        """Interpolated normalized progress at normalized time ``t``."""
        return float(_interp(t, self.times, self.progress))


def _interp(x, xs, ys):
    if x <= xs[0]:
        return ys[0]
    for i in range(1, len(xs)):
        if x <= xs[i]:
            x0, x1 = xs[i - 1], xs[i]
            return ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
    return ys[-1]


def build_curve(scores: Sequence[float], end_times: Sequence[float],
                round_has_inf: Sequence[bool] | None = None, *,
                last_round_empty: bool = True) -> ProgressCurve:
    """Turn per-round normalized scores into a :class:`ProgressCurve`.

    ``scores[r-1]`` and ``end_times[r-1]`` belong to round ``r`` (times are
    cumulative, raw).  With ``last_round_empty`` the second-to-last sample is
    dropped so the final score is attributed to the end of the run; then,
    among the remaining round samples except the final one, only the first
    of each run of equal scores is kept.  ``(0, 0)`` is prepended.
    """
    k = len(scores)
    if len(end_times) != k:
        raise ValueError("scores and times differ in length")
    flags = list(round_has_inf) if round_has_inf is not None else [False] * k
    total = float(end_times[-1]) if k else 0.0
    if k and total > 0:
        round_times = [100.0 * t / total for t in end_times]
    else:
        round_times = [100.0 * (r + 1) / k for r in range(k)]

    if k < 2:
        return ProgressCurve([0.0, max(total, 1.0)], [0.0, 100.0], [0.0, 100.0], [0, max(k, 1)],
                             round_times=round_times or [100.0], round_has_inf=flags or [False],
                             trivial=True)

    keep = list(range(k))
    if last_round_empty:
        del keep[-2]
    body, last = keep[:-1], keep[-1]
    deduped = []
    for r in body:
        if deduped and scores[r] == scores[deduped[-1]]:
            continue
        deduped.append(r)
    keep = deduped + [last]

    # equal raw times: keep the later (higher) sample
    kept = []
    for r in keep:
        while kept and round_times[r] <= round_times[kept[-1]]:
            kept.pop()
        kept.append(r)
    raw_times = [float(end_times[r]) if total > 0 else round_times[r] for r in kept]
    times = [round_times[r] for r in kept]
    progress = [float(scores[r]) for r in kept]
    rounds = [r + 1 for r in kept]
    if times[0] > 0.0:
        raw_times, times, progress, rounds = [0.0] + raw_times, [0.0] + times, [0.0] + progress, [0] + rounds
    return ProgressCurve(raw_times, times, progress, rounds,
                         round_times=round_times, round_has_inf=flags)


def normalize_curve(snapshots: Sequence[ProgressSnapshot], trace: PropagationTrace,
                    kind: Literal["finite", "infinite"] = "finite") -> ProgressCurve | None:
    """Curve of one phase from per-round snapshots; ``None`` when the phase score is undefined."""
    if len(snapshots) != len(trace.rounds):
        raise ValueError("snapshot count does not match the trace")
    if kind == "finite":
        scores = [s.p_fin_normalized for s in snapshots]
    elif kind == "infinite":
        scores = [None if s.p_inf is None else 100.0 * s.p_inf for s in snapshots]
    else:
        raise ValueError(f"unknown curve kind {kind!r}")
    if not scores or any(s is None for s in scores):
        return None
    times = [s.time_ns for s in snapshots]
    flags = [r.inf_reductions > 0 for r in trace.rounds]
    last_empty = trace.fixpoint_reached and trace.rounds[-1].num_changes == 0
    return build_curve(scores, times, flags, last_round_empty=last_empty)


@dataclass
class RunMeasurement:
    instance: str
    variant: str
    trace: PropagationTrace
    snapshots: list[ProgressSnapshot]
    reference: ProgressReference
    finite_curve: ProgressCurve | None
    infinite_curve: ProgressCurve | None
    no_measurements: bool = False
    bound_sequence: list[tuple] = field(default_factory=list, repr=False)

    @property
    def total_time_ns(self) -> int:
        return self.trace.total_time_ns


def measure_run(instance: ProblemInstance, config: PropagationConfig | None = None, *,
                reference: ProgressReference | None = None) -> RunMeasurement:
    """Score every round in a first pass, time every round in a second pass, merge.

    Raises :class:`InfeasibleRunError` on infeasible instances and
    :class:`NondeterminismError` if the passes diverge.
    """
    config = config or PropagationConfig()
    if reference is None:
        reference = build_reference(instance, config)

    snapshots: list[ProgressSnapshot] = []

    def score(state: BoundsState, stats: RoundStats) -> None:
        if not state.infeasible:
            snapshots.append(snapshot(reference, state, stats.index))

    _, scoring_trace = propagate_to_fixpoint(instance, config, on_round=score)
    if scoring_trace.infeasible:
        raise InfeasibleRunError("propagation detected infeasibility", scoring_trace)
    _, trace = propagate_to_fixpoint(instance, config)
    sequence = scoring_trace.change_sequence()
    if trace.change_sequence() != sequence or trace.total_rounds != scoring_trace.total_rounds:
        raise NondeterminismError("scoring and timing passes diverged")

    elapsed = 0
    for snap, stats in zip(snapshots, trace.rounds):
        elapsed += stats.duration_ns
        snap.time_ns = elapsed

    name = instance.name or "instance"
    if trace.total_changes == 0:
        return RunMeasurement(name, config.variant, trace, snapshots, reference, None, None,
                              no_measurements=True, bound_sequence=sequence)
    return RunMeasurement(
        name, config.variant, trace, snapshots, reference,
        finite_curve=normalize_curve(snapshots, trace, "finite"),
        infinite_curve=normalize_curve(snapshots, trace, "infinite"),
        bound_sequence=sequence,
    )


PROGRESS_CSV_HEADER = ["instance", "variant", "round", "time_ns", "n_current",
                       "p_inf", "p_fin_raw", "p_fin_norm"]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def progress_rows(run: RunMeasurement) -> list[list[str]]:
    return [
        [run.instance, run.variant, str(s.round), str(s.time_ns), str(s.n_current),
         _cell(s.p_inf), _cell(s.p_fin_raw), _cell(s.p_fin_normalized)]
        for s in run.snapshots
    ]
