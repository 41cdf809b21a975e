"""Premature-stall detection on finite-progress curves."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .progress import ProgressCurve
from .propagator import PropagationTrace

# (p, q) rows of the reference parameter table
DEFAULT_GRID: tuple[tuple[float, float], ...] = (
    (math.inf, 0.0), (0.1, 0.0), (0.1, 0.2), (0.1, 0.5), (0.5, 0.5), (0.5, 2.0),
)


def sampled_derivative(t: Sequence[float], y: Sequence[float], edge_order: int = 2) -> list[float]:
    """First derivative of samples ``y`` on the (possibly nonuniform) grid ``t``.

    Interior points use the second-order three-point central formula for
    nonuniform spacing.  With ``edge_order=2`` the boundaries use
    second-order one-sided formulas when at least three points exist;
    otherwise (or with ``edge_order=1``) plain one-sided differences.
    """
    if edge_order not in (1, 2):
        raise ValueError("edge_order must be 1 or 2")
    n = len(t)
    if n != len(y):
        raise ValueError("grid and values differ in length")
    if n < 2:
        raise ValueError("need at least two samples")
    for a, b in zip(t, t[1:]):
        if not b > a:
            raise ValueError("grid must be strictly increasing")
    if n == 2:
        slope = (y[1] - y[0]) / (t[1] - t[0])
        return [slope, slope]

    # written as weighted slopes to avoid cancellation between large samples
    slopes = [(y[i + 1] - y[i]) / (t[i + 1] - t[i]) for i in range(n - 1)]
    d = [0.0] * n
    for i in range(1, n - 1):
        h1, h2 = t[i] - t[i - 1], t[i + 1] - t[i]
        d[i] = (slopes[i - 1] * h2 + slopes[i] * h1) / (h1 + h2)
    if edge_order == 1:
        d[0], d[-1] = slopes[0], slopes[-1]
        return d
    h1, h2 = t[1] - t[0], t[2] - t[1]
    d[0] = (slopes[0] * (2 * h1 + h2) - slopes[1] * h1) / (h1 + h2)
    h1, h2 = t[-2] - t[-3], t[-1] - t[-2]
    d[-1] = (slopes[-1] * (h1 + 2 * h2) - slopes[-2] * h2) / (h1 + h2)
    return d


def curve_derivatives(curve: ProgressCurve) -> tuple[list[float], list[float]]:
    """``(P', P'')`` on the curve's sample grid; ``P''`` differentiates the sampled ``P'``.

    The second pass uses one-sided first differences at the two ends.  A
    second-order extrapolation there can turn a concave curve's flat final
    stretch into a positive ``P''`` and report an acceleration that the
    samples do not contain.
    """
    first = sampled_derivative(curve.times, curve.progress)
    return first, sampled_derivative(curve.times, first, edge_order=1)


@dataclass(frozen=True)
class StallParams:
    p: float
    q: float

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or math.isnan(self.p) or math.isnan(self.q):
            raise ValueError("p and q must be non-negative")


@dataclass
class RoundCheck:
    round: int
    time: float
    slope: float
    no_infinite_reduction: bool
    slow: bool
    accelerates: bool

    @property
    def stalls(self) -> bool:
        return self.no_infinite_reduction and self.slow and self.accelerates


@dataclass
class StallReport:
    checks: list[RoundCheck] = field(default_factory=list)

    @property
    def stalled(self) -> bool:
        return any(c.stalls for c in self.checks)

    @property
    def first_stall_round(self) -> int | None:
        return next((c.round for c in self.checks if c.stalls), None)


def detect_stall(curve: ProgressCurve, params: StallParams | tuple[float, float],
                 trace: PropagationTrace | None = None) -> StallReport:
    """Check every round ``r >= 2`` for a premature stall.

    A round qualifies when it made no infinite reduction, the slope at its
    end is below ``p``, and some sampled second derivative at or after its
    end exceeds ``q``.  Slopes at rounds without a sample of their own are
    interpolated linearly from the sampled ``P'``.  Infinite-reduction flags
    come from ``trace`` when given, else from the curve.
    """
    if not isinstance(params, StallParams):
        params = StallParams(*params)
    flags = list(curve.round_has_inf)
    if trace is not None:
        if trace.total_rounds != len(curve.round_times):
            raise ValueError("curve and trace describe a different number of rounds")
        flags = [r.inf_reductions > 0 for r in trace.rounds]

    first, second = curve_derivatives(curve)
    times = curve.times
    # latest grid index holding P'' > q: rounds ending at or before it qualify
    last_accel = max((i for i, v in enumerate(second) if v > params.q), default=None)

    report = StallReport()
    for r in range(2, len(curve.round_times) + 1):
        t_r = curve.round_times[r - 1]
        slope = _interp(t_r, times, first)
        report.checks.append(RoundCheck(
            round=r,
            time=t_r,
            slope=slope,
            no_infinite_reduction=not flags[r - 1],
            slow=slope < params.p,
            accelerates=last_accel is not None and times[last_accel] >= t_r,
        ))
    return report


def _interp(x: float, xs: Sequence[float], ys: Sequence[float]) -> float:
    for i, xi in enumerate(xs):
        if x == xi:
            return ys[i]
    if x <= xs[0]:
        return ys[0]
    for i in range(1, len(xs)):
        if x < xs[i]:
            w = (x - xs[i - 1]) / (xs[i] - xs[i - 1])
            return ys[i - 1] + w * (ys[i] - ys[i - 1])
    return ys[-1]


def stall_sweep(runs: Iterable[tuple[ProgressCurve | None, PropagationTrace | None]],
                grid: Sequence[tuple[float, float]] = DEFAULT_GRID) -> list[int]:
    """Number of stalling runs for each ``(p, q)`` in ``grid``.

    Runs without a finite-progress curve are skipped.
    """
    runs = [(c, t) for c, t in runs if c is not None]
    counts = []
    for p, q in grid:
        params = StallParams(p, q)
        counts.append(sum(1 for c, t in runs if detect_stall(c, params, t).stalled))
    return counts
