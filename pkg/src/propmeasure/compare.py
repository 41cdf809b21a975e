"""Cross-variant comparison: time to reach a progress level, speedups, fixed-point agreement."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Literal, Mapping, Sequence

from .core import ProblemInstance
from .progress import ProgressCurve, RunMeasurement
from .propagator import PropagationConfig, fixpoints_agree, propagate_to_fixpoint

DEFAULT_PROGRESS_GRID = tuple(float(x) for x in range(10, 101, 10))
TIME_FLOOR_NS = 1000.0
PROGRESS_EPS = 1e-9

Phase = Literal["finite", "infinite"]


def time_at_progress(curve: ProgressCurve | None, x: float) -> float | None:
    """Earliest raw time at which the interpolated curve reaches progress ``x``.

    ``x = 100`` maps to the full run time.  ``None`` for an undefined curve or
    a level the run never reached.
    """
    if not 0 < x <= 100:
        raise ValueError("progress level must lie in (0, 100]")
    if curve is None:
        return None
    prog, raw = curve.progress, curve.raw_times
    if prog[-1] < x - PROGRESS_EPS:
        return None
    if x >= 100:
        return raw[-1]
    if prog[0] >= x - PROGRESS_EPS:
        return raw[0]
    for i in range(1, len(prog)):
        if prog[i] >= x - PROGRESS_EPS:
            p0, p1 = prog[i - 1], prog[i]
            frac = min(1.0, (x - p0) / (p1 - p0))
            return raw[i - 1] + frac * (raw[i] - raw[i - 1])
    return raw[-1]


def geometric_mean(values: Iterable[float]) -> float | None:
    values = list(values)
    if not values:
        return None
    return math.exp(math.fsum(math.log(v) for v in values) / len(values))


@dataclass
class ComparisonRow:
    instance: str
    phase: Phase
    level: float
    t_baseline: float
    t_candidate: float
    speedup: float
    floored: bool = False


def _curve(run: RunMeasurement, phase: Phase) -> ProgressCurve | None:
    return run.finite_curve if phase == "finite" else run.infinite_curve


def compare_runs(
    baseline: Mapping[str, RunMeasurement],
    candidate: Mapping[str, RunMeasurement],
    grid: Sequence[float] = DEFAULT_PROGRESS_GRID,
) -> tuple[list[ComparisonRow], dict[tuple[Phase, float], float | None]]:
    """Per-instance speedups ``t_x(baseline) / t_x(candidate)`` and their geometric means.

    An instance enters a phase only when both runs have a curve for it.
    Times below ``TIME_FLOOR_NS`` are raised to it and the row is flagged.
    """
    rows: list[ComparisonRow] = []
    for name in sorted(set(baseline) & set(candidate)):
        for phase in ("finite", "infinite"):
            cb, cc = _curve(baseline[name], phase), _curve(candidate[name], phase)
            if cb is None or cc is None:
                continue
            for x in grid:
                tb, tc = time_at_progress(cb, x), time_at_progress(cc, x)
                if tb is None or tc is None:
                    continue
                floored = tb < TIME_FLOOR_NS or tc < TIME_FLOOR_NS
                tb, tc = max(tb, TIME_FLOOR_NS), max(tc, TIME_FLOOR_NS)
                rows.append(ComparisonRow(name, phase, float(x), tb, tc, tb / tc, floored))
    summary = {}
    for phase in ("finite", "infinite"):
        for x in grid:
            summary[(phase, float(x))] = geometric_mean(
                r.speedup for r in rows if r.phase == phase and r.level == float(x))
    return rows, summary


@dataclass
class VerifyResult:
    instance: str
    status: Literal["agree", "disagree", "infeasible", "nonconvergent"]
    detail: str = ""

    @property
    def agrees(self) -> bool:
        return self.status in ("agree", "infeasible")


def verify_states(name: str, states: Mapping[str, tuple], rel_tol: float = 1e-6) -> VerifyResult:
    """Classify limit states ``{variant: (state, trace)}`` of one instance."""
    items = list(states.items())
    if any(not tr.fixpoint_reached and not tr.infeasible for _, (_, tr) in items):
        bad = [v for v, (_, tr) in items if not tr.fixpoint_reached and not tr.infeasible]
        return VerifyResult(name, "nonconvergent", f"no fixed point within the round limit: {', '.join(bad)}")
    infeasible = [st.infeasible for _, (st, _) in items]
    if all(infeasible):
        return VerifyResult(name, "infeasible", "all variants detect infeasibility")
    (v0, (s0, _)) = items[0]
    for v, (s, _) in items[1:]:
        if not fixpoints_agree(s0, s, rel_tol):
            return VerifyResult(name, "disagree", f"{v0} and {v} reach different limits")
    return VerifyResult(name, "agree")


def verify_instance(instance: ProblemInstance, variants: Sequence[str],
                    config: PropagationConfig | None = None, rel_tol: float = 1e-6) -> VerifyResult:
    config = config or PropagationConfig()
    states = {}
    for v in variants:
        cfg = replace(config, variant=v, stop_mode="fixpoint")
        states[v] = propagate_to_fixpoint(instance, cfg)
    return verify_states(instance.name or "instance", states, rel_tol)
