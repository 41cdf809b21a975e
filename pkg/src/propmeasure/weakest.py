"""Weakest finite bounds reachable by any bounds-tightening run.

Bounds that start finite are their own weakest value.  For a bound that
starts infinite, the weakest value is the loosest finite value any
propagation schedule could first assign to it.  It is computed by
propagating on the weakest bounds themselves and *loosening* the
incumbent whenever a finite candidate is weaker, with constraint marking
to revisit only rows touching a changed variable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .core import INF, NEG_INF, ProblemInstance
from .propagator import _RowEval


@dataclass
class WeakestBounds:
    lower: list[float]
    upper: list[float]
    iterations_used: int = 0
    cap_hit: bool = False
    history: list[tuple[list[float], list[float]]] = field(default_factory=list, repr=False)


def compute_weakest_bounds(
    instance: ProblemInstance,
    max_iterations: int = 100,
    *,
    integrality_eps: float = 1e-6,
    marking: bool = True,
    record_history: bool = False,
) -> WeakestBounds:
    """Weakest bounds with constraint marking.

    One iteration is a pass over all constraints, evaluating only the marked
    ones (all of them when ``marking`` is off).  ``cap_hit`` is set when
    constraints are still marked after ``max_iterations`` passes.
    """
    start_lower, start_upper = instance.start_lower, instance.start_upper
    lower, upper = list(start_lower), list(start_upper)
    integer = instance.integer_mask
    m = instance.num_constraints
    marked = [True] * m
    result = WeakestBounds(lower, upper)

    iterations = 0
    while any(marked):
        if iterations == max_iterations:
            result.cap_hit = True
            break
        iterations += 1
        found = False
        for i, c in enumerate(instance.constraints):
            if not marked[i]:
                continue
            marked[i] = False
            row = _RowEval(c, lower, upper)
            for pos, j in enumerate(c.indices):
                lnew, unew = row.candidates(pos, integer[j], integrality_eps)
                updated = False
                if (start_lower[j] == NEG_INF and lnew not in (NEG_INF, INF)
                        and (lower[j] == NEG_INF or lnew < lower[j])):
                    lower[j] = lnew
                    updated = True
                if (start_upper[j] == INF and unew not in (NEG_INF, INF)
                        and (upper[j] == INF or unew > upper[j])):
                    upper[j] = unew
                    updated = True
                if updated:
                    found = True
                    for k in instance.columns[j]:
                        marked[k] = True
                    row = _RowEval(c, lower, upper)
        if not marking:
            marked = [found] * m
        if record_history:
            result.history.append((list(lower), list(upper)))
    result.iterations_used = iterations
    return result
