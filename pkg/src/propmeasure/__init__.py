"""Bounds propagation for linear constraint systems and an algorithm-independent progress measure."""

from .core import (
    INF,
    INF_THRESHOLD,
    NEG_INF,
    LinearConstraint,
    ProblemInstance,
    ValidationError,
    VariableDomain,
    build_instance,
    make_ext,
)
from .mps import MpsError, parse_mps, read_mps
from .progress import (
    ProgressCurve,
    ProgressReference,
    RunMeasurement,
    build_reference,
    measure_run,
    normalize_curve,
)
from .propagator import (
    BoundsState,
    PropagationConfig,
    PropagationTrace,
    bound_candidates,
    fixpoints_agree,
    propagate_round,
    propagate_to_fixpoint,
)
from .stall import DEFAULT_GRID, StallParams, detect_stall, stall_sweep
from .compare import compare_runs, time_at_progress
from .textformat import read_instance, write_instance
from .weakest import compute_weakest_bounds

__version__ = "0.1.0"
