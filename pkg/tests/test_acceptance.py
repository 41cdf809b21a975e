"""Acceptance suite: one check per criterion, each reported as a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or ``python tests/test_acceptance.py``.
"""

from __future__ import annotations

import csv
import math
import random
import sys
import time
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from propmeasure import (  # noqa: E402
    INF,
    NEG_INF,
    BoundsState,
    PropagationConfig,
    bound_candidates,
    build_reference,
    compute_weakest_bounds,
    fixpoints_agree,
    measure_run,
    propagate_to_fixpoint,
)
from propmeasure.core import LinearConstraint  # noqa: E402
from propmeasure.progress import InfeasibleRunError, progress_fin, progress_rows  # noqa: E402
from propmeasure.stall import curve_derivatives, detect_stall, stall_sweep  # noqa: E402

from conftest import make_fixtures  # noqa: E402
from curves import concave_curve, monotone_curve, smooth_concave, stalling_curve  # noqa: E402
from generators import random_corpus  # noqa: E402
from oracles import DenseProblem, distinct_states, random_order_fixpoint  # noqa: E402

RESULTS: dict[int, str] = {}
VARIANTS = ("immediate", "deferred")
LONG_RUN = 1000  # round cap for the random corpora; slow geometric chains need several hundred


def report(number: int, ok: bool, detail: str) -> bool:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[number] = line
    print(line)
    return ok


# ------------------------------------------------------------------ criterion 1

_C1: dict = {}


def fixpoint_agreement():
    """Shared by criteria 1 and 5; computed once."""
    if _C1:
        return _C1
    t0 = time.perf_counter()
    corpus = random_corpus(2024, 500)
    disagreements, nonconvergent, infeasible, traces = [], [], 0, []
    for inst in corpus:
        states = {}
        for v in VARIANTS:
            states[v] = propagate_to_fixpoint(inst, PropagationConfig(v, max_rounds=LONG_RUN))
            traces.append((inst, states[v][1]))
        stuck = [v for v, (_, tr) in states.items() if tr.stopped_by == "max_rounds"]
        oracle = random_order_fixpoint(DenseProblem.from_instance(inst), replicas=1000,
                                       seed=len(traces), max_sweeps=LONG_RUN)
        if stuck:
            # no fixed point within the cap; consistent only if no random order finds one either
            nonconvergent.append(inst.name)
            if len(stuck) != 2 or oracle.converged.any() or oracle.infeasible.any():
                disagreements.append((inst.name, "convergence differs"))
            continue
        si, sd = states["immediate"][0], states["deferred"][0]
        infeasible += si.infeasible
        ok = fixpoints_agree(si, sd, 1e-6)
        if not (oracle.converged | oracle.infeasible).all():
            ok = False
        for lo, up, infe, _ in distinct_states(oracle):
            st = BoundsState(lo, up, infe)
            ok = ok and fixpoints_agree(st, si, 1e-6) and fixpoints_agree(st, sd, 1e-6)
        if not ok:
            disagreements.append((inst.name, "limit differs"))
    _C1.update(elapsed=time.perf_counter() - t0, disagreements=disagreements,
               nonconvergent=nonconvergent, infeasible=infeasible, traces=traces, n=len(corpus))
    return _C1


def test_criterion_1_fixpoint_oracle_equivalence():
    r = fixpoint_agreement()
    ok = not r["disagreements"] and r["elapsed"] < 60
    detail = (f"{r['n']} instances x 1000 orders, {len(r['disagreements'])} disagreements, "
              f"{r['infeasible']} infeasible, {len(r['nonconvergent'])} without a fixed point "
              f"in {LONG_RUN} rounds (same for all three), {r['elapsed']:.1f}s")
    assert report(1, ok, detail), r["disagreements"][:5]


# ------------------------------------------------------------------ criterion 2

def test_criterion_2_golden_fixtures():
    fx = make_fixtures()
    checks = {}
    for v in VARIANTS:
        cfg = PropagationConfig(v)
        s1, _ = propagate_to_fixpoint(fx["FIX1"], cfg)
        s2, _ = propagate_to_fixpoint(fx["FIX2"], cfg)
        s3, _ = propagate_to_fixpoint(fx["FIX3"], cfg)
        s4, _ = propagate_to_fixpoint(fx["FIX4"], cfg)
        s5, _ = propagate_to_fixpoint(fx["FIX5"], cfg)
        checks[f"{v} FIX1 x2"] = (s1.lower[1], s1.upper[1]) == (0.0, 4.0)
        checks[f"{v} FIX2 u"] = s2.upper == [4.0, 5.0]
        checks[f"{v} FIX2 n_total"] = build_reference(fx["FIX2"], cfg).n_total == 2
        checks[f"{v} FIX3 u"] = s3.upper == [7.0, 4.0]
        ref3 = build_reference(fx["FIX3"], cfg)
        checks[f"{v} FIX3 max_score"] = ref3.max_score == 2
        checks[f"{v} FIX3 P_fin"] = progress_fin(ref3, BoundsState([0.0, 0.0], [8.0, 5.0]))[1] == 50.0
        checks[f"{v} FIX4 u"] = s4.upper == [3.0]
        checks[f"{v} FIX5"] = s5.infeasible
    wb = compute_weakest_bounds(fx["FIX3"])
    checks["FIX3 weakest"] = wb.upper == [9.0, 6.0]
    failed = [k for k, v in checks.items() if not v]
    assert report(2, not failed, f"{len(checks)} exact checks, failed: {failed or 'none'}")


# ------------------------------------------------------------------ criterion 3

def first_finite_values(trace):
    seen = {}
    for rnd in trace.rounds:
        for ch in rnd.changes:
            if ch.is_infinite_reduction and (ch.var, ch.side) not in seen:
                seen[(ch.var, ch.side)] = ch.new
    return seen


def test_criterion_3_weakest_dominance():
    fx = make_fixtures()
    instances = [fx["FIX2"], fx["FIX3"]] + random_corpus(3003, 100, all_infinite=True)
    rng = random.Random(3)
    violations, runs, capped, firsts = [], 0, 0, 0
    for inst in instances:
        wb = compute_weakest_bounds(inst)
        if wb.cap_hit:
            capped += 1
            continue
        for _ in range(100):
            order = list(range(inst.num_constraints))
            rng.shuffle(order)
            for v in VARIANTS:
                _, trace = propagate_to_fixpoint(inst, PropagationConfig(v, max_rounds=LONG_RUN), order=order)
                runs += 1
                for (j, side), val in first_finite_values(trace).items():
                    firsts += 1
                    ref = wb.lower[j] if side == "lower" else wb.upper[j]
                    slack = 1e-9 * max(1.0, abs(val))
                    weaker = (math.isinf(ref) or
                              (val < ref - slack if side == "lower" else val > ref + slack))
                    if weaker:
                        violations.append((inst.name, j, side, val, ref))
    detail = (f"{len(instances) - capped} instances, {runs} runs, {firsts} first-finite values, "
              f"{len(violations)} violations ({capped} instances skipped: weakest-bound iteration cap)")
    assert report(3, not violations, detail), violations[:5]


# ------------------------------------------------------------------ criterion 4

def test_criterion_4_progress_monotone_and_normalized():
    fx = make_fixtures()
    instances = list(fx.values()) + random_corpus(4004, 200)
    problems, measured, skipped = [], 0, 0
    for inst in instances:
        for v in VARIANTS:
            cfg = PropagationConfig(v, max_rounds=LONG_RUN)
            try:
                run = measure_run(inst, cfg)
            except InfeasibleRunError:
                skipped += 1
                continue
            if not run.trace.fixpoint_reached:
                skipped += 1
                continue
            measured += 1
            snaps = run.snapshots
            ref = run.reference
            p_inf = [s.p_inf for s in snaps]
            p_fin = [s.p_fin_normalized for s in snaps]
            if (ref.n_total == 0) != all(p is None for p in p_inf) or any(
                    (p is None) != (ref.n_total == 0) for p in p_inf):
                problems.append((inst.name, v, "p_inf definedness"))
            if any((p is None) != (ref.max_score == 0) for p in p_fin):
                problems.append((inst.name, v, "p_fin definedness"))
            if ref.n_total:
                if any(b < a for a, b in zip(p_inf, p_inf[1:])) or p_inf[-1] != 1.0:
                    problems.append((inst.name, v, "p_inf curve"))
            if ref.max_score:
                if any(b < a for a, b in zip(p_fin, p_fin[1:])) or p_fin[-1] != 100.0:
                    problems.append((inst.name, v, "p_fin curve"))
            for curve in (run.finite_curve, run.infinite_curve):
                if curve is not None and any(b < a for a, b in zip(curve.progress, curve.progress[1:])):
                    problems.append((inst.name, v, "curve decreases"))
            if (run.infinite_curve is None) != (ref.n_total == 0 or run.no_measurements):
                problems.append((inst.name, v, "infinite curve definedness"))
            if (run.finite_curve is None) != (ref.max_score == 0 or run.no_measurements):
                problems.append((inst.name, v, "finite curve definedness"))
    detail = (f"{measured} measured runs, {len(problems)} problems "
              f"({skipped} runs skipped: infeasible or no fixed point)")
    assert report(4, not problems, detail), problems[:5]


# ------------------------------------------------------------------ criterion 5

def test_criterion_5_infinite_reduction_prefix():
    traces = fixpoint_agreement()["traces"]
    violations = []
    for inst, trace in traces:
        flags = [r.inf_reductions > 0 for r in trace.rounds]
        if any(b and not a for a, b in zip(flags, flags[1:])):
            violations.append((inst.name, "not a prefix"))
        start_inf = sum(l == NEG_INF for l in inst.start_lower) + sum(u == INF for u in inst.start_upper)
        if trace.rounds_with_infinite_reductions > start_inf:
            violations.append((inst.name, "c too large"))
    assert report(5, not violations, f"{len(traces)} traces, {len(violations)} violations"), violations[:5]


# ------------------------------------------------------------------ criterion 6

def _pattern(constraints, lower, upper, integer):
    b = BoundsState(lower, upper)
    out = []
    for c in constraints:
        for j in c.indices:
            lo, up = bound_candidates(c, b, j, integer[j])
            out.append((math.isinf(lo), math.isinf(up)))
    return out


def _scale(rng, x):
    return x * rng.uniform(0.5, 2.0) if math.isfinite(x) else x


def test_criterion_6_pattern_invariance():
    rng = random.Random(6)
    instances = random_corpus(6006, 100)
    violations, compared = 0, 0
    for inst in instances:
        base = _pattern(inst.constraints, inst.start_lower, inst.start_upper, inst.integer_mask)
        for _ in range(10):
            while True:
                lower = [_scale(rng, x) for x in inst.start_lower]
                upper = [_scale(rng, x) for x in inst.start_upper]
                if all(a <= b for a, b in zip(lower, upper)):
                    break
            cons = []
            for c in inst.constraints:
                while True:
                    lhs, rhs = _scale(rng, c.lhs), _scale(rng, c.rhs)
                    if lhs <= rhs:
                        break
                cons.append(LinearConstraint(c.indices, c.coefs, lhs, rhs))
            compared += len(base)
            violations += sum(a != b for a, b in zip(base, _pattern(cons, lower, upper, inst.integer_mask)))
    assert report(6, violations == 0, f"{compared} candidate pairs compared, {violations} pattern changes")


# ------------------------------------------------------------------ criterion 7

def test_criterion_7_stall_detector():
    checks = {}
    first, _ = curve_derivatives(stalling_curve())
    checks["P' values"] = all(abs(a - b) <= 1e-9 for a, b in zip(first, [0.04, 0.04, 0.04, 1.96, 5.8]))
    checks["stall at (0.1, 0.1)"] = detect_stall(stalling_curve(), (0.1, 0.1)).stalled

    rng = random.Random(7)
    concave = [concave_curve(rng) for _ in range(500)] + [smooth_concave(a) for a in (0.2, 0.5, 0.9)]
    qs = [1e-9, 1e-3, 0.1, 0.2, 0.5, 2.0]
    stalls = sum(detect_stall(c, (math.inf, q)).stalled for c in concave for q in qs)
    checks["concave never stalls for q > 0"] = stalls == 0

    corpus = [(monotone_curve(rng), None) for _ in range(50)]
    ps = [0.0, 0.01, 0.1, 0.5, 1.0, 5.0, math.inf]
    grid = [(p, q) for p in ps for q in [0.0] + qs]
    counts = dict(zip(grid, stall_sweep(corpus, grid)))
    mono_p = all(counts[(a, q)] <= counts[(b, q)] for q in [0.0] + qs for a, b in zip(ps, ps[1:]))
    qq = [0.0] + qs
    anti_q = all(counts[(p, a)] >= counts[(p, b)] for p in ps for a, b in zip(qq, qq[1:]))
    checks["sweep monotone in p"] = mono_p
    checks["sweep antitone in q"] = anti_q
    failed = [k for k, v in checks.items() if not v]
    detail = (f"P'={[round(x, 12) for x in first]}, {len(concave)} concave curves x {len(qs)} q values: "
              f"{stalls} stalls, 50-curve sweep over {len(grid)} (p, q) pairs; failed: {failed or 'none'}")
    assert report(7, not failed, detail)


# ------------------------------------------------------------------ criterion 8

def test_criterion_8_self_comparison(tmp_path):
    from propmeasure import write_instance
    from propmeasure.cli import main
    inst_dir = tmp_path / "fixtures"
    inst_dir.mkdir()
    for name, inst in make_fixtures().items():
        write_instance(inst, inst_dir / f"{name}.txt")
    out = tmp_path / "out"
    code = main(["compare", "--instances", str(inst_dir / "*.txt"), "--out", str(out),
                 "--baseline", "immediate", "--candidate", "immediate"])
    with open(out / "compare.csv", newline="") as fh:
        rows = [r for r in csv.DictReader(fh) if r["instance"] == "GEOMEAN"]
    levels = {(r["phase"], r["progress"]): r["speedup"] for r in rows}
    bad = {k: v for k, v in levels.items() if v == "" or abs(float(v) - 1.0) > 1e-12}
    ok = code == 0 and len(levels) == 20 and not bad
    assert report(8, ok, f"{len(levels)} (phase, level) cells, geometric means off 1.0: {bad or 'none'}")


# ------------------------------------------------------------------ criterion 9

def test_criterion_9_determinism():
    mismatches = []
    fixtures = make_fixtures()
    for name, inst in fixtures.items():
        if name == "FIX5":
            continue
        for v in VARIANTS:
            a = measure_run(inst, PropagationConfig(v))
            b = measure_run(inst, PropagationConfig(v))
            cols = lambda run: [row[:3] + row[4:] for row in progress_rows(run)]  # drop time_ns
            if a.bound_sequence != b.bound_sequence or cols(a) != cols(b):
                mismatches.append((name, v))
            # bit-identical, not merely equal: compare float representations
            if [x.hex() for *_, x in a.bound_sequence if math.isfinite(x)] != \
                    [x.hex() for *_, x in b.bound_sequence if math.isfinite(x)]:
                mismatches.append((name, v, "bits"))
    assert report(9, not mismatches, f"{2 * (len(fixtures) - 1)} fixture runs repeated, mismatches: {mismatches or 'none'}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
