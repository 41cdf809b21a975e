"""Experiment orchestration and CSV reporting used by the command line."""

from __future__ import annotations

import csv
import glob
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

from .compare import DEFAULT_PROGRESS_GRID, VerifyResult, compare_runs, verify_instance
from .core import format_ext
from .progress import (
    PROGRESS_CSV_HEADER,
    InfeasibleRunError,
    RunMeasurement,
    build_reference,
    measure_run,
    progress_rows,
)
from .propagator import VARIANTS, PropagationConfig
from .stall import DEFAULT_GRID, stall_sweep
from .textformat import read_instance
from .weakest import compute_weakest_bounds

log = logging.getLogger(__name__)

EXIT_OK, EXIT_PARTIAL, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2, 3

TRACE_CSV_HEADER = ["round", "changes", "inf_reductions", "duration_ns"]
RUNS_CSV_HEADER = ["instance", "variant", "status", "rounds", "inf_rounds", "n_total",
                   "max_score", "total_time_ns", "diagnostics"]
COMPARE_CSV_HEADER = ["instance", "phase", "progress", "t_baseline_ns", "t_candidate_ns",
                      "speedup", "floored"]
STALL_CSV_HEADER = ["p", "q", "stalls_immediate", "stalls_deferred"]
VERIFY_CSV_HEADER = ["instance", "status", "detail"]
WEAKEST_CSV_HEADER = ["variable", "lower", "upper"]


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    instances: list[str]
    variants: tuple[str, ...] = VARIANTS
    propagation: PropagationConfig = field(default_factory=PropagationConfig)
    out_dir: Path = Path("results")
    stall_grid: Sequence[tuple[float, float]] = DEFAULT_GRID
    progress_grid: Sequence[float] = DEFAULT_PROGRESS_GRID
    baseline: str = "immediate"
    candidate: str = "deferred"
    workers: int = 1

    def __post_init__(self):
        if not self.instances:
            raise ConfigError("no instances given")
        if not self.variants:
            raise ConfigError("no variants given")
        for v in self.variants:
            if v not in VARIANTS:
                raise ConfigError(f"unknown variant {v!r}")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        self.out_dir = Path(self.out_dir)


def expand_instances(patterns: Sequence[str]) -> list[str]:
    """Expand globs; literal paths are kept even if missing so they fail visibly."""
    paths = []
    for pat in patterns:
        if glob.has_magic(pat):
            paths.extend(sorted(glob.glob(pat)))
        else:
            paths.append(pat)
    return sorted(dict.fromkeys(paths), key=lambda p: (Path(p).stem, p))


@dataclass
class InstanceResult:
    path: str
    name: str = ""
    error: str = ""
    infeasible: bool = False
    runs: dict[str, RunMeasurement] = field(default_factory=dict)
    diagnostics: list[str] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return bool(self.error)


def measure_instance(path: str, variants: Sequence[str], config: PropagationConfig) -> InstanceResult:
    result = InstanceResult(path, name=Path(path).stem)
    try:
        instance = read_instance(path)
    except (OSError, ValueError) as exc:
        result.error = f"cannot read instance: {exc}"
        return result
    result.name = instance.name or result.name
    for v in variants:
        cfg = replace(config, variant=v)
        try:
            reference = build_reference(instance, cfg)
            result.runs[v] = measure_run(instance, cfg, reference=reference)
            result.diagnostics.extend(reference.diagnostics)
        except InfeasibleRunError:
            result.infeasible = True
        except Exception as exc:  # keep the batch going; recorded per instance
            log.exception("measuring %s with %s failed", path, v)
            result.error = f"{v}: {exc}"
    return result


def measure_all(cfg: ExperimentConfig, variants: Sequence[str] | None = None) -> list[InstanceResult]:
    variants = tuple(variants or cfg.variants)
    paths = expand_instances(cfg.instances)
    if cfg.workers == 1 or len(paths) < 2:
        results = [measure_instance(p, variants, cfg.propagation) for p in paths]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(measure_instance, paths, [variants] * len(paths),
                                    [cfg.propagation] * len(paths)))
    results.sort(key=lambda r: (r.name, r.path))
    for r in results:
        if r.failed:
            log.warning("%s: %s", r.path, r.error)
    return results


def exit_code(results: Sequence[InstanceResult]) -> int:
    if not results:
        return EXIT_FAILED
    failed = sum(r.failed for r in results)
    if failed == len(results):
        return EXIT_FAILED
    return EXIT_PARTIAL if failed else EXIT_OK


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _num(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_ext(value)
    return str(value)


def write_manifest(out_dir: Path, command: str, cfg: ExperimentConfig, extra: dict | None = None) -> None:
    """Plain ``key = value`` record of the configuration."""
    p = cfg.propagation
    items = {
        "command": command,
        "instances": " ".join(expand_instances(cfg.instances)),
        "variants": ",".join(cfg.variants),
        "max_rounds": p.max_rounds,
        "stop_mode": p.stop_mode,
        "tau": p.significance_rel_tol,
        "accept_abs_tol": p.accept_abs_tol,
        "integrality_eps": p.integrality_eps,
        "workers": cfg.workers,
    }
    items.update(extra or {})
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "manifest.txt").write_text("".join(f"{k} = {v}\n" for k, v in items.items()))


def write_run_outputs(results: Sequence[InstanceResult], out_dir: Path) -> None:
    summary = []
    for res in results:
        if res.failed and not res.runs:
            summary.append([res.name, "", "error", "", "", "", "", "", res.error])
            continue
        if res.infeasible and not res.runs:
            summary.append([res.name, "", "infeasible", "", "", "", "", "", ""])
            continue
        for variant, run in sorted(res.runs.items()):
            stem = f"{res.name}__{variant}"
            _write_csv(out_dir / "progress" / f"{stem}.csv", PROGRESS_CSV_HEADER, progress_rows(run))
            _write_csv(out_dir / "traces" / f"{stem}.csv", TRACE_CSV_HEADER,
                       [[r.index, r.num_changes, r.inf_reductions, r.duration_ns]
                        for r in run.trace.rounds])
            status = "no_measurements" if run.no_measurements else run.trace.stopped_by
            summary.append([
                res.name, variant, status, run.trace.total_rounds,
                run.trace.rounds_with_infinite_reductions, run.reference.n_total,
                run.reference.max_score, run.total_time_ns, "; ".join(run.reference.diagnostics),
            ])
    _write_csv(out_dir / "runs.csv", RUNS_CSV_HEADER, summary)


def cmd_run(cfg: ExperimentConfig) -> int:
    results = measure_all(cfg)
    write_run_outputs(results, cfg.out_dir)
    write_manifest(cfg.out_dir, "run", cfg)
    return exit_code(results)


def cmd_compare(cfg: ExperimentConfig) -> int:
    """Speedup of ``candidate`` over ``baseline`` per progress level and phase.

    When both roles name the same variant the same measurement is used for
    both, so the comparison is an exact identity.
    """
    variants = tuple(dict.fromkeys((cfg.baseline, cfg.candidate)))
    results = measure_all(cfg, variants)
    base = {r.name: r.runs[cfg.baseline] for r in results if cfg.baseline in r.runs}
    cand = {r.name: r.runs[cfg.candidate] for r in results if cfg.candidate in r.runs}
    rows, summary = compare_runs(base, cand, cfg.progress_grid)
    out = [[r.instance, r.phase, _num(r.level), _num(r.t_baseline), _num(r.t_candidate),
            _num(r.speedup), int(r.floored)] for r in rows]
    for (phase, x), g in summary.items():
        out.append(["GEOMEAN", phase, _num(x), "", "", _num(g), ""])
    _write_csv(cfg.out_dir / "compare.csv", COMPARE_CSV_HEADER, out)
    write_manifest(cfg.out_dir, "compare", cfg,
                   {"baseline": cfg.baseline, "candidate": cfg.candidate,
                    "progress_grid": ",".join(_num(x) for x in cfg.progress_grid)})
    return exit_code(results)


def run_verify(cfg: ExperimentConfig) -> list[VerifyResult | InstanceResult]:
    out = []
    for path in expand_instances(cfg.instances):
        try:
            instance = read_instance(path)
        except (OSError, ValueError) as exc:
            out.append(InstanceResult(path, Path(path).stem, error=f"cannot read instance: {exc}"))
            continue
        name = instance.name or Path(path).stem
        res = verify_instance(instance, cfg.variants, cfg.propagation)
        res.instance = name
        out.append(res)
    return out


def cmd_verify(cfg: ExperimentConfig) -> int:
    if len(cfg.variants) < 2:
        raise ConfigError("verify needs at least two variants")
    outcomes = run_verify(cfg)
    rows = []
    for o in outcomes:
        if isinstance(o, InstanceResult):
            rows.append([o.name, "error", o.error])
        else:
            rows.append([o.instance, o.status, o.detail])
    _write_csv(cfg.out_dir / "verify.csv", VERIFY_CSV_HEADER, sorted(rows))
    write_manifest(cfg.out_dir, "verify", cfg)
    failures = [o for o in outcomes if isinstance(o, InstanceResult)]
    if not outcomes or len(failures) == len(outcomes):
        return EXIT_FAILED
    return EXIT_PARTIAL if failures else EXIT_OK


def stall_table(results: Sequence[InstanceResult], grid) -> list[list[str]]:
    """Rows ``p, q, stalls_immediate, stalls_deferred``; a missing variant leaves its column empty."""
    columns = {}
    for v in VARIANTS:
        runs = [(r.runs[v].finite_curve, r.runs[v].trace) for r in results
                if v in r.runs and not r.runs[v].no_measurements]
        if any(v in r.runs for r in results):
            columns[v] = stall_sweep(runs, grid)
    rows = []
    for k, (p, q) in enumerate(grid):
        rows.append([_num(float(p)), _num(float(q))] +
                    [str(columns[v][k]) if v in columns else "" for v in VARIANTS])
    return rows


def cmd_stall(cfg: ExperimentConfig) -> int:
    results = measure_all(cfg)
    _write_csv(cfg.out_dir / "stall.csv", STALL_CSV_HEADER, stall_table(results, cfg.stall_grid))
    write_manifest(cfg.out_dir, "stall", cfg,
                   {"grid": " ".join(f"({_num(float(p))},{_num(float(q))})" for p, q in cfg.stall_grid)})
    return exit_code(results)


def cmd_weakest(cfg: ExperimentConfig) -> int:
    failed = 0
    paths = expand_instances(cfg.instances)
    for path in paths:
        try:
            instance = read_instance(path)
        except (OSError, ValueError) as exc:
            log.warning("%s: cannot read instance: %s", path, exc)
            failed += 1
            continue
        wb = compute_weakest_bounds(instance, cfg.propagation.max_rounds,
                                    integrality_eps=cfg.propagation.integrality_eps)
        name = instance.name or Path(path).stem
        rows = [[instance.var_name(j), format_ext(lo), format_ext(up)]
                for j, (lo, up) in enumerate(zip(wb.lower, wb.upper))]
        _write_csv(cfg.out_dir / "weakest" / f"{name}.csv", WEAKEST_CSV_HEADER, rows)
        if wb.cap_hit:
            log.warning("%s: weakest bounds hit the iteration cap", name)
    write_manifest(cfg.out_dir, "weakest-bounds", cfg)
    if not paths or failed == len(paths):
        return EXIT_FAILED
    return EXIT_PARTIAL if failed else EXIT_OK
