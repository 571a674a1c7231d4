"""Seeded benchmark runs, reports and convergence traces.

Instance ``i`` of a run with base seed ``s`` is ``generate_instance(N, M,
s + i)``. Each solver's value is compared with the ACR-BB value on the same
instance through ``(nu_A - nu_bb) / nu_bb``.
"""

from __future__ import annotations

import concurrent.futures
import csv
import math
import os
import time
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from .bb import DEFAULT_EPS, BbResult, solve_global
from .oracle import phase_grid_value
from .problem import generate_instance, objective
from .sdr import DEFAULT_SAMPLES, sdr_solve
from .sla import DEFAULT_MAX_ITER as SLA_MAX_ITER
from .sla import sla_init, sla_solve

__all__ = [
    "SOLVERS",
    "GLOBAL_GAP",
    "WORKERS_ENV",
    "RunRow",
    "AggregateRow",
    "RunReport",
    "TracePoint",
    "convergence_trace",
    "run_instance",
    "run_bench",
    "aggregate",
    "write_csv",
    "read_rows",
    "read_aggregates",
    "summary_path",
    "worker_count",
]

SOLVERS = ("acr-bb", "sla", "sdr", "oracle")
# A solver "found the global optimum" when its relative gap is at most this.
GLOBAL_GAP = 1e-3
WORKERS_ENV = "ACRBB_WORKERS"
DEFAULT_GRID = 180


@dataclass(frozen=True)
class RunRow:
    instance_id: int
    seed: int
    n: int
    m: int
    solver: str
    objective: float
    iterations: int
    wall_time_s: float
    status: str
    relative_gap_vs_bb: float
    error: str = ""

    @property
    def ok(self) -> bool:
        return not self.error


@dataclass(frozen=True)
class AggregateRow:
    n: int
    m: int
    solver: str
    count: int
    failures: int
    mean_objective: float
    mean_iterations: float
    worst_iterations: int
    mean_time_s: float
    worst_time_s: float
    mean_relative_gap: float
    worst_relative_gap: float
    probability_of_global: float


@dataclass
class RunReport:
    rows: list[RunRow]
    aggregates: list[AggregateRow]


@dataclass(frozen=True)
class TracePoint:
    t: int
    L: float
    U: float
    E1: float
    E2: float
    E3: float


def convergence_trace(res: BbResult, nu_bar: float | None = None) -> list[TracePoint]:
    """Relative errors of the chosen-node bound and incumbent per pass.

    ``nu_bar`` defaults to the run's own final value.
    """
    ref = res.U_star if nu_bar is None else float(nu_bar)
    return [
        TracePoint(
            r.t, r.lower, r.upper,
            abs(r.lower - ref) / ref,
            abs(r.upper - ref) / ref,
            abs(r.upper - r.lower) / r.lower,
        )
        for r in res.trace
    ]


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def run_instance(
    n: int,
    m: int,
    seed: int,
    solvers=SOLVERS,
    instance_id: int = 0,
    eps: float = DEFAULT_EPS,
    samples: int = DEFAULT_SAMPLES,
    grid: int = DEFAULT_GRID,
    max_iter: int | None = None,
    time_limit: float | None = None,
) -> list[RunRow]:
    """One row per requested solver; failures become rows with ``error`` set."""
    unknown = set(solvers) - set(SOLVERS)
    if unknown:
        raise ValueError(f"unknown solver(s) {sorted(unknown)}")
    p = generate_instance(n, m, seed)
    results: dict[str, tuple] = {}
    bb_value = math.nan
    errors: dict[str, str] = {}
    for name in SOLVERS:
        if name not in solvers:
            continue
        try:
            if name == "acr-bb":
                kw = {} if max_iter is None else {"max_iter": max_iter}
                r, dt = _timed(lambda: solve_global(p, eps=eps, time_limit=time_limit, **kw))
                bb_value = r.U_star
                results[name] = (r.U_star, r.iterations, dt, r.status.value)
            elif name == "sla":
                r, dt = _timed(lambda: sla_solve(p, sla_init(p, samples, seed)))
                status = "converged" if r.iterations < SLA_MAX_ITER else "iteration_limit"
                results[name] = (r.objective, r.iterations, dt, status)
            elif name == "sdr":
                (w, sol), dt = _timed(lambda: sdr_solve(p, samples, seed))
                results[name] = (objective(w), 1, dt, sol.status.value)
            else:
                o, dt = _timed(lambda: phase_grid_value(p, grid))
                results[name] = (o.upper, grid ** (m - 1), dt, "converged")
        except Exception as exc:  # recorded per row, the run carries on
            errors[name] = f"{type(exc).__name__}: {exc}"

    rows = []
    for name in SOLVERS:
        if name not in solvers:
            continue
        if name in errors:
            rows.append(RunRow(instance_id, seed, n, m, name, math.nan, 0, math.nan,
                               "error", math.nan, errors[name]))
            continue
        val, its, dt, status = results[name]
        gap = (val - bb_value) / bb_value
        rows.append(RunRow(instance_id, seed, n, m, name, float(val), int(its),
                           float(dt), status, float(gap)))
    return rows


def worker_count() -> int:
    """Worker processes for :func:`run_bench`: ``$ACRBB_WORKERS``, else 1."""
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        k = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if k < 1:
        raise ValueError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return k


def run_bench(
    n: int,
    m: int,
    count: int,
    seed: int = 0,
    solvers=SOLVERS,
    workers: int | None = None,
    **kw,
) -> RunReport:
    """Run ``count`` seeded instances; rows are ordered by instance index."""
    if count < 1:
        raise ValueError("count must be at least 1")
    workers = worker_count() if workers is None else workers
    args = [(n, m, seed + i, tuple(solvers), i) for i in range(count)]
    if workers <= 1:
        per = [run_instance(*a, **kw) for a in args]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(run_instance, *a, **kw) for a in args]
            per = [f.result() for f in futs]
    rows = [r for group in per for r in group]
    return RunReport(rows, aggregate(rows))


def aggregate(rows: list[RunRow]) -> list[AggregateRow]:
    """Per (N, M, solver) statistics over the rows without errors."""
    keys = []
    for r in rows:
        k = (r.n, r.m, r.solver)
        if k not in keys:
            keys.append(k)
    out = []
    for n, m, solver in keys:
        group = [r for r in rows if (r.n, r.m, r.solver) == (n, m, solver)]
        good = [r for r in group if r.ok]
        if good:
            its = np.array([r.iterations for r in good], dtype=float)
            times = np.array([r.wall_time_s for r in good])
            vals = np.array([r.objective for r in good])
            gaps = np.array([r.relative_gap_vs_bb for r in good])
            finite = gaps[np.isfinite(gaps)]
            stats = (
                float(np.mean(vals)),
                float(np.mean(its)), int(np.max(its)),
                float(np.mean(times)), float(np.max(times)),
                float(np.mean(finite)) if finite.size else math.nan,
                float(np.max(finite)) if finite.size else math.nan,
                float(np.mean(finite <= GLOBAL_GAP)) if finite.size else math.nan,
            )
        else:
            stats = (math.nan, math.nan, 0, math.nan, math.nan, math.nan, math.nan, math.nan)
        out.append(AggregateRow(n, m, solver, len(group), len(group) - len(good), *stats))
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def summary_path(path) -> Path:
    """Where :func:`write_csv` puts the aggregate table for ``path``."""
    path = Path(path)
    return path.with_name(path.stem + "_summary" + (path.suffix or ".csv"))


def write_csv(report: RunReport, path) -> tuple[Path, Path]:
    """Per-instance rows to ``path``, aggregates next to it; see :func:`summary_path`."""
    path = Path(path)
    out = []
    for target, cls, items in ((path, RunRow, report.rows),
                               (summary_path(path), AggregateRow, report.aggregates)):
        names = [f.name for f in fields(cls)]
        with open(target, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for item in items:
                d = asdict(item)
                w.writerow([_fmt(d[k]) for k in names])
        out.append(target)
    return out[0], out[1]


def _read(path, cls):
    types = {f.name: f.type for f in fields(cls)}
    conv = {"int": int, "float": float, "str": str}
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            cls(**{k: conv[types[k]](v) for k, v in rec.items()})
            for rec in csv.DictReader(fh)
        ]


def read_rows(path) -> list[RunRow]:
    return _read(path, RunRow)


def read_aggregates(path) -> list[AggregateRow]:
    return _read(path, AggregateRow)
