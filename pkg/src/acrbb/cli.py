"""Command-line front end.

Exit codes: 0 success, 1 input (or solver) error, 2 iteration or time limit
reached, 3 fixture mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import worked_example
from .bb import DEFAULT_EPS, DEFAULT_MAX_ITER, BbResult, solve_global
from .bench import DEFAULT_GRID, SOLVERS, convergence_trace, run_bench, write_csv
from .oracle import phase_grid_value
from .problem import dump_instance, load_instance, normalize, objective
from .sdr import DEFAULT_SAMPLES, rank_one_ratio, sdr_solve
from .sla import sla_init, sla_solve

EXIT_OK, EXIT_INPUT, EXIT_LIMIT, EXIT_FIXTURE = 0, 1, 2, 3


def _complex_list(w):
    return [[float(c.real), float(c.imag)] for c in np.asarray(w)]


def _emit(obj, out: str | None):
    text = json.dumps(obj, indent=1, allow_nan=True)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def result_to_json(res: BbResult) -> dict:
    return {
        "status": res.status.value,
        "u_star": res.U_star,
        "l_final": res.L_final,
        "gap": res.gap,
        "iterations": res.iterations,
        "eps": res.eps,
        "u0": res.U0,
        "l0": res.L0,
        "wall_time_s": res.wall_time_s,
        "w_star": _complex_list(res.w_star),
        "trace": [asdict(r) for r in res.trace],
        "convergence": [asdict(r) for r in convergence_trace(res)],
    }


def _load(path):
    return normalize(load_instance(path))


def cmd_solve(a) -> int:
    p = _load(a.instance)
    res = solve_global(p, eps=a.eps, max_iter=a.max_iter, time_limit=a.time_limit_s)
    _emit(result_to_json(res), a.out)
    return EXIT_OK if res.converged else EXIT_LIMIT


def cmd_baseline(a) -> int:
    p = _load(a.instance)
    t0 = time.perf_counter()
    if a.solver == "sla":
        r = sla_solve(p, sla_init(p, a.samples, a.seed))
        out = {"solver": "sla", "objective": r.objective, "iterations": r.iterations,
               "history": r.history, "w": _complex_list(r.w)}
    else:
        w, sol = sdr_solve(p, a.samples, a.seed)
        out = {"solver": "sdr", "objective": objective(w), "sdp_value": sol.value,
               "sdp_status": sol.status.value, "duality_gap": sol.duality_gap,
               "rank_one_ratio": rank_one_ratio(sol.W), "w": _complex_list(w)}
    out["seed"] = a.seed
    out["wall_time_s"] = time.perf_counter() - t0
    _emit(out, a.out)
    return EXIT_OK


def cmd_oracle(a) -> int:
    p = _load(a.instance)
    o = phase_grid_value(p, a.grid)
    _emit({"upper": o.upper, "lower": o.lower, "grid_width": o.grid_width,
           "best_phases": list(o.best_phases), "w": _complex_list(o.best_w)}, a.out)
    return EXIT_OK


def cmd_bench(a) -> int:
    solvers = tuple(s.strip() for s in a.solvers.split(",") if s.strip())
    bad = set(solvers) - set(SOLVERS)
    if bad:
        raise ValueError(f"unknown solver(s) {sorted(bad)}; choose from {', '.join(SOLVERS)}")
    rep = run_bench(a.n, a.m, a.count, a.seed, solvers, eps=a.eps, samples=a.samples,
                    grid=a.grid, max_iter=a.max_iter, time_limit=a.time_limit_s)
    if a.out:
        rows_path, agg_path = write_csv(rep, a.out)
        print(f"wrote {rows_path} and {agg_path}", file=sys.stderr)
    for g in rep.aggregates:
        print(f"({g.n},{g.m}) {g.solver:7s} n={g.count} fail={g.failures} "
              f"iter={g.mean_iterations:.1f} time={g.mean_time_s:.3f}s "
              f"gap={g.mean_relative_gap:.3%} global={g.probability_of_global:.0%}")
    return EXIT_OK


def cmd_fixture(a) -> int:
    if a.write_instance:
        dump_instance(worked_example.fixture_raw_instance(), a.write_instance)
    if a.instance:
        res = solve_global(_load(a.instance), eps=a.eps)
    else:
        res = worked_example.run_fixture(eps=a.eps)
    checks = worked_example.check_trace(res)
    for c in checks:
        print(c)
    failed = [c for c in checks if not c.ok]
    if failed:
        print(f"{len(failed)} of {len(checks)} checks failed: "
              + ", ".join(c.name for c in failed), file=sys.stderr)
        return EXIT_FIXTURE
    print(f"all {len(checks)} checks passed in {res.wall_time_s:.3f}s")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is reserved for limits here.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(
        prog="acrbb",
        description="Global multicast beamforming power minimization, baselines and benchmarks.",
        epilog="exit codes: 0 ok, 1 input or solver error, 2 iteration/time limit, 3 fixture mismatch",
    )
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def limits(sp):
        sp.add_argument("--eps", type=float, default=DEFAULT_EPS,
                        help="relative optimality gap (default %(default)s)")
        sp.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER,
                        help="branch-and-bound iteration cap (default %(default)s)")
        sp.add_argument("--time-limit-s", type=float, default=None,
                        help="wall-clock limit in seconds")

    s = sub.add_parser("solve", help="global solve of a JSON instance")
    s.add_argument("instance", help="JSON instance file")
    limits(s)
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("baseline", help="run SLA or SDR on a JSON instance")
    s.add_argument("instance", help="JSON instance file")
    s.add_argument("--solver", choices=("sla", "sdr"), required=True)
    s.add_argument("--seed", type=int, default=0, help="seed for the random draws")
    s.add_argument("--samples", type=int, default=DEFAULT_SAMPLES,
                   help="SLA start candidates or SDR randomization draws")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_baseline)

    s = sub.add_parser("oracle", help="phase-grid bracket of the optimum")
    s.add_argument("instance", help="JSON instance file")
    s.add_argument("--grid", type=int, default=DEFAULT_GRID,
                   help="phase grid points per axis (default %(default)s)")
    s.add_argument("--out", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("bench", help="seeded random benchmark to CSV")
    s.add_argument("--n", type=int, required=True, help="transmit antennas")
    s.add_argument("--m", type=int, required=True, help="users")
    s.add_argument("--count", type=int, default=50, help="instances (default %(default)s)")
    s.add_argument("--seed", type=int, default=0, help="instance i uses seed + i")
    s.add_argument("--solvers", default="acr-bb,sla,sdr",
                   help=f"comma-separated subset of {','.join(SOLVERS)}")
    s.add_argument("--samples", type=int, default=DEFAULT_SAMPLES)
    s.add_argument("--grid", type=int, default=DEFAULT_GRID, help="oracle grid points per axis")
    limits(s)
    s.add_argument("--out", help="per-instance CSV; aggregates go to <stem>_summary.csv")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("fixture", help="check the hand-traced regression run")
    s.add_argument("--eps", type=float, default=worked_example.FIXTURE_EPS)
    s.add_argument("--instance", help="run this instance instead of the built-in one")
    s.add_argument("--write-instance", help="save the built-in instance as JSON")
    s.set_defaults(func=cmd_fixture)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ArithmeticError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
