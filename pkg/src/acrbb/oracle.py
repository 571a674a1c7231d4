"""Certified brute-force bracket of the global optimum for small instances.

Fix the phase of every non-anchored response on a uniform grid of spacing
``delta`` and solve

    minimize |w|^2  s.t.  Re(e^{-i phi_k} h_k^H w) >= 1 (k < M),
                          Re(h_M^H w) >= 1.

Each such QP has a feasible set inside the original one, so the best grid
value ``upper`` bounds the optimum from above. Rotating an optimizer so
that ``h_M^H w`` is real, its response phases lie within ``delta/2`` of
some grid point, where ``w / cos(delta/2)`` is feasible; hence the optimum
is at least ``upper * cos(delta/2)^2``. This needs ``delta < pi``; coarser
grids report a lower bound of 0, and a single user is solved exactly.

The grid QPs are tiny (M halfspaces through a common rhs), so by default
they are solved exactly and in batch by enumerating active sets. The
``engine="ipm"`` path routes every grid point through :func:`solve_qp`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .problem import Problem, real_to_complex
from .qp import Qp, QpStatus, solve_qp

__all__ = [
    "OracleResult",
    "GridTooLarge",
    "phase_grid_value",
    "min_norm_halfspaces",
    "DEFAULT_MAX_QPS",
]

DEFAULT_MAX_QPS = 10**6
_CHUNK = 20000


class GridTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class OracleResult:
    upper: float
    lower: float
    best_w: np.ndarray
    grid_width: float
    best_phases: tuple[float, ...] = ()

    def contains(self, value: float, rtol: float = 0.0) -> bool:
        return self.lower * (1 - rtol) <= value <= self.upper * (1 + rtol)


def min_norm_halfspaces(rows: np.ndarray, feas_tol: float = 1e-10):
    """Batched ``min |x|^2 s.t. rows @ x >= 1``.

    ``rows`` has shape (B, K, n). Returns values (B,) and minimizers (B, n).
    Every nonempty active set is tried; a candidate is accepted when its
    multipliers are nonnegative and it satisfies all K constraints, which
    makes it the (unique) KKT point. Batch entries with no accepted
    candidate get ``nan``.
    """
    B, K, n = rows.shape
    best_val = np.full(B, np.inf)
    best_x = np.full((B, n), np.nan)
    for size in range(1, min(K, n) + 1):
        for S in itertools.combinations(range(K), size):
            AS = rows[:, S, :]  # (B, s, n)
            gram = AS @ AS.transpose(0, 2, 1)
            det = np.linalg.det(gram)
            scale = np.prod(np.einsum("bii->bi", gram), axis=1)
            ok = np.abs(det) > 1e-12 * scale
            if not ok.any():
                continue
            nu = np.zeros((B, size))
            nu[ok] = np.linalg.solve(gram[ok], np.ones((int(ok.sum()), size, 1)))[..., 0]
            ok &= np.all(nu >= -1e-12, axis=1)
            x = np.einsum("bs,bsn->bn", nu, AS)
            ok &= np.all(rows @ x[..., None] >= 1.0 - feas_tol, axis=(1, 2))
            val = nu.sum(axis=1)
            better = ok & (val < best_val)
            best_val[better] = val[better]
            best_x[better] = x[better]
    best_val[~np.isfinite(best_val)] = np.nan
    return best_val, best_x


def _grid_rows(p: Problem, phases: np.ndarray) -> np.ndarray:
    """Constraint rows for a batch of phase vectors (B, M-1)."""
    R, I = p.real_rows()
    B = phases.shape[0]
    rows = np.empty((B, p.m, 2 * p.n))
    cos, sin = np.cos(phases), np.sin(phases)
    rows[:, :-1, :] = cos[..., None] * R[:-1] + sin[..., None] * I[:-1]
    rows[:, -1, :] = R[-1]
    return rows


def phase_grid_value(
    p: Problem,
    grid_points_per_axis: int,
    max_qps: int = DEFAULT_MAX_QPS,
    engine: str = "exact",
) -> OracleResult:
    """Bracket the optimum of ``p`` with a phase grid of the given density."""
    g = int(grid_points_per_axis)
    if g < 1:
        raise ValueError("need at least one grid point per axis")
    free = p.m - 1
    total = g**free
    if total > max_qps:
        raise GridTooLarge(f"{g}^{free} = {total} QPs exceeds the cap of {max_qps}")
    delta = 2.0 * math.pi / g
    axis = delta * np.arange(g)

    best_val, best_x, best_idx = np.inf, None, -1
    best_phases: tuple[float, ...] = ()
    for start in range(0, total, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, total))
        digits = np.empty((len(idx), free), dtype=np.int64)
        rem = idx.copy()
        for j in range(free - 1, -1, -1):
            digits[:, j] = rem % g
            rem //= g
        phases = axis[digits]
        rows = _grid_rows(p, phases)
        if engine == "exact":
            vals, xs = min_norm_halfspaces(rows)
            bad = np.flatnonzero(np.isnan(vals))
            for b in bad:
                vals[b], xs[b] = _ipm_point(rows[b])
        elif engine == "ipm":
            vals = np.empty(len(idx))
            xs = np.empty((len(idx), 2 * p.n))
            for b in range(len(idx)):
                vals[b], xs[b] = _ipm_point(rows[b])
        else:
            raise ValueError(f"unknown engine {engine!r}")
        j = int(np.argmin(vals))
        if vals[j] < best_val:
            best_val, best_x, best_idx = float(vals[j]), xs[j].copy(), int(idx[j])
            best_phases = tuple(float(v) for v in phases[j])

    if free == 0:
        # no free phase: the single QP is the problem itself
        lower = best_val
    elif delta < math.pi:
        lower = best_val * math.cos(0.5 * delta) ** 2
    else:
        # with two or fewer points per axis the rotation argument gives nothing
        lower = 0.0
    if best_x is None or not np.isfinite(best_val):
        best_val, best_x = math.inf, np.full(2 * p.n, np.nan)
    return OracleResult(
        upper=best_val,
        lower=lower,
        best_w=real_to_complex(best_x),
        grid_width=delta,
        best_phases=best_phases,
    )


def _ipm_point(rows: np.ndarray):
    n = rows.shape[1]
    sol = solve_qp(Qp(2.0 * np.eye(n), np.zeros(n), G=-rows, h=-np.ones(len(rows))))
    if sol.status is not QpStatus.OPTIMAL:
        return np.inf, np.full(n, np.nan)
    return sol.value, sol.x
