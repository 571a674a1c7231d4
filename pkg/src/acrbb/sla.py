"""Successive linear approximation (local baseline).

Each modulus constraint ``|v_k|^2 >= 1``, where ``v_k`` is the real image of
``h_k^H w``, is replaced by its first-order expansion at the current point:

    |v_k^n|^2 + 2 v_k^n . (v_k - v_k^n) >= 1.

Since ``|v|^2`` is convex the linearized set lies inside the original
feasible set, so every iterate stays feasible and the objective decreases.
The coupling ``v_k = (Re, Im)(h_k^H w)`` is substituted directly into the
QP, which is solved over the real image of ``w`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .problem import Problem, feasibility_margin, objective, real_to_complex
from .qp import Qp, QpStatus, solve_qp

__all__ = [
    "SlaState",
    "SlaResult",
    "AllDegenerate",
    "sla_init",
    "sla_state",
    "sla_step",
    "sla_solve",
    "scale_to_feasible",
    "DEFAULT_CANDIDATES",
]

DEFAULT_CANDIDATES = 1000
DEFAULT_REL_TOL = 1e-6
DEFAULT_MAX_ITER = 100
DEGENERATE_FLOOR = 1e-8
# Stream tags, so baseline draws never replay the instance draws.
SLA_STREAM = 1
SDR_STREAM = 2


class AllDegenerate(ArithmeticError):
    """Every random candidate had a vanishing response."""


@dataclass(frozen=True)
class SlaState:
    w: np.ndarray
    v: np.ndarray  # (M, 2): Re and Im of h_k^H w
    objective: float
    iteration: int = 0


@dataclass
class SlaResult:
    w: np.ndarray
    objective: float
    iterations: int
    history: list[float] = field(default_factory=list)
    margins: list[float] = field(default_factory=list)


def sla_state(p: Problem, w, iteration: int = 0) -> SlaState:
    r = p.responses(w)
    return SlaState(np.asarray(w, dtype=complex), np.column_stack([r.real, r.imag]),
                    objective(w), iteration)


def sla_init(p: Problem, candidates: int = DEFAULT_CANDIDATES, seed: int = 0) -> np.ndarray:
    """Best of ``candidates`` random CN(0, I) points, each scaled to feasibility.

    Draws are taken sequentially from one PCG64 stream, so the first ``k``
    candidates are the same for every ``candidates >= k``. The stream is
    seeded with ``(seed, SLA_STREAM)``, which keeps it independent of the
    instance generator even when both use the same integer seed.
    """
    if candidates < 1:
        raise ValueError("need at least one candidate")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, SLA_STREAM])))
    g = rng.standard_normal((candidates, p.n, 2)) / math.sqrt(2.0)
    cand = g[..., 0] + 1j * g[..., 1]
    return _best_scaled(p, cand)


def _best_scaled(p: Problem, cand: np.ndarray) -> np.ndarray:
    """Scale each row to feasibility and return the one of least norm."""
    mods = np.abs(cand @ p.channels.conj().T).min(axis=1)
    ok = mods > DEGENERATE_FLOOR
    if not ok.any():
        raise AllDegenerate("all candidates have a vanishing response")
    norms = np.full(len(cand), np.inf)
    norms[ok] = np.sum(np.abs(cand[ok]) ** 2, axis=1) / mods[ok] ** 2
    best = int(np.argmin(norms))
    return scale_to_feasible(p, cand[best] / mods[best])


def scale_to_feasible(p: Problem, w: np.ndarray) -> np.ndarray:
    """Scale ``w`` up so that every response modulus is at least 1.

    Dividing by the smallest modulus can land one rounding step short of
    1, so the factor is nudged upward until the margin is nonnegative.
    """
    smallest = float(np.abs(p.responses(w)).min())
    if smallest <= DEGENERATE_FLOOR:
        raise AllDegenerate("vector has a vanishing response")
    factor = 1.0 / smallest if smallest < 1.0 else 1.0
    for _ in range(8):
        out = w * factor
        if np.abs(p.responses(out)).min() >= 1.0:
            return out
        factor = np.nextafter(factor, np.inf) * (1.0 + 2.0**-52)
    raise ArithmeticError("could not scale to exact feasibility")


def _linearized_qp(p: Problem, state: SlaState) -> Qp:
    R, I = p.real_rows()
    v = state.v
    # 2 v^n . v >= 1 + |v^n|^2
    G = -2.0 * (v[:, :1] * R + v[:, 1:] * I)
    h = -(1.0 + np.sum(v * v, axis=1))
    n2 = 2 * p.n
    return Qp(2.0 * np.eye(n2), np.zeros(n2), G=G, h=h)


def sla_step(p: Problem, state: SlaState) -> SlaState:
    """One linearize-and-solve step from a feasible state."""
    sol = solve_qp(_linearized_qp(p, state))
    if sol.status is not QpStatus.OPTIMAL:
        raise RuntimeError(f"SLA subproblem stopped with status {sol.status.value}")
    w = real_to_complex(sol.x)
    # Removes the solver's ~tol violation of the inner approximation.
    w = scale_to_feasible(p, w)
    return sla_state(p, w, state.iteration + 1)


def sla_solve(
    p: Problem,
    w0,
    rel_tol: float = DEFAULT_REL_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SlaResult:
    """Iterate :func:`sla_step` from feasible ``w0``.

    Stops once the relative objective decrease falls below ``rel_tol`` or
    after ``max_iter`` steps. A step that fails to decrease the objective is
    discarded, so the returned history is nonincreasing.
    """
    if feasibility_margin(p, w0) < -1e-9:
        raise ValueError("SLA needs a feasible starting point")
    state = sla_state(p, w0)
    history = [state.objective]
    margins = [feasibility_margin(p, state.w)]
    for _ in range(max_iter):
        new = sla_step(p, state)
        if new.objective > state.objective:
            break
        decrease = (state.objective - new.objective) / state.objective
        state = new
        history.append(state.objective)
        margins.append(feasibility_margin(p, state.w))
        if decrease < rel_tol:
            break
    return SlaResult(state.w, state.objective, state.iteration, history, margins)
