"""Argument-cut relaxation and the global branch-and-bound solver.

The anchored user's constraint ``|h_M^H w| >= 1`` is replaced by
``h_M^H w >= 1`` (real and at least one), which fixes the global phase of
``w``. Every other user's response ``c_k = h_k^H w`` is confined to an
argument interval and relaxed to the convex hull of the corresponding
annular sector (see :mod:`acrbb.cuts`). The resulting QP is solved over the
real image ``x`` of ``w`` only: the ``c_k`` are substituted out.

Best-first branch-and-bound then bisects the interval of the user whose
relaxed response has the smallest modulus until the relative gap between
the incumbent and the least lower bound is within tolerance.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .cuts import TWO_PI, ArgInterval, envelope_cuts
from .problem import Problem, objective, real_to_complex
from .qp import DEFAULT_TOL, Qp, QpStatus, solve_qp

__all__ = [
    "ArgBox",
    "AcrSolution",
    "BbNode",
    "BbResult",
    "BbStatus",
    "TraceRow",
    "DegenerateScale",
    "AcrSolveError",
    "root_box",
    "build_acr",
    "solve_acr",
    "scale_to_feasible",
    "select_branch_index",
    "branch",
    "relative_gap",
    "solve_global",
    "iteration_bound",
    "closing_width",
    "ITERATION_BOUND_CAP",
    "DEFAULT_EPS",
]

DEFAULT_EPS = 5e-3
DEFAULT_MAX_ITER = 10**6
SCALE_FLOOR = 1e-8
ITERATION_BOUND_CAP = 2**63 - 1


class DegenerateScale(ArithmeticError):
    """The relaxed responses are too close to zero to rescale."""


class AcrSolveError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArgBox:
    """One argument interval per non-anchored user."""

    intervals: tuple[ArgInterval, ...]

    def __len__(self):
        return len(self.intervals)

    def __getitem__(self, k) -> ArgInterval:
        return self.intervals[k]

    @property
    def volume(self) -> float:
        return math.prod(iv.width for iv in self.intervals)

    def replace(self, k: int, iv: ArgInterval) -> ArgBox:
        ivs = list(self.intervals)
        ivs[k] = iv
        return ArgBox(tuple(ivs))


def root_box(m: int) -> ArgBox:
    return ArgBox(tuple(ArgInterval(0.0, TWO_PI) for _ in range(m - 1)))


def _free_users(p: Problem, anchor: int) -> list[int]:
    return [k for k in range(p.m) if k != anchor]


def _anchor(p: Problem, anchor: int | None) -> int:
    if anchor is None:
        return p.m - 1
    if not 0 <= anchor < p.m:
        raise ValueError(f"anchor must index a user, got {anchor}")
    return anchor


def build_acr(p: Problem, box: ArgBox, anchor: int | None = None) -> Qp:
    """The relaxation over ``box`` as a QP in ``x = (Re w, Im w)``.

    Objective ``|x|^2``; equality ``Im(h_a^H w) = 0`` and inequality
    ``Re(h_a^H w) >= 1`` for the anchored user ``a``; argument cuts on
    ``(Re, Im)(h_k^H w)`` for every other user whose interval is at most
    pi wide.
    """
    anchor = _anchor(p, anchor)
    free = _free_users(p, anchor)
    if len(box) != len(free):
        raise ValueError(f"box has {len(box)} intervals, expected {len(free)}")
    R, I = p.real_rows()
    n2 = 2 * p.n
    G_rows = [-R[anchor]]
    h_rows = [-1.0]
    for k, iv in zip(free, box.intervals):
        coef, rho = envelope_cuts(iv).as_arrays()
        if len(rho):
            # alpha Re + beta Im >= rho  ->  -(alpha R + beta I) x <= -rho
            G_rows.extend(-(coef[:, :1] * R[k] + coef[:, 1:] * I[k]))
            h_rows.extend(-rho)
    return Qp(
        Q=2.0 * np.eye(n2),
        q=np.zeros(n2),
        A=I[anchor].reshape(1, -1),
        b=np.zeros(1),
        G=np.vstack(G_rows),
        h=np.array(h_rows),
    )


@dataclass(frozen=True)
class AcrSolution:
    w: np.ndarray
    c: np.ndarray
    L: float


def solve_acr(
    p: Problem, box: ArgBox, anchor: int | None = None, tol: float = DEFAULT_TOL
) -> AcrSolution | None:
    """Solve the relaxation over ``box``; ``None`` when it is infeasible."""
    anchor = _anchor(p, anchor)
    qp = build_acr(p, box, anchor)
    sol = solve_qp(qp, tol=tol)
    if sol.status is QpStatus.ITERATION_LIMIT:
        sol = solve_qp(qp, tol=tol, max_iter=500)
    if sol.status is QpStatus.INFEASIBLE:
        return None
    if sol.status is not QpStatus.OPTIMAL:
        raise AcrSolveError(f"relaxation QP stopped with status {sol.status.value}")
    w = real_to_complex(sol.x)
    c = p.responses(w)[_free_users(p, anchor)]
    return AcrSolution(w=w, c=c, L=objective(w))


def scale_to_feasible(w, c, floor: float = SCALE_FLOOR) -> np.ndarray:
    """Divide ``w`` by ``min(|c_1|, ..., |c_{M-1}|, 1)``."""
    mods = np.abs(np.asarray(c))
    smallest = float(mods.min()) if mods.size else 1.0
    if smallest <= floor:
        raise DegenerateScale(f"min |c_k| = {smallest:.3g} is below {floor:g}")
    return np.asarray(w) / min(smallest, 1.0)


def select_branch_index(c) -> int:
    """0-based index of the smallest ``|c_k|``; ties go to the lowest index."""
    mods = np.abs(np.asarray(c))
    if mods.size == 0:
        raise ValueError("no interval to branch on")
    return int(np.argmin(mods))


def branch(box: ArgBox, k_star: int) -> tuple[ArgBox, ArgBox]:
    iv = box[k_star]
    if iv.width <= 0.0:
        raise ValueError(f"interval {k_star} has zero width and cannot be split")
    left, right = iv.split()
    return box.replace(k_star, left), box.replace(k_star, right)


def relative_gap(U: float, L: float) -> float:
    if L <= 0:
        raise ValueError(f"lower bound must be positive, got {L}")
    return (U - L) / L


def closing_width(eps: float) -> float:
    """Half-width below which branching an interval cannot be needed."""
    return math.acos(1.0 / math.sqrt(1.0 + eps))


def iteration_bound(m: int, eps: float) -> int:
    """Worst-case iteration count ``ceil((2 pi / delta)^(m-1)) + 1``.

    Saturates at :data:`ITERATION_BOUND_CAP`.
    """
    if m < 1:
        raise ValueError("need at least one user")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if m == 1:
        return 2
    base = TWO_PI / closing_width(eps)
    if (m - 1) * math.log2(base) >= 63:
        return ITERATION_BOUND_CAP
    return min(math.ceil(base ** (m - 1)) + 1, ITERATION_BOUND_CAP)


@dataclass(order=True)
class BbNode:
    L: float
    seq: int
    box: ArgBox = field(compare=False)
    c: np.ndarray = field(compare=False, repr=False)
    w: np.ndarray = field(compare=False, repr=False)


class BbStatus(Enum):
    CONVERGED = "converged"
    ITERATION_LIMIT = "iteration_limit"
    TIME_LIMIT = "time_limit"


@dataclass(frozen=True)
class TraceRow:
    """One pass of the main loop.

    ``lower`` is the chosen node's bound, ``gap`` the relative gap tested
    against it, and ``upper`` the incumbent value after the pass. Branch
    fields are ``None`` on the terminating pass; child bounds are ``None``
    for infeasible children.
    """

    t: int
    lower: float
    upper: float
    gap: float
    k_star: int | None = None
    branch_width: float | None = None
    split: float | None = None
    left_L: float | None = None
    right_L: float | None = None
    left_U: float | None = None
    right_U: float | None = None


@dataclass
class BbResult:
    w_star: np.ndarray
    U_star: float
    L_final: float
    iterations: int
    status: BbStatus
    eps: float
    U0: float
    L0: float
    trace: list[TraceRow] = field(repr=False)
    wall_time_s: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status is BbStatus.CONVERGED

    @property
    def gap(self) -> float:
        return relative_gap(self.U_star, self.L_final)


def solve_global(
    p: Problem,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
    time_limit: float | None = None,
    anchor: int | None = None,
    qp_tol: float = DEFAULT_TOL,
) -> BbResult:
    """Globally solve ``p`` to relative tolerance ``eps``.

    Nodes are kept in a min-heap on (lower bound, insertion order). A child
    enters the list when its bound is at most the current incumbent value;
    the incumbent is refreshed from each child's rescaled relaxed solution,
    left child first.
    """
    if eps < 0 or (eps == 0 and max_iter >= DEFAULT_MAX_ITER and time_limit is None):
        raise ValueError("eps must be positive unless finite limits are given")
    anchor = _anchor(p, anchor)
    start = time.perf_counter()
    seq = itertools.count()

    box0 = root_box(p.m)
    root = solve_acr(p, box0, anchor, qp_tol)
    if root is None:
        raise AcrSolveError("root relaxation reported infeasible")
    w_star = scale_to_feasible(root.w, root.c)
    U = objective(w_star)
    U0, L0 = U, root.L
    heap = [BbNode(root.L, next(seq), box0, root.c, root.w)]
    trace: list[TraceRow] = []

    t = 0
    status = BbStatus.CONVERGED
    while True:
        if not heap:
            L_final = U
            break
        if t >= max_iter:
            status = BbStatus.ITERATION_LIMIT
            L_final = heap[0].L
            break
        if time_limit is not None and time.perf_counter() - start > time_limit:
            status = BbStatus.TIME_LIMIT
            L_final = heap[0].L
            break
        t += 1
        node = heapq.heappop(heap)
        gap = relative_gap(U, node.L)
        if gap <= eps:
            trace.append(TraceRow(t, node.L, U, gap))
            L_final = node.L
            break

        k = select_branch_index(node.c)
        width = node.box[k].width
        children = branch(node.box, k)
        child_L: list[float | None] = []
        child_U: list[float | None] = []
        for box in children:
            sol = solve_acr(p, box, anchor, qp_tol)
            if sol is None:
                child_L.append(None)
                child_U.append(None)
                continue
            child_L.append(sol.L)
            if sol.L <= U:
                heapq.heappush(heap, BbNode(sol.L, next(seq), box, sol.c, sol.w))
            try:
                w_hat = scale_to_feasible(sol.w, sol.c)
            except DegenerateScale:
                child_U.append(None)
                continue
            val = objective(w_hat)
            child_U.append(val)
            if U > val:
                U, w_star = val, w_hat
        trace.append(
            TraceRow(
                t, node.L, U, gap,
                k_star=k,
                branch_width=width,
                split=children[0][k].u,
                left_L=child_L[0],
                right_L=child_L[1],
                left_U=child_U[0],
                right_U=child_U[1],
            )
        )

    return BbResult(
        w_star=w_star,
        U_star=U,
        L_final=L_final,
        iterations=t,
        status=status,
        eps=eps,
        U0=U0,
        L0=L0,
        trace=trace,
        wall_time_s=time.perf_counter() - start,
    )
