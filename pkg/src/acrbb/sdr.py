"""Semidefinite relaxation with Gaussian randomization (baseline).

The relaxation

    minimize Tr(W)  s.t.  Tr(h_k h_k^H W) >= 1,  W Hermitian PSD

is solved over real symmetric matrices of twice the size. With
``R_k, I_k`` the real rows of ``h_k`` (see :class:`acrbb.problem.Problem`),
``B_k = R_k'R_k + I_k'I_k`` satisfies ``x'B_k x = |h_k^H w|^2``, and the real
SDP ``min Tr(Y) s.t. <B_k, Y> >= 1, Y PSD`` has the same value: its data are
invariant under the rotation ``x -> (-Im w, Re w)``, so an optimal ``Y`` can
be averaged onto the structured matrices ``[[Wr, -Wi], [Wi, Wr]] / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import Problem
from .sdp import SdpStatus, solve_sdp
from .sla import SDR_STREAM, _best_scaled, scale_to_feasible

__all__ = [
    "SdpSolution",
    "solve_sdr",
    "rank_one_ratio",
    "gaussian_randomization",
    "sdr_solve",
    "DEFAULT_SAMPLES",
    "RANK_ONE_TOL",
]

DEFAULT_SAMPLES = 1000
RANK_ONE_TOL = 1e-7
DEFAULT_SDP_TOL = 1e-9


@dataclass(frozen=True)
class SdpSolution:
    W: np.ndarray
    value: float
    duality_gap: float
    status: SdpStatus
    lower_bound: float  # dual objective


def solve_sdr(p: Problem, tol: float = DEFAULT_SDP_TOL) -> SdpSolution:
    R, I = p.real_rows()
    B = np.einsum("ka,kb->kab", R, R) + np.einsum("ka,kb->kab", I, I)
    n2, m = 2 * p.n, p.m
    res = solve_sdp(
        C=np.eye(n2),
        A=B,
        b=np.ones(m),
        c_l=np.zeros(m),
        a_l=-np.eye(m),
        tol=tol,
    )
    Y = res.X
    n = p.n
    Wr = Y[:n, :n] + Y[n:, n:]
    Wi = Y[n:, :n] - Y[:n, n:]
    W = Wr + 1j * Wi
    W = 0.5 * (W + W.conj().T)
    return SdpSolution(
        W=W,
        value=float(np.trace(W).real),
        duality_gap=res.duality_gap,
        status=res.status,
        lower_bound=res.dual_value,
    )


def rank_one_ratio(W) -> float:
    """Second largest over largest eigenvalue of Hermitian ``W``."""
    lam = np.linalg.eigvalsh(np.asarray(W))[::-1]
    if lam[0] <= 0:
        raise ValueError("matrix has no positive eigenvalue")
    if len(lam) == 1:
        return 0.0
    return float(max(lam[1], 0.0) / lam[0])


def gaussian_randomization(
    p: Problem, sol: SdpSolution, samples: int = DEFAULT_SAMPLES, seed: int = 0
) -> np.ndarray:
    """Pick the best feasibly-scaled draw from CN(0, W).

    A numerically rank-one ``W`` returns its scaled principal eigenvector.
    Draws come from PCG64 seeded with ``(seed, SDR_STREAM)``.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    lam, U = np.linalg.eigh(sol.W)
    if rank_one_ratio(sol.W) <= RANK_ONE_TOL:
        v = U[:, -1] * math.sqrt(lam[-1])
        return scale_to_feasible(p, v)
    F = U * np.sqrt(np.clip(lam, 0.0, None))
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, SDR_STREAM])))
    g = rng.standard_normal((samples, p.n, 2)) / math.sqrt(2.0)
    xi = (g[..., 0] + 1j * g[..., 1]) @ F.T
    return _best_scaled(p, xi)


def sdr_solve(p: Problem, samples: int = DEFAULT_SAMPLES, seed: int = 0):
    """Run the full pipeline; returns ``(w, SdpSolution)``."""
    sol = solve_sdr(p)
    return gaussian_randomization(p, sol, samples, seed), sol
