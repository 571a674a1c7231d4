"""Small dense semidefinite programs.

Primal-dual path following (HKM direction, Mehrotra predictor-corrector)
for

    minimize    <C, X> + c_l . x_l
    subject to  <A_i, X> + a_l[i] . x_l = b_i,   i = 1..m
                X >= 0 (PSD),  x_l >= 0

with one dense symmetric block ``X`` and an optional nonnegative block
``x_l``, and its dual

    maximize    b . y
    subject to  C - sum_i y_i A_i = Z >= 0,  c_l - a_l' y = z_l >= 0.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = ["SdpStatus", "SdpResult", "solve_sdp"]


class SdpStatus(enum.Enum):
    OPTIMAL = "optimal"
    ITERATION_LIMIT = "iteration_limit"


@dataclass
class SdpResult:
    X: np.ndarray
    x_l: np.ndarray
    y: np.ndarray
    Z: np.ndarray
    z_l: np.ndarray
    primal_value: float
    dual_value: float
    primal_infeasibility: float
    dual_infeasibility: float
    status: SdpStatus
    iterations: int

    @property
    def duality_gap(self) -> float:
        return self.primal_value - self.dual_value


def _sym(M):
    return 0.5 * (M + M.T)


def _max_psd_step(X, dX):
    """Largest alpha with X + alpha dX PSD (inf if unbounded)."""
    L = np.linalg.cholesky(X)
    Li = scipy.linalg.solve_triangular(L, np.eye(len(X)), lower=True)
    lam = np.linalg.eigvalsh(_sym(Li @ dX @ Li.T))[0]
    return np.inf if lam >= 0 else -1.0 / lam


def _max_lp_step(x, dx):
    neg = dx < 0
    return float((-x[neg] / dx[neg]).min()) if neg.any() else np.inf


def solve_sdp(
    C,
    A,
    b,
    c_l=None,
    a_l=None,
    tol: float = 1e-9,
    max_iter: int = 100,
) -> SdpResult:
    """Solve to relative duality gap and infeasibilities below ``tol``.

    ``A`` has shape (m, n, n); ``a_l`` has shape (m, n_l).
    """
    C = _sym(np.asarray(C, dtype=float))
    A = np.asarray(A, dtype=float)
    A = 0.5 * (A + A.transpose(0, 2, 1))
    b = np.asarray(b, dtype=float)
    m, n = A.shape[0], C.shape[0]
    if a_l is None:
        a_l = np.zeros((m, 0))
        c_l = np.zeros(0)
    a_l = np.asarray(a_l, dtype=float).reshape(m, -1)
    c_l = np.asarray(c_l, dtype=float)
    nl = a_l.shape[1]
    nu = n + nl

    # Scaled identity start (SDPT3 style).
    normA = np.sqrt(np.sum(A * A, axis=(1, 2)) + np.sum(a_l * a_l, axis=1))
    xi = max(10.0, np.sqrt(n), float(np.max(n * (1 + np.abs(b)) / (1 + normA))))
    eta = max(10.0, np.sqrt(n), float(np.max(normA)), np.linalg.norm(C), np.linalg.norm(c_l))
    X = xi * np.eye(n)
    Z = eta * np.eye(n)
    x_l = xi * np.ones(nl)
    z_l = eta * np.ones(nl)
    y = np.zeros(m)

    nb = 1.0 + np.linalg.norm(b)
    nc = 1.0 + np.linalg.norm(C) + np.linalg.norm(c_l)
    status = SdpStatus.ITERATION_LIMIT
    it = 0
    for it in range(max_iter + 1):
        AX = np.einsum("iab,ab->i", A, X) + a_l @ x_l
        Rp = b - AX
        Rd = C - np.einsum("i,iab->ab", y, A) - Z
        rd_l = c_l - a_l.T @ y - z_l
        pobj = float(np.sum(C * X) + c_l @ x_l)
        dobj = float(b @ y)
        pinf = np.linalg.norm(Rp) / nb
        dinf = (np.linalg.norm(Rd) + np.linalg.norm(rd_l)) / nc
        gap = pobj - dobj
        rel = abs(gap) / (1.0 + abs(pobj) + abs(dobj))
        if rel <= tol and pinf <= tol and dinf <= tol:
            status = SdpStatus.OPTIMAL
            break
        if it == max_iter:
            break
        mu = (np.sum(X * Z) + x_l @ z_l) / nu

        Zi = np.linalg.inv(Z)
        Zi = _sym(Zi)
        D = x_l / z_l
        XAZ = X @ A @ Zi  # (m, n, n)
        M = np.einsum("iab,jba->ij", A, XAZ) + (a_l * D) @ a_l.T
        M = _sym(M)
        try:
            cho = scipy.linalg.cho_factor(M, check_finite=False)
            msolve = lambda r: scipy.linalg.cho_solve(cho, r, check_finite=False)
        except np.linalg.LinAlgError:
            lu = scipy.linalg.lu_factor(M, check_finite=False)
            msolve = lambda r: scipy.linalg.lu_solve(lu, r, check_finite=False)
        XRdZ = X @ Rd @ Zi
        base = Rp + np.einsum("iab,ab->i", A, XRdZ) + a_l @ (D * rd_l)

        def direction(Rc, rc_l):
            rhs = base - np.einsum("iab,ab->i", A, Rc) - a_l @ rc_l
            dy = msolve(rhs)
            dZ = Rd - np.einsum("i,iab->ab", dy, A)
            dX = _sym(Rc - X @ dZ @ Zi)
            dz_l = rd_l - a_l.T @ dy
            dx_l = rc_l - D * dz_l
            return dX, dx_l, dy, dZ, dz_l

        # Predictor.
        dX, dx_l, dy, dZ, dz_l = direction(-X, -x_l)
        ap = min(1.0, _max_psd_step(X, dX), _max_lp_step(x_l, dx_l))
        ad = min(1.0, _max_psd_step(Z, dZ), _max_lp_step(z_l, dz_l))
        mu_aff = (np.sum((X + ap * dX) * (Z + ad * dZ))
                  + (x_l + ap * dx_l) @ (z_l + ad * dz_l)) / nu
        sigma = min(1.0, (mu_aff / mu) ** 3)

        # Corrector.
        Rc = sigma * mu * Zi - X - dX @ dZ @ Zi
        rc_l = sigma * mu / z_l - x_l - dx_l * dz_l / z_l
        dX, dx_l, dy, dZ, dz_l = direction(Rc, rc_l)
        gamma = 0.98
        ap = min(1.0, gamma * min(_max_psd_step(X, dX), _max_lp_step(x_l, dx_l)))
        ad = min(1.0, gamma * min(_max_psd_step(Z, dZ), _max_lp_step(z_l, dz_l)))

        X = _sym(X + ap * dX)
        x_l = x_l + ap * dx_l
        y = y + ad * dy
        Z = _sym(Z + ad * dZ)
        z_l = z_l + ad * dz_l

    return SdpResult(
        X=X, x_l=x_l, y=y, Z=Z, z_l=z_l,
        primal_value=pobj, dual_value=dobj,
        primal_infeasibility=float(pinf), dual_infeasibility=float(dinf),
        status=status, iterations=it,
    )
