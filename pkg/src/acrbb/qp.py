"""Dense convex quadratic programming.

Solves

    minimize    1/2 x'Qx + q'x
    subject to  Ax = b,  Gx <= h

with Q symmetric positive definite, by a primal-dual path-following
interior point method with Mehrotra predictor-corrector steps. The problems
handled here are small (a few hundred variables at most), so every Newton
system is factored densely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

__all__ = ["Qp", "QpSolution", "QpStatus", "solve_qp", "kkt_residuals"]

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 100

# Step-to-boundary fraction.
_ETA = 0.99
# Extra iterations allowed once the scale-relative test is met.
_POLISH_STEPS = 3
# Required fraction of the targeted complementarity decrease per step.
_MU_DECREASE = 0.1


class QpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    ITERATION_LIMIT = "iteration_limit"


@dataclass(frozen=True)
class Qp:
    """A strictly convex QP in inequality form ``Gx <= h``.

    Missing constraint blocks may be passed as ``None``.
    """

    Q: np.ndarray
    q: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    G: np.ndarray | None = None
    h: np.ndarray | None = None

    def __post_init__(self):
        Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        n = Q.shape[0]
        if Q.shape != (n, n):
            raise ValueError(f"Q must be square, got shape {Q.shape}")
        q = np.asarray(self.q, dtype=float).reshape(-1)
        if q.shape != (n,):
            raise ValueError(f"q must have length {n}, got {q.shape}")
        A, b = _block(self.A, self.b, n, "A", "b")
        G, h = _block(self.G, self.h, n, "G", "h")
        Q = 0.5 * (Q + Q.T)
        if n and np.linalg.eigvalsh(Q)[0] < 1e-12:
            raise ValueError("Q must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.Q.shape[0]

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.G.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return float(0.5 * x @ self.Q @ x + self.q @ x)


def _block(M, v, n, mname, vname):
    if M is None and v is None:
        return np.zeros((0, n)), np.zeros(0)
    if M is None or v is None:
        raise ValueError(f"{mname} and {vname} must be given together")
    M = np.asarray(M, dtype=float)
    if M.ndim == 1:
        M = M.reshape(1, -1) if M.size else M.reshape(0, n)
    v = np.asarray(v, dtype=float).reshape(-1)
    if M.shape != (v.shape[0], n):
        raise ValueError(
            f"{mname} has shape {M.shape}, expected ({v.shape[0]}, {n})"
        )
    return M, v


@dataclass
class QpSolution:
    x: np.ndarray
    lambda_eq: np.ndarray
    mu_ineq: np.ndarray
    value: float
    status: QpStatus
    iterations: int = 0
    # Set on INFEASIBLE: a Farkas-type multiplier pair (lambda, mu) with
    # mu >= 0 and no feasible point of norm below ``infeasibility_radius``.
    certificate: tuple[np.ndarray, np.ndarray] | None = field(
        default=None, repr=False
    )
    infeasibility_radius: float = 0.0

    @property
    def optimal(self) -> bool:
        return self.status is QpStatus.OPTIMAL


def kkt_residuals(qp: Qp, sol: QpSolution) -> dict[str, float]:
    """Infinity-norm KKT residuals of ``sol`` with respect to ``qp``."""
    x, lam, mu = sol.x, sol.lambda_eq, sol.mu_ineq
    stat = qp.Q @ x + qp.q + qp.A.T @ lam + qp.G.T @ mu
    slack = qp.G @ x - qp.h
    return {
        "stationarity": _inf(stat),
        "equality": _inf(qp.A @ x - qp.b),
        "inequality": float(max(slack.max(initial=0.0), 0.0)),
        "dual_sign": float(max(-mu.min(initial=0.0), 0.0)),
        "complementarity": _inf(mu * slack),
    }


def _inf(v) -> float:
    return float(np.abs(v).max(initial=0.0))


def solve_qp(
    qp: Qp, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> QpSolution:
    """Solve ``qp`` to KKT tolerance ``tol``.

    On OPTIMAL every residual reported by :func:`kkt_residuals` is at most
    ``tol``, or, when rounding makes that unreachable on a badly scaled
    problem, at most ``tol`` times the magnitude of the terms it combines. INFEASIBLE is returned with a Farkas certificate once the dual
    iterates diverge along a ray proving the constraints inconsistent.
    """
    if qp.m == 0:
        return _solve_equality_only(qp, tol)
    return _ipm(qp, tol, max_iter)


def _solve_equality_only(qp: Qp, tol: float) -> QpSolution:
    n, p = qp.n, qp.p
    K = np.block([[qp.Q, qp.A.T], [qp.A, np.zeros((p, p))]])
    rhs = np.concatenate([-qp.q, qp.b])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    x, lam = sol[:n], sol[n:]
    if _inf(qp.A @ x - qp.b) > tol * max(1.0, _inf(qp.b)):
        # Least squares solution misses Ax = b: the system is inconsistent.
        r = qp.A @ x - qp.b
        return QpSolution(
            x, lam, np.zeros(0), np.inf, QpStatus.INFEASIBLE,
            certificate=(r, np.zeros(0)), infeasibility_radius=np.inf,
        )
    return QpSolution(x, lam, np.zeros(0), qp.objective(x), QpStatus.OPTIMAL)


def _ipm(qp: Qp, tol: float, max_iter: int) -> QpSolution:
    Q, q, A, b, G, h = qp.Q, qp.q, qp.A, qp.b, qp.G, qp.h
    n, p, m = qp.n, qp.p, qp.m

    x, lam, s, z = _initial_point(qp)

    status = QpStatus.ITERATION_LIMIT
    it = 0
    radius = 0.0
    cert = None
    best = None
    polish = _POLISH_STEPS
    for it in range(max_iter + 1):
        rd = Q @ x + q + A.T @ lam + G.T @ z
        re = A @ x - b
        ri = G @ x + s - h
        mu = s @ z / m
        zslack = z * (G @ x - h)
        comp = _inf(zslack)
        # The summed term bounds the duality gap, not just each product.
        err = max(_inf(rd), _inf(re), _inf(ri), abs(zslack.sum()))
        if err <= tol:
            status = QpStatus.OPTIMAL
            break
        # Rounding can keep large-valued problems from meeting ``tol``
        # absolutely. Once every residual is within ``tol`` of the size of
        # the terms it sums, a few more steps are tried and then the best
        # such iterate is accepted.
        Qx = Q @ x
        if (
            _inf(rd) <= tol * max(1.0, _inf(Qx), _inf(q), _inf(G.T @ z))
            and _inf(re) <= tol * max(1.0, _inf(b))
            and _inf(ri) <= tol * max(1.0, _inf(G @ x), _inf(h))
            and comp <= tol * max(1.0, abs(0.5 * x @ Qx + q @ x))
            and (best is None or err < best[0])
        ):
            best = (err, x, lam, s, z)
        if best is not None:
            polish -= 1
            if polish < 0:
                _, x, lam, s, z = best
                status = QpStatus.OPTIMAL
                break
        radius, cert = _farkas(qp, lam, z)
        if radius > _radius_threshold(x):
            status = QpStatus.INFEASIBLE
            break
        if it == max_iter:
            if best is not None:
                _, x, lam, s, z = best
                status = QpStatus.OPTIMAL
            break

        solve = _factor(qp, s, z)

        # Predictor (affine scaling) step.
        rc = s * z
        dx, dl, ds, dz = _newton(solve, qp, s, z, rd, re, ri, rc)
        alpha = _max_step(s, ds, z, dz)
        mu_aff = (s + alpha * ds) @ (z + alpha * dz) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0

        # Corrector with centering.
        rc = s * z - sigma * mu + ds * dz
        dx, dl, ds, dz = _newton(solve, qp, s, z, rd, re, ri, rc)
        alpha = min(1.0, _ETA * _max_step(s, ds, z, dz, cap=np.inf))
        alpha = _limit_step(s, ds, z, dz, alpha, mu, sigma)

        x = x + alpha * dx
        lam = lam + alpha * dl
        s = s + alpha * ds
        z = z + alpha * dz

    if status is QpStatus.INFEASIBLE:
        return QpSolution(
            x, lam, z, np.inf, status, it,
            certificate=cert, infeasibility_radius=radius,
        )
    return QpSolution(x, lam, z, qp.objective(x), status, it)


def _initial_point(qp: Qp):
    # Solves  min 1/2 x'Qx + q'x + 1/2 |s|^2  s.t. Ax = b, Gx + s = h,
    # then shifts s and z = s into the interior.
    n, p, m = qp.n, qp.p, qp.m
    K = np.zeros((n + p + m, n + p + m))
    K[:n, :n] = qp.Q
    K[:n, n:n + p] = qp.A.T
    K[:n, n + p:] = qp.G.T
    K[n:n + p, :n] = qp.A
    K[n + p:, :n] = qp.G
    K[n + p:, n + p:] = -np.eye(m)
    rhs = np.concatenate([-qp.q, qp.b, qp.h])
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    x, lam, z = sol[:n], sol[n:n + p], sol[n + p:]
    s = qp.h - qp.G @ x
    z = s.copy()
    shift = -s.min()
    if shift >= -1e-8 * max(1.0, _inf(s)):
        s = s + 1.0 + shift
    shift = -z.min()
    if shift >= -1e-8 * max(1.0, _inf(z)):
        z = z + 1.0 + shift
    return x, lam, s, z


def _factor(qp: Qp, s, z):
    """Factor the scaled augmented Newton matrix at (s, z).

    With d = sqrt(z/s) and dz = d * u the system

        [Q   A'  G'D] [dx]   [-rd             ]
        [A   0   0  ] [dl] = [-re             ]
        [DG  0   -I ] [u ]   [d (rc/z - ri)   ]

    stays well scaled as strictly complementary pairs separate, unlike the
    normal matrix Q + G'(Z/S)G.
    """
    Q, A, G = qp.Q, qp.A, qp.G
    n, p, m = qp.n, qp.p, qp.m
    d = np.sqrt(z / s)
    K = np.zeros((n + p + m, n + p + m))
    K[:n, :n] = Q
    K[:n, n:n + p] = A.T
    K[n:n + p, :n] = A
    DG = G * d[:, None]
    K[:n, n + p:] = DG.T
    K[n + p:, :n] = DG
    K[n + p:, n + p:] = -np.eye(m)
    lu = scipy.linalg.lu_factor(K, check_finite=False)

    def solve(rd, re, ri, rc):
        rhs = np.concatenate([-rd, -re, d * (rc / z - ri)])
        sol = scipy.linalg.lu_solve(lu, rhs, check_finite=False)
        dx, dl = sol[:n], sol[n:n + p]
        dz = d * sol[n + p:]
        ds = (-rc - s * dz) / z
        return dx, dl, ds, dz

    return solve


def _newton(solve, qp, s, z, rd, re, ri, rc, refine=1):
    # Solves the linearized KKT system
    #   Q dx + A'dl + G'dz = -rd,  A dx = -re,  G dx + ds = -ri,
    #   Z ds + S dz = -rc,
    # with iterative refinement against the unreduced equations.
    G = qp.G
    dx, dl, ds, dz = solve(rd, re, ri, rc)
    for _ in range(refine):
        e1 = qp.Q @ dx + qp.A.T @ dl + G.T @ dz + rd
        e2 = qp.A @ dx + re
        e3 = G @ dx + ds + ri
        e4 = z * ds + s * dz + rc
        cx, cl, cs, cz = solve(e1, e2, e3, e4)
        dx, dl, ds, dz = dx - cx, dl - cl, ds - cs, dz - cz
    return dx, dl, ds, dz


def _max_step(s, ds, z, dz, cap=1.0):
    a = cap
    # a denormal negative component overflows to inf, which is the right ratio
    with np.errstate(over="ignore"):
        neg = ds < 0
        if neg.any():
            a = min(a, float((-s[neg] / ds[neg]).min()))
        neg = dz < 0
        if neg.any():
            a = min(a, float((-z[neg] / dz[neg]).min()))
    return a


def _limit_step(s, ds, z, dz, alpha, mu, sigma):
    # For a QP the complementarity gap is quadratic in the step with a
    # nonnegative curvature term dx'Q dx. On strongly curved central paths
    # a long step raises mu and the iterates can cycle, so the step is
    # shortened until mu decreases by a fraction of the targeted amount.
    m = s.size
    target = _MU_DECREASE * (1.0 - sigma)
    a = alpha
    for _ in range(30):
        if (s + a * ds) @ (z + a * dz) / m <= (1.0 - target * a) * mu:
            return a
        a *= 0.5
    return alpha


def _farkas(qp: Qp, lam, z):
    """Radius below which no feasible point exists, from (lam, z).

    For any x with Ax = b and Gx <= h,  r'x >= -(h'z + b'lam) with
    r = G'z + A'lam, so no feasible point lies within -(h'z + b'lam)/|r|.
    """
    val = qp.h @ z + qp.b @ lam
    if val >= 0:
        return 0.0, None
    r = qp.G.T @ z + qp.A.T @ lam
    nr = float(np.linalg.norm(r))
    radius = np.inf if nr == 0.0 else float(-val / nr)
    return radius, (lam.copy(), z.copy())


def _radius_threshold(x) -> float:
    return 1e8 * (1.0 + float(np.linalg.norm(x)))
