import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from acrbb.bb import iteration_bound, closing_width
from acrbb.problem import feasibility_margin, objective
from acrbb.qp import Qp

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def random_feasible_qp(rng) -> Qp:
    """PD objective, a few equalities and a feasible set with interior."""
    n = int(rng.integers(2, 12))
    m = int(rng.integers(1, 30))
    p = int(rng.integers(0, 3))
    B = rng.standard_normal((n, n))
    Q = B @ B.T + 0.1 * np.eye(n)
    x0 = rng.standard_normal(n)
    G = rng.standard_normal((m, n))
    h = G @ x0 + rng.uniform(0, 1, m)
    A = rng.standard_normal((p, n))
    return Qp(Q, 3 * rng.standard_normal(n), A, A @ x0, G, h)


def random_infeasible_qp(rng) -> Qp:
    """g.x <= -1 together with -g.x <= -1 - t, t >= 0, cannot both hold."""
    n = int(rng.integers(2, 8))
    g = rng.standard_normal(n)
    G = np.vstack([g, -g, rng.standard_normal((3, n))])
    h = np.array([-1.0, -1.0 - rng.uniform(0, 2), 1.0, 1.0, 1.0])
    return Qp(np.eye(n), np.zeros(n), G=G, h=h)


@pytest.fixture(scope="session")
def qp_corpus():
    rng = np.random.default_rng(20240901)
    return [random_feasible_qp(rng) for _ in range(500)]


def check_run(res, p, tol=1e-8):
    """Invariants every finished run must satisfy."""
    lows = [r.lower for r in res.trace]
    ups = [r.upper for r in res.trace]
    assert all(b >= a - tol * a for a, b in zip(lows, lows[1:]))
    assert all(b <= a for a, b in zip(ups, ups[1:]))
    assert ups[0] <= res.U0
    assert all(L > 0 and L <= U * (1 + tol) for L, U in zip(lows, ups))
    assert res.U_star >= res.L_final * (1 - tol) > 0
    assert feasibility_margin(p, res.w_star) >= -1e-9
    assert objective(res.w_star) == pytest.approx(res.U_star, rel=1e-12)
    if res.converged:
        assert res.gap <= res.eps
        assert res.iterations <= iteration_bound(p.m, max(res.eps, 1e-300))
    delta = closing_width(res.eps) if res.eps > 0 else 0.0
    for r in res.trace:
        if r.k_star is not None:
            # a node whose branch interval is at most 2 delta wide must have passed the gap test
            assert r.branch_width > 2 * delta * (1 - 1e-9)
            for child in (r.left_L, r.right_L):
                if child is not None:
                    assert child >= r.lower * (1 - tol)


# Acceptance lines are collected here and echoed in the terminal summary so
# they show up without ``-s``.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
