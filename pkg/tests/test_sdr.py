import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acrbb.worked_example import fixture_problem
from acrbb.oracle import phase_grid_value
from acrbb.problem import Problem, feasibility_margin, generate_instance, objective
from acrbb.sdp import SdpStatus, solve_sdp
from acrbb.sdr import (
    gaussian_randomization,
    rank_one_ratio,
    sdr_solve,
    solve_sdr,
)


def test_single_user_closed_form():
    rng = np.random.default_rng(0)
    for n in (1, 2, 4):
        h = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        p = Problem([h])
        sol = solve_sdr(p)
        assert sol.status is SdpStatus.OPTIMAL
        nh2 = np.linalg.norm(h) ** 2
        np.testing.assert_allclose(sol.W, np.outer(h, h.conj()) / nh2**2, atol=1e-8)
        assert sol.value == pytest.approx(1 / nh2, rel=1e-8)


def test_rank_one_ratio_examples():
    v = np.array([1.0, 2j, -1])
    assert rank_one_ratio(np.outer(v, v.conj())) == pytest.approx(0.0, abs=1e-15)
    assert rank_one_ratio(np.eye(2)) == pytest.approx(1.0)
    assert rank_one_ratio(np.diag([4.0, 1.0])) == pytest.approx(0.25)
    assert rank_one_ratio(np.array([[3.0]])) == 0.0
    with pytest.raises(ValueError):
        rank_one_ratio(np.zeros((2, 2)))


def test_rank_one_randomization_returns_principal_vector():
    p = Problem([[1 + 1j, 2.0]])
    w, sol = sdr_solve(p, samples=10, seed=0)
    assert objective(w) == pytest.approx(sol.value, abs=1e-6)
    assert feasibility_margin(p, w) >= 0


@settings(max_examples=20)
@given(st.integers(0, 10**6), st.sampled_from([(2, 3), (3, 6), (4, 8)]))
def test_sdr_sandwich(seed, size):
    p = generate_instance(*size, seed)
    w, sol = sdr_solve(p, samples=200, seed=seed)
    assert sol.status is SdpStatus.OPTIMAL
    assert feasibility_margin(p, w) >= 0
    assert abs(sol.duality_gap) <= 1e-7 * (1 + abs(sol.value))
    assert np.linalg.eigvalsh(sol.W)[0] >= -1e-8
    np.testing.assert_allclose(sol.W, sol.W.conj().T, atol=1e-14)
    # the relaxation satisfies every constraint on the lifted matrix
    H = p.channels
    lifted = np.einsum("ka,ab,kb->k", H.conj(), sol.W, H).real
    assert lifted.min() >= 1 - 1e-7
    # dual value is a certified bound; trace(W) only to solver tolerance
    assert sol.lower_bound <= objective(w)
    assert sol.value <= objective(w) * (1 + 1e-8)


def test_sdr_below_optimum_below_randomized():
    for seed in range(6):
        p = generate_instance(2, 3, seed)
        w, sol = sdr_solve(p, samples=500, seed=seed)
        o = phase_grid_value(p, 180)
        assert sol.value <= o.upper + 1e-7
        assert o.lower <= objective(w) + 1e-9


def test_worked_example():
    p = fixture_problem()
    w, sol = sdr_solve(p, samples=1000, seed=0)
    assert sol.value <= 0.5072
    o = phase_grid_value(p, 360)
    assert sol.value <= o.upper
    assert objective(w) >= o.lower


def test_randomization_deterministic_and_validated():
    p = generate_instance(4, 16, 0)
    sol = solve_sdr(p)
    a = gaussian_randomization(p, sol, 100, 3)
    np.testing.assert_array_equal(a, gaussian_randomization(p, sol, 100, 3))
    assert objective(gaussian_randomization(p, sol, 1000, 3)) <= objective(
        gaussian_randomization(p, sol, 10, 3)
    ) + 1e-12
    with pytest.raises(ValueError):
        gaussian_randomization(p, sol, 0, 3)


@pytest.mark.filterwarnings("ignore:Solution may be inaccurate")
def test_sdp_matches_cvxpy():
    cp = pytest.importorskip("cvxpy")
    for seed in range(4):
        p = generate_instance(3, 7, seed)
        W = cp.Variable((3, 3), hermitian=True)
        H = p.channels
        cons = [W >> 0] + [cp.real(H[k].conj() @ W @ H[k]) >= 1 for k in range(p.m)]
        prob = cp.Problem(cp.Minimize(cp.real(cp.trace(W))), cons)
        prob.solve(solver="CLARABEL")
        assert solve_sdr(p).value == pytest.approx(prob.value, rel=1e-6)


def test_solve_sdp_small_lp_and_psd():
    # min x11 + x22 s.t. x12 = 1 (as <A, X> = 2 x12), X PSD  ->  value 2
    A = np.array([[[0.0, 1.0], [1.0, 0.0]]])
    r = solve_sdp(np.eye(2), A, [2.0])
    assert r.status is SdpStatus.OPTIMAL
    assert r.primal_value == pytest.approx(2.0, abs=1e-8)
    np.testing.assert_allclose(r.X, np.ones((2, 2)), atol=1e-6)
    # pure nonnegative block: min x s.t. x = 3
    r = solve_sdp(np.zeros((1, 1)), np.zeros((1, 1, 1)), [3.0], c_l=[1.0], a_l=[[1.0]])
    assert r.primal_value == pytest.approx(3.0, abs=1e-8)
    assert r.duality_gap == pytest.approx(0.0, abs=1e-7)
