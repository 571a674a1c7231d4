import math

import numpy as np
import pytest
from conftest import check_run
from hypothesis import given
from hypothesis import strategies as st

from acrbb.worked_example import fixture_problem, run_fixture
from acrbb.bb import (
    ITERATION_BOUND_CAP,
    ArgBox,
    BbStatus,
    DegenerateScale,
    branch,
    build_acr,
    iteration_bound,
    closing_width,
    relative_gap,
    root_box,
    scale_to_feasible,
    select_branch_index,
    solve_acr,
    solve_global,
)
from acrbb.cuts import TWO_PI, ArgInterval, envelope_cuts
from acrbb.oracle import phase_grid_value
from acrbb.problem import Problem, feasibility_margin, generate_instance, objective

PI = math.pi


def test_build_acr_root_has_only_anchor_constraints():
    p = generate_instance(3, 5, 0)
    qp = build_acr(p, root_box(5))
    assert qp.p == 1 and qp.m == 1
    np.testing.assert_array_equal(qp.Q, 2 * np.eye(6))
    qp1 = build_acr(Problem([[1, 2j]]), root_box(1))
    assert qp1.p == 1 and qp1.m == 1


def test_build_acr_constraint_count():
    p = generate_instance(2, 4, 1)
    box = ArgBox(tuple(ArgInterval(0, PI / 2) for _ in range(3)))
    qp = build_acr(p, box)
    assert qp.m == 3 * 3 + 1 and qp.p == 1
    with pytest.raises(ValueError):
        build_acr(p, root_box(3))


def test_root_closed_form():
    for seed in range(5):
        p = generate_instance(3, 4, seed)
        hm = p.channels[-1]
        nrm = np.vdot(hm, hm).real
        sol = solve_acr(p, root_box(4))
        # to the QP tolerance of 1e-9 on the anchored constraint
        np.testing.assert_allclose(sol.w, hm / nrm, atol=1e-8)
        assert sol.L == pytest.approx(1 / nrm, rel=5e-9)
        np.testing.assert_allclose(sol.c, p.channels[:-1].conj() @ hm / nrm, atol=1e-8)


def test_worked_example_relaxations():
    p = fixture_problem()
    assert solve_acr(p, root_box(3)).L == pytest.approx(0.4532, abs=5e-4)
    left = solve_acr(p, ArgBox((ArgInterval(0, TWO_PI), ArgInterval(0, PI))))
    assert left.L == pytest.approx(0.4825, abs=5e-4)
    np.testing.assert_allclose(left.c, [-1.7747 + 0.5097j, -0.6618 + 0.0j], atol=5e-4)
    right2 = solve_acr(p, ArgBox((ArgInterval(0, TWO_PI), ArgInterval(1.5 * PI, TWO_PI))))
    assert right2.L == pytest.approx(0.7526, abs=5e-4)


def test_acr_solution_invariants():
    p = generate_instance(2, 4, 3)
    # a box around the optimal response phases is feasible
    res = solve_global(p, eps=1e-3)
    r = p.responses(res.w_star)
    phases = np.mod(np.angle(r[:-1] * np.exp(-1j * np.angle(r[-1]))), TWO_PI)
    box = ArgBox(tuple(
        ArgInterval(max(0.0, ph - w), min(TWO_PI, ph + w))
        for ph, w in zip(phases, (0.3, 1.0, 2.0))
    ))
    sol = solve_acr(p, box)
    assert sol is not None
    r = p.responses(sol.w)
    assert r[-1].real >= 1 - 1e-9 and abs(r[-1].imag) <= 1e-9
    np.testing.assert_array_equal(sol.c, r[:-1])
    assert sol.L == objective(sol.w)
    assert sol.L <= res.U_star * (1 + 1e-9)
    for ck, iv in zip(sol.c, box.intervals):
        coef, rho = envelope_cuts(iv).as_arrays()
        assert np.all(coef @ [ck.real, ck.imag] - rho >= -1e-8)


def test_infeasible_box_returns_none():
    # users 1 and 2 share a channel, so their responses cannot have opposite phases
    h = np.array([[1, 1j], [1, 1j], [0.5, 1]])
    p = Problem(h)
    box = ArgBox((ArgInterval(0, 0.5), ArgInterval(PI, PI + 0.5)))
    assert solve_acr(p, box) is None


def test_reanchoring():
    p = generate_instance(2, 3, 4)
    a = solve_global(p, eps=1e-6)
    b = solve_global(p, eps=1e-6, anchor=0)
    assert b.U_star == pytest.approx(a.U_star, rel=3e-6)
    with pytest.raises(ValueError):
        solve_global(p, anchor=3)


def test_scale_to_feasible():
    w = np.array([1 + 1j, 2])
    np.testing.assert_array_equal(scale_to_feasible(w, [1.5, 2.0]), w)
    np.testing.assert_allclose(scale_to_feasible(w, [0.5, 2.0]), 2 * w)
    np.testing.assert_array_equal(scale_to_feasible(w, []), w)
    with pytest.raises(DegenerateScale):
        scale_to_feasible(w, [1e-9, 1.0])


def test_scale_worked_example_root():
    p = fixture_problem()
    root = solve_acr(p, root_box(3))
    np.testing.assert_allclose(np.abs(root.c), [1.8330, 0.7270], atol=5e-4)
    w_hat = scale_to_feasible(root.w, root.c)
    assert objective(w_hat) == pytest.approx(0.8573, abs=5e-4)
    # scaled relaxations are feasible for the original problem
    assert feasibility_margin(p, w_hat) >= -1e-9


def test_select_branch_index():
    assert select_branch_index(np.array([1.8330, 0.7270])) == 1
    assert select_branch_index(np.array([0.5, 0.5])) == 0
    assert select_branch_index(np.array([0.9, 0.3, 0.7])) == 1
    assert select_branch_index(np.array([0.9j, -0.3, 0.7])) == 1
    with pytest.raises(ValueError):
        select_branch_index(np.array([]))


def test_branch():
    left, right = branch(root_box(3), 1)
    assert left[1] == ArgInterval(0, PI) and right[1] == ArgInterval(PI, TWO_PI)
    assert left[0] == right[0] == ArgInterval(0, TWO_PI)
    _, r2 = branch(right, 1)
    assert r2[1].l == pytest.approx(1.5 * PI)
    assert left.volume + right.volume == pytest.approx(root_box(3).volume)
    with pytest.raises(ValueError):
        branch(ArgBox((ArgInterval(1.0, 1.0),)), 0)


@given(st.integers(0, 2**32 - 1))
def test_branch_volume_conserved(seed):
    rng = np.random.default_rng(seed)
    box = root_box(4)
    for _ in range(6):
        k = int(rng.integers(0, 3))
        left, right = branch(box, k)
        assert left.volume + right.volume == pytest.approx(box.volume, rel=1e-12)
        box = left if rng.random() < 0.5 else right


def test_relative_gap():
    assert relative_gap(2.0, 2.0) == 0.0
    assert relative_gap(0.8573, 0.4532) == pytest.approx(0.8917, abs=5e-4)
    assert relative_gap(0.5072, 0.4658) == pytest.approx(0.0889, abs=5e-4)
    with pytest.raises(ValueError):
        relative_gap(1.0, 0.0)


def test_worked_example_run():
    res = run_fixture()
    assert res.status is BbStatus.CONVERGED
    assert res.iterations == 4
    assert res.U_star == pytest.approx(0.5072, abs=5e-4)
    assert res.trace[-1].lower == pytest.approx(0.4658, abs=5e-4)
    assert feasibility_margin(fixture_problem(), res.w_star) >= -1e-6
    check_run(res, fixture_problem())


def test_single_user_converges_immediately():
    res = solve_global(Problem([[1, 0]]))
    assert res.converged and res.iterations == 1
    assert res.U_star == pytest.approx(1.0, abs=1e-9)
    assert res.L_final == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(res.w_star, [1, 0], atol=1e-9)


def test_limits():
    p = fixture_problem()
    res = solve_global(p, eps=0.1, max_iter=1)
    assert res.status is BbStatus.ITERATION_LIMIT and res.iterations == 1
    assert res.L_final <= res.U_star
    res = solve_global(p, eps=0.1, time_limit=0.0)
    assert res.status is BbStatus.TIME_LIMIT and res.iterations == 0
    q = generate_instance(2, 6, 0)
    res = solve_global(q, eps=0.0, max_iter=30)
    assert res.status is BbStatus.ITERATION_LIMIT and res.iterations == 30
    check_run(res, q)
    with pytest.raises(ValueError):
        solve_global(p, eps=0.0)
    with pytest.raises(ValueError):
        solve_global(p, eps=-1.0)


def test_deterministic_trace():
    p = generate_instance(2, 5, 8)
    a, b = solve_global(p, eps=1e-3), solve_global(p, eps=1e-3)
    assert a.trace == b.trace and np.array_equal(a.w_star, b.w_star)


@pytest.mark.parametrize("seed", range(6))
def test_sandwich_and_eps_optimality_against_oracle(seed):
    p = generate_instance(2, 3, 100 + seed)
    o = phase_grid_value(p, 360)
    eps = 0.01
    res = solve_global(p, eps=eps)
    check_run(res, p)
    for r in res.trace:
        assert r.lower <= o.upper * (1 + 1e-9)
        assert r.upper >= o.lower * (1 - 1e-9)
    # nu* >= lower, so this bounds the true relative error from above
    assert (res.U_star - o.lower) / o.lower <= eps


@given(st.integers(0, 10**6), st.sampled_from([(2, 4), (3, 5), (1, 3)]))
def test_random_runs_satisfy_invariants(seed, size):
    p = generate_instance(*size, seed)
    check_run(solve_global(p, eps=0.02), p)


def test_iteration_bound_values():
    mpmath = pytest.importorskip("mpmath")
    mpmath.mp.dps = 50
    for m, eps in [(3, 0.1), (2, 5e-3), (4, 1e-2), (3, 1e-6)]:
        delta = mpmath.acos(1 / mpmath.sqrt(1 + mpmath.mpf(eps)))
        ref = int(mpmath.ceil((2 * mpmath.pi / delta) ** (m - 1))) + 1
        assert iteration_bound(m, eps) == ref
    assert iteration_bound(3, 0.1) == 422
    assert closing_width(0.1) == pytest.approx(math.acos(1 / math.sqrt(1.1)))


def test_iteration_bound_edges():
    assert iteration_bound(1, 0.5) == 2
    assert iteration_bound(40, 5e-3) == ITERATION_BOUND_CAP
    # large eps drives delta to pi/2 from below, so (2 pi / delta)^2 is just above 16
    assert iteration_bound(3, 1e12) == 17 + 1
    with pytest.raises(ValueError):
        iteration_bound(0, 0.1)
    with pytest.raises(ValueError):
        iteration_bound(3, 0.0)


@given(st.floats(1e-6, 10), st.floats(1e-6, 10), st.integers(1, 6))
def test_iteration_bound_monotone_in_eps(a, b, m):
    lo, hi = sorted((a, b))
    assert iteration_bound(m, lo) >= iteration_bound(m, hi)
