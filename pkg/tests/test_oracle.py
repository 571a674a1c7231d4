import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acrbb.worked_example import fixture_problem
from acrbb.bb import solve_global
from acrbb.oracle import GridTooLarge, min_norm_halfspaces, phase_grid_value
from acrbb.problem import Problem, feasibility_margin, generate_instance, objective
from acrbb.qp import Qp, solve_qp


def test_single_user_exact():
    h = np.array([1 + 2j, -0.5, 1j])
    o = phase_grid_value(Problem([h]), 7)
    assert o.upper == pytest.approx(1 / np.linalg.norm(h) ** 2, rel=1e-12)
    assert o.lower == o.upper
    assert o.best_phases == ()


def test_coarse_grids_certify_nothing():
    p = generate_instance(2, 3, 0)
    for g in (1, 2):
        o = phase_grid_value(p, g)
        assert o.lower == 0.0 and o.upper < math.inf


def test_best_point_is_feasible_with_upper_value():
    for seed in range(5):
        p = generate_instance(3, 3, seed)
        o = phase_grid_value(p, 60)
        assert feasibility_margin(p, o.best_w) >= -1e-9
        assert objective(o.best_w) == pytest.approx(o.upper, rel=1e-9)
        assert o.grid_width == pytest.approx(2 * math.pi / 60)
        assert len(o.best_phases) == 2


def test_worked_example_contains_global_optimum():
    p = fixture_problem()
    o = phase_grid_value(p, 720)
    res = solve_global(p, eps=1e-6)
    # both brackets hold the optimum, so they must intersect
    assert o.lower <= res.U_star and res.L_final <= o.upper
    # the coarse run stops at a worse incumbent than the optimum
    assert o.upper < 0.5072


def test_nested_refinement():
    for seed in range(6):
        p = generate_instance(2, 3, seed)
        prev = None
        for g in (8, 16, 32, 64, 128):
            o = phase_grid_value(p, g)
            if prev is not None:
                # the finer grid contains the coarser one
                assert o.upper <= prev.upper + 1e-12
                assert o.lower >= prev.lower - 1e-12
            prev = o


@settings(max_examples=15)
@given(st.integers(0, 10**6))
def test_engines_agree(seed):
    p = generate_instance(2, 3, seed)
    a = phase_grid_value(p, 12)
    b = phase_grid_value(p, 12, engine="ipm")
    assert a.upper == pytest.approx(b.upper, rel=1e-7)


@given(st.integers(0, 2**32 - 1))
def test_min_norm_halfspaces_matches_qp(seed):
    rng = np.random.default_rng(seed)
    n, k = int(rng.integers(2, 6)), int(rng.integers(1, 5))
    rows = rng.standard_normal((3, k, n))
    vals, xs = min_norm_halfspaces(rows)
    for b in range(3):
        s = solve_qp(Qp(2 * np.eye(n), np.zeros(n), G=-rows[b], h=-np.ones(k)))
        if s.optimal:
            assert vals[b] == pytest.approx(s.value, rel=1e-7, abs=1e-9)
            np.testing.assert_allclose(xs[b], s.x, atol=1e-6)
        else:
            assert np.isnan(vals[b])


def test_validation():
    p = generate_instance(2, 6, 0)
    with pytest.raises(GridTooLarge):
        phase_grid_value(p, 180)
    with pytest.raises(ValueError):
        phase_grid_value(p, 0)
    with pytest.raises(ValueError):
        phase_grid_value(generate_instance(2, 2, 0), 4, engine="simplex")
    assert issubclass(GridTooLarge, ValueError)
