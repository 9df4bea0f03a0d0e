import math

import numpy as np
import pytest

from vrsgd.audit import prox_optimality_residual
from vrsgd.regularizer import L1, L2Sq, NonnegBall, Zero, make_regularizer

from oracles import grid_project_quarter_disk, grid_prox_2d


def test_values():
    assert L1(2.0).value(np.array([1.0, -1.0])) == 4.0
    assert NonnegBall().value(np.array([0.6, 0.8])) == 0.0
    assert NonnegBall().value(np.array([-0.1, 0.0])) == math.inf
    assert NonnegBall().value(np.array([1.0, 1.0])) == math.inf
    assert L2Sq(2.0).value(np.array([1.0, 2.0])) == 5.0
    assert Zero().value(np.array([3.0])) == 0.0


def test_prox_closed_forms():
    np.testing.assert_array_equal(L1(1.0).prox(np.array([3.0, -0.5, 0.0]), 1.0), [2.0, 0.0, 0.0])
    np.testing.assert_array_equal(L2Sq(1.0).prox(np.array([2.0]), 1.0), [1.0])
    np.testing.assert_array_equal(NonnegBall().prox(np.array([2.0, -1.0]), 0.3), [1.0, 0.0])
    np.testing.assert_array_equal(Zero().prox(np.array([2.0, -1.0]), 0.3), [2.0, -1.0])


def test_strong_convexity():
    assert L2Sq(0.25).strong_convexity == 0.25
    assert L1(1.0).strong_convexity == 0.0
    assert Zero().strong_convexity == 0.0
    assert NonnegBall().strong_convexity == 0.0


def test_factory():
    assert isinstance(make_regularizer("l1", 0.5), L1)
    with pytest.raises(ValueError):
        make_regularizer("tv")
    with pytest.raises(ValueError):
        L1(-1.0)


def test_nonneg_ball_feasibility_tolerance():
    x = np.array([1.0, 0.0]) * (1 + 1e-13)
    assert NonnegBall().value(x) == 0.0


REGULARIZERS = [Zero(), L2Sq(0.7), L1(0.3), NonnegBall()]


@pytest.mark.parametrize("g", REGULARIZERS, ids=lambda g: g.kind)
def test_optimality_and_nonexpansive(g):
    rng = np.random.default_rng(5)
    for _ in range(200):
        y = 3 * rng.standard_normal(4)
        eta = float(rng.uniform(0.01, 5.0))
        assert prox_optimality_residual(g, y, eta) <= 1e-10
        y2 = 3 * rng.standard_normal(4)
        lhs = np.linalg.norm(g.prox(y, eta) - g.prox(y2, eta))
        assert lhs <= np.linalg.norm(y - y2) + 1e-12


def test_nonneg_ball_sampled_variational_inequality():
    rng = np.random.default_rng(6)
    g = NonnegBall()
    for _ in range(50):
        y = 2 * rng.standard_normal(3)
        y_plus = g.prox(y, 1.0)
        assert g.value(y_plus) == 0.0
        for _ in range(100):
            z = np.abs(rng.standard_normal(3))
            z /= max(1.0, np.linalg.norm(z)) * rng.uniform(1.0, 3.0)
            assert (y - y_plus) @ (z - y_plus) <= 1e-10


@pytest.mark.parametrize("g", REGULARIZERS, ids=lambda g: g.kind)
def test_prox_matches_grid_search(g):
    rng = np.random.default_rng(7)
    for _ in range(3):
        y = 2 * rng.standard_normal(2)
        eta = float(rng.uniform(0.2, 2.0))
        if isinstance(g, NonnegBall):
            x_grid, v_grid = grid_project_quarter_disk(y)
        else:
            x_grid, v_grid = grid_prox_2d(g, y, eta, points=41, levels=28, shrink=2.0)
        x = g.prox(y, eta)
        v = eta * g.value(x) + 0.5 * float((x - y) @ (x - y))
        assert v <= v_grid + 1e-12
        assert np.linalg.norm(x - x_grid) <= 1e-6
