import numpy as np
import pytest

from vrsgd.audit import fd_gradient_check
from vrsgd.dataset import LabeledDataset
from vrsgd.objective import LEAST_SQUARES, NEG_SQUARE, FiniteSumObjective

from conftest import random_least_squares


def objective(rows, labels, kind=LEAST_SQUARES):
    return FiniteSumObjective(LabeledDataset.from_dense(np.array(rows, dtype=float), labels), kind)


def test_least_squares_component_gradient():
    obj = objective([[1, 1]], [1])
    np.testing.assert_array_equal(obj.component_gradient(0, np.array([1.0, 1.0])), [2.0, 2.0])


def test_neg_square_component_gradient():
    obj = objective([[1, 0]], [1], NEG_SQUARE)
    np.testing.assert_array_equal(obj.component_gradient(0, np.array([2.0, 3.0])), [-4.0, 0.0])


def test_gradient_zero_at_component_minimum():
    obj = objective([[1]], [1])
    np.testing.assert_array_equal(obj.component_gradient(0, np.array([1.0])), [0.0])


def test_sparse_rows_touch_only_support():
    obj = objective([[0, 2, 0], [1, 0, 1]], [1, -1])
    assert obj._dense is None
    g = obj.component_gradient(0, np.array([5.0, 1.0, 7.0]))
    np.testing.assert_array_equal(g, [0.0, 2 * (2 - 1) * 2, 0.0])


def test_index_out_of_range():
    obj = objective([[1]], [1])
    with pytest.raises(IndexError):
        obj.component_gradient(1, np.zeros(1))


def test_full_gradient_all_zero_labels_at_origin():
    obj = objective([[1, 2], [3, -1]], [-1, -1], NEG_SQUARE)
    np.testing.assert_array_equal(obj.full_gradient(np.zeros(2)), [0.0, 0.0])


def test_full_gradient_single_component():
    obj = objective([[1, 2]], [1])
    x = np.array([0.3, -0.7])
    np.testing.assert_allclose(obj.full_gradient(x), obj.component_gradient(0, x), rtol=0, atol=1e-15)


@pytest.mark.parametrize(
    "rows, labels, kind, x, expected",
    [
        ([[1]], [1], LEAST_SQUARES, [0.0], 1.0),
        ([[1]], [1], NEG_SQUARE, [1.0], -1.0),
        ([[1], [2]], [0, 0], LEAST_SQUARES, [1.0], 2.5),
    ],
)
def test_objective_value(rows, labels, kind, x, expected):
    data = LabeledDataset.from_dense(np.array(rows, dtype=float), [1] * len(rows))
    obj = FiniteSumObjective(data, kind, targets=labels if kind == LEAST_SQUARES else None)
    assert obj.value(np.array(x)) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("rows, expected", [([[1, 1]], 4.0), ([[1], [3]], 18.0)])
def test_lipschitz(rows, expected):
    assert objective(rows, [1] * len(rows)).lipschitz == expected


def test_lipschitz_rescaled_bound(synthetic50):
    obj = FiniteSumObjective(synthetic50)
    assert obj.lipschitz <= 2 * obj.p


def test_all_zero_dataset_rejected():
    data = LabeledDataset.from_dense(np.zeros((2, 3)), [1, -1])
    with pytest.raises(ValueError):
        FiniteSumObjective(data)


def test_full_gradient_is_mean_of_components():
    rng = np.random.default_rng(1)
    for kind in (LEAST_SQUARES, NEG_SQUARE):
        obj = random_least_squares(rng, 7, 4)
        obj = FiniteSumObjective(obj.data, kind)
        x = rng.standard_normal(4)
        mean = np.mean([obj.component_gradient(i, x) for i in range(obj.n)], axis=0)
        np.testing.assert_allclose(obj.full_gradient(x), mean, rtol=0, atol=1e-12)
        np.testing.assert_allclose(
            obj.component_gradients(x), [obj.component_gradient(i, x) for i in range(obj.n)],
            rtol=0, atol=1e-12,
        )


def test_finite_differences_random_directions():
    rng = np.random.default_rng(2)
    h = 1e-5
    for kind in (LEAST_SQUARES, NEG_SQUARE):
        obj = FiniteSumObjective(random_least_squares(rng, 5, 3).data, kind)
        for _ in range(20):
            i = int(rng.integers(obj.n))
            x = rng.standard_normal(3)
            d = rng.standard_normal(3)
            d /= np.linalg.norm(d)
            fd = (obj.component_value(i, x + h * d) - obj.component_value(i, x - h * d)) / (2 * h)
            exact = obj.component_gradient(i, x) @ d
            assert abs(fd - exact) <= 10 * h**2 * obj.lipschitz


def test_fd_check_least_squares_and_neg_square():
    rng = np.random.default_rng(3)
    obj = random_least_squares(rng, 6, 4)
    assert fd_gradient_check(obj, rng.standard_normal(4)) <= 1e-6
    neg = objective([[1.0]], [1], NEG_SQUARE)
    assert fd_gradient_check(neg, np.array([2.0])) <= 1e-8
    assert neg.component_gradient(0, np.array([2.0]))[0] == -4.0


def test_lipschitz_property_empirical():
    rng = np.random.default_rng(4)
    obj = random_least_squares(rng, 6, 3)
    for _ in range(50):
        i = int(rng.integers(obj.n))
        x, y = rng.standard_normal(3), rng.standard_normal(3)
        lhs = np.linalg.norm(obj.component_gradient(i, x) - obj.component_gradient(i, y))
        assert lhs <= obj.lipschitz * np.linalg.norm(x - y) * (1 + 1e-12)
