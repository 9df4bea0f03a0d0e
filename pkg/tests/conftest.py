import numpy as np
import pytest

from vrsgd.dataset import LabeledDataset, make_synthetic
from vrsgd.objective import FiniteSumObjective


class DiagonalQuadratics:
    """Test double with grad f_i(x) = a_i * x, so every value is exact in floating point."""

    def __init__(self, slopes, p=1):
        self.slopes = np.asarray(slopes, dtype=float)
        self.n = len(self.slopes)
        self.p = p
        self.lipschitz = float(np.max(np.abs(self.slopes)))

    def component_value(self, i, x):
        return 0.5 * self.slopes[i] * float(x @ x)

    def component_gradient(self, i, x):
        if not 0 <= i < self.n:
            raise IndexError(i)
        return self.slopes[i] * x

    def component_gradients(self, x):
        return self.slopes[:, None] * x[None, :]

    def full_gradient(self, x):
        return self.slopes.mean() * x

    def value(self, x):
        return 0.5 * self.slopes.mean() * float(x @ x)


@pytest.fixture
def tiny():
    """n=2, p=1, grad f_1(x) = 2x, grad f_2(x) = 4x, so grad f(x) = 3x."""
    return DiagonalQuadratics([2.0, 4.0])


def random_least_squares(rng, n, p):
    features = rng.standard_normal((n, p))
    labels = rng.choice([-1.0, 1.0], size=n)
    return FiniteSumObjective(LabeledDataset.from_dense(features, labels))


@pytest.fixture(scope="session")
def synthetic50():
    return make_synthetic(50, 10, seed=0)
