"""Non-smooth part g of the composite objective and its proximal map.

prox(y, eta) = argmin_x  eta * g(x) + 0.5 * ||x - y||^2
"""

from __future__ import annotations

import math

import numpy as np

FEASIBILITY_TOL = 1e-12


class Regularizer:
    kind = "base"
    beta = 0.0

    def value(self, x):
        raise NotImplementedError

    def prox(self, y, eta):
        raise NotImplementedError

    @property
    def strong_convexity(self):
        return 0.0

    def __repr__(self):
        return f"{type(self).__name__}(beta={self.beta!r})"


class Zero(Regularizer):
    kind = "zero"

    def value(self, x):
        return 0.0

    def prox(self, y, eta):
        return np.array(y, dtype=float, copy=True)


class L2Sq(Regularizer):
    """(beta/2) ||x||^2, strongly convex with modulus beta."""

    kind = "l2sq"

    def __init__(self, beta):
        if beta < 0:
            raise ValueError("beta must be non-negative")
        self.beta = float(beta)

    def value(self, x):
        return 0.5 * self.beta * float(x @ x)

    def prox(self, y, eta):
        return y / (1.0 + eta * self.beta)

    @property
    def strong_convexity(self):
        return self.beta


class L1(Regularizer):
    """beta ||x||_1; the prox is soft-thresholding at eta * beta."""

    kind = "l1"

    def __init__(self, beta):
        if beta < 0:
            raise ValueError("beta must be non-negative")
        self.beta = float(beta)

    def value(self, x):
        return self.beta * float(np.abs(x).sum())

    def prox(self, y, eta):
        return np.sign(y) * np.maximum(np.abs(y) - eta * self.beta, 0.0)


class NonnegBall(Regularizer):
    """Indicator of C = {x : ||x|| <= 1, x >= 0}.

    The projection clips to the orthant and then scales radially. Clipping
    never increases the norm, so the composition is the exact projection onto
    the intersection.
    """

    kind = "nonneg_ball"

    def value(self, x):
        if np.linalg.norm(x) <= 1.0 + FEASIBILITY_TOL and np.min(x) >= -FEASIBILITY_TOL:
            return 0.0
        return math.inf

    def prox(self, y, eta):
        z = np.maximum(y, 0.0)
        norm = np.linalg.norm(z)
        return z / norm if norm > 1.0 else z


def make_regularizer(kind, beta=0.0):
    if kind == "zero":
        return Zero()
    if kind == "l2sq":
        return L2Sq(beta)
    if kind == "l1":
        return L1(beta)
    if kind == "nonneg_ball":
        return NonnegBall()
    raise ValueError(f"unknown regularizer {kind!r}")
