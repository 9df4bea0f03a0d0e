"""Stochastic gradient estimators for proximal SGD.

Each estimator is a small state machine: ``next_estimate(x_k, j_k)`` returns
the surrogate for grad f(x_k) given the sampled component ``j_k`` and then
advances its internal memory. ``oracle_calls`` counts every component
gradient evaluation (a full gradient costs n).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

NAMES = ("sgd", "bsaga", "bsvrg", "sarah", "sarge")


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator to build and with which parameters.

    ``theta`` is the bias parameter of B-SAGA/B-SVRG (``theta=1`` gives
    SAGA/SVRG, ``theta=n`` gives SAG for B-SAGA). ``epoch_length`` applies to
    B-SVRG and SARAH and defaults to n. ``cold_start`` makes SARGE skip the
    initial full gradient.
    """

    name: str
    theta: float = 1.0
    epoch_length: int | None = None
    cold_start: bool = False

    def __post_init__(self):
        if self.name not in NAMES:
            raise ValueError(f"unknown estimator {self.name!r}; expected one of {NAMES}")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.epoch_length is not None and self.epoch_length < 1:
            raise ValueError("epoch length must be >= 1")

    def resolved_epoch_length(self, n):
        return self.epoch_length if self.epoch_length is not None else n

    @property
    def label(self):
        if self.name in ("bsaga", "bsvrg"):
            return f"{self.name}_theta{self.theta:g}"
        return self.name

    def build(self, objective, x0):
        x0 = np.asarray(x0, dtype=float)
        if self.name == "sgd":
            return Sgd(objective, x0)
        if self.name == "bsaga":
            return BSaga(objective, x0, self.theta)
        m = self.resolved_epoch_length(objective.n)
        if self.name == "bsvrg":
            return BSvrg(objective, x0, self.theta, m)
        if self.name == "sarah":
            return Sarah(objective, x0, m)
        return Sarge(objective, x0, cold_start=self.cold_start)


class Estimator:
    name = "base"

    def __init__(self, objective, x0):
        if x0.shape != (objective.p,):
            raise ValueError(f"x0 has shape {x0.shape}, expected ({objective.p},)")
        self.objective = objective
        self.n = objective.n
        self.step_index = 0
        self.oracle_calls = 0

    def _grad(self, i, x):
        self.oracle_calls += 1
        return self.objective.component_gradient(i, x)

    def _full(self, x):
        self.oracle_calls += self.n
        return self.objective.full_gradient(x)

    def next_estimate(self, x, j):
        if not 0 <= j < self.n:
            raise IndexError(f"sample index {j} out of range [0, {self.n})")
        if x.shape != (self.objective.p,):
            raise ValueError(f"point has shape {x.shape}, expected ({self.objective.p},)")
        v = self._estimate(x, j)
        self.step_index += 1
        return v

    def _estimate(self, x, j):
        raise NotImplementedError

    def clone(self):
        """Independent copy sharing only the (immutable) objective."""
        new = copy.copy(self)
        for key, value in vars(new).items():
            if isinstance(value, np.ndarray):
                setattr(new, key, value.copy())
        return new


class Sgd(Estimator):
    name = "sgd"

    def _estimate(self, x, j):
        return self._grad(j, x)


class BSaga(Estimator):
    """Biased SAGA: (g_j(x) - table[j]) / theta + mean(table).

    The table starts at zero and row j is overwritten with g_j(x) after use.
    """

    name = "bsaga"

    def __init__(self, objective, x0, theta=1.0):
        super().__init__(objective, x0)
        self.theta = float(theta)
        self.table = np.zeros((self.n, objective.p))
        self.table_mean = np.zeros(objective.p)

    def _estimate(self, x, j):
        g = self._grad(j, x)
        delta = g - self.table[j]
        v = delta / self.theta + self.table_mean
        self.table[j] = g
        if (self.step_index + 1) % self.n == 0:
            # periodic exact resync bounds drift of the running mean
            self.table_mean = self.table.mean(axis=0)
        else:
            self.table_mean += delta / self.n
        return v

    def memory(self, x):
        """Stored component gradients and their mean as used at point ``x``."""
        return self.table, self.table_mean


class _EpochEstimator(Estimator):
    def __init__(self, objective, x0, epoch_length):
        super().__init__(objective, x0)
        if epoch_length < 1:
            raise ValueError("epoch length must be >= 1")
        self.epoch_length = int(epoch_length)
        self.snapshot = x0.copy()

    @property
    def at_epoch_boundary(self):
        return self.step_index % self.epoch_length == 0

    def _needs_refresh(self, x):
        # the snapshot taken at construction serves step 0 when x is still x0
        return self.step_index > 0 or not np.array_equal(x, self.snapshot)


class BSvrg(_EpochEstimator):
    """Biased SVRG: (g_j(x) - g_j(snapshot)) / theta + grad f(snapshot).

    At every epoch boundary the snapshot moves to the current point and the
    full gradient is returned as the estimate.
    """

    name = "bsvrg"

    def __init__(self, objective, x0, theta=1.0, epoch_length=None):
        super().__init__(objective, x0, epoch_length or objective.n)
        self.theta = float(theta)
        self.snapshot_full_grad = self._full(x0)

    def _estimate(self, x, j):
        if self.at_epoch_boundary:
            if self._needs_refresh(x):
                self.snapshot = x.copy()
                self.snapshot_full_grad = self._full(x)
            return self.snapshot_full_grad.copy()
        return (self._grad(j, x) - self._grad(j, self.snapshot)) / self.theta + self.snapshot_full_grad

    def memory(self, x):
        if self.at_epoch_boundary and self._needs_refresh(x):
            return self.objective.component_gradients(x), self.objective.full_gradient(x)
        return self.objective.component_gradients(self.snapshot), self.snapshot_full_grad


class Sarah(_EpochEstimator):
    """SARAH: v_k = g_j(x_k) - g_j(x_{k-1}) + v_{k-1}, restarted from a full gradient every epoch."""

    name = "sarah"

    def __init__(self, objective, x0, epoch_length=None):
        super().__init__(objective, x0, epoch_length or objective.n)
        self.prev_point = x0.copy()
        self.prev_estimate = self._full(x0)

    def _estimate(self, x, j):
        if self.at_epoch_boundary:
            if self._needs_refresh(x):
                self.snapshot = x.copy()
                self.prev_estimate = self._full(x)
            self.prev_point = x.copy()
            return self.prev_estimate.copy()
        v = self._grad(j, x) - self._grad(j, self.prev_point) + self.prev_estimate
        self.prev_estimate = v
        self.prev_point = x.copy()
        return v.copy()


class Sarge(Estimator):
    """SARGE: a SAGA-style table of psi_i combined with a SARAH-style recursion.

    v_k = g_j(x_k) - psi[j] + mean(psi) - (1 - 1/n) (g_j(x_{k-1}) - v_{k-1})
    psi[j] <- g_j(x_k) - (1 - 1/n) g_j(x_{k-1})

    By default v_{-1} = grad f(x0) and x_{-1} = x0 (one full gradient at
    start-up, never again). With ``cold_start`` the first estimate is the
    plain stochastic gradient g_j(x0) and no full gradient is ever taken.
    """

    name = "sarge"

    def __init__(self, objective, x0, cold_start=False):
        super().__init__(objective, x0)
        self.cold_start = cold_start
        self.psi = np.zeros((self.n, objective.p))
        self.psi_mean = np.zeros(objective.p)
        self.prev_point = x0.copy()
        self.prev_estimate = None if cold_start else self._full(x0)
        self._decay = 1.0 - 1.0 / self.n

    def _estimate(self, x, j):
        c = self._decay
        if self.prev_estimate is None:
            g_now = self._grad(j, x)
            g_prev = g_now if np.array_equal(x, self.prev_point) else self._grad(j, self.prev_point)
            v = g_now
        else:
            g_now = self._grad(j, x)
            g_prev = self._grad(j, self.prev_point)
            v = g_now - self.psi[j] + self.psi_mean - c * (g_prev - self.prev_estimate)
        new_psi = g_now - c * g_prev
        if (self.step_index + 1) % self.n == 0:
            self.psi[j] = new_psi
            self.psi_mean = self.psi.mean(axis=0)
        else:
            self.psi_mean += (new_psi - self.psi[j]) / self.n
            self.psi[j] = new_psi
        self.prev_estimate = v
        self.prev_point = x.copy()
        return v.copy()


def conditional_estimates(estimator, x):
    """Estimates for every possible sample j at point ``x``, computed on clones."""
    return np.array([estimator.clone().next_estimate(x, j) for j in range(estimator.n)])


def conditional_mean(estimator, x):
    """E_k[estimate] by enumerating all n equally likely samples."""
    return conditional_estimates(estimator, x).mean(axis=0)


def conditional_mse(estimator, x):
    """E_k ||estimate - grad f(x)||^2 by enumeration."""
    diff = conditional_estimates(estimator, x) - estimator.objective.full_gradient(x)
    return float(np.mean(np.sum(diff * diff, axis=1)))
