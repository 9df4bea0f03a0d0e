"""Proximal stochastic gradient descent driven by a pluggable estimator.

    x_{k+1} = prox_{eta g}(x_k - eta * v_k)

plus theory step sizes, the generalized gradient map and deterministic
proximal gradient descent for reference solutions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .estimators import EstimatorSpec
from .rng import SplitMix64

log = logging.getLogger(__name__)

CONVEX = "convex"
STRONGLY_CONVEX = "strongly_convex"
NONCONVEX = "nonconvex"
REGIMES = (CONVEX, STRONGLY_CONVEX, NONCONVEX)

DIVERGENCE_NORM = 1e12


class DivergenceError(RuntimeError):
    """The iterates blew up, usually because the step size is too large."""

    def __init__(self, iteration, norm):
        self.iteration = iteration
        self.norm = norm
        super().__init__(
            f"iterate diverged at k={iteration} (||x|| = {norm:.3g}); step size too large?"
        )

    def __reduce__(self):
        return (DivergenceError, (self.iteration, self.norm))


def theory_step_size(spec, regime, n, L, mu=0.0):
    """Constant step size prescribed by the convergence analysis.

    Covers B-SAGA, B-SVRG, SARAH and SARGE in the convex, strongly convex and
    non-convex regimes. SGD has no such step size.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    if not L > 0:
        raise ValueError("Lipschitz constant must be positive")
    if regime == STRONGLY_CONVEX and not mu > 0:
        raise ValueError("strongly convex regime needs mu > 0")
    theta = spec.theta
    m = spec.resolved_epoch_length(n)

    if spec.name == "bsaga":
        root = math.sqrt(n * (2 * n + 1))
        if regime == NONCONVEX:
            if theta <= 2:
                return theta / (2 * L * root)
            return 1.0 / (2 * L * (1 - 1 / theta) * root)
        if theta < 1:
            raise ValueError("convex B-SAGA step size needs theta >= 1")
        if theta <= 2:
            eta = 1.0 / (L * (1 + 6 / theta * root))
        else:
            eta = 1.0 / (L * (1 + 6 * (1 - 1 / theta) * root))
        return min(eta, 1.0 / (4 * mu * n)) if regime == STRONGLY_CONVEX else eta

    if spec.name == "bsvrg":
        if regime == NONCONVEX:
            root = math.sqrt(3 * m * (m + 1))
            if theta <= 2:
                return math.sqrt(2) * theta / (2 * L * root)
            return math.sqrt(2) * theta / (2 * L * (1 - 1 / theta) * root)
        if theta < 1:
            raise ValueError("convex B-SVRG step size needs theta >= 1")
        root = math.sqrt(6 * m * (m + 1))
        if theta <= 2:
            eta = 1.0 / (L * (1 + 3 / theta * root))
        else:
            eta = 1.0 / (L * (1 + 3 * (1 - 1 / theta) * root))
        return min(eta, 1.0 / (2 * mu)) if regime == STRONGLY_CONVEX else eta

    if spec.name == "sarah":
        if regime == CONVEX:
            return 1.0 / (L * (4 * math.sqrt(2 * m) + 1))
        if regime == STRONGLY_CONVEX:
            return min(1.0 / (3 * L * (4 * math.sqrt(2 * m) + 1)), 1.0 / (mu * m))
        return 1.0 / (L * math.sqrt(2 * m))

    if spec.name == "sarge":
        root = math.sqrt(3 * (n + 13))
        if regime == CONVEX:
            return 1.0 / (L * (16 * root + 1))
        if regime == STRONGLY_CONVEX:
            return min(1.0 / (3 * L * (16 * root + 1)), 1.0 / (4 * mu * n))
        return 1.0 / (4 * L * root)

    raise ValueError(f"no theory step size for estimator {spec.name!r}")


def generalized_gradient(objective, regularizer, x, eta):
    """(x - prox_{eta g}(x - eta grad f(x))) / eta."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    return (x - regularizer.prox(x - eta * objective.full_gradient(x), eta)) / eta


def prox_step(estimator, regularizer, x, j, eta):
    """One iteration: returns ``(x_next, estimate)`` and advances the estimator."""
    v = estimator.next_estimate(x, j)
    return regularizer.prox(x - eta * v, eta), v


@dataclass
class SolverConfig:
    estimator: EstimatorSpec
    step_size: float | None = None
    regime: str | None = None
    max_iterations: int = 1000
    record_every: int | None = None
    seed: int = 0
    x0: np.ndarray | None = None

    def resolve_step(self, objective, regularizer):
        if self.step_size is not None:
            eta = float(self.step_size)
        elif self.regime is not None:
            eta = theory_step_size(
                self.estimator, self.regime, objective.n, objective.lipschitz,
                regularizer.strong_convexity,
            )
        else:
            raise ValueError("either a fixed step size or a regime is required")
        if not (eta > 0 and math.isfinite(eta)):
            raise ValueError(f"step size must be positive, got {eta}")
        return eta


@dataclass
class Checkpoint:
    iteration: int
    oracle_calls: int
    objective: float
    gap: float
    avg_gap: float
    dist_sq: float
    gen_grad_norm: float


@dataclass
class RunTrajectory:
    step_size: float
    checkpoints: list = field(default_factory=list)
    final_x: np.ndarray | None = None
    average_x: np.ndarray | None = None

    def column(self, name):
        return np.array([getattr(c, name) for c in self.checkpoints])

    def min_gen_grad_norm(self):
        return min(c.gen_grad_norm for c in self.checkpoints)

    def sampled_gen_grad_norm(self, seed):
        """Generalized-gradient norm at a uniformly drawn checkpoint."""
        return self.checkpoints[SplitMix64(seed).index(len(self.checkpoints))].gen_grad_norm


@dataclass
class ReferenceSolution:
    x_star: np.ndarray
    f_star: float
    residual: float
    converged: bool
    iterations: int


def composite_value(objective, regularizer, x):
    return objective.value(x) + regularizer.value(x)


def run(objective, regularizer, config, reference=None):
    """Run proximal SGD and record metrics every ``record_every`` iterations.

    Checkpoints always include k = 0 and the final iterate. Without a
    reference solution the gap and distance columns are NaN.
    """
    eta = config.resolve_step(objective, regularizer)
    n = objective.n
    x = np.zeros(objective.p) if config.x0 is None else np.array(config.x0, dtype=float)
    if x.shape != (objective.p,):
        raise ValueError("x0 has the wrong dimension")
    stride = config.record_every or n
    total = int(config.max_iterations)
    estimator = config.estimator.build(objective, x)
    rng = SplitMix64(config.seed)
    f_star = reference.f_star if reference is not None else math.nan
    x_star = reference.x_star if reference is not None else None

    traj = RunTrajectory(step_size=eta)
    x_avg = x.copy()

    def record(k):
        value = composite_value(objective, regularizer, x)
        avg_value = composite_value(objective, regularizer, x_avg)
        dist = float(np.sum((x - x_star) ** 2)) if x_star is not None else math.nan
        gnorm = float(np.linalg.norm(generalized_gradient(objective, regularizer, x, eta / 2)))
        traj.checkpoints.append(
            Checkpoint(k, estimator.oracle_calls, value, value - f_star, avg_value - f_star, dist, gnorm)
        )

    record(0)
    for k in range(total):
        x, _ = prox_step(estimator, regularizer, x, rng.index(n), eta)
        sq = float(x @ x)
        if not sq <= DIVERGENCE_NORM**2:  # also catches NaN
            raise DivergenceError(k + 1, math.sqrt(sq))
        x_avg += (x - x_avg) / (k + 1)
        if (k + 1) % stride == 0 or k + 1 == total:
            record(k + 1)
    traj.final_x = x
    traj.average_x = x_avg
    return traj


def reference_solution(objective, regularizer, tol=1e-12, max_iters=100_000, step_size=None, x0=None):
    """Deterministic proximal gradient descent until ||G_eta(x)|| <= tol.

    The default step is 1/L. If the budget runs out the result is returned
    with ``converged=False``.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    eta = step_size if step_size is not None else 1.0 / objective.lipschitz
    x = np.zeros(objective.p) if x0 is None else regularizer.prox(np.array(x0, dtype=float), eta)
    residual = math.inf
    it = 0
    for it in range(1, max_iters + 1):
        x_next = regularizer.prox(x - eta * objective.full_gradient(x), eta)
        residual = float(np.linalg.norm(x - x_next)) / eta
        x = x_next
        if residual <= tol:
            break
    residual = float(np.linalg.norm(generalized_gradient(objective, regularizer, x, eta)))
    converged = residual <= tol
    if not converged:
        log.warning("reference solve stopped at residual %.3g > tol %.3g", residual, tol)
    return ReferenceSolution(x, composite_value(objective, regularizer, x), residual, converged, it)
