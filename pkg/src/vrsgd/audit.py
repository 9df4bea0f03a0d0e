"""Independent checks of the estimator and prox machinery.

Everything here works on exact expectations: the sampling randomness is
enumerated, never simulated. Enumeration drives the production
``prox_step`` on cloned estimator states, so the checks certify the code
path that the solver actually runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import BSaga, BSvrg, Sarah, Sarge, Sgd, conditional_estimates
from .regularizer import L1, L2Sq, NonnegBall, Zero
from .solver import prox_step

MAX_BRANCHES = 1024


@dataclass(frozen=True)
class BmseConstants:
    """Bounded-MSE, memory-bias and recursive-bias constants of one estimator.

    Fields that do not apply to an estimator are ``None``.
    """

    M1: float
    M2: float
    rho_M: float
    rho_F: float
    m: int
    rho_B: float | None = None
    nu: float | None = None
    B1: float | None = None

    @property
    def big_theta(self):
        return (self.M1 * self.rho_F + 2 * self.M2) / (self.rho_M * self.rho_F)

    def nonconvex_step(self, L):
        """General non-convex step size for an estimator with these constants."""
        t = self.big_theta
        return (math.sqrt(16 * t + 1) - 1) / (16 * L * t)


def bmse_constants(spec, n):
    theta = spec.theta
    m = spec.resolved_epoch_length(n)
    if spec.name == "bsaga":
        scale = 1 / theta**2 if theta <= 2 else (1 - 1 / theta) ** 2
        return BmseConstants(
            M1=(2 * n + 1) * scale, M2=0.0, rho_M=1 / (2 * n), rho_F=1.0, m=1,
            B1=2 * n * (2 * n + 1),
        )
    if spec.name == "bsvrg":
        scale = 1 / theta**2 if theta <= 2 else (1 - 1 / theta) ** 2
        return BmseConstants(
            M1=3 * m * (m + 1) * scale, M2=0.0, rho_M=1.0, rho_F=1.0, m=m,
            B1=3 * m * (m + 1),
        )
    if spec.name == "sarah":
        return BmseConstants(M1=m, M2=0.0, rho_M=1.0, rho_F=1.0, m=m, rho_B=0.0, nu=m)
    if spec.name == "sarge":
        return BmseConstants(
            M1=12.0, M2=39 / n, rho_M=1 / (4 * n), rho_F=1 / (2 * n), m=1,
            rho_B=1 / n, nu=math.inf,
        )
    raise ValueError(f"{spec.name!r} does not satisfy the bounded-MSE property")


def fd_gradient_check(objective, x, h=1e-5, components=None):
    """Largest relative error of central differences against component gradients.

    Errors are relative to ``max(1, |analytic|)`` per coordinate.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    worst = 0.0
    for i in range(objective.n) if components is None else components:
        grad = objective.component_gradient(i, x)
        for k in range(objective.p):
            e = np.zeros(objective.p)
            e[k] = h
            fd = (objective.component_value(i, x + e) - objective.component_value(i, x - e)) / (2 * h)
            worst = max(worst, abs(fd - grad[k]) / max(1.0, abs(grad[k])))
    return worst


def predicted_bias(estimator, x, x_prev=None, est_prev=None):
    """grad f(x) - E_k[estimate] as the bias structure of each estimator predicts it.

    Memory-biased (B-SAGA, B-SVRG): (1 - 1/theta)(grad f(x) - mean of stored gradients).
    Recursively biased: (1 - rho_B)(grad f(x_{k-1}) - v_{k-1}) with rho_B = 0
    for SARAH inside an epoch and 1/n for SARGE; zero at full-gradient steps.
    """
    obj = estimator.objective
    if isinstance(estimator, Sgd):
        return np.zeros(obj.p)
    if isinstance(estimator, (BSaga, BSvrg)):
        _, mean = estimator.memory(x)
        return (1 - 1 / estimator.theta) * (obj.full_gradient(x) - mean)
    if isinstance(estimator, Sarah) and estimator.at_epoch_boundary:
        return np.zeros(obj.p)
    if isinstance(estimator, Sarge) and estimator.prev_estimate is None:
        return np.zeros(obj.p)
    if isinstance(estimator, (Sarah, Sarge)):
        x_prev = estimator.prev_point if x_prev is None else x_prev
        est_prev = estimator.prev_estimate if est_prev is None else est_prev
        decay = 1.0 if isinstance(estimator, Sarah) else 1 - 1 / estimator.n
        return decay * (obj.full_gradient(x_prev) - est_prev)
    raise TypeError(f"no bias model for {type(estimator).__name__}")


def enumerated_bias(estimator, x):
    return estimator.objective.full_gradient(x) - conditional_estimates(estimator, x).mean(axis=0)


def bias_identity_residual(estimator, x, x_prev=None, est_prev=None):
    """|| predicted bias - enumerated bias ||."""
    diff = predicted_bias(estimator, x, x_prev, est_prev) - enumerated_bias(estimator, x)
    return float(np.linalg.norm(diff))


def memory_mse_bound(estimator, x):
    """Closed-form conditional MSE of B-SAGA / B-SVRG.

    (1/(n theta^2)) sum_i ||grad f_i(x) - stored_i||^2
        + (1 - 2/theta) ||grad f(x) - mean(stored)||^2
    """
    obj = estimator.objective
    stored, mean = estimator.memory(x)
    comp = obj.component_gradients(x) - stored
    drift = obj.full_gradient(x) - mean
    theta = estimator.theta
    return float(np.sum(comp * comp)) / (obj.n * theta**2) + (1 - 2 / theta) * float(drift @ drift)


def prox_optimality_residual(regularizer, y, eta):
    """Residual of the optimality condition  y - prox(y) in eta * subdiff g(prox(y)).

    For the ball-orthant indicator this is the worst violation of the
    variational inequality <y - y+, z - y+> <= 0 over all feasible z (computed
    through the support function of C) plus the infeasibility of y+.
    """
    y = np.asarray(y, dtype=float)
    y_plus = regularizer.prox(y, eta)
    d = y - y_plus
    if isinstance(regularizer, Zero):
        return float(np.linalg.norm(d))
    if isinstance(regularizer, L2Sq):
        return float(np.linalg.norm(d - eta * regularizer.beta * y_plus))
    if isinstance(regularizer, L1):
        t = eta * regularizer.beta
        active = y_plus != 0
        res = np.where(active, np.abs(d - t * np.sign(y_plus)), np.maximum(np.abs(d) - t, 0.0))
        return float(res.max()) if res.size else 0.0
    if isinstance(regularizer, NonnegBall):
        infeasible = max(np.linalg.norm(y_plus) - 1.0, 0.0) + max(-float(y_plus.min()), 0.0)
        sup = float(np.linalg.norm(np.maximum(d, 0.0)))  # max over z in C of <d, z>
        return infeasible + max(sup - float(d @ y_plus), 0.0)
    raise TypeError(f"no optimality check for {type(regularizer).__name__}")


@dataclass
class TrajectoryAudit:
    """Exact per-step expectations over every sampling sequence.

    ``mse[k]``        E ||v_k - grad f(x_k)||^2
    ``step_sq[k]``    E ||x_{k+1} - x_k||^2
    ``grad_diff[k]``  E sum_i ||grad f_i(x_{k+1}) - grad f_i(x_k)||^2
    ``memory_sq[k]``  E (1/n) sum_i ||grad f_i(x_k) - stored_i||^2 (memory estimators, else NaN)
    The residual fields hold the worst value over all enumerated nodes.
    """

    mse: np.ndarray
    step_sq: np.ndarray
    grad_diff: np.ndarray
    memory_sq: np.ndarray
    decomposition_residual: float
    bias_residual: float
    memory_mse_residual: float
    branches: int


def trajectory_expectation(objective, regularizer, spec, x0, eta, steps):
    """Enumerate all n**steps sample paths of proximal SGD from ``x0``.

    Every path has weight n**-steps. Sums run in depth-first order so the
    result is reproducible bit for bit.
    """
    n = objective.n
    branches = n**steps
    if branches > MAX_BRANCHES:
        raise ValueError(f"{branches} branches exceed the enumeration budget of {MAX_BRANCHES}")
    x0 = np.asarray(x0, dtype=float)
    mse = np.zeros(steps)
    step_sq = np.zeros(steps)
    grad_diff = np.zeros(steps)
    memory = spec.name in ("bsaga", "bsvrg")
    memory_sq = np.zeros(steps) if memory else np.full(steps, math.nan)
    worst = {"decomp": 0.0, "bias": 0.0, "memory": 0.0 if memory else math.nan}

    def visit(estimator, x, weight, depth):
        if depth == steps:
            return
        grad = objective.full_gradient(x)
        comp_x = objective.component_gradients(x)
        predicted = predicted_bias(estimator, x)
        if memory:
            stored, _ = estimator.memory(x)
            diff = comp_x - stored
            memory_sq[depth] += weight * float(np.sum(diff * diff)) / n
            closed_form = memory_mse_bound(estimator, x)

        children = []
        for j in range(n):
            child = estimator.clone()
            x_next, v = prox_step(child, regularizer, x, j, eta)
            children.append((child, x_next, v))
        estimates = np.array([v for _, _, v in children])
        mean = estimates.mean(axis=0)
        err = estimates - grad
        node_mse = float(np.mean(np.sum(err * err, axis=1)))
        spread = estimates - mean
        node_var = float(np.mean(np.sum(spread * spread, axis=1)))
        bias = grad - mean

        worst["decomp"] = max(worst["decomp"], abs(node_mse - (float(bias @ bias) + node_var)))
        worst["bias"] = max(worst["bias"], float(np.linalg.norm(bias - predicted)))
        if memory:
            worst["memory"] = max(worst["memory"], abs(node_mse - closed_form))
        mse[depth] += weight * node_mse

        child_weight = weight / n
        for child, x_next, _ in children:
            dx = x_next - x
            step_sq[depth] += child_weight * float(dx @ dx)
            dg = objective.component_gradients(x_next) - comp_x
            grad_diff[depth] += child_weight * float(np.sum(dg * dg))
            visit(child, x_next, child_weight, depth + 1)

    visit(spec.build(objective, x0), x0, 1.0, 0)
    return TrajectoryAudit(
        mse=mse, step_sq=step_sq, grad_diff=grad_diff, memory_sq=memory_sq,
        decomposition_residual=worst["decomp"], bias_residual=worst["bias"],
        memory_mse_residual=worst["memory"], branches=branches,
    )


def sarah_epoch_bound_slack(audit, epoch_length, n):
    """Smallest slack of  sum_epoch MSE <= (m/n) sum_epoch sum_i E||grad f_i(x_{k+1}) - grad f_i(x_k)||^2.

    A trailing partial epoch is checked over the steps that were enumerated.
    """
    steps = len(audit.mse)
    slack = math.inf
    for start in range(0, steps, epoch_length):
        stop = min(start + epoch_length, steps)
        lhs = float(np.sum(audit.mse[start:stop]))
        rhs = epoch_length / n * float(np.sum(audit.grad_diff[start:stop]))
        slack = min(slack, rhs - lhs)
    return slack


def saga_recursion_slack(audit, n, theta):
    """Smallest slack of the one-step B-SAGA bounds, for k >= 1.

    With M_k = c * E (1/n) sum_i ||grad f_i(x_k) - stored_i||^2, where
    c = 1/theta^2 for theta <= 2 and (1 - 1/theta)^2 otherwise:
        E||v_k - grad f(x_k)||^2 <= M_k
        M_k <= (1 - 1/(2n)) M_{k-1} + (M1/n) sum_i E||grad f_i(x_k) - grad f_i(x_{k-1})||^2
    with M1 = (2n + 1) c.
    """
    c = 1 / theta**2 if theta <= 2 else (1 - 1 / theta) ** 2
    M = c * audit.memory_sq
    M1 = (2 * n + 1) * c
    rho_M = 1 / (2 * n)
    slack = math.inf
    for k in range(1, len(M)):
        slack = min(slack, M[k] - audit.mse[k])
        slack = min(slack, (1 - rho_M) * M[k - 1] + M1 / n * audit.grad_diff[k - 1] - M[k])
    return slack
