"""Proximal stochastic gradient descent with biased and recursive variance-reduced estimators."""

from .dataset import LabeledDataset, load_libsvm, parse_libsvm, rescale_features
from .estimators import EstimatorSpec
from .objective import FiniteSumObjective
from .regularizer import L1, L2Sq, NonnegBall, Zero
from .solver import SolverConfig, generalized_gradient, reference_solution, run, theory_step_size

__all__ = [
    "EstimatorSpec",
    "FiniteSumObjective",
    "L1",
    "L2Sq",
    "LabeledDataset",
    "NonnegBall",
    "SolverConfig",
    "Zero",
    "generalized_gradient",
    "load_libsvm",
    "parse_libsvm",
    "reference_solution",
    "rescale_features",
    "run",
    "theory_step_size",
]
