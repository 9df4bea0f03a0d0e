"""Smooth finite-sum part f(x) = (1/n) sum_i f_i(x) with per-component oracles."""

from __future__ import annotations

import numpy as np

LEAST_SQUARES = "least_squares"
NEG_SQUARE = "neg_square"
KINDS = (LEAST_SQUARES, NEG_SQUARE)


class FiniteSumObjective:
    """Quadratic components built from the rows h_i of a dataset.

    ``least_squares``: f_i(x) = (h_i.x - l_i)^2, l_i the label unless ``targets`` is given
    ``neg_square``:    f_i(x) = -(h_i.x)^2

    Gradients are returned dense. When every row is fully populated the rows
    are kept as a dense matrix, otherwise each gradient only touches the
    support of h_i.
    """

    def __init__(self, data, kind=LEAST_SQUARES, targets=None):
        if kind not in KINDS:
            raise ValueError(f"unknown objective kind {kind!r}")
        self.kind = kind
        self.data = data
        self.n = data.n_samples
        self.p = data.n_features
        self._csr = data.to_csr()
        if kind == NEG_SQUARE:
            self._targets = np.zeros(self.n)
        else:
            self._targets = np.asarray(data.labels if targets is None else targets, dtype=float)
            if self._targets.shape != (self.n,):
                raise ValueError("one target per sample required")
        self._sign = 2.0 if kind == LEAST_SQUARES else -2.0
        self._dense = self._csr.toarray() if self._csr.nnz == self.n * self.p else None
        self._matrix = self._dense if self._dense is not None else self._csr
        self._matrix_t = self._matrix.T.copy() if self._dense is not None else self._csr.T.tocsr()
        self._rows = [data.row(i) for i in range(self.n)]
        self.lipschitz = self.lipschitz_bound()

    def lipschitz_bound(self):
        """max_i 2 ||h_i||^2, the spectral norm of the largest component Hessian."""
        sq_norms = np.asarray(self._csr.multiply(self._csr).sum(axis=1)).ravel()
        bound = 2.0 * float(sq_norms.max()) if self.n else 0.0
        if bound <= 0.0:
            raise ValueError("all-zero dataset: Lipschitz constant is zero")
        return bound

    def _check_index(self, i):
        if not 0 <= i < self.n:
            raise IndexError(f"component index {i} out of range [0, {self.n})")

    def component_value(self, i, x):
        self._check_index(i)
        idx, vals = self._rows[i]
        r = vals @ x[idx] - self._targets[i]
        return r * r if self.kind == LEAST_SQUARES else -r * r

    def component_gradient(self, i, x):
        self._check_index(i)
        if self._dense is not None:
            h = self._dense[i]
            return (self._sign * (h @ x - self._targets[i])) * h
        idx, vals = self._rows[i]
        grad = np.zeros(self.p)
        grad[idx] = (self._sign * (vals @ x[idx] - self._targets[i])) * vals
        return grad

    def component_gradients(self, x):
        """All n component gradients stacked as an (n, p) array."""
        coef = self._sign * (self._matrix @ x - self._targets)
        if self._dense is not None:
            return coef[:, None] * self._dense
        return self._csr.multiply(coef[:, None]).toarray()

    def full_gradient(self, x):
        coef = self._sign * (self._matrix @ x - self._targets)
        return (self._matrix_t @ coef) / self.n

    def value(self, x):
        r = self._matrix @ x - self._targets
        mean_sq = float(r @ r) / self.n
        return mean_sq if self.kind == LEAST_SQUARES else -mean_sq
