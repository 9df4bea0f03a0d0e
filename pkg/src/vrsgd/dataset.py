"""LIBSVM-format datasets: parsing, label binarization and feature rescaling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse


class LibsvmParseError(ValueError):
    """Raised for malformed LIBSVM input; carries the 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Sparse rows in CSR layout plus binary labels.

    Feature indices are 0-based in memory and strictly increasing within each
    row. The arrays are marked read-only on construction.
    """

    indptr: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    labels: np.ndarray
    n_features: int

    def __post_init__(self):
        for name in ("indptr", "indices", "values", "labels"):
            arr = np.array(getattr(self, name), copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.indptr[0] != 0 or self.indptr[-1] != len(self.indices):
            raise ValueError("inconsistent indptr")
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values differ in length")
        if len(self.labels) != len(self.indptr) - 1:
            raise ValueError("one label per row required")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("feature values must be finite")

    @property
    def n_samples(self):
        return len(self.labels)

    def row(self, i):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return self.indices[lo:hi], self.values[lo:hi]

    def to_csr(self):
        return sparse.csr_matrix(
            (self.values, self.indices, self.indptr),
            shape=(self.n_samples, self.n_features),
        )

    def to_dense(self):
        return self.to_csr().toarray()

    def to_libsvm(self):
        """Serialize back to LIBSVM text (1-based indices, round-trip exact floats)."""
        lines = []
        for i in range(self.n_samples):
            idx, vals = self.row(i)
            label = "+1" if self.labels[i] > 0 else "-1"
            feats = " ".join(f"{j + 1}:{v!r}" for j, v in zip(idx.tolist(), vals.tolist()))
            lines.append(f"{label} {feats}".rstrip())
        return "\n".join(lines) + "\n"

    def same_as(self, other):
        return (
            self.n_features == other.n_features
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.values, other.values)
            and np.array_equal(self.labels, other.labels)
        )

    @classmethod
    def from_dense(cls, features, labels):
        csr = sparse.csr_matrix(np.asarray(features, dtype=float))
        csr.sort_indices()
        return cls(
            indptr=csr.indptr.astype(np.int64),
            indices=csr.indices.astype(np.int64),
            values=csr.data.astype(float),
            labels=np.array([binarize_labels(v) for v in labels], dtype=float),
            n_features=csr.shape[1],
        )


def binarize_labels(raw_label):
    """Map any raw label to {-1, +1}: positive values to +1, everything else to -1."""
    return 1.0 if raw_label > 0 else -1.0


def _parse_float(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise LibsvmParseError(f"malformed number {token!r}", lineno) from None
    if not math.isfinite(value):
        raise LibsvmParseError(f"non-finite value {token!r}", lineno)
    return value


def parse_libsvm(text):
    """Parse LIBSVM text (``str`` or ``bytes``) into a :class:`LabeledDataset`.

    Each non-empty line is ``<label> <idx>:<val> ...`` with ``idx >= 1``.
    Indices within a line may come in any order but must not repeat.
    """
    if isinstance(text, (bytes, bytearray)):
        text = text.decode("utf-8")

    indptr = [0]
    indices = []
    values = []
    labels = []
    n_features = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        labels.append(binarize_labels(_parse_float(tokens[0], lineno)))
        row = {}
        for token in tokens[1:]:
            idx_str, sep, val_str = token.partition(":")
            if not sep:
                raise LibsvmParseError(f"expected idx:value, got {token!r}", lineno)
            try:
                idx = int(idx_str)
            except ValueError:
                raise LibsvmParseError(f"malformed index {idx_str!r}", lineno) from None
            if idx < 1:
                raise LibsvmParseError(f"index must be >= 1, got {idx}", lineno)
            if idx in row:
                raise LibsvmParseError(f"duplicate index {idx}", lineno)
            row[idx] = _parse_float(val_str, lineno)
        for idx in sorted(row):
            indices.append(idx - 1)
            values.append(row[idx])
            n_features = max(n_features, idx)
        indptr.append(len(indices))

    if not labels:
        raise LibsvmParseError("empty LIBSVM input")
    return LabeledDataset(
        indptr=np.array(indptr, dtype=np.int64),
        indices=np.array(indices, dtype=np.int64),
        values=np.array(values, dtype=float),
        labels=np.array(labels, dtype=float),
        n_features=n_features,
    )


def load_libsvm(path):
    return parse_libsvm(Path(path).read_bytes())


def rescale_features(data):
    """Divide every feature column by its largest absolute value.

    All-zero columns are left untouched, so zeros stay zeros and the result
    lies in [-1, 1].
    """
    scale = np.zeros(data.n_features)
    np.maximum.at(scale, data.indices, np.abs(data.values))
    scale[scale == 0.0] = 1.0
    return LabeledDataset(
        indptr=data.indptr,
        indices=data.indices,
        values=data.values / scale[data.indices],
        labels=data.labels,
        n_features=data.n_features,
    )


def make_synthetic(n_samples, n_features, seed=0):
    """Dense synthetic classification data, rescaled to [-1, 1].

    Features are uniform on [-1, 1]; labels are the sign of a random linear
    score plus noise.
    """
    rng = np.random.default_rng(seed)
    features = rng.uniform(-1.0, 1.0, size=(n_samples, n_features))
    weights = rng.standard_normal(n_features)
    score = features @ weights + 0.5 * rng.standard_normal(n_samples)
    return rescale_features(LabeledDataset.from_dense(features, np.sign(score)))
