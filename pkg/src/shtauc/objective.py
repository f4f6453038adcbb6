"""Least-squares AUC objective.

The pairwise objective

    F(w) = 1/(n+ n-) * sum_{y_i=+1, y_j=-1} (1 - w.(x_i - x_j))^2

is rewritten as an average of per-sample terms built from the class means
(see :func:`erm_objective`), which makes minibatch gradients cost O(b d)
instead of touching every positive/negative pair.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError, DegenerateDataError, DimensionError
from .linalg import as_vector

__all__ = [
    "Dataset",
    "ClassMeans",
    "BlockPartition",
    "ErmProblem",
    "class_means",
    "make_blocks",
    "pairwise_objective",
    "erm_objective",
    "block_gradient",
    "full_gradient",
    "hessian_quadratic_form",
    "block_hessian_quadratic_form",
]


@dataclass(frozen=True)
class Dataset:
    """Dense design matrix with labels in {+1, -1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64, copy=True)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DimensionError(f"features must be 2-d, got shape {X.shape}")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DimensionError("labels must be 1-d with one entry per row")
        if not np.all(np.isfinite(X)):
            raise ArgumentError("features contain non-finite values")
        if y.size and not np.all((y == 1) | (y == -1)):
            raise ArgumentError("labels must be +1 or -1")
        y = y.astype(np.int8)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def d(self):
        return self.features.shape[1]

    @property
    def n_pos(self):
        return int(np.count_nonzero(self.labels == 1))

    @property
    def n_neg(self):
        return int(np.count_nonzero(self.labels == -1))

    @property
    def ratio(self):
        """Imbalance ratio n_pos / n."""
        return self.n_pos / self.n if self.n else float("nan")

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx])

    def require_both_classes(self):
        if self.n_pos == 0 or self.n_neg == 0:
            raise DegenerateDataError(
                f"need both classes, got n_pos={self.n_pos}, n_neg={self.n_neg}")


@dataclass(frozen=True)
class ClassMeans:
    mean_pos: np.ndarray
    mean_neg: np.ndarray


@dataclass(frozen=True)
class BlockPartition:
    """Disjoint index blocks covering range(n); only the last may be short."""

    blocks: tuple
    block_size: int
    n: int = field(default=0)

    @property
    def m(self):
        return len(self.blocks)


def class_means(data):
    data.require_both_classes()
    X, y = data.features, data.labels
    return ClassMeans(X[y == 1].mean(axis=0), X[y == -1].mean(axis=0))


def make_blocks(n, block_size, rng=None):
    """Cut ``range(n)`` (shuffled by ``rng`` if given) into contiguous blocks.

    Yields ``ceil(n / block_size)`` blocks; when ``block_size`` does not divide
    ``n`` the last block is shorter.
    """
    if not 1 <= block_size <= n:
        raise ArgumentError(f"block_size={block_size} outside [1, {n}]")
    order = np.arange(n) if rng is None else rng.permutation(n)
    blocks = tuple(order[i:i + block_size] for i in range(0, n, block_size))
    return BlockPartition(blocks, int(block_size), int(n))


class ErmProblem:
    """Precomputed per-sample terms of the reformulated objective.

    Each sample contributes ``c_i * (w.u_i)^2 + 1 + 2 w.delta + (w.delta)^2``
    where ``u_i`` is the sample centred at its own class mean, ``c_i`` is
    ``1/r`` for positives and ``1/(1-r)`` for negatives, and
    ``delta = mean_neg - mean_pos``.  ``r`` is the global imbalance ratio.
    """

    def __init__(self, data, means=None):
        data.require_both_classes()
        if means is None:
            means = class_means(data)
        r = data.ratio
        if not 0.0 < r < 1.0:
            raise DegenerateDataError(f"imbalance ratio r={r} must lie in (0, 1)")
        pos = data.labels == 1
        self.data = data
        self.means = means
        self.r = r
        self.centered = np.where(pos[:, None],
                                 data.features - means.mean_pos,
                                 data.features - means.mean_neg)
        self.weights = np.where(pos, 1.0 / r, 1.0 / (1.0 - r))
        self.delta = means.mean_neg - means.mean_pos

    @property
    def d(self):
        return self.data.d

    def _check(self, w):
        w = as_vector(w, "w")
        if w.size != self.d:
            raise DimensionError(f"vector has length {w.size}, expected {self.d}")
        return w

    def sample_losses(self, w):
        w = self._check(w)
        proj = self.centered @ w
        wd = w @ self.delta
        return self.weights * proj * proj + 1.0 + 2.0 * wd + wd * wd

    def objective(self, w):
        return float(np.mean(self.sample_losses(w)))

    def gradient(self, w, block=None):
        w = self._check(w)
        if block is None:
            U, c = self.centered, self.weights
        else:
            block = np.asarray(block, dtype=np.int64)
            if block.size == 0:
                raise ArgumentError("empty block")
            U, c = self.centered[block], self.weights[block]
        coef = c * (U @ w)
        wd = w @ self.delta
        grad = (2.0 / U.shape[0]) * (coef @ U)
        grad += (2.0 + 2.0 * wd) * self.delta
        return grad

    def hessian_form(self, v, block=None):
        """v' H v, with H the Hessian of the full (or one block's) objective."""
        v = self._check(v)
        if block is None:
            U, c = self.centered, self.weights
        else:
            block = np.asarray(block, dtype=np.int64)
            if block.size == 0:
                raise ArgumentError("empty block")
            U, c = self.centered[block], self.weights[block]
        proj = U @ v
        vd = v @ self.delta
        return float(2.0 * np.mean(c * proj * proj) + 2.0 * vd * vd)


def pairwise_objective(data, w):
    """Average squared pairwise loss over all positive/negative pairs.

    Straight double loop over pairs; cost O(n+ n- d).  Kept deliberately
    naive so it can serve as a reference for :func:`erm_objective`.
    """
    data.require_both_classes()
    w = as_vector(w, "w")
    if w.size != data.d:
        raise DimensionError(f"w has length {w.size}, expected {data.d}")
    X, y = data.features, data.labels
    pos = X[y == 1]
    neg = X[y == -1]
    total = 0.0
    for xi in pos:
        for xj in neg:
            margin = 1.0 - float(np.dot(w, xi - xj))
            total += margin * margin
    return total / (len(pos) * len(neg))


def erm_objective(data, means, w):
    return ErmProblem(data, means).objective(w)


def block_gradient(data, means, block, w):
    return ErmProblem(data, means).gradient(w, block)


def full_gradient(data, means, w):
    return ErmProblem(data, means).gradient(w)


def hessian_quadratic_form(data, means, v):
    """Exact curvature of F along ``v``.

    F is quadratic, so F(w + t v) = F(w) + t <grad F(w), v> + t^2/2 * result.
    """
    return ErmProblem(data, means).hessian_form(v)


def block_hessian_quadratic_form(data, means, block, v):
    return ErmProblem(data, means).hessian_form(v, block)
