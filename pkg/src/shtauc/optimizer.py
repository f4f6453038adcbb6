"""Stochastic hard-thresholding training loops.

Both methods run the same recurrence

    w_{t+1} = H_k(w_t - step * grad f_{B_{i_t}}(w_t)),

with blocks fixed up front and ``i_t`` drawn uniformly (with replacement)
each iteration.  ``sht_auc_train`` uses the reformulated AUC objective;
``stoiht_logistic_train`` uses mean logistic loss on the same blocks.
"""
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.special import expit

from .errors import ArgumentError, DimensionError, DivergenceError
from .linalg import as_vector, hard_threshold
from .metrics import auc_score
from .objective import ErmProblem, make_blocks

__all__ = [
    "OptimizerConfig",
    "TraceRecord",
    "TrainTrace",
    "LogisticProblem",
    "sht_auc_train",
    "stoiht_logistic_train",
    "DIVERGENCE_LIMIT",
]

DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class OptimizerConfig:
    sparsity_k: int
    step_size: float
    block_size: int
    iterations: int
    seed: int = 0
    eval_every: Optional[int] = None  # None: once per epoch (m iterations)

    def validate(self, n, d):
        if not 1 <= self.sparsity_k <= d:
            raise ArgumentError(f"sparsity_k={self.sparsity_k} outside [1, d={d}]")
        if not 1 <= self.block_size <= n:
            raise ArgumentError(f"block_size={self.block_size} outside [1, n={n}]")
        if not (self.step_size > 0 and np.isfinite(self.step_size)):
            raise ArgumentError(f"step_size must be positive, got {self.step_size}")
        if self.iterations < 0:
            raise ArgumentError("iterations must be non-negative")
        if self.eval_every is not None and self.eval_every < 1:
            raise ArgumentError("eval_every must be positive")
        if not 0 <= self.seed < 2 ** 64:
            raise ArgumentError("seed must be a 64-bit unsigned integer")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    epoch: float
    objective: float
    test_auc: Optional[float]
    sparsity: int
    distance: Optional[float]


@dataclass
class TrainTrace:
    method: str
    records: list = field(default_factory=list)
    block_counts: Optional[np.ndarray] = None
    num_blocks: int = 0

    @property
    def epochs(self):
        return np.array([r.epoch for r in self.records])

    @property
    def aucs(self):
        return np.array([np.nan if r.test_auc is None else r.test_auc
                         for r in self.records])

    @property
    def objectives(self):
        return np.array([r.objective for r in self.records])

    @property
    def distances(self):
        return np.array([np.nan if r.distance is None else r.distance
                         for r in self.records])

    def best_auc_record(self):
        """Record with the highest test AUC (earliest on ties), or None."""
        scored = [r for r in self.records if r.test_auc is not None]
        if not scored:
            return None
        return max(scored, key=lambda r: (r.test_auc, -r.iteration))

    def to_dict(self):
        return {
            "method": self.method,
            "num_blocks": self.num_blocks,
            "block_counts": None if self.block_counts is None
            else self.block_counts.tolist(),
            "records": [asdict(r) for r in self.records],
        }


class LogisticProblem:
    """Mean logistic loss log(1 + exp(-y w.x)) over the data or a block."""

    def __init__(self, data):
        data.require_both_classes()
        self.data = data
        self.X = data.features
        self.y = data.labels.astype(np.float64)

    @property
    def d(self):
        return self.data.d

    def objective(self, w):
        margins = self.y * (self.X @ w)
        return float(np.mean(np.logaddexp(0.0, -margins)))

    def gradient(self, w, block=None):
        if block is None:
            X, y = self.X, self.y
        else:
            X, y = self.X[block], self.y[block]
        coef = -y * expit(-y * (X @ w))
        return (coef @ X) / X.shape[0]


def _train(problem, method, data, config, w0, test, w_star):
    n, d = data.n, data.d
    config.validate(n, d)
    if w0 is None:
        w = np.zeros(d)
    else:
        w = as_vector(w0, "w0").copy()
        if w.size != d:
            raise DimensionError(f"w0 has length {w.size}, expected {d}")
    if np.count_nonzero(w) > config.sparsity_k:
        raise ArgumentError("w0 has more than sparsity_k nonzeros")
    if w_star is not None:
        w_star = as_vector(w_star, "w_star")
        if w_star.size != d:
            raise DimensionError("w_star has the wrong length")

    rng = np.random.default_rng(config.seed)
    partition = make_blocks(n, config.block_size, rng)
    m = partition.m
    eval_every = config.eval_every or m
    counts = np.zeros(m, dtype=np.int64)
    trace = TrainTrace(method=method, block_counts=counts, num_blocks=m)

    def record(t):
        obj = problem.objective(w)
        if not np.isfinite(obj) or abs(obj) > DIVERGENCE_LIMIT:
            raise DivergenceError(t, obj)
        auc = None if test is None else auc_score(test.features @ w, test.labels)
        dist = None if w_star is None else float(np.linalg.norm(w - w_star))
        trace.records.append(TraceRecord(
            t, t / m, obj, auc, int(np.count_nonzero(w)), dist))

    record(0)
    k, step, blocks = config.sparsity_k, config.step_size, partition.blocks
    for t in range(config.iterations):
        i = int(rng.integers(m))
        counts[i] += 1
        v = w - step * problem.gradient(w, blocks[i])
        if not np.all(np.isfinite(v)):
            raise DivergenceError(t + 1, float("nan"))
        w = hard_threshold(v, k)
        if (t + 1) % eval_every == 0 or t + 1 == config.iterations:
            record(t + 1)
    return w, trace


def sht_auc_train(data, config, w0=None, test=None, w_star=None):
    """Train a k-sparse linear scorer by stochastic hard thresholding on the
    least-squares AUC objective.

    Parameters
    ----------
    data : Dataset
        Training data with both classes present.
    config : OptimizerConfig
    w0 : array_like, optional
        Starting point with at most ``config.sparsity_k`` nonzeros; zeros if
        omitted.
    test : Dataset, optional
        Held-out data; its AUC is logged in every trace record.
    w_star : array_like, optional
        Reference model; its distance to the iterate is logged.

    Returns
    -------
    (numpy.ndarray, TrainTrace)
        Final iterate ``w_T`` and the trace.  Records are taken at ``t = 0``,
        every ``eval_every`` iterations and at ``t = T``.

    Raises
    ------
    DivergenceError
        If the iterate becomes non-finite or the objective exceeds
        ``DIVERGENCE_LIMIT`` in magnitude at a record.
    """
    return _train(ErmProblem(data), "sht_auc", data, config, w0, test, w_star)


def stoiht_logistic_train(data, config, w0=None, test=None, w_star=None):
    """Same loop as :func:`sht_auc_train` with minibatch logistic gradients."""
    return _train(LogisticProblem(data), "stoiht_logistic", data, config, w0,
                  test, w_star)
