import numpy as np
import pytest

from shtauc.data import SyntheticSpec, generate_synthetic
from shtauc.errors import ArgumentError, DivergenceError
from shtauc.objective import Dataset, ErmProblem, make_blocks
from shtauc.optimizer import (LogisticProblem, OptimizerConfig, sht_auc_train,
                              stoiht_logistic_train)

from conftest import random_dataset


def small_data(rng, n=40, d=8):
    return random_dataset(rng, n, d)


def test_zero_iterations_returns_w0(rng):
    data = small_data(rng)
    w0 = np.zeros(data.d)
    w0[[1, 4]] = [0.3, -0.2]
    w, trace = sht_auc_train(data, OptimizerConfig(2, 0.1, 8, 0), w0=w0)
    np.testing.assert_array_equal(w, w0)
    assert len(trace.records) == 1
    assert trace.records[0].objective == ErmProblem(data).objective(w0)


def test_zero_start_objective_is_one(rng):
    _, trace = sht_auc_train(small_data(rng), OptimizerConfig(3, 0.01, 8, 0))
    assert trace.records[0].objective == pytest.approx(1.0, abs=1e-15)


def test_sparsity_and_trace_invariants(rng):
    data = small_data(rng, d=12)
    cfg = OptimizerConfig(3, 0.05, 7, 57, seed=5, eval_every=4)
    w, trace = sht_auc_train(data, cfg, test=data)
    assert np.count_nonzero(w) <= 3
    its = [r.iteration for r in trace.records]
    assert its == sorted(set(its)) and its[-1] == 57
    assert all(r.sparsity <= 3 for r in trace.records)
    assert all(0.0 <= r.test_auc <= 1.0 for r in trace.records)


def test_full_batch_monotone(rng):
    data = small_data(rng, n=30, d=5)
    problem = ErmProblem(data)
    # smoothness bound: largest eigenvalue of the (constant) Hessian
    H = np.array([[problem.hessian_form(e1 + e2) - problem.hessian_form(e1 - e2)
                   for e2 in np.eye(5)] for e1 in np.eye(5)]) / 4
    step = 0.9 / np.linalg.eigvalsh(H).max()
    cfg = OptimizerConfig(5, step, 30, 50, eval_every=1)
    _, trace = sht_auc_train(data, cfg)
    assert np.all(np.diff(trace.objectives) <= 1e-15)
    assert trace.objectives[-1] < trace.objectives[0]


def test_reduces_to_minibatch_sgd(rng):
    data = small_data(rng, n=36, d=6)
    cfg = OptimizerConfig(6, 0.05, 6, 40, seed=77)
    w, _ = sht_auc_train(data, cfg)

    problem = ErmProblem(data)
    ref_rng = np.random.default_rng(77)
    part = make_blocks(data.n, 6, ref_rng)
    ref = np.zeros(6)
    for _ in range(40):
        ref = ref - 0.05 * problem.gradient(ref, part.blocks[int(ref_rng.integers(part.m))])
    np.testing.assert_allclose(w, ref, rtol=0, atol=1e-12)


@pytest.mark.parametrize("train", [sht_auc_train, stoiht_logistic_train])
def test_deterministic(rng, train):
    data = small_data(rng)
    cfg = OptimizerConfig(3, 0.05, 8, 30, seed=123, eval_every=3)
    w1, t1 = train(data, cfg, test=data)
    w2, t2 = train(data, cfg, test=data)
    assert w1.tobytes() == w2.tobytes()
    assert t1.to_dict() == t2.to_dict()


def test_block_sampling_law(rng):
    data = small_data(rng, n=40)
    T, m = 4000, 5
    inside = 0
    for seed in range(10):
        _, trace = sht_auc_train(data, OptimizerConfig(2, 1e-4, 8, T, seed=seed))
        assert trace.num_blocks == m and trace.block_counts.sum() == T
        inside += np.sum(np.abs(trace.block_counts - T / m) <= 3 * np.sqrt(T / m))
    assert inside >= 0.95 * 10 * m


def test_planted_distance_decreases():
    decreasing = 0
    for seed in range(10):
        data, truth = generate_synthetic(SyntheticSpec(n=1000, d=200, k_star=20, r=0.5, seed=seed))
        mu = truth.weights(data.d)
        # population minimiser of the least-squares AUC risk for this design
        w_star = mu / (2.0 + mu @ mu)
        cfg = OptimizerConfig(20, 0.001, 50, 10 * 20, seed=seed)
        _, trace = sht_auc_train(data, cfg, w_star=w_star)
        decreasing += bool(np.all(np.diff(trace.distances) < 0))
    assert decreasing >= 8


def test_divergence_is_reported(rng):
    data = small_data(rng)
    with pytest.raises(DivergenceError) as info:
        sht_auc_train(data, OptimizerConfig(8, 1e3, 8, 500))
    assert info.value.iteration >= 1


def test_preconditions(rng):
    data = small_data(rng)
    with pytest.raises(ArgumentError):
        sht_auc_train(data, OptimizerConfig(1, 0.1, 8, 5), w0=np.ones(data.d))
    with pytest.raises(ArgumentError):
        sht_auc_train(data, OptimizerConfig(1, 0.1, 999, 5))
    with pytest.raises(ArgumentError):
        sht_auc_train(data, OptimizerConfig(99, 0.1, 8, 5))
    with pytest.raises(ArgumentError):
        sht_auc_train(data, OptimizerConfig(2, -0.1, 8, 5))


def test_logistic_gradient_at_zero():
    x = np.array([1.5, -2.0, 0.25])
    for y in (1, -1):
        data = Dataset(np.vstack([x, -x]), [y, -y])
        g = LogisticProblem(data).gradient(np.zeros(3), np.array([0]))
        np.testing.assert_allclose(g, -y * x / 2, atol=1e-15)


def test_logistic_separable_decrease():
    data = Dataset(np.array([[1.0, 0.0], [-1.0, 0.0]]), [1, -1])
    cfg = OptimizerConfig(2, 0.5, 2, 20, eval_every=1)
    _, trace = stoiht_logistic_train(data, cfg)
    assert np.all(np.diff(trace.objectives) < 0)
