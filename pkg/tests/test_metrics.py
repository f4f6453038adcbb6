import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shtauc.errors import UndefinedMetricError
from shtauc.metrics import (auc_pairwise, auc_score, evaluate, related_ratio,
                            support_f1, support_jaccard)


def scored(pos, neg):
    return np.r_[pos, neg], np.r_[np.ones(len(pos)), -np.ones(len(neg))]


@pytest.mark.parametrize("pos, neg, expected", [
    ([2, 3], [1], 1.0),
    ([1], [2], 0.0),
    ([1, 3], [2, 2], 0.5),
])
def test_auc_examples(pos, neg, expected):
    assert auc_score(*scored(pos, neg)) == expected


def test_auc_constant_scores_is_half():
    assert auc_score(np.zeros(6), [1, -1, 1, -1, -1, -1]) == 0.5
    assert auc_score(np.zeros(6), [1, -1, 1, -1, -1, -1], ties="strict") == 0.0


def test_auc_single_class():
    with pytest.raises(UndefinedMetricError):
        auc_score([0.1, 0.2], [1, 1])


def test_rank_auc_matches_pair_loop(rng):
    for _ in range(200):
        n = int(rng.integers(2, 51))
        y = np.where(rng.random(n) < 0.4, 1, -1)
        y[0], y[1] = 1, -1
        s = rng.integers(-3, 4, n).astype(float) if rng.random() < 0.5 else rng.standard_normal(n)
        for ties in ("half", "strict"):
            assert abs(auc_score(s, y, ties) - auc_pairwise(s, y, ties)) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=2, max_size=40), st.data())
def test_auc_invariances(raw, data):
    s = np.array(raw, dtype=float)
    y = np.array(data.draw(st.lists(st.sampled_from([1, -1]), min_size=s.size, max_size=s.size)))
    y[0], y[-1] = 1, -1
    c = data.draw(st.floats(1e-3, 1e3))
    base = auc_score(s, y)
    assert auc_score(c * s, y) == pytest.approx(base, abs=1e-12)
    assert base + auc_score(s, -y) == pytest.approx(1.0, abs=1e-12)


def support_vector(idx, d=100):
    w = np.zeros(d)
    w[list(idx)] = 1.0
    return w


def test_support_metric_examples():
    truth = list(range(20))
    assert support_f1(support_vector(truth), truth) == 1.0
    assert support_jaccard(support_vector(truth), truth) == 1.0
    assert related_ratio(support_vector(truth), truth) == 1.0
    far = support_vector(range(50, 60))
    assert support_f1(far, truth) == 0.0
    assert support_jaccard(far, truth) == 0.0
    assert related_ratio(far, truth) == 0.0
    # overlap 5 of |truth| = 20 with ||w||_0 = 10: Pre 1/2, Rec 1/4
    w = support_vector(list(range(5)) + list(range(50, 55)))
    assert support_f1(w, truth) == pytest.approx(1 / 3, abs=1e-15)
    assert support_jaccard(w, truth) == pytest.approx(0.2, abs=1e-15)
    assert related_ratio(support_vector(range(8)), range(32)) == 0.25


def test_f1_empty_model_is_zero():
    assert support_f1(np.zeros(10), [1, 2]) == 0.0


def test_truncation():
    w = np.array([0.0005, 0.002, 0.0, 1.0])
    assert support_f1(w, [0, 1], truncate_eps=1e-3) == pytest.approx(2 * 0.5 * 0.5 / 1.0)
    assert support_f1(w, [0, 1]) == pytest.approx(2 * (2 / 3) * 1 / (2 / 3 + 1))


def test_jaccard_f1_identity(rng):
    for _ in range(500):
        d = int(rng.integers(2, 60))
        truth = rng.choice(d, size=int(rng.integers(1, d + 1)), replace=False)
        w = rng.standard_normal(d) * (rng.random(d) < rng.random())
        f1, j = support_f1(w, truth), support_jaccard(w, truth)
        assert j <= f1 + 1e-15
        assert j == pytest.approx(f1 / (2 - f1), abs=1e-15)


def test_evaluate_zero_model():
    X = np.eye(4)
    rep = evaluate(np.zeros(4), X, [1, -1, 1, -1], truth=[0, 2])
    assert rep.auc == 0.5 and rep.f1 == 0.0 and rep.support_size == 0
