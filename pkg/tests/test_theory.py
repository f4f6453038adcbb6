import math

import numpy as np
import pytest

from shtauc import theory
from shtauc.errors import ArgumentError, TheoryDomainError
from shtauc.objective import Dataset, ErmProblem, make_blocks
from shtauc.theory import TheoryParams

from conftest import random_dataset


def params(**kw):
    base = dict(k=20, k_star=20, d=1000, n=1000, b=50, r=0.05, lam=1.0)
    base.update(kw)
    return TheoryParams(**base)


@pytest.mark.parametrize("k, k_star, expected", [(20, 20, 3.0), (40, 10, 1.75), (100, 1, 1.11)])
def test_nu_examples(k, k_star, expected):
    assert theory.nu(k, k_star) == pytest.approx(expected, abs=1e-15)


def test_nu_rejects_small_k():
    with pytest.raises(ArgumentError):
        theory.nu(3, 4)


def test_kappa_examples():
    assert theory.kappa(3.0, 1.0) == 0.0
    assert theory.kappa(3.0, 1.2) == pytest.approx(math.sqrt(0.5), rel=1e-14)
    k2 = theory.kappa(3.0, 2.0)
    assert k2 == pytest.approx(math.sqrt(1.5), rel=1e-14)
    assert not theory.is_contraction(k2)
    with pytest.raises(TheoryDomainError):
        theory.kappa(3.0, 0.99)


def test_kappa_monotone_in_rho():
    vals = [theory.kappa(1.5, rho) for rho in np.linspace(1, 50, 200)]
    assert all(a < b for a, b in zip(vals, vals[1:]))


def test_rho_plus_example_and_scaling():
    p = TheoryParams(k=1, k_star=1, d=math.e, n=100, b=1, r=0.5, lam=1.0)
    assert theory.rho_plus_bound(p) == pytest.approx(96.0, rel=1e-15)
    ref = params(r=0.5)
    for r in (0.05, 0.1, 0.25, 0.4):
        assert theory.rho_plus_bound(params(r=r)) * r == pytest.approx(
            theory.rho_plus_bound(ref) * 0.5, rel=1e-14)


def test_regime_violated_for_small_n():
    c = theory.gaussian_rsc_rss(params(n=100))
    assert not c.applicable and math.isnan(c.kappa) and not c.contraction
    assert c.step_size_suggestion == pytest.approx(1 / c.rho_plus)


def test_regime_applicable_for_large_n():
    c = theory.gaussian_rsc_rss(params(k=1, k_star=1, d=10, n=1e8, b=1, r=0.5, lam=10.0))
    assert c.applicable
    assert c.rho == pytest.approx(c.rho_plus / c.rho_minus)
    assert c.kappa == pytest.approx(theory.kappa(c.nu, c.rho))


def test_curve_non_increasing_past_axis():
    p = params(n=1e6, lam=2.0)
    (a, b, c), axis = theory.curve_coefficients(p)
    assert axis == pytest.approx(-b / (2 * a), rel=1e-12)
    grid = np.linspace(axis ** 2, 0.5, 200) if axis ** 2 < 0.5 else []
    curve = theory.condition_number_curve(p, grid)
    rhos = [pt.rho for pt in curve.points if pt.valid]
    assert len(rhos) > 10
    assert all(x >= y for x, y in zip(rhos, rhos[1:]))


def test_curve_small_r_limit():
    (a, b, c), _ = theory.curve_coefficients(params())
    assert theory.condition_number(1e-16, a, b, c) == pytest.approx(16 / c, rel=1e-6)
    assert theory.condition_number(0.25, 2.0, 0.0, 0.0) == pytest.approx(32.0)


def test_curve_flags_bad_points():
    curve = theory.condition_number_curve(params(n=10), [0.05, 0.5])
    assert isinstance(curve.points[0].valid, bool)
    assert theory.condition_number(0.25, -1.0, 0.0, 0.1) != theory.condition_number(0.25, -1.0, 0.0, 0.1)


# k = k* = 1, d = e, lam = 10, r = 1/2, n = 1000 keeps the tolerance factor below 1
TOL_POINT = dict(k=1, k_star=1, d=math.e, n=1000, b=1, r=0.5, lam=10.0)


def test_tolerance_linear_in_norm():
    p = TheoryParams(**TOL_POINT)
    e0 = theory.tolerance_error(p, 0.0)
    e1 = theory.tolerance_error(p, 1.0)
    e3 = theory.tolerance_error(p, 3.0)
    assert e3 - e0 == pytest.approx(3 * (e1 - e0), rel=1e-12)


def test_tolerance_composition():
    p = TheoryParams(**TOL_POINT)
    kap = theory.tolerance_kappa(p)
    assert 0 < kap < 1
    expected = theory.tolerance_numerator(p, 2.0) / (1 - kap)
    assert theory.tolerance_error(p, 2.0) == pytest.approx(expected, rel=1e-15)


def test_tolerance_blows_up_near_one():
    # the tolerance factor grows as lam shrinks; walk towards kappa = 1
    values = []
    for lam in np.linspace(10.0, 9.0, 2000):
        p = TheoryParams(**{**TOL_POINT, "lam": float(lam)})
        try:
            values.append((theory.tolerance_kappa(p), theory.tolerance_error(p, 1.0)))
        except TheoryDomainError:
            break
    kaps = [k for k, _ in values]
    errs = [e for _, e in values]
    assert all(x < y for x, y in zip(kaps, kaps[1:]))
    assert all(x < y for x, y in zip(errs, errs[1:]))
    assert max(kaps) > 0.95 and max(errs) > 20 * errs[0]


def test_tolerance_domain_error():
    with pytest.raises(TheoryDomainError):
        theory.tolerance_error(params(), 1.0)


def explicit_hessian(data):
    problem = ErmProblem(data)
    d = data.d
    eye = np.eye(d)
    return np.array([[(problem.hessian_form(eye[i] + eye[j])
                       - problem.hessian_form(eye[i] - eye[j])) / 4 for j in range(d)]
                     for i in range(d)])


def test_probe_bounds_against_eigendecomposition(rng):
    for _ in range(5):
        d = int(rng.integers(3, 21))
        data = random_dataset(rng, 60, d)
        eigs = np.linalg.eigvalsh(explicit_hessian(data))
        got = theory.empirical_restricted_eigs(data, d, 200, seed=1)
        assert eigs[0] - 1e-10 <= got.rho_minus_hat <= got.rho_plus_hat <= eigs[-1] + 1e-10


def test_probe_duplicated_dataset(rng):
    data = random_dataset(rng, 30, 6)
    X, y = data.features, data.labels
    a = theory.empirical_restricted_eigs(data, 3, 25, seed=9)
    b = theory.empirical_restricted_eigs(Dataset(np.vstack([X, X]), np.r_[y, y]), 3, 25, seed=9)
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_single_probe(rng):
    data = random_dataset(rng, 30, 6)
    got = theory.empirical_restricted_eigs(data, 4, 1, seed=3)
    assert got.rho_minus_hat == got.rho_plus_hat


def test_probe_with_blocks(rng):
    data = random_dataset(rng, 40, 6)
    part = make_blocks(data.n, 10, np.random.default_rng(0))
    full = theory.empirical_restricted_eigs(data, 4, 30, seed=2)
    blocked = theory.empirical_restricted_eigs(data, 4, 30, seed=2, partition=part)
    assert 0 <= blocked.rho_minus_hat <= blocked.rho_plus_hat
    assert blocked.rho_minus_hat == full.rho_minus_hat
    assert blocked.rho_plus_hat >= full.rho_plus_hat - 1e-12
