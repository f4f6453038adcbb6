"""Convergence constants for stochastic hard thresholding on the AUC
objective, and empirical restricted-eigenvalue probing.

The Gaussian-design bounds (``gaussian_rsc_rss``, ``condition_number_curve``,
``tolerance_error``) are high-probability statements; only their
deterministic formulas are evaluated here.
"""
import math
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np

from .errors import ArgumentError, TheoryDomainError
from .objective import ErmProblem

__all__ = [
    "TheoryParams",
    "ConvergenceConstants",
    "CurvePoint",
    "ConditionCurve",
    "RestrictedEigs",
    "nu",
    "kappa",
    "is_contraction",
    "rho_minus_bound",
    "rho_plus_bound",
    "gaussian_rsc_rss",
    "curve_coefficients",
    "condition_number",
    "condition_number_curve",
    "tolerance_numerator",
    "tolerance_kappa",
    "tolerance_error",
    "empirical_restricted_eigs",
]


@dataclass(frozen=True)
class TheoryParams:
    """Inputs to the Gaussian-design bounds.

    ``lam`` is the smallest eigenvalue of the square root of the feature
    covariance.  ``b`` is the block (minibatch) size.
    """

    k: int
    k_star: int
    d: float
    n: float
    b: float
    r: float
    lam: float

    def __post_init__(self):
        if not self.k >= self.k_star >= 1:
            raise ArgumentError(f"need k >= k_star >= 1, got k={self.k}, k_star={self.k_star}")
        if not 0.0 < self.r <= 0.5:
            raise ArgumentError(f"r={self.r} must lie in (0, 0.5]")
        if not self.lam > 0:
            raise ArgumentError("lam must be positive")
        if not self.d > 1:
            raise ArgumentError("d must exceed 1")
        if not self.n > 0 or not self.b >= 1:
            raise ArgumentError("need n > 0 and b >= 1")

    @property
    def s(self):
        """Sparsity level 2k + k_star at which the bounds are stated."""
        return 2 * self.k + self.k_star

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ConvergenceConstants:
    nu: float
    rho_minus: float
    rho_plus: float
    rho: float
    kappa: float
    step_size_suggestion: float
    contraction: bool
    applicable: bool
    note: str = ""

    def to_dict(self):
        return asdict(self)


def nu(k, k_star):
    if k_star < 1 or k < k_star:
        raise ArgumentError(f"need k >= k_star >= 1, got k={k}, k_star={k_star}")
    q = k_star / k
    return 1.0 + q + math.sqrt(q)


def kappa(nu_value, rho):
    """Contraction factor sqrt(nu * (1 - 1/rho)) for condition number rho."""
    if not rho >= 1.0:
        raise TheoryDomainError(f"condition number rho={rho} must be >= 1")
    return math.sqrt(nu_value * (1.0 - 1.0 / rho))


def is_contraction(kappa_value):
    return kappa_value < 1.0


def rho_minus_bound(params):
    """Restricted strong convexity constant at sparsity 2k + k_star.

    Returns ``(value, base)`` where ``base`` is the term that gets squared;
    the bound is only meaningful when both are positive.
    """
    t = params.s * math.log(params.d) / (params.r * params.n)
    base = 0.5 * params.lam - 6.0 * math.sqrt(2.0) * math.sqrt(t)
    return base * base - 32.0 / 3.0 * t, base


def rho_plus_bound(params):
    log_d = math.log(params.d)
    return 16.0 * params.s * log_d * (0.5 * math.log(params.b) + log_d) / params.r


def gaussian_rsc_rss(params):
    """RSC/RSS constants, condition number and contraction factor for a
    Gaussian design.

    When the sample size is too small for the lower bound to be positive,
    the result has ``applicable=False`` and NaN for the derived constants.
    """
    nu_value = nu(params.k, params.k_star)
    rho_plus = rho_plus_bound(params)
    rho_minus, base = rho_minus_bound(params)
    step = 1.0 / rho_plus
    nan = float("nan")
    if base <= 0 or rho_minus <= 0:
        return ConvergenceConstants(
            nu_value, rho_minus, rho_plus, nan, nan, step, False, False,
            "regime violated: n too small for a positive restricted strong convexity bound")
    rho = rho_plus / rho_minus
    if rho < 1.0:
        return ConvergenceConstants(
            nu_value, rho_minus, rho_plus, rho, nan, step, False, False,
            "condition number below 1; bounds inconsistent")
    kap = kappa(nu_value, rho)
    return ConvergenceConstants(nu_value, rho_minus, rho_plus, rho, kap, step,
                                is_contraction(kap), True, "high-probability bound")


class CurvePoint(NamedTuple):
    r: float
    rho: float
    valid: bool


@dataclass(frozen=True)
class ConditionCurve:
    points: tuple
    sqrt_r_star: float
    coefficients: tuple

    def to_dict(self):
        a, b, c = self.coefficients
        return {
            "coefficients": {"a": a, "b": b, "c": c},
            "sqrt_r_star": self.sqrt_r_star,
            "r_star": self.sqrt_r_star ** 2,
            "points": [p._asdict() for p in self.points],
        }


def curve_coefficients(params):
    """Coefficients (a, b, c) of the condition number as 16 / (a r + b sqrt(r) + c),
    plus the location sqrt(r*) of the extremum of the denominator."""
    log_d = math.log(params.d)
    h = 0.5 * math.log(params.b) + log_d
    L = params.k * log_d * h
    a = params.lam ** 2 / (4.0 * L)
    b = -6.0 * math.sqrt(2.0) * params.lam / math.sqrt(params.n * L)
    c = 184.0 / (3.0 * params.n * h)
    sqrt_r_star = 12.0 * math.sqrt(2.0) * math.sqrt(L) / (params.lam * math.sqrt(params.n))
    return (a, b, c), sqrt_r_star


def condition_number(r, a, b, c):
    """16 / (a r + b sqrt(r) + c); NaN where the denominator is not positive."""
    den = a * r + b * math.sqrt(r) + c
    return 16.0 / den if den > 0 else float("nan")


def condition_number_curve(params, r_grid):
    coeffs, sqrt_r_star = curve_coefficients(params)
    points = []
    for r in r_grid:
        if not 0.0 < r <= 0.5:
            raise ArgumentError(f"grid value r={r} outside (0, 0.5]")
        rho = condition_number(r, *coeffs)
        points.append(CurvePoint(float(r), rho, not math.isnan(rho)))
    return ConditionCurve(tuple(points), sqrt_r_star, coeffs)


def tolerance_numerator(params, norm_w_star, sigma_spectral_bound=1.0):
    """Numerator of the tolerance-error bound (grows linearly in ||w*||)."""
    s_log_d = params.s * math.log(params.d)
    return (4.0 * params.r * norm_w_star
            + math.sqrt(params.r / (2.0 * params.n * sigma_spectral_bound * s_log_d)))


def tolerance_kappa(params):
    """Contraction factor appearing in the denominator of the tolerance bound.

    Raises TheoryDomainError when the expression under the root is negative.
    """
    k_log_d = params.k * math.log(params.d)
    n_neg = (1.0 - params.r) * params.n
    sr = math.sqrt(params.r)
    inner = (1.0
             - 3.0 * params.lam ** 2 / (128.0 * k_log_d) * params.r
             + (9.0 * math.sqrt(2.0) * params.lam / (16.0 * math.sqrt(k_log_d * n_neg))
                + 1.0 / params.n) * sr
             - 27.0 / (4.0 * params.n))
    radicand = (1.0 + nu(params.k, params.k_star)) * inner
    if radicand < 0:
        raise TheoryDomainError(f"negative radicand {radicand} in the tolerance bound")
    return math.sqrt(radicand)


def tolerance_error(params, norm_w_star, sigma_spectral_bound=1.0):
    """Radius sigma/(1 - kappa) around w* that the iterates settle into.

    ``sigma_spectral_bound`` bounds the spectral norm of the feature
    covariance (1 under unit-variance features).
    """
    if norm_w_star < 0 or sigma_spectral_bound <= 0:
        raise ArgumentError("need norm_w_star >= 0 and sigma_spectral_bound > 0")
    kap = tolerance_kappa(params)
    if kap >= 1.0:
        raise TheoryDomainError(f"kappa={kap:.6g} >= 1; the tolerance bound is vacuous")
    return tolerance_numerator(params, norm_w_star, sigma_spectral_bound) / (1.0 - kap)


class RestrictedEigs(NamedTuple):
    rho_minus_hat: float
    rho_plus_hat: float


def _sparse_probe(d, s, rng):
    v = np.zeros(d)
    idx = rng.choice(d, size=s, replace=False)
    g = rng.standard_normal(s)
    while not np.any(g):
        g = rng.standard_normal(s)
    v[idx] = g / np.linalg.norm(g)
    return v


def empirical_restricted_eigs(data, s, probes, seed, partition=None):
    """Witness the restricted curvature of the AUC objective along random
    s-sparse unit directions.

    ``rho_minus_hat`` is the smallest full-objective curvature seen over the
    probes; ``rho_plus_hat`` is the largest per-block curvature (blocks from
    ``partition``, or the whole dataset as one block).  These are witnesses,
    not certificates: the true restricted extremes are at least as extreme.
    Probe ``i`` draws from its own stream derived from ``(seed, i)``.
    """
    if not 1 <= s <= data.d:
        raise ArgumentError(f"s={s} outside [1, d={data.d}]")
    if probes < 1:
        raise ArgumentError("probes must be >= 1")
    problem = ErmProblem(data)
    blocks = None if partition is None else partition.blocks
    lo, hi = math.inf, -math.inf
    for i in range(probes):
        rng = np.random.default_rng([seed, i])
        v = _sparse_probe(data.d, s, rng)
        lo = min(lo, problem.hessian_form(v))
        if blocks is None:
            hi = max(hi, problem.hessian_form(v))
        else:
            hi = max(hi, max(problem.hessian_form(v, blk) for blk in blocks))
    return RestrictedEigs(lo, hi)
