"""Dense-vector helpers: support projection, k-th magnitude selection and
hard thresholding.

Vectors are 1-d ``float64`` numpy arrays.  Support sets are sorted integer
arrays of distinct indices.
"""
import math

import numpy as np
from numba import njit

from .errors import ArgumentError, DimensionError

__all__ = [
    "as_vector",
    "as_support",
    "support",
    "project",
    "select_kth_magnitude",
    "hard_threshold",
]


def as_vector(v, name="v"):
    """Return ``v`` as a finite 1-d float64 array (copying only if needed)."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-d, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ArgumentError(f"{name} contains non-finite entries")
    return arr


def as_support(omega, d):
    """Normalise an iterable of indices into a sorted, duplicate-free array."""
    idx = np.asarray(list(omega) if not isinstance(omega, np.ndarray) else omega,
                     dtype=np.int64).ravel()
    if idx.size and (idx.min() < 0 or idx.max() >= d):
        raise DimensionError(f"support index out of range [0, {d})")
    uniq = np.unique(idx)
    if uniq.size != idx.size:
        raise ArgumentError("support set contains duplicate indices")
    return uniq


def support(v, eps=0.0):
    """Indices i with |v_i| > eps."""
    return np.flatnonzero(np.abs(np.asarray(v)) > eps)


def project(v, omega):
    """Keep the coordinates of ``v`` indexed by ``omega`` and zero the rest."""
    v = as_vector(v)
    idx = as_support(omega, v.size)
    out = np.zeros_like(v)
    out[idx] = v[idx]
    return out


@njit("void(float64[:], int64, int64, int64)", cache=True)
def _floyd_rivest(a, left, right, k):
    # Rearranges a[left:right+1] so that a[k] holds the value it would have
    # after an ascending sort (0-based k).
    while right > left:
        if right - left > 600:
            n = right - left + 1
            i = k - left + 1
            z = math.log(n)
            s = 0.5 * math.exp(2.0 * z / 3.0)
            sd = 0.5 * math.sqrt(z * s * (n - s) / n)
            if i - n / 2.0 < 0:
                sd = -sd
            new_left = max(left, int(math.floor(k - i * s / n + sd)))
            new_right = min(right, int(math.floor(k + (n - i) * s / n + sd)))
            _floyd_rivest(a, new_left, new_right, k)
        t = a[k]
        i = left
        j = right
        a[left], a[k] = a[k], a[left]
        if a[right] > t:
            a[right], a[left] = a[left], a[right]
        while i < j:
            a[i], a[j] = a[j], a[i]
            i += 1
            j -= 1
            while a[i] < t:
                i += 1
            while a[j] > t:
                j -= 1
        if a[left] == t:
            a[left], a[j] = a[j], a[left]
        else:
            j += 1
            a[j], a[right] = a[right], a[j]
        if j <= k:
            left = j + 1
        if k <= j:
            right = j - 1


def _check_k(k, d):
    if isinstance(k, bool) or int(k) != k:
        raise ArgumentError(f"k must be an integer, got {k!r}")
    if not 1 <= k <= d:
        raise ArgumentError(f"k={k} outside [1, {d}]")
    return int(k)


def select_kth_magnitude(v, k):
    """Return the k-th largest of |v_1|, ..., |v_d| (1-based, with multiplicity).

    Uses Floyd-Rivest selection on a scratch array of magnitudes, so the
    expected cost is linear in ``d`` and ``v`` is left untouched.
    """
    v = as_vector(v)
    d = v.size
    k = _check_k(k, d)
    mags = np.abs(v)  # fresh array; safe to permute
    target = d - k
    _floyd_rivest(mags, 0, d - 1, target)
    return float(mags[target])


def hard_threshold(v, k):
    """Keep the ``k`` largest-magnitude entries of ``v``; zero everything else.

    When several coordinates share the cut-off magnitude, the lowest indices
    are kept until exactly ``k`` entries (counting zeros) are retained, so the
    result never has more than ``k`` nonzeros.
    """
    v = as_vector(v)
    d = v.size
    k = _check_k(k, d)
    if k == d:
        return v.copy()
    mags = np.abs(v)
    tau = select_kth_magnitude(v, k)
    keep = mags > tau
    room = k - int(np.count_nonzero(keep))
    if room > 0 and tau > 0.0:
        tied = np.flatnonzero(mags == tau)[:room]
        keep[tied] = True
    return np.where(keep, v, 0.0)
