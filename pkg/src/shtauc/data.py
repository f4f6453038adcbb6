"""Synthetic data, libsvm ingestion and stratified fold splitting.

Randomness comes from ``numpy.random.Generator`` with the PCG64 bit generator
(``np.random.default_rng(seed)``); normals use numpy's ziggurat sampler.  A
given seed reproduces byte-identical data on one platform/numpy build; the
same bytes across platforms are not promised.
"""
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .errors import (ArgumentError, DegenerateDataError, EmptyDatasetError,
                     LabelError, ParseError)
from .objective import Dataset

__all__ = [
    "SyntheticSpec",
    "PlantedTruth",
    "LabelMappingWarning",
    "positive_count",
    "generate_synthetic",
    "load_libsvm",
    "save_libsvm",
    "split_and_shuffle",
]


class LabelMappingWarning(UserWarning):
    """Raised (as a warning) when {0, 1} labels are mapped to {-1, +1}."""


def positive_count(r, n):
    # round half up; Python's round() would send 0.5 to the even neighbour
    return int(math.floor(r * n + 0.5))


@dataclass(frozen=True)
class SyntheticSpec:
    n: int = 1000
    d: int = 1000
    k_star: int = 20
    r: float = 0.05
    mu: float = 0.3
    seed: int = 0

    def validate(self):
        if self.n < 2 or self.d < 1:
            raise ArgumentError(f"need n >= 2 and d >= 1, got n={self.n}, d={self.d}")
        if not 1 <= self.k_star <= self.d:
            raise ArgumentError(f"k_star={self.k_star} must lie in [1, d={self.d}]")
        if not 0.0 < self.r <= 0.5:
            raise ArgumentError(f"r={self.r} must lie in (0, 0.5]")
        n_pos = positive_count(self.r, self.n)
        if n_pos < 1 or n_pos >= self.n:
            raise ArgumentError(f"round(r*n)={n_pos} leaves a class empty")
        if not 0 <= self.seed < 2 ** 64:
            raise ArgumentError("seed must be a 64-bit unsigned integer")
        return self

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class PlantedTruth:
    support: np.ndarray
    mu: float

    def weights(self, d):
        """The planted direction: mu on the support, zero elsewhere."""
        w = np.zeros(d)
        w[self.support] = self.mu
        return w


def generate_synthetic(spec):
    """Gaussian two-class data with a planted mean shift on a random support.

    Negatives are N(0, I).  Positives are N(0, I) except on the planted
    support, where the mean is ``mu``.  Rows are shuffled.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    support = np.sort(rng.choice(spec.d, size=spec.k_star, replace=False))
    n_pos = positive_count(spec.r, spec.n)
    X = rng.standard_normal((spec.n, spec.d))
    X[:n_pos, support] += spec.mu
    y = np.full(spec.n, -1, dtype=np.int8)
    y[:n_pos] = 1
    order = rng.permutation(spec.n)
    return Dataset(X[order], y[order]), PlantedTruth(support, float(spec.mu))


def _parse_label(token, lineno):
    try:
        value = float(token)
    except ValueError:
        raise LabelError(f"cannot parse label {token!r}", lineno) from None
    if value not in (1.0, -1.0, 0.0):
        raise LabelError(f"label {token!r} not in {{+1, -1, 0, 1}}", lineno)
    return int(value)


def load_libsvm(path, d_hint=None):
    """Read a libsvm/svmlight file into a dense :class:`Dataset`.

    Lines look like ``label idx:val idx:val ...`` with 1-based indices.
    Blank lines and ``#`` comments are skipped.  Labels must be +/-1, or
    {0, 1}, in which case 0 is mapped to -1 and a
    :class:`LabelMappingWarning` is emitted.
    """
    labels, rows, max_idx = [], [], 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            label = _parse_label(tokens[0], lineno)
            entries = {}
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise ParseError(f"expected idx:val, got {tok!r}", lineno)
                try:
                    idx = int(idx_s)
                    val = float(val_s)
                except ValueError:
                    raise ParseError(f"bad feature token {tok!r}", lineno) from None
                if idx < 1:
                    raise ParseError(f"feature index {idx} is not 1-based", lineno)
                if not math.isfinite(val):
                    raise ParseError(f"non-finite value in {tok!r}", lineno)
                if idx in entries:
                    raise ParseError(f"duplicate feature index {idx}", lineno)
                entries[idx] = val
                max_idx = max(max_idx, idx)
            labels.append((label, lineno))
            rows.append(entries)
    if not rows:
        raise EmptyDatasetError(f"{path}: no samples")

    seen = {lab for lab, _ in labels}
    if 0 in seen:
        if -1 in seen:
            # report the line where the mix first becomes visible
            first_zero = next(no for lab, no in labels if lab == 0)
            first_neg = next(no for lab, no in labels if lab == -1)
            raise LabelError("labels mix -1 with 0", max(first_zero, first_neg))
        warnings.warn(f"{path}: mapping labels {{0, 1}} to {{-1, +1}}",
                      LabelMappingWarning, stacklevel=2)
    y = np.array([1 if lab == 1 else -1 for lab, _ in labels], dtype=np.int8)

    d = max(max_idx, d_hint or 0)
    X = np.zeros((len(rows), d))
    for i, entries in enumerate(rows):
        for idx, val in entries.items():
            X[i, idx - 1] = val
    return Dataset(X, y)


def save_libsvm(data, path):
    """Write ``data`` in libsvm format; zero entries are omitted.

    Values are written with ``repr`` so reloading gives back the same floats.
    """
    with open(path, "w", newline="\n") as fh:
        for x, label in zip(data.features, data.labels):
            parts = ["+1" if label == 1 else "-1"]
            parts.extend(f"{j + 1}:{float(x[j])!r}" for j in np.flatnonzero(x))
            fh.write(" ".join(parts) + "\n")


def split_and_shuffle(data, folds, trial_seed):
    """Stratified k-fold split.

    Each class is shuffled with ``trial_seed``; positives then negatives are
    dealt round-robin into ``folds`` test folds, so every fold holds the
    same number of each class up to one.  Returns ``[(train, test), ...]``
    as sorted index arrays.
    """
    labels = data.labels if isinstance(data, Dataset) else np.asarray(data)
    if int(folds) != folds or folds < 2:
        raise ArgumentError(f"folds must be an integer >= 2, got {folds!r}")
    pos = np.flatnonzero(labels == 1)
    neg = np.flatnonzero(labels == -1)
    if min(pos.size, neg.size) < folds:
        raise DegenerateDataError(
            f"each class needs >= {folds} members (n_pos={pos.size}, n_neg={neg.size})")
    rng = np.random.default_rng(trial_seed)
    order = np.concatenate([rng.permutation(pos), rng.permutation(neg)])
    fold_of = np.empty(labels.size, dtype=np.int64)
    fold_of[order] = np.arange(order.size) % folds
    out = []
    for f in range(folds):
        test = np.flatnonzero(fold_of == f)
        train = np.flatnonzero(fold_of != f)
        out.append((train, test))
    return out
