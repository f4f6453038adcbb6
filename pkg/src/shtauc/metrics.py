"""Classification and support-recovery metrics."""
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import ArgumentError, UndefinedMetricError

__all__ = [
    "EvalReport",
    "auc_score",
    "auc_pairwise",
    "support_f1",
    "support_jaccard",
    "related_ratio",
    "evaluate",
    "DENSE_TRUNCATE_EPS",
]

# Entries no larger than this are treated as zero when scoring dense models.
DENSE_TRUNCATE_EPS = 1e-3


@dataclass(frozen=True)
class EvalReport:
    auc: float
    f1: float
    jaccard: float
    ratio: float
    support_size: int

    def to_dict(self):
        return asdict(self)


def _split_scores(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ArgumentError("scores and labels differ in length")
    pos = y == 1
    neg = y == -1
    if not np.all(pos | neg):
        raise ArgumentError("labels must be +1 or -1")
    if not pos.any() or not neg.any():
        raise UndefinedMetricError("AUC needs at least one positive and one negative")
    return s, pos, neg


def auc_score(scores, labels, ties="half"):
    """Fraction of positive/negative pairs ranked correctly.

    Computed from average ranks (Mann-Whitney U) in O(n log n).  With
    ``ties="half"`` a tied pair counts 1/2; ``ties="strict"`` counts it as 0,
    which is the literal strict-inequality definition.
    """
    s, pos, neg = _split_scores(scores, labels)
    n_pos = int(pos.sum())
    n_neg = int(neg.sum())
    ranks = rankdata(s)
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    auc = u / (n_pos * n_neg)
    if ties == "half":
        return float(auc)
    if ties != "strict":
        raise ArgumentError(f"unknown tie convention {ties!r}")
    vals, inv = np.unique(s, return_inverse=True)
    tied_pairs = np.bincount(inv[pos], minlength=vals.size) @ np.bincount(inv[neg], minlength=vals.size)
    return float(auc - 0.5 * tied_pairs / (n_pos * n_neg))


def auc_pairwise(scores, labels, ties="half"):
    """Exhaustive O(n+ n-) pair loop; reference for :func:`auc_score`."""
    s, pos, neg = _split_scores(scores, labels)
    tie_credit = 0.5 if ties == "half" else 0.0
    total = 0.0
    for sp in s[pos]:
        for sn in s[neg]:
            if sp > sn:
                total += 1.0
            elif sp == sn:
                total += tie_credit
    return total / (int(pos.sum()) * int(neg.sum()))


def _supports(w, truth, truncate_eps):
    truth = set(int(i) for i in truth)
    if not truth:
        raise ArgumentError("true support must be nonempty")
    w = np.asarray(w, dtype=np.float64)
    est = set(np.flatnonzero(np.abs(w) > truncate_eps).tolist())
    return est, truth


def support_f1(w, truth, truncate_eps=0.0):
    est, truth = _supports(w, truth, truncate_eps)
    hit = len(est & truth)
    if not est or hit == 0:
        return 0.0
    # 2 Pre Rec / (Pre + Rec) with a single rounding
    return 2 * hit / (len(est) + len(truth))


def support_jaccard(w, truth, truncate_eps=0.0):
    est, truth = _supports(w, truth, truncate_eps)
    return len(est & truth) / len(est | truth)


def related_ratio(w, truth, truncate_eps=0.0):
    """Share of the reference features that the model selects."""
    est, truth = _supports(w, truth, truncate_eps)
    return len(est & truth) / len(truth)


def evaluate(w, features, labels, truth=None, truncate_eps=0.0):
    """AUC of ``features @ w`` plus support metrics when ``truth`` is known.

    Support metrics are NaN without a reference support.
    """
    w = np.asarray(w, dtype=np.float64)
    auc = auc_score(np.asarray(features) @ w, labels)
    size = int(np.count_nonzero(np.abs(w) > truncate_eps))
    if truth is None or len(truth) == 0:
        nan = float("nan")
        return EvalReport(auc, nan, nan, nan, size)
    return EvalReport(
        auc,
        support_f1(w, truth, truncate_eps),
        support_jaccard(w, truth, truncate_eps),
        related_ratio(w, truth, truncate_eps),
        size,
    )
