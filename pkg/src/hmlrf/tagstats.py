"""Cross-layer tag correlations and soft scores for unlabelled target tags.

Co-occurrence of an abstract tag ``i`` with a subordinate tag ``j`` is the
fraction of ``j``-positive samples that are also ``i``-positive. Mutual
exclusion is the normalised excess of ``i``-negatives among ``j``-positive
samples over the overall ``i``-negative rate. Samples with no positive tag in
a target layer get positive/negative scores for that layer by summing these
correlations over their positive subordinate tags.
"""
from dataclasses import dataclass

import numpy as np

from .data import TagHierarchy
from .errors import TagStatsError


def _counts(tags):
    Y = np.asarray(tags, dtype=np.int64)
    return Y.shape[0], Y.sum(axis=0), Y.T @ Y


def cooccurrence(tags, i, j) -> float:
    """``co_ij / o_j``; 0 when tag ``j`` never occurs."""
    Y = np.asarray(tags, dtype=np.int64)
    o_j = int(Y[:, j].sum())
    if o_j == 0:
        return 0.0
    co = int((Y[:, i] & Y[:, j]).sum())
    return co / o_j


def _exclusion(n, o_i, o_j, co_ij):
    if o_j == 0 or o_i == 0:
        return 0.0
    r_neg = (n - o_i) / n
    r_negpos = (o_j - co_ij) / o_j
    return max(0.0, r_negpos - r_neg) / (1.0 - r_neg)


def mutual_exclusion(tags, i, j) -> float:
    """Relative increase of tag ``i`` negatives given tag ``j`` is positive.

    0 when tag ``j`` never occurs or tag ``i`` is never positive.
    """
    Y = np.asarray(tags, dtype=np.int64)
    n = Y.shape[0]
    return _exclusion(n, int(Y[:, i].sum()), int(Y[:, j].sum()), int((Y[:, i] & Y[:, j]).sum()))


@dataclass(frozen=True)
class CorrelationTables:
    """Co-occurrence and exclusion for every ordered tag pair.

    Only pairs with ``i`` in a strictly more abstract layer than ``j`` are
    meaningful; ``table(k)`` slices those out for target layer ``k``.
    """

    rho: np.ndarray
    eps: np.ndarray
    hierarchy: TagHierarchy

    def table(self, k):
        rows = self.hierarchy.layers[k]
        cols = self.hierarchy.subordinate(k)
        return self.rho[np.ix_(rows, cols)], self.eps[np.ix_(rows, cols)]

    def to_json(self, k, tag_names) -> dict:
        rows = self.hierarchy.layers[k]
        cols = self.hierarchy.subordinate(k)
        rho, eps = self.table(k)
        return {
            "target_layer": int(k),
            "cooccurrence": {tag_names[i]: {tag_names[j]: float(rho[a, b]) for b, j in enumerate(cols)}
                             for a, i in enumerate(rows)},
            "mutual_exclusion": {tag_names[i]: {tag_names[j]: float(eps[a, b]) for b, j in enumerate(cols)}
                                 for a, i in enumerate(rows)},
        }


def correlation_tables(tags, hierarchy: TagHierarchy) -> CorrelationTables:
    n, occ, co = _counts(tags)
    col_ok = occ > 0
    safe_occ = np.where(col_ok, occ, 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.where(col_ok[None, :], co / safe_occ[None, :], 0.0)
        r_neg = (n - occ) / n
        r_negpos = (occ[None, :] - co) / safe_occ[None, :]
        eps = np.maximum(0.0, r_negpos - r_neg[:, None]) / (1.0 - r_neg[:, None])
    eps = np.where(col_ok[None, :] & col_ok[:, None], eps, 0.0)
    return CorrelationTables(rho, eps, hierarchy)


@dataclass(frozen=True)
class SoftTagScores:
    layer: int
    samples: np.ndarray    # rows with no positive tag in the layer, ascending
    positive: np.ndarray   # (rows, layer tags), normalised into [0, 1]
    negative: np.ndarray
    raw_positive: np.ndarray
    raw_negative: np.ndarray


def missing_rows(tags, layer_tags) -> np.ndarray:
    """Rows with no positive tag among ``layer_tags``."""
    Y = np.asarray(tags)
    return np.flatnonzero(~Y[:, layer_tags].any(axis=1))


def _accumulate(weights, Ysub):
    # sequential sum over subordinate tags, ascending
    out = np.zeros((Ysub.shape[0], weights.shape[0]))
    for b in range(weights.shape[1]):
        out += Ysub[:, b, None] * weights[None, :, b]
    return out


def soft_scores(tags, hierarchy: TagHierarchy, k: int, corr: CorrelationTables) -> SoftTagScores:
    """Soft positive and negative scores for target layer ``k`` (0-based).

    Each score family is divided by its largest raw value over every
    (missing sample, target tag) pair; an all-zero family stays zero.
    """
    if not 0 <= k < hierarchy.num_layers:
        raise TagStatsError(f"target layer {k} outside 0..{hierarchy.num_layers - 1}")
    if k == hierarchy.num_layers - 1:
        raise TagStatsError(f"no subordinate layers below target layer {k}")
    Y = np.asarray(tags, dtype=np.float64)
    target = hierarchy.layers[k]
    sub = hierarchy.subordinate(k)
    rows = missing_rows(Y, target)
    rho, eps = corr.table(k)
    Ysub = Y[np.ix_(rows, sub)]
    raw_pos = _accumulate(rho, Ysub)
    raw_neg = _accumulate(eps, Ysub)
    pos = raw_pos / raw_pos.max() if raw_pos.size and raw_pos.max() > 0 else np.zeros_like(raw_pos)
    neg = raw_neg / raw_neg.max() if raw_neg.size and raw_neg.max() > 0 else np.zeros_like(raw_neg)
    return SoftTagScores(k, rows, pos, neg, raw_pos, raw_neg)
