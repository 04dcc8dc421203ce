"""Missing-tag completion from forest neighbourhoods, clusters and affinities.

Three scorers estimate the probability that an unobserved tag belongs to a
sample:

* ``ln`` counts, over the sample's leaves, how many leaf neighbourhoods are
  unanimously positive vs unanimously negative for the tag;
* ``gc`` uses the tag frequency inside the sample's spectral cluster;
* ``am`` averages the tag over the ``k`` highest-affinity neighbours, each
  weighted by its affinity.

The sample itself is always left out of its own statistics.
"""
from dataclasses import dataclass

import numpy as np

from .affinity import DEFAULT_KNN, neighbours
from .errors import CompletionError

METHODS = ("ln", "gc", "am")


@dataclass(frozen=True)
class CompletionScores:
    scores: np.ndarray     # (n, m) in [0, 1]
    observed: np.ndarray   # (n, m) bool, observed positives (never recommended)


# ---------------------------------------------------------------- per pair

def complete_ln(forest, tags, sample: int, tag: int) -> float:
    Y = np.asarray(tags)
    pos = neg = 0
    for tree in forest.trees:
        nb = np.flatnonzero(tree.leaf_of == tree.leaf_of[sample])
        nb = nb[nb != sample]
        if len(nb) == 0:
            continue
        vals = Y[nb, tag]
        if vals.all():
            pos += 1
        elif not vals.any():
            neg += 1
    return pos / (pos + neg) if pos + neg else 0.0


def complete_gc(clusters, tags, sample: int, tag: int) -> float:
    Y = np.asarray(tags)
    c = np.asarray(clusters)
    members = np.flatnonzero(c == c[sample])
    if len(members) <= 1:
        return 0.0
    others = members[members != sample]
    return float(Y[others, tag].sum()) / (len(members) - 1)


def complete_am(A, tags, sample: int, tag: int, k: int = DEFAULT_KNN) -> float:
    A = np.asarray(A, dtype=np.float64)
    Y = np.asarray(tags)
    if not 1 <= k < A.shape[0]:
        raise CompletionError(f"neighbour count {k} must satisfy 1 <= k < n = {A.shape[0]}")
    acc = 0.0
    for j in neighbours(A, sample, k):
        acc += Y[j, tag] * A[sample, j]
    return float(acc) / k


# ---------------------------------------------------------------- all pairs

def scores_ln(forest, tags) -> np.ndarray:
    Y = np.asarray(tags, dtype=np.int64)
    n, m = Y.shape
    pos = np.zeros((n, m), dtype=np.int64)
    neg = np.zeros((n, m), dtype=np.int64)
    for tree in forest.trees:
        leaf = tree.leaf_of
        ids, inv = np.unique(leaf, return_inverse=True)
        inv = inv.ravel()
        size = np.bincount(inv, minlength=len(ids))
        sums = np.zeros((len(ids), m), dtype=np.int64)
        np.add.at(sums, inv, Y)
        nb_count = (size[inv] - 1)[:, None]
        nb_pos = sums[inv] - Y
        has = nb_count > 0
        pos += has & (nb_pos == nb_count)
        neg += has & (nb_pos == 0)
    total = pos + neg
    return np.divide(pos, total, out=np.zeros((n, m)), where=total > 0)


def scores_gc(clusters, tags) -> np.ndarray:
    Y = np.asarray(tags, dtype=np.int64)
    c = np.asarray(clusters)
    ids, inv = np.unique(c, return_inverse=True)
    inv = inv.ravel()
    size = np.bincount(inv, minlength=len(ids))
    sums = np.zeros((len(ids), Y.shape[1]), dtype=np.int64)
    np.add.at(sums, inv, Y)
    denom = (size[inv] - 1)[:, None].astype(np.float64)
    return np.divide((sums[inv] - Y).astype(np.float64), denom,
                     out=np.zeros(Y.shape), where=denom > 0)


def scores_am(A, tags, k: int = DEFAULT_KNN) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    Y = np.asarray(tags, dtype=np.float64)
    n = A.shape[0]
    if not 1 <= k < n:
        raise CompletionError(f"neighbour count {k} must satisfy 1 <= k < n = {n}")
    out = np.empty(Y.shape)
    for i in range(n):
        acc = np.zeros(Y.shape[1])
        for j in neighbours(A, i, k):
            acc += Y[j] * A[i, j]
        out[i] = acc / k
    return out


def completion_scores(method, tags, forest=None, clusters=None, affinity=None,
                      k: int = DEFAULT_KNN) -> CompletionScores:
    Y = np.asarray(tags)
    if method == "ln":
        if forest is None:
            raise CompletionError("ln completion needs a forest")
        S = scores_ln(forest, Y)
    elif method == "gc":
        if clusters is None:
            raise CompletionError("gc completion needs cluster assignments")
        S = scores_gc(clusters, Y)
    elif method == "am":
        if affinity is None:
            raise CompletionError("am completion needs an affinity matrix")
        S = scores_am(affinity, Y, k)
    else:
        raise CompletionError(f"unknown completion method {method!r}; expected ln, gc or am")
    return CompletionScores(S, Y.astype(bool))


def recover_topn(scores: CompletionScores, sample: int, N: int) -> list:
    """Top-``N`` unobserved tags by descending score, ties by ascending tag index."""
    if N < 1:
        raise CompletionError("N must be >= 1")
    row = scores.scores[sample]
    cand = np.flatnonzero(~scores.observed[sample])
    order = np.lexsort((cand, -row[cand]))
    return cand[order[:N]].tolist()


def recover_all(scores: CompletionScores, N: int) -> dict:
    return {i: recover_topn(scores, i, N) for i in range(scores.scores.shape[0])}
