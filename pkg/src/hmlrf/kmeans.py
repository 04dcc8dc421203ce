"""Seeded Lloyd's K-means with k-means++ seeding."""
from dataclasses import dataclass

import numpy as np

MAX_ITER = 300


@dataclass(frozen=True)
class KMeansResult:
    labels: np.ndarray     # (n,) in 0..k-1
    centers: np.ndarray    # (k, d)
    inertia: float
    empty: np.ndarray      # (k,) True where a cluster ended with no members
    n_iter: int


def _sq_dists(X, x_sq, C):
    d2 = x_sq[:, None] - 2.0 * (X @ C.T) + np.einsum("ij,ij->i", C, C)[None, :]
    np.maximum(d2, 0.0, out=d2)
    return d2


def kmeans_plusplus(X, k, rng):
    n = X.shape[0]
    x_sq = np.einsum("ij,ij->i", X, X)
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, x_sq, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total <= 0.0:
            # every point already coincides with a centre
            idx = rng.integers(n)
        else:
            cdf = np.cumsum(closest)
            idx = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            idx = min(idx, n - 1)
        centers[c] = X[idx]
        np.minimum(closest, _sq_dists(X, x_sq, centers[c:c + 1])[:, 0], out=closest)
    return centers


def _lloyd(X, centers, max_iter):
    x_sq = np.einsum("ij,ij->i", X, X)
    k = centers.shape[0]
    labels = None
    it = 0
    for it in range(1, max_iter + 1):
        new = np.argmin(_sq_dists(X, x_sq, centers), axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        filled = counts > 0
        centers = centers.copy()
        centers[filled] = sums[filled] / counts[filled, None]
    counts = np.bincount(labels, minlength=k)
    inertia = float(((X - centers[labels]) ** 2).sum())
    return labels, centers, inertia, counts == 0, it


def kmeans(X, k, seed, n_init=1, max_iter=MAX_ITER) -> KMeansResult:
    """Cluster the rows of ``X`` into ``k`` groups.

    Each of ``n_init`` restarts draws k-means++ centres from one shared
    generator seeded with ``seed``; the restart with the lowest inertia wins
    (earliest on ties). Iteration stops when the assignment is unchanged or
    after ``max_iter`` rounds.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"cluster count {k} must be in 1..{n}")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, n_init)):
        init = kmeans_plusplus(X, k, rng)
        res = KMeansResult(*_lloyd(X, init, max_iter))
        if best is None or res.inertia < best.inertia:
            best = res
    return best


def relabel_first_appearance(labels) -> np.ndarray:
    """Renumber labels 0, 1, ... in order of first occurrence."""
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(len(first))
    return rank[inverse.ravel()]
