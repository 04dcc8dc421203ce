"""Forest-induced affinity, kNN sparsification and symmetric normalisation."""
import numpy as np

from ._kernels import coleaf_counts
from .errors import GraphError

DEFAULT_KNN = 20


def tree_affinity(tree, n=None) -> np.ndarray:
    """0/1 matrix with a 1 wherever two samples share a leaf of ``tree``."""
    leaf = np.asarray(tree.leaf_of)
    if n is not None and len(leaf) != n:
        raise GraphError(f"tree covers {len(leaf)} samples, expected {n}")
    return (leaf[:, None] == leaf[None, :]).astype(np.float64)


def coleaf_matrix(forest) -> np.ndarray:
    """Integer count of trees in which each pair shares a leaf."""
    return coleaf_counts(forest.leaf_ids())


def forest_affinity(forest) -> np.ndarray:
    """Fraction of trees in which each pair of samples shares a leaf."""
    if forest.tau < 1:
        raise GraphError("forest has no trees")
    return coleaf_matrix(forest) / float(forest.tau)


def knn_sparsify(A, k: int = DEFAULT_KNN) -> np.ndarray:
    """Keep edge (i, j) if either endpoint ranks the other among its ``k`` strongest.

    Off-diagonal affinities are ranked per row by descending value, ties by
    ascending column. The diagonal is always kept.
    """
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if not 1 <= k < n:
        raise GraphError(f"kNN size {k} must satisfy 1 <= k < n = {n}")
    keep = np.zeros((n, n), dtype=bool)
    for i in range(n):
        nb = neighbours(A, i, k)
        keep[i, nb] = True
    keep |= keep.T
    np.fill_diagonal(keep, True)
    return np.where(keep, A, 0.0)


def neighbours(A, i: int, k: int) -> np.ndarray:
    """The ``k`` columns with largest off-diagonal affinity in row ``i``; ties by ascending index."""
    row = np.asarray(A[i], dtype=np.float64)
    cols = np.delete(np.arange(len(row)), i)
    order = np.argsort(-row[cols], kind="stable")
    return cols[order[:k]]


def normalize(A) -> np.ndarray:
    """``D^-1/2 A D^-1/2`` with ``D`` the row sums; zero-degree rows stay zero."""
    A = np.asarray(A, dtype=np.float64)
    deg = A.sum(axis=1)
    scale = np.sqrt(np.outer(deg, deg))
    S = np.divide(A, scale, out=np.zeros_like(A), where=scale > 0)
    return (S + S.T) * 0.5
