"""Spectral clustering on a normalised affinity (NJW embedding + K-means)."""
from dataclasses import dataclass

import numpy as np

from .affinity import DEFAULT_KNN, forest_affinity, knn_sparsify, normalize
from .errors import SpectralError
from .kmeans import kmeans, relabel_first_appearance

RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class SpectralEmbedding:
    vectors: np.ndarray       # (n, p) eigenvectors, unit columns
    eigenvalues: np.ndarray   # (p,) non-increasing
    rows: np.ndarray          # (n, p) row-normalised embedding


def _fix_signs(V):
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def top_eigenvectors(S, p: int) -> SpectralEmbedding:
    """Eigenvectors of the ``p`` algebraically largest eigenvalues of symmetric ``S``.

    Raises when the solver fails or any pair misses ``||Sv - lv|| <= 1e-8``.
    """
    S = np.asarray(S, dtype=np.float64)
    n = S.shape[0]
    if not 1 <= p <= n:
        raise SpectralError(f"cluster count p={p} must be in 1..{n}")
    try:
        w, V = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigensolver did not converge: {exc}") from exc
    w = w[::-1][:p]
    V = _fix_signs(V[:, ::-1][:, :p])
    resid = np.linalg.norm(S @ V - V * w[None, :], axis=0)
    if np.any(resid > RESIDUAL_TOL):
        raise SpectralError(f"eigen-residual {resid.max():.3e} exceeds {RESIDUAL_TOL}")
    norms = np.linalg.norm(V, axis=1)
    rows = np.divide(V, norms[:, None], out=np.zeros_like(V), where=norms[:, None] > 0)
    return SpectralEmbedding(V, w, rows)


def cluster(embedding, p: int, seed: int, n_init: int = 10) -> np.ndarray:
    """K-means on embedding rows; labels renumbered by first appearance."""
    rows = embedding.rows if isinstance(embedding, SpectralEmbedding) else np.asarray(embedding)
    if p < 1:
        raise SpectralError("cluster count must be positive")
    if p > rows.shape[0]:
        raise SpectralError(f"cluster count p={p} exceeds sample count {rows.shape[0]}")
    res = kmeans(rows, p, seed, n_init=n_init)
    return relabel_first_appearance(res.labels)


def cluster_affinity(A, p: int, k: int = DEFAULT_KNN, seed: int = 0) -> np.ndarray:
    """Sparsify, normalise, embed and cluster an affinity matrix."""
    A = np.asarray(A, dtype=np.float64)
    n = A.shape[0]
    if k >= n:
        k = n - 1
    S = normalize(knn_sparsify(A, k)) if n > 1 else normalize(A)
    return cluster(top_eigenvectors(S, p), p, seed)


def cluster_pipeline(forest, p: int, k: int = DEFAULT_KNN, seed: int = 0) -> np.ndarray:
    """Forest -> affinity -> kNN graph -> normalised affinity -> spectral clusters."""
    return cluster_affinity(forest_affinity(forest), p, k, seed)
