"""Planted-structure dataset: Gaussian blobs with a two-layer tag hierarchy."""
import numpy as np

from .data import Dataset, TagHierarchy


def make_planted(n_samples=400, n_clusters=4, n_features=10, separation=3.0,
                 specific_per_cluster=3, specific_prob=0.6, seed=0) -> Dataset:
    """Blobs of unit variance whose centres are ``separation`` apart pairwise.

    Every sample carries the abstract tag of its cluster. Each cluster also
    owns ``specific_per_cluster`` specific tags, each present on a member
    with probability ``specific_prob`` and never outside the cluster.
    """
    if n_clusters > n_features:
        raise ValueError("need at least one feature per cluster")
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(n_clusters), -(-n_samples // n_clusters))[:n_samples]
    labels = rng.permutation(labels)
    centres = np.zeros((n_clusters, n_features))
    centres[np.arange(n_clusters), np.arange(n_clusters)] = separation / np.sqrt(2.0)
    X = centres[labels] + rng.standard_normal((n_samples, n_features))

    n_specific = n_clusters * specific_per_cluster
    Y = np.zeros((n_samples, n_clusters + n_specific), dtype=np.uint8)
    Y[np.arange(n_samples), labels] = 1
    draws = rng.random((n_samples, specific_per_cluster)) < specific_prob
    for s in range(specific_per_cluster):
        cols = n_clusters + labels * specific_per_cluster + s
        Y[np.arange(n_samples), cols] = draws[:, s]

    names = [f"event{c}" for c in range(n_clusters)]
    names += [f"detail{c}_{s}" for c in range(n_clusters) for s in range(specific_per_cluster)]
    hierarchy = TagHierarchy((np.arange(n_clusters), np.arange(n_clusters, n_clusters + n_specific)))
    return Dataset(X, Y, tuple(names), hierarchy, ground_truth_clusters=labels, ground_truth_tags=Y)
