"""Estimate an abstract-to-specific tag hierarchy from a flat tag matrix.

Tags are tf-idf weighted, samples are grouped into topic clusters with
K-means, and the tags that dominate each topic cluster are promoted into the
current layer. The procedure repeats on the leftover tags, promoting
``3 * layer`` tags per cluster for the ``layer``-th layer.
"""
from dataclasses import dataclass

import numpy as np

from .data import TagHierarchy
from .errors import HierarchyError
from .kmeans import kmeans

DEFAULT_TOPICS = 30


def tfidf_weight(tags) -> np.ndarray:
    """Weight binary tags by ``ln(n / o_j)``; tags never observed get weight 0."""
    Y = np.asarray(tags, dtype=np.float64)
    n = Y.shape[0]
    occ = Y.sum(axis=0)
    idf = np.zeros(Y.shape[1])
    used = occ > 0
    idf[used] = np.log(n / occ[used])
    return Y * idf


@dataclass(frozen=True)
class TopicClustering:
    n_topics: int
    assignment: np.ndarray
    centroids: np.ndarray
    empty: np.ndarray


def kmeans_topics(weighted, n_topics, seed, n_init=1) -> TopicClustering:
    W = np.asarray(weighted, dtype=np.float64)
    if n_topics > W.shape[0]:
        raise HierarchyError(f"topic count E={n_topics} exceeds sample count n={W.shape[0]}")
    if n_topics < 1:
        raise HierarchyError("topic count must be positive")
    res = kmeans(W, n_topics, seed, n_init=n_init)
    return TopicClustering(n_topics, res.labels, res.centers, res.empty)


def topic_scores(weighted, assignment, n_topics) -> np.ndarray:
    """Per-topic tag representativeness: column sums of weights within each topic."""
    W = np.asarray(weighted, dtype=np.float64)
    scores = np.zeros((n_topics, W.shape[1]))
    np.add.at(scores, assignment, W)
    return scores


def select_top_tags(scores, eta) -> np.ndarray:
    """Union over topics of the ``eta`` best-scoring columns.

    Ranking is by descending score, ties by ascending column. Columns with a
    zero score are never selected.
    """
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    chosen = set()
    cols = np.arange(scores.shape[1])
    for row in scores:
        order = np.lexsort((cols, -row))
        for j in order[:eta]:
            if row[j] > 0:
                chosen.add(int(j))
    return np.array(sorted(chosen), dtype=np.int64)


def build_hierarchy(tags, n_topics=DEFAULT_TOPICS, num_layers=2, seed=0) -> TagHierarchy:
    """Partition the tag columns into ``num_layers`` layers, most abstract first."""
    Y = np.asarray(tags)
    n, m = Y.shape
    if num_layers < 1:
        raise HierarchyError("need at least one layer")
    if n_topics < 1:
        raise HierarchyError("topic count must be positive")
    remaining = np.arange(m)
    layers = []
    for layer in range(1, num_layers):
        W = tfidf_weight(Y[:, remaining])
        topics = kmeans_topics(W, n_topics, seed + layer - 1)
        scores = topic_scores(W, topics.assignment, topics.n_topics)
        picked = select_top_tags(scores, 3 * layer)
        if len(picked) == 0 or len(picked) == len(remaining):
            raise HierarchyError(f"cannot form {num_layers} non-empty layers "
                                 f"(layer {layer} would take {len(picked)} of {len(remaining)} tags)")
        layers.append(remaining[picked])
        remaining = np.delete(remaining, picked)
    if len(remaining) == 0:
        raise HierarchyError(f"cannot form {num_layers} non-empty layers")
    layers.append(remaining)
    return TagHierarchy(tuple(layers)).validate(m)
