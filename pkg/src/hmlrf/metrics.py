"""Partition agreement metrics, tag-completion metrics and tag sparsification."""
from dataclasses import dataclass

import numpy as np

from .errors import MetricsError


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray   # (p, q) samples in predicted cluster c and true class g

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def rows(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def cols(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def contingency(pred, truth) -> ContingencyTable:
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise MetricsError(f"length mismatch: {pred.size} predictions vs {truth.size} labels")
    if pred.size == 0:
        raise MetricsError("empty partitions")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    counts = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(counts, (pi.ravel(), ti.ravel()), 1)
    return ContingencyTable(counts)


def purity(pred, truth) -> float:
    t = contingency(pred, truth)
    return float(t.counts.max(axis=1).sum()) / t.n


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the two entropies (natural log).

    1 when both partitions are trivial, 0 when exactly one is. Partitions
    equal up to relabelling score exactly 1 rather than 1 minus rounding.
    """
    t = contingency(pred, truth)
    n = t.n
    nz = t.counts > 0
    if np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1):
        return 1.0
    hc = _entropy(t.rows, n)
    hg = _entropy(t.cols, n)
    if hc == 0.0 and hg == 0.0:
        return 1.0
    if hc == 0.0 or hg == 0.0:
        return 0.0
    c, g = np.nonzero(t.counts)
    nij = t.counts[c, g].astype(np.float64)
    mi = float(np.sum(nij / n * np.log(n * nij / (t.rows[c] * t.cols[g].astype(np.float64)))))
    return max(0.0, min(1.0, mi / np.sqrt(hc * hg)))


def _comb2(x):
    x = np.asarray(x, dtype=np.int64)
    return x * (x - 1) // 2


def pair_counts(pred, truth):
    """``(TP, FP, FN, TN)`` over all unordered sample pairs."""
    t = contingency(pred, truth)
    if t.n < 2:
        raise MetricsError("pair metrics need at least 2 samples")
    same_both = int(_comb2(t.counts).sum())
    same_pred = int(_comb2(t.rows).sum())
    same_true = int(_comb2(t.cols).sum())
    total = t.n * (t.n - 1) // 2
    tp = same_both
    fp = same_pred - tp
    fn = same_true - tp
    tn = total - tp - fp - fn
    return tp, fp, fn, tn


def rand_index(pred, truth) -> float:
    tp, fp, fn, tn = pair_counts(pred, truth)
    return (tp + tn) / (tp + fp + fn + tn)


def adjusted_rand(pred, truth) -> float:
    """Hubert-Arabie adjusted Rand index; 1 when both partitions are identical and trivial."""
    tp, fp, fn, tn = pair_counts(pred, truth)
    total = tp + fp + fn + tn
    same_pred = tp + fp
    same_true = tp + fn
    expected = same_pred * same_true / total
    max_index = (same_pred + same_true) / 2
    if max_index == expected:
        return 1.0
    return (tp - expected) / (max_index - expected)


def pair_f1(pred, truth) -> float:
    tp, fp, fn, _ = pair_counts(pred, truth)
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def clustering_report(pred, truth) -> dict:
    return {
        "purity": purity(pred, truth),
        "nmi": nmi(pred, truth),
        "ri": rand_index(pred, truth),
        "ari": adjusted_rand(pred, truth),
        "f1": pair_f1(pred, truth),
    }


# ------------------------------------------------------------------ completion

@dataclass(frozen=True)
class CompletionTruth:
    """Held-out (missing) and observed tag sets per sample."""

    missing: dict
    observed: dict

    def __post_init__(self):
        for s, miss in self.missing.items():
            if set(miss) & set(self.observed.get(s, ())):
                raise MetricsError(f"sample {s}: missing and observed tag sets overlap")

    @classmethod
    def from_matrices(cls, observed, removed) -> "CompletionTruth":
        """Build from an observed tag matrix and a same-shape 0/1 matrix of removed entries."""
        obs = np.asarray(observed, dtype=bool)
        rem = np.asarray(removed, dtype=bool)
        missing = {int(i): set(np.flatnonzero(rem[i]).tolist()) for i in range(rem.shape[0]) if rem[i].any()}
        seen = {int(i): set(np.flatnonzero(obs[i]).tolist()) for i in range(obs.shape[0])}
        return cls(missing, seen)

    @classmethod
    def from_pairs(cls, pairs, observed=None) -> "CompletionTruth":
        missing = {}
        for s, t in pairs:
            missing.setdefault(int(s), set()).add(int(t))
        seen = {}
        if observed is not None:
            obs = np.asarray(observed, dtype=bool)
            seen = {int(i): set(np.flatnonzero(obs[i]).tolist()) for i in range(obs.shape[0])}
        return cls(missing, seen)


def completion_metrics(recovered: dict, truth: CompletionTruth, N: int):
    """``(AP@N, AR@N, Coverage@N)`` averaged over samples that have held-out tags.

    Only the first ``N`` entries of each recovered list are scored. Recall
    skips samples with an empty held-out set.
    """
    if N < 1:
        raise MetricsError("N must be >= 1")
    precisions, recalls, covered = [], [], []
    for s in sorted(truth.missing):
        miss = truth.missing[s]
        top = list(recovered.get(s, []))[:N]
        hits = len(set(top) & set(miss))
        precisions.append(hits / N)
        covered.append(1.0 if hits else 0.0)
        if miss:
            recalls.append(hits / len(miss))
    if not precisions:
        raise MetricsError("no evaluable samples: truth lists no held-out tags")
    ar = float(np.mean(recalls)) if recalls else 0.0
    return float(np.mean(precisions)), ar, float(np.mean(covered))


def simulate_sparsity(tags, ratio: float, seed: int):
    """Zero ``floor(ratio * #positives)`` randomly chosen positive entries.

    Returns ``(sparsified, removed)`` where ``removed`` is a sorted ``(r, 2)``
    array of (sample, tag) pairs.
    """
    if not 0 <= ratio < 1:
        raise MetricsError(f"sparsity ratio {ratio} outside [0, 1)")
    Y = np.array(tags, dtype=np.uint8)
    rows, cols = np.nonzero(Y)
    count = int(np.floor(ratio * len(rows)))
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(len(rows), size=count, replace=False))
    removed = np.stack([rows[pick], cols[pick]], axis=1).astype(np.int64)
    Y[removed[:, 0], removed[:, 1]] = 0
    return Y, removed
