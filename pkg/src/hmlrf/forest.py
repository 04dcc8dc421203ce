"""Hierarchical multi-label random forest.

Visual features drive the splits; tags only score them. At every node the
gain is the sum of per-tag Gini gains over the *target layer*: the most
abstract hierarchy layer whose tags are not constant on the node. In ``full``
mode, samples carrying no positive tag in the target layer are weighed with
soft scores derived from cross-layer tag correlations.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ._kernels import GAIN_EPS, best_split
from .data import Dataset, TagHierarchy
from .errors import ForestError
from .tagstats import correlation_tables, missing_rows, soft_scores

MODES = ("full", "flat_tags", "no_corr")
FORMAT_VERSION = 1


def parse_mode(mode: str) -> str:
    m = str(mode).replace("-", "_").lower()
    if m not in MODES:
        raise ForestError(f"unknown mode {mode!r}; expected one of full, flat-tags, no-corr")
    return m


@dataclass(frozen=True)
class ForestConfig:
    tau: int = 1000
    phi: int = 3
    nu_try: Optional[int] = None   # None -> floor(sqrt(d))
    mode: str = "full"

    def __post_init__(self):
        object.__setattr__(self, "mode", parse_mode(self.mode))
        if self.tau < 1:
            raise ForestError("tau must be >= 1")
        if self.phi < 1:
            raise ForestError("phi must be >= 1")
        if self.nu_try is not None and self.nu_try < 1:
            raise ForestError("nu_try must be >= 1")

    def features_per_node(self, d: int) -> int:
        if self.nu_try is None:
            return max(1, math.isqrt(d))
        return min(self.nu_try, d)


# ------------------------------------------------------------------ impurity

def gini(pos_mass: float, neg_mass: float) -> float:
    """Binary Gini impurity ``1 - p^2 - (1-p)^2``."""
    total = pos_mass + neg_mass
    if total <= 0:
        raise ForestError("Gini impurity of an empty node")
    p = pos_mass / total
    return 1.0 - p * p - (1.0 - p) * (1.0 - p)


@dataclass(frozen=True)
class ClassMass:
    """Positive and negative mass per tag accumulated over a sample set."""

    pos: np.ndarray
    neg: np.ndarray

    @classmethod
    def of(cls, wp, wn, idx=None) -> "ClassMass":
        wp = np.asarray(wp, dtype=np.float64)
        wn = np.asarray(wn, dtype=np.float64)
        if idx is not None:
            wp, wn = wp[idx], wn[idx]
        return cls(wp.sum(axis=0), wn.sum(axis=0))

    @property
    def total(self):
        return self.pos + self.neg


def single_tag_gain(S: ClassMass, L: ClassMass, R: ClassMass, tag: int) -> float:
    """Mass-weighted Gini gain of one tag; 0 when the tag has no mass on the node."""
    ts = S.total[tag]
    if ts <= 0:
        return 0.0
    g = gini(S.pos[tag], S.neg[tag])
    for child in (L, R):
        tc = child.total[tag]
        if tc > 0:
            g -= (tc / ts) * gini(child.pos[tag], child.neg[tag])
    return float(g)


def target_layer(node_tags, hierarchy: TagHierarchy) -> Optional[int]:
    """Index of the first layer with a non-constant tag over the node's rows, else None."""
    Y = np.asarray(node_tags)
    if Y.shape[0] == 0:
        raise ForestError("target layer of an empty node")
    impure = Y.max(axis=0) != Y.min(axis=0)
    for k, layer in enumerate(hierarchy.layers):
        if impure[layer].any():
            return k
    return None


# ------------------------------------------------------------- tag weighting

def layer_weights(tags, hierarchy: TagHierarchy, k: int, mode: str, corr=None):
    """Per-sample positive/negative mass for every tag of layer ``k``.

    Labelled rows count as hard 0/1 evidence. Rows with no positive tag in the
    layer (the missing set) are, when subordinate layers exist, soft-weighted
    with ``w+ = s+ / (s+ + s-)`` in ``full`` mode and dropped otherwise. On the
    last layer nothing can be inferred, so those rows stay hard negatives.
    """
    mode = parse_mode(mode)
    Y = np.asarray(tags, dtype=np.float64)
    layer = hierarchy.layers[k]
    wp = Y[:, layer].copy()
    wn = 1.0 - wp
    if mode == "flat_tags" or k == hierarchy.num_layers - 1:
        return wp, wn
    rows = missing_rows(Y, layer)
    if len(rows) == 0:
        return wp, wn
    wp[rows] = 0.0
    wn[rows] = 0.0
    if mode == "full":
        if corr is None:
            corr = correlation_tables(tags, hierarchy)
        soft = soft_scores(tags, hierarchy, k, corr)
        total = soft.positive + soft.negative
        has = total > 0
        frac = np.divide(soft.positive, total, out=np.zeros_like(total), where=has)
        wp[rows] = np.where(has, frac, 0.0)
        wn[rows] = np.where(has, 1.0 - frac, 0.0)
    return wp, wn


def hml_gain(tags, hierarchy: TagHierarchy, samples, left_mask, mode="full", corr=None) -> float:
    """Layered multi-tag gain of splitting ``samples`` into ``left_mask`` / rest.

    ``flat_tags`` mode sums over every tag; the other modes sum over the
    node's target layer. Returns 0 when the node has no target layer.
    Reference implementation: builds the masses directly, no kernels.
    """
    mode = parse_mode(mode)
    Y = np.asarray(tags)
    samples = np.asarray(samples)
    left_mask = np.asarray(left_mask, dtype=bool)
    if mode == "flat_tags":
        hierarchy = TagHierarchy.flat(Y.shape[1])
    k = target_layer(Y[samples], hierarchy)
    if k is None:
        return 0.0
    wp, wn = layer_weights(Y, hierarchy, k, mode, corr)
    S = ClassMass.of(wp, wn, samples)
    L = ClassMass.of(wp, wn, samples[left_mask])
    R = ClassMass.of(wp, wn, samples[~left_mask])
    return float(sum(single_tag_gain(S, L, R, i) for i in range(len(S.pos))))


# ------------------------------------------------------------- split search

@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    gain: float
    left: np.ndarray
    right: np.ndarray


def optimise_split(X, wp, wn, samples, nu_try, rng) -> Optional[Split]:
    """Best axis-aligned cut of ``samples`` over ``nu_try`` randomly drawn features.

    ``wp``/``wn`` are full-dataset mass matrices over the node's target tags.
    Candidate thresholds are midpoints between consecutive distinct values.
    Returns None when no cut has positive gain.
    """
    X = np.asarray(X)
    samples = np.asarray(samples)
    d = X.shape[1]
    feats = rng.choice(d, size=min(nu_try, d), replace=False)
    Xs = X[np.ix_(samples, feats)]
    wps = wp[samples]
    wns = wn[samples]
    pos, thr, gain = best_split(Xs, wps, wns, wps.sum(axis=0), wns.sum(axis=0))
    if pos < 0:
        return None
    goes_left = Xs[:, pos] < thr
    return Split(int(feats[pos]), thr, gain, samples[goes_left], samples[~goes_left])


# ------------------------------------------------------------------- trees

@dataclass(frozen=True)
class Tree:
    """Array-encoded binary tree in pre-order; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    gain: np.ndarray
    layer: np.ndarray
    leaf_of: np.ndarray    # (n,) leaf node index of every training sample

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)

    def leaf_samples(self) -> dict:
        order = np.argsort(self.leaf_of, kind="stable")
        ids = self.leaf_of[order]
        bounds = np.flatnonzero(np.diff(ids)) + 1
        return {int(g[0]): s for g, s in zip(np.split(ids, bounds), np.split(order, bounds))}

    def equals(self, other: "Tree") -> bool:
        return all(np.array_equal(getattr(self, f), getattr(other, f))
                   for f in ("feature", "threshold", "left", "right", "gain", "layer", "leaf_of"))


class _Context:
    """Per-dataset state shared read-only by every tree."""

    def __init__(self, dataset: Dataset, config: ForestConfig):
        self.X = dataset.features
        self.Y = dataset.tags
        self.phi = config.phi
        self.nu_try = config.features_per_node(dataset.d)
        if config.mode == "flat_tags":
            self.hierarchy = TagHierarchy.flat(dataset.m)
        else:
            self.hierarchy = dataset.hierarchy
        corr = None
        if config.mode == "full" and self.hierarchy.num_layers > 1:
            corr = correlation_tables(self.Y, self.hierarchy)
        self.weights = [layer_weights(self.Y, self.hierarchy, k, config.mode, corr)
                        for k in range(self.hierarchy.num_layers)]


def _grow(ctx: _Context, seed: int) -> Tree:
    rng = np.random.default_rng(seed)
    n = ctx.X.shape[0]
    feature, threshold, left, right, gain, layer = [], [], [], [], [], []
    leaf_of = np.full(n, -1, dtype=np.int64)
    stack = [(np.arange(n), -1, 0)]
    while stack:
        samples, parent, side = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if side == 0 else right)[parent] = node
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        gain.append(0.0)
        layer.append(-1)
        split = None
        if len(samples) > ctx.phi:
            k = target_layer(ctx.Y[samples], ctx.hierarchy)
            if k is not None:
                wp, wn = ctx.weights[k]
                split = optimise_split(ctx.X, wp, wn, samples, ctx.nu_try, rng)
        if split is None:
            leaf_of[samples] = node
            continue
        feature[node] = split.feature
        threshold[node] = split.threshold
        gain[node] = split.gain
        layer[node] = k
        stack.append((split.right, node, 1))
        stack.append((split.left, node, 0))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold, dtype=np.float64),
                np.array(left, dtype=np.int64), np.array(right, dtype=np.int64),
                np.array(gain, dtype=np.float64), np.array(layer, dtype=np.int64), leaf_of)


def train_tree(dataset: Dataset, config: ForestConfig, seed: int) -> Tree:
    """Grow one tree on all samples until nodes hold <= phi samples, are tag-pure, or cannot split."""
    return _grow(_Context(dataset, config), seed)


@dataclass
class HmlForest:
    trees: list
    seed: int
    config: ForestConfig
    n_samples: int = field(default=0)

    @property
    def tau(self) -> int:
        return len(self.trees)

    def leaf_ids(self) -> np.ndarray:
        """``(tau, n)`` leaf node index of each sample in each tree."""
        return np.stack([t.leaf_of for t in self.trees])

    def equals(self, other: "HmlForest") -> bool:
        return (self.tau == other.tau and self.config == other.config
                and all(a.equals(b) for a, b in zip(self.trees, other.trees)))

    # -------------------------------------------------------- serialisation

    def to_dict(self) -> dict:
        trees = []
        for t in self.trees:
            groups = t.leaf_samples()
            nodes = []
            for i in range(t.n_nodes):
                if t.feature[i] < 0:
                    nodes.append({"id": i, "samples": groups.get(i, np.empty(0, int)).tolist()})
                else:
                    nodes.append({"id": i, "f": int(t.feature[i]), "theta": float(t.threshold[i]),
                                  "left": int(t.left[i]), "right": int(t.right[i]),
                                  "gain": float(t.gain[i]), "layer": int(t.layer[i])})
            trees.append({"nodes": nodes})
        return {"format": "hmlrf-forest", "version": FORMAT_VERSION, "seed": self.seed,
                "n_samples": self.n_samples, "config": asdict(self.config), "trees": trees}

    @classmethod
    def from_dict(cls, doc: dict) -> "HmlForest":
        if doc.get("format") != "hmlrf-forest":
            raise ForestError("not a forest dump")
        if doc.get("version") != FORMAT_VERSION:
            raise ForestError(f"unsupported forest format version {doc.get('version')}")
        n = int(doc["n_samples"])
        trees = []
        for td in doc["trees"]:
            nodes = td["nodes"]
            size = len(nodes)
            feature = np.full(size, -1, dtype=np.int64)
            threshold = np.zeros(size)
            left = np.full(size, -1, dtype=np.int64)
            right = np.full(size, -1, dtype=np.int64)
            gain = np.zeros(size)
            layer = np.full(size, -1, dtype=np.int64)
            leaf_of = np.full(n, -1, dtype=np.int64)
            for nd in nodes:
                i = nd["id"]
                if "samples" in nd:
                    leaf_of[np.asarray(nd["samples"], dtype=np.int64)] = i
                else:
                    feature[i], threshold[i] = nd["f"], nd["theta"]
                    left[i], right[i] = nd["left"], nd["right"]
                    gain[i], layer[i] = nd["gain"], nd["layer"]
            if (leaf_of < 0).any():
                raise ForestError("forest dump: leaves do not cover every sample")
            trees.append(Tree(feature, threshold, left, right, gain, layer, leaf_of))
        return cls(trees, int(doc["seed"]), ForestConfig(**doc["config"]), n)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), separators=(",", ":")))

    @classmethod
    def load(cls, path) -> "HmlForest":
        p = Path(path)
        if not p.is_file():
            raise ForestError(f"file not found: {p}")
        try:
            doc = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ForestError(f"parse failure in {p}: {exc}") from exc
        return cls.from_dict(doc)


def train_forest(dataset: Dataset, config: ForestConfig, seed: int, n_jobs: int = 1) -> HmlForest:
    """Train ``config.tau`` trees on the full sample set; tree ``t`` uses seed ``seed + t``.

    Trees are independent, so ``n_jobs`` only changes wall time, never the result.
    """
    ctx = _Context(dataset, config)
    seeds = [seed + t for t in range(config.tau)]
    if n_jobs == 1:
        trees = [_grow(ctx, s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs if n_jobs > 0 else None) as pool:
            trees = list(pool.map(lambda s: _grow(ctx, s), seeds))
    return HmlForest(trees, seed, config, dataset.n)


__all__ = [
    "GAIN_EPS", "MODES", "ClassMass", "ForestConfig", "HmlForest", "Split", "Tree",
    "gini", "hml_gain", "layer_weights", "optimise_split", "parse_mode", "single_tag_gain",
    "target_layer", "train_forest", "train_tree",
]
