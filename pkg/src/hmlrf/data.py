"""Dataset types, validation and file I/O.

File formats
------------
features   headerless CSV, one sample per row, ``d`` comma separated reals
tags       CSV, header row of tag names, then ``n`` rows of 0/1 values
hierarchy  JSON ``{"layers": [[tag_name, ...], ...]}``, layer 0 most abstract
clusters   CSV, one integer id per row
"""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DatasetError


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def as_feature_matrix(X) -> np.ndarray:
    """Validate an ``n x d`` matrix of finite reals and return a read-only float64 copy."""
    X = np.array(X, dtype=np.float64)
    if X.ndim != 2:
        raise DatasetError(f"feature matrix must be 2-D, got shape {X.shape}")
    n, d = X.shape
    if n < 2 or d < 1:
        raise DatasetError(f"feature matrix needs n >= 2 and d >= 1, got {n}x{d}")
    if not np.all(np.isfinite(X)):
        raise DatasetError("feature matrix entries must be finite (no NaN/Inf)")
    return _readonly(X)


def as_tag_matrix(Y) -> np.ndarray:
    """Validate an ``n x m`` binary matrix and return a read-only uint8 copy."""
    Y = np.asarray(Y)
    if Y.ndim != 2:
        raise DatasetError(f"tag matrix must be 2-D, got shape {Y.shape}")
    if Y.size and not np.all((Y == 0) | (Y == 1)):
        raise DatasetError("tag matrix entries are exactly 0 or 1")
    return _readonly(Y.astype(np.uint8))


@dataclass(frozen=True)
class TagHierarchy:
    """Ordered partition of tag indices into abstractness layers.

    ``layers[0]`` is the most abstract layer. Indices are 0-based and sorted
    within each layer.
    """

    layers: tuple

    def __post_init__(self):
        layers = tuple(_readonly(np.sort(np.asarray(l, dtype=np.int64))) for l in self.layers)
        object.__setattr__(self, "layers", layers)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def num_tags(self) -> int:
        return int(sum(len(l) for l in self.layers))

    def validate(self, m: int) -> "TagHierarchy":
        if not self.layers:
            raise DatasetError("hierarchy needs at least one layer")
        seen = np.zeros(m, dtype=bool)
        for k, layer in enumerate(self.layers):
            if len(layer) == 0:
                raise DatasetError(f"hierarchy layer {k} is empty")
            if layer.min() < 0 or layer.max() >= m:
                raise DatasetError(f"hierarchy layer {k} references a tag outside 0..{m - 1}")
            if len(np.unique(layer)) != len(layer) or seen[layer].any():
                raise DatasetError("hierarchy layers pairwise disjoint violated: a tag is listed twice")
            seen[layer] = True
        if not seen.all():
            missing = np.flatnonzero(~seen).tolist()
            raise DatasetError(f"hierarchy layers must cover every tag; unassigned: {missing}")
        return self

    def layer_of(self) -> np.ndarray:
        """Layer index of every tag."""
        out = np.empty(self.num_tags, dtype=np.int64)
        for k, layer in enumerate(self.layers):
            out[layer] = k
        return out

    def subordinate(self, k: int) -> np.ndarray:
        """Tag indices in layers strictly below ``k``, ascending."""
        rest = self.layers[k + 1:]
        if not rest:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(rest))

    @classmethod
    def flat(cls, m: int) -> "TagHierarchy":
        return cls((np.arange(m),))

    @classmethod
    def from_names(cls, layers: Sequence[Sequence[str]], tag_names: Sequence[str]) -> "TagHierarchy":
        index = {name: j for j, name in enumerate(tag_names)}
        out = []
        for k, layer in enumerate(layers):
            ids = []
            for name in layer:
                if name not in index:
                    raise DatasetError(f"hierarchy layer {k} names unknown tag {name!r}")
                ids.append(index[name])
            out.append(ids)
        return cls(tuple(out)).validate(len(tag_names))

    def to_names(self, tag_names: Sequence[str]) -> list:
        return [[tag_names[j] for j in layer] for layer in self.layers]


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    tags: np.ndarray
    tag_names: tuple
    hierarchy: TagHierarchy
    ground_truth_clusters: Optional[np.ndarray] = None
    ground_truth_tags: Optional[np.ndarray] = None

    def __post_init__(self):
        X = as_feature_matrix(self.features)
        Y = as_tag_matrix(self.tags)
        n, m = Y.shape
        if X.shape[0] != n:
            raise DatasetError(f"dimension mismatch: {X.shape[0]} feature rows vs {n} tag rows")
        names = tuple(str(t) for t in self.tag_names)
        if len(names) != m:
            raise DatasetError(f"dimension mismatch: {len(names)} tag names for {m} tag columns")
        if len(set(names)) != m:
            raise DatasetError("tag names must be unique")
        self.hierarchy.validate(m)
        gc = self.ground_truth_clusters
        if gc is not None:
            gc = np.asarray(gc)
            if gc.shape != (n,):
                raise DatasetError(f"dimension mismatch: {gc.shape[0] if gc.ndim else 0} cluster ids for {n} samples")
            gc = _readonly(gc.astype(np.int64))
        gt = self.ground_truth_tags
        if gt is not None:
            gt = as_tag_matrix(gt)
            if gt.shape != (n, m):
                raise DatasetError(f"dimension mismatch: ground-truth tags {gt.shape} vs {(n, m)}")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "tags", Y)
        object.__setattr__(self, "tag_names", names)
        object.__setattr__(self, "ground_truth_clusters", gc)
        object.__setattr__(self, "ground_truth_tags", gt)

    @property
    def n(self) -> int:
        return self.tags.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def m(self) -> int:
        return self.tags.shape[1]

    def with_tags(self, tags, hierarchy: Optional[TagHierarchy] = None) -> "Dataset":
        """Copy with the observed tag matrix (and optionally hierarchy) replaced."""
        return Dataset(self.features, tags, self.tag_names, hierarchy or self.hierarchy,
                       self.ground_truth_clusters, self.ground_truth_tags)


# ---------------------------------------------------------------- number text

def format_real(x: float) -> str:
    """Shortest decimal text that parses back to exactly ``x``."""
    x = float(x)
    if x == 0.0:
        return "-0" if math.copysign(1.0, x) < 0 else "0"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def save_matrix(matrix, path) -> None:
    """Write a real matrix as headerless CSV with round-trip exact numbers."""
    M = np.asarray(matrix, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    try:
        with open(path, "w", newline="") as fh:
            for row in M:
                fh.write(",".join(format_real(v) for v in row))
                fh.write("\n")
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc.strerror or exc}") from exc


def _check_file(path) -> Path:
    p = Path(path)
    if not p.is_file():
        raise DatasetError(f"file not found: {p}")
    return p


def load_matrix(path) -> np.ndarray:
    """Read a headerless numeric CSV into a 2-D float64 array."""
    p = _check_file(path)
    rows = []
    with open(p, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DatasetError(f"parse failure in {p} line {lineno}: {exc}") from exc
    if not rows:
        raise DatasetError(f"parse failure: {p} holds no rows")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DatasetError(f"parse failure in {p}: ragged rows (widths {sorted(widths)})")
    return np.array(rows, dtype=np.float64)


def load_tags(path):
    """Read a tag CSV. Returns ``(names, matrix)``."""
    p = _check_file(path)
    with open(p, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"parse failure: {p} is empty") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DatasetError(f"dimension mismatch in {p} line {lineno}: "
                                   f"{len(row)} values for {len(header)} tags")
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DatasetError(f"parse failure in {p} line {lineno}: {exc}") from exc
    Y = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return header, as_tag_matrix(Y)


def save_tags(tags, names, path) -> None:
    Y = np.asarray(tags)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(names) + "\n")
            for row in Y:
                fh.write(",".join(str(int(v)) for v in row) + "\n")
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc.strerror or exc}") from exc


def load_hierarchy(path, tag_names) -> TagHierarchy:
    p = _check_file(path)
    try:
        doc = json.loads(p.read_text())
        layers = doc["layers"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise DatasetError(f"parse failure in {p}: expected {{\"layers\": [[...], ...]}}") from exc
    if not isinstance(layers, list) or not all(isinstance(l, list) for l in layers):
        raise DatasetError(f"parse failure in {p}: layers must be a list of lists")
    return TagHierarchy.from_names(layers, tag_names)


def save_hierarchy(hierarchy: TagHierarchy, tag_names, path) -> None:
    Path(path).write_text(json.dumps({"layers": hierarchy.to_names(tag_names)}, indent=1) + "\n")


def load_labels(path) -> np.ndarray:
    """Read a one-integer-per-row CSV."""
    M = load_matrix(path)
    if M.shape[1] != 1:
        raise DatasetError(f"parse failure in {path}: expected one id per row, got {M.shape[1]} columns")
    if not np.all(M == np.round(M)):
        raise DatasetError(f"parse failure in {path}: cluster ids must be integers")
    return M[:, 0].astype(np.int64)


def save_labels(labels, path) -> None:
    try:
        with open(path, "w") as fh:
            fh.writelines(f"{int(c)}\n" for c in labels)
    except OSError as exc:
        raise DatasetError(f"cannot write {path}: {exc.strerror or exc}") from exc


def load_dataset(features_path, tags_path, hierarchy_path=None, truth_clusters_path=None,
                 truth_tags_path=None) -> Dataset:
    """Load and validate a dataset from its component files.

    Without ``hierarchy_path`` every tag goes into a single layer.
    ``truth_tags_path`` is a tag CSV with the same header as ``tags_path``.
    Nothing is returned unless every component validates.
    """
    X = load_matrix(features_path)
    names, Y = load_tags(tags_path)
    if hierarchy_path is not None:
        hierarchy = load_hierarchy(hierarchy_path, names)
    else:
        hierarchy = TagHierarchy.flat(len(names))
    gc = load_labels(truth_clusters_path) if truth_clusters_path is not None else None
    gt = None
    if truth_tags_path is not None:
        gt_names, gt = load_tags(truth_tags_path)
        if list(gt_names) != list(names):
            raise DatasetError("dimension mismatch: ground-truth tag header differs from tag header")
    return Dataset(X, Y, tuple(names), hierarchy, gc, gt)


# File names used for a dataset directory.
FEATURES_FILE = "features.csv"
TAGS_FILE = "tags.csv"
HIERARCHY_FILE = "hierarchy.json"
CLUSTERS_FILE = "clusters.csv"
TRUTH_TAGS_FILE = "truth_tags.csv"


def load_dataset_dir(directory) -> Dataset:
    """Load a dataset directory (``features.csv``, ``tags.csv`` and optional extras)."""
    root = Path(directory)
    if not root.is_dir():
        raise DatasetError(f"dataset directory not found: {root}")

    def opt(name):
        p = root / name
        return p if p.is_file() else None

    return load_dataset(root / FEATURES_FILE, root / TAGS_FILE, opt(HIERARCHY_FILE),
                        opt(CLUSTERS_FILE), opt(TRUTH_TAGS_FILE))


def save_dataset_dir(dataset: Dataset, directory) -> None:
    root = Path(directory)
    os.makedirs(root, exist_ok=True)
    save_matrix(dataset.features, root / FEATURES_FILE)
    save_tags(dataset.tags, dataset.tag_names, root / TAGS_FILE)
    save_hierarchy(dataset.hierarchy, dataset.tag_names, root / HIERARCHY_FILE)
    if dataset.ground_truth_clusters is not None:
        save_labels(dataset.ground_truth_clusters, root / CLUSTERS_FILE)
    if dataset.ground_truth_tags is not None:
        save_tags(dataset.ground_truth_tags, dataset.tag_names, root / TRUTH_TAGS_FILE)
