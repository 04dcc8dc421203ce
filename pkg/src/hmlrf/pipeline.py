"""End-to-end runs: clustering + completion pipeline and the ablation grid."""
from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import data
from .affinity import DEFAULT_KNN, forest_affinity, knn_sparsify
from .completion import completion_scores, recover_all
from .data import Dataset, format_real
from .errors import HmlrfError, MetricsError
from .forest import MODES, ForestConfig, parse_mode, train_forest
from .hierarchy import DEFAULT_TOPICS, build_hierarchy
from .metrics import CompletionTruth, clustering_report, completion_metrics, nmi, simulate_sparsity
from .spectral import cluster_affinity
from .tagstats import correlation_tables

log = logging.getLogger(__name__)

REPEAT_SEED_STRIDE = 1000
METRIC_FIELDS = ("purity", "nmi", "ri", "ari", "f1", "ap", "ar", "coverage")


@dataclass(frozen=True)
class RunConfig:
    p: int
    seed: int
    tau: int = 1000
    phi: int = 3
    nu_try: Optional[int] = None
    kappa: int = DEFAULT_KNN
    mode: str = "full"
    sparsity: float = 0.0
    method: str = "am"
    topn: int = 3
    hierarchy_layers: Optional[int] = None   # set to rebuild the hierarchy from tags
    topics: int = DEFAULT_TOPICS
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", parse_mode(self.mode))
        for name in ("p", "tau", "phi", "kappa", "topn", "topics", "jobs"):
            if getattr(self, name) < 1:
                raise HmlrfError(f"{name} must be positive")

    def forest_config(self) -> ForestConfig:
        return ForestConfig(self.tau, self.phi, self.nu_try, self.mode)


@dataclass
class RunResult:
    dataset: Dataset          # with observed (sparsified) tags
    removed: np.ndarray       # (r, 2) held-out (sample, tag) pairs
    forest: object
    affinity: np.ndarray      # dense forest affinity
    clusters: np.ndarray
    recovered: dict
    scores: np.ndarray
    metrics: dict


def _kappa(config, n):
    return min(config.kappa, n - 1)


def prepare(dataset: Dataset, config: RunConfig):
    """Apply tag sparsity and the optional hierarchy rebuild. Returns ``(dataset, removed)``."""
    observed, removed = simulate_sparsity(dataset.tags, config.sparsity, config.seed)
    if config.sparsity == 0 and dataset.ground_truth_tags is not None:
        extra = np.argwhere((dataset.ground_truth_tags == 1) & (dataset.tags == 0))
        removed = extra.astype(np.int64)
    hierarchy = None
    if config.hierarchy_layers is not None:
        hierarchy = build_hierarchy(observed, config.topics, config.hierarchy_layers, config.seed)
    return dataset.with_tags(observed, hierarchy), removed


def execute(dataset: Dataset, config: RunConfig) -> RunResult:
    """Run every stage in memory."""
    ds, removed = prepare(dataset, config)
    forest = train_forest(ds, config.forest_config(), config.seed, n_jobs=config.jobs)
    A = forest_affinity(forest)
    k = _kappa(config, ds.n)
    clusters = cluster_affinity(A, config.p, k, config.seed)
    sc = completion_scores(config.method, ds.tags, forest=forest, clusters=clusters, affinity=A, k=k)
    recovered = recover_all(sc, config.topn)
    metrics = dict.fromkeys(METRIC_FIELDS)
    if dataset.ground_truth_clusters is not None:
        metrics.update(clustering_report(clusters, dataset.ground_truth_clusters))
    if len(removed):
        ap, ar, cov = completion_metrics(recovered, CompletionTruth.from_pairs(removed, ds.tags), config.topn)
        metrics.update({"ap": ap, "ar": ar, "coverage": cov})
    metrics["topn"] = config.topn
    return RunResult(ds, removed, forest, A, clusters, recovered, sc.scores, metrics)


# ------------------------------------------------------------------ artifacts

def write_removed(removed, tag_names, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "tag"])
        for s, t in removed:
            w.writerow([int(s), tag_names[int(t)]])


def read_removed(path) -> list:
    p = Path(path)
    if not p.is_file():
        raise data.DatasetError(f"file not found: {p}")
    with open(p, newline="") as fh:
        reader = csv.DictReader(fh)
        try:
            return [(int(r["sample"]), r["tag"]) for r in reader]
        except (KeyError, ValueError, TypeError) as exc:
            raise data.DatasetError(f"parse failure in {p}: expected columns sample,tag") from exc


def write_completed(recovered: dict, scores, tag_names, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample", "rank", "tag", "score"])
        for s in sorted(recovered):
            for rank, t in enumerate(recovered[s], start=1):
                w.writerow([s, rank, tag_names[t], format_real(scores[s, t])])


def read_completed(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise data.DatasetError(f"file not found: {p}")
    out = {}
    with open(p, newline="") as fh:
        try:
            rows = [(int(r["sample"]), int(r["rank"]), r["tag"]) for r in csv.DictReader(fh)]
        except (KeyError, ValueError, TypeError) as exc:
            raise data.DatasetError(f"parse failure in {p}: expected columns sample,rank,tag,score") from exc
    for s, rank, tag in sorted(rows):
        out.setdefault(s, []).append(tag)
    return out


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def run_pipeline(dataset_dir, out_dir, config: RunConfig) -> dict:
    """Run the full pipeline and write every intermediate artifact into ``out_dir``."""
    dataset = data.load_dataset_dir(dataset_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    res = execute(dataset, config)
    ds = res.dataset
    names = ds.tag_names
    data.save_tags(ds.tags, names, out / "observed_tags.csv")
    data.save_hierarchy(ds.hierarchy, names, out / "hierarchy.json")
    write_removed(res.removed, names, out / "removed.csv")
    if ds.hierarchy.num_layers > 1:
        corr = correlation_tables(ds.tags, ds.hierarchy)
        dump_json(corr.to_json(0, names), out / "corr.json")
    res.forest.save(out / "forest.json")
    data.save_matrix(knn_sparsify(res.affinity, _kappa(config, ds.n)), out / "affinity.csv")
    data.save_labels(res.clusters, out / "clusters.csv")
    write_completed(res.recovered, res.scores, names, out / "completed.csv")
    dump_json(res.metrics, out / "metrics.json")
    log.info("pipeline finished: %s", res.metrics)
    return res.metrics


# ------------------------------------------------------------------ ablation

def ablation_cells(grid: Sequence[float], repeats: int, seed: int, modes=MODES):
    return [(mode, float(s), seed + REPEAT_SEED_STRIDE * r)
            for mode in modes for s in grid for r in range(repeats)]


def run_ablation(dataset: Dataset, config: RunConfig, grid: Sequence[float], repeats: int,
                 modes=MODES, jobs: int = 1) -> list:
    """NMI for every (mode, sparsity, repeat seed) cell, in grid order."""
    if dataset.ground_truth_clusters is None:
        raise MetricsError("ablation needs ground-truth clusters")
    for s in grid:
        if not 0 <= s < 1:
            raise MetricsError(f"sparsity {s} outside [0, 1)")
    cells = ablation_cells(grid, repeats, config.seed, tuple(parse_mode(m) for m in modes))

    def one(cell):
        mode, sparsity, seed = cell
        cfg = replace(config, mode=mode, sparsity=sparsity, seed=seed, jobs=1)
        ds, _ = prepare(dataset, cfg)
        forest = train_forest(ds, cfg.forest_config(), seed)
        clusters = cluster_affinity(forest_affinity(forest), cfg.p, _kappa(cfg, ds.n), seed)
        return mode, sparsity, seed, nmi(clusters, dataset.ground_truth_clusters)

    if jobs == 1:
        return [one(c) for c in cells]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, cells))


def ablation_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["mode", "sparsity", "seed", "nmi"])
    for mode, sparsity, seed, score in rows:
        w.writerow([mode.replace("_", "-"), format_real(sparsity), seed, format_real(score)])
    return buf.getvalue()
