"""Hierarchical multi-label random forests for clustering and tag completion."""
from ._accel import backend
from .affinity import forest_affinity, knn_sparsify, normalize
from .completion import completion_scores, recover_all, recover_topn
from .data import Dataset, TagHierarchy, load_dataset, load_dataset_dir, save_dataset_dir
from .errors import HmlrfError
from .forest import ForestConfig, HmlForest, train_forest, train_tree
from .hierarchy import build_hierarchy
from .metrics import clustering_report, completion_metrics, nmi, simulate_sparsity
from .pipeline import RunConfig, execute, run_ablation, run_pipeline
from .spectral import cluster_affinity
from .synthetic import make_planted
from .tagstats import correlation_tables, soft_scores

__version__ = "0.1.0"

__all__ = [
    "Dataset", "ForestConfig", "HmlForest", "HmlrfError", "RunConfig", "TagHierarchy",
    "backend", "build_hierarchy", "cluster_affinity", "clustering_report", "completion_metrics",
    "completion_scores", "correlation_tables", "execute", "forest_affinity", "knn_sparsify",
    "load_dataset", "load_dataset_dir", "make_planted", "nmi", "normalize", "recover_all",
    "recover_topn", "run_ablation", "run_pipeline", "save_dataset_dir", "simulate_sparsity",
    "soft_scores", "train_forest", "train_tree",
]
