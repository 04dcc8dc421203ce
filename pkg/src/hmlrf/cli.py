"""Command line front end.

Every stochastic command takes a mandatory ``--seed``. Errors are reported as
``error [<stage>]: <cause>`` with exit status 1.
"""
import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from . import data, pipeline
from .affinity import DEFAULT_KNN, knn_sparsify
from .completion import METHODS, CompletionScores, completion_scores, recover_all
from .errors import CompletionError, HmlrfError, MetricsError
from .forest import ForestConfig, HmlForest, train_forest
from .hierarchy import DEFAULT_TOPICS, build_hierarchy
from .metrics import CompletionTruth, clustering_report, completion_metrics
from .spectral import cluster_affinity
from .synthetic import make_planted
from .tagstats import correlation_tables

MODE_CHOICE = click.Choice(["full", "flat-tags", "no-corr"])


def _parse_range(text):
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",") if v.strip()]


def _parse_grid(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Hierarchical multi-label random forest: clustering and tag completion."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


@cli.command("gen-synthetic")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", required=True, type=int)
@click.option("--n", "n_samples", default=400, show_default=True)
@click.option("--clusters", default=4, show_default=True)
@click.option("--features", default=10, show_default=True)
@click.option("--separation", default=3.0, show_default=True, help="Centre distance in units of sigma.")
@click.option("--specific", default=3, show_default=True, help="Specific tags per cluster.")
@click.option("--prob", default=0.6, show_default=True, help="Within-cluster specific tag probability.")
def gen_synthetic(out, seed, n_samples, clusters, features, separation, specific, prob):
    """Write the planted-structure dataset directory."""
    ds = make_planted(n_samples, clusters, features, separation, specific, prob, seed)
    data.save_dataset_dir(ds, out)
    click.echo(f"wrote {ds.n} samples, {ds.m} tags to {out}")


@cli.command("build-hierarchy")
@click.option("--tags", "tags_path", required=True, type=click.Path())
@click.option("--layers", required=True, type=int)
@click.option("--topics", default=DEFAULT_TOPICS, show_default=True)
@click.option("--seed", required=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def build_hierarchy_cmd(tags_path, layers, topics, seed, out):
    """Estimate a tag hierarchy from a flat tag CSV."""
    names, Y = data.load_tags(tags_path)
    h = build_hierarchy(Y, topics, layers, seed)
    data.save_hierarchy(h, names, out)


@cli.command("tag-stats")
@click.option("--dataset", required=True, type=click.Path())
@click.option("--target-layer", default=0, show_default=True, help="0 is the most abstract layer.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def tag_stats(dataset, target_layer, out):
    """Dump co-occurrence and mutual-exclusion tables for one target layer."""
    ds = data.load_dataset_dir(dataset)
    if not 0 <= target_layer < ds.hierarchy.num_layers - 1:
        raise HmlrfError(f"target layer {target_layer} has no subordinate layers")
    corr = correlation_tables(ds.tags, ds.hierarchy)
    pipeline.dump_json(corr.to_json(target_layer, ds.tag_names), out)


@cli.command()
@click.option("--dataset", required=True, type=click.Path())
@click.option("--tau", default=1000, show_default=True)
@click.option("--phi", default=3, show_default=True)
@click.option("--nu-try", type=int, default=None, help="Features per node [floor(sqrt(d))].")
@click.option("--mode", type=MODE_CHOICE, default="full", show_default=True)
@click.option("--seed", required=True, type=int)
@click.option("--jobs", default=1, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def train(dataset, tau, phi, nu_try, mode, seed, jobs, out):
    """Train a forest and write its JSON dump."""
    ds = data.load_dataset_dir(dataset)
    forest = train_forest(ds, ForestConfig(tau, phi, nu_try, mode), seed, n_jobs=jobs)
    forest.save(out)


@cli.command()
@click.option("--forest", "forest_path", required=True, type=click.Path())
@click.option("--knn", default=DEFAULT_KNN, show_default=True, help="0 keeps the dense matrix.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def affinity(forest_path, knn, out):
    """Forest affinity matrix, kNN-sparsified, as CSV."""
    from .affinity import forest_affinity
    A = forest_affinity(HmlForest.load(forest_path))
    if knn > 0:
        A = knn_sparsify(A, min(knn, A.shape[0] - 1))
    data.save_matrix(A, out)


@cli.command()
@click.option("--affinity", "affinity_path", required=True, type=click.Path())
@click.option("--p", required=True, type=int, help="Number of clusters.")
@click.option("--knn", default=DEFAULT_KNN, show_default=True)
@click.option("--seed", required=True, type=int)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def cluster(affinity_path, p, knn, seed, out):
    """Spectral clustering of an affinity CSV; one cluster id per row."""
    A = data.load_matrix(affinity_path)
    data.save_labels(cluster_affinity(A, p, min(knn, A.shape[0] - 1), seed), out)


@cli.command()
@click.option("--tags", "tags_path", required=True, type=click.Path(), help="Observed tag CSV.")
@click.option("--method", type=click.Choice(METHODS), default="am", show_default=True)
@click.option("--forest", "forest_path", type=click.Path(), help="Needed by ln.")
@click.option("--affinity", "affinity_path", type=click.Path(), help="Needed by am.")
@click.option("--clusters", "clusters_path", type=click.Path(), help="Needed by gc.")
@click.option("--knn", default=DEFAULT_KNN, show_default=True)
@click.option("--topn", default=5, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def complete(tags_path, method, forest_path, affinity_path, clusters_path, knn, topn, out):
    """Rank unobserved tags per sample and keep the top N."""
    names, Y = data.load_tags(tags_path)
    forest = HmlForest.load(forest_path) if forest_path else None
    A = data.load_matrix(affinity_path) if affinity_path else None
    clusters = data.load_labels(clusters_path) if clusters_path else None
    n = Y.shape[0]
    for label, arr in (("affinity", A), ("clusters", clusters)):
        if arr is not None and len(arr) != n:
            raise CompletionError(f"{label} covers {len(arr)} samples, tags cover {n}")
    if forest is not None and forest.n_samples != n:
        raise CompletionError(f"forest covers {forest.n_samples} samples, tags cover {n}")
    sc = completion_scores(method, Y, forest=forest, clusters=clusters, affinity=A, k=min(knn, n - 1))
    pipeline.write_completed(recover_all(sc, topn), sc.scores, names, out)


@cli.command()
@click.option("--pred", required=True, type=click.Path())
@click.option("--truth", required=True, type=click.Path())
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def evaluate(pred, truth, out):
    """Purity, NMI, RI, ARI and pairwise F1 of a clustering."""
    report = clustering_report(data.load_labels(pred), data.load_labels(truth))
    pipeline.dump_json(report, out)
    click.echo(json.dumps(report, sort_keys=True))


@cli.command("evaluate-completion")
@click.option("--recovered", required=True, type=click.Path())
@click.option("--truth", required=True, type=click.Path(), help="CSV of held-out sample,tag pairs.")
@click.option("--n", "n_spec", default="1..5", show_default=True, help="N values, e.g. 1..5 or 1,3.")
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def evaluate_completion(recovered, truth, n_spec, out):
    """AP@N, AR@N and Coverage@N of recovered tags."""
    rec = pipeline.read_completed(recovered)
    pairs = pipeline.read_removed(truth)
    names = sorted({t for _, t in pairs} | {t for tags in rec.values() for t in tags})
    index = {t: i for i, t in enumerate(names)}
    truth_obj = CompletionTruth.from_pairs([(s, index[t]) for s, t in pairs])
    rec_ids = {s: [index[t] for t in tags] for s, tags in rec.items()}
    report = {}
    for N in _parse_range(n_spec):
        ap, ar, cov = completion_metrics(rec_ids, truth_obj, N)
        shortest = min((len(rec_ids.get(s, [])) for s in truth_obj.missing), default=0)
        if shortest < N:
            click.echo(f"warning: some samples list fewer than {N} recovered tags", err=True)
        report.update({f"AP@{N}": ap, f"AR@{N}": ar, f"Coverage@{N}": cov})
    pipeline.dump_json(report, out)
    click.echo(json.dumps(report, sort_keys=True))


def _run_options(f):
    opts = [
        click.option("--dataset", required=True, type=click.Path()),
        click.option("--p", required=True, type=int, help="Number of clusters."),
        click.option("--seed", required=True, type=int),
        click.option("--tau", default=1000, show_default=True),
        click.option("--phi", default=3, show_default=True),
        click.option("--nu-try", type=int, default=None),
        click.option("--knn", "kappa", default=DEFAULT_KNN, show_default=True),
        click.option("--jobs", default=1, show_default=True),
        click.option("--topics", default=DEFAULT_TOPICS, show_default=True),
        click.option("--hierarchy-layers", type=int, default=None,
                     help="Rebuild a hierarchy with this many layers from the observed tags."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


@cli.command()
@_run_options
@click.option("--mode", type=MODE_CHOICE, default="full", show_default=True)
@click.option("--sparsity", default=0.4, show_default=True, help="Fraction of positive tags held out.")
@click.option("--method", type=click.Choice(METHODS), default="am", show_default=True)
@click.option("--topn", default=3, show_default=True)
@click.option("--out", required=True, type=click.Path(file_okay=False))
def run(dataset, p, seed, tau, phi, nu_try, kappa, jobs, topics, hierarchy_layers,
        mode, sparsity, method, topn, out):
    """Full pipeline; writes every artifact and metrics.json into OUT."""
    cfg = pipeline.RunConfig(p=p, seed=seed, tau=tau, phi=phi, nu_try=nu_try, kappa=kappa,
                             mode=mode, sparsity=sparsity, method=method, topn=topn,
                             hierarchy_layers=hierarchy_layers, topics=topics, jobs=jobs)
    metrics = pipeline.run_pipeline(dataset, out, cfg)
    click.echo(json.dumps(metrics, sort_keys=True))


@cli.command()
@_run_options
@click.option("--grid", default="0,0.1,0.2,0.3,0.4,0.5", show_default=True, help="Sparsity ratios.")
@click.option("--repeats", default=3, show_default=True)
@click.option("--out", required=True, type=click.Path(dir_okay=False))
def ablation(dataset, p, seed, tau, phi, nu_try, kappa, jobs, topics, hierarchy_layers,
             grid, repeats, out):
    """NMI for every mode x sparsity x repeat cell, as CSV."""
    ds = data.load_dataset_dir(dataset)
    cfg = pipeline.RunConfig(p=p, seed=seed, tau=tau, phi=phi, nu_try=nu_try, kappa=kappa,
                             hierarchy_layers=hierarchy_layers, topics=topics)
    rows = pipeline.run_ablation(ds, cfg, _parse_grid(grid), repeats, jobs=jobs)
    Path(out).write_text(pipeline.ablation_csv(rows))


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="hmlrf", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        click.echo("aborted", err=True)
        return 1
    except HmlrfError as exc:
        click.echo(f"error [{exc.module}]: {exc}", err=True)
        return 1
    except OSError as exc:
        click.echo(f"error [io]: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
