"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The planted-data criteria share a cache of pipeline runs so each
(mode, sparsity, seed) cell is computed once.
"""
import time

import numpy as np
import pytest

from hmlrf import data
from hmlrf.affinity import forest_affinity, knn_sparsify, normalize
from hmlrf.completion import scores_am, scores_gc, scores_ln
from hmlrf.data import TagHierarchy
from hmlrf.forest import ForestConfig, layer_weights, optimise_split, target_layer, train_forest, train_tree
from hmlrf.metrics import adjusted_rand, nmi, pair_f1, purity, rand_index
from hmlrf.pipeline import RunConfig, execute, run_pipeline
from hmlrf.spectral import cluster_affinity, top_eigenvectors
from hmlrf.synthetic import make_planted
from hmlrf.tagstats import correlation_tables, soft_scores

import oracles
from conftest import random_dataset, record_criterion

SEEDS = range(5)
TAU = 200
_RUNS = {}


def planted_run(mode, sparsity, seed):
    key = (mode, sparsity, seed)
    if key not in _RUNS:
        ds = make_planted(seed=seed)
        cfg = RunConfig(p=4, seed=seed, tau=TAU, phi=3, kappa=20, mode=mode, sparsity=sparsity, topn=3)
        start = time.perf_counter()
        res = execute(ds, cfg)
        _RUNS[key] = (res, time.perf_counter() - start)
    return _RUNS[key]


def mean_nmi(mode, sparsity):
    return float(np.mean([planted_run(mode, sparsity, s)[0].metrics["nmi"] for s in SEEDS]))


def test_criterion_01_split_oracle():
    rng = np.random.default_rng(1)
    worst = 0.0
    start = time.perf_counter()
    for _ in range(1000):
        n = int(rng.integers(2, 9))
        m = int(rng.integers(2, 7))
        ds = random_dataset(rng, n=n, d=3, m=m, layers=2, p_tag=float(rng.uniform(0.2, 0.6)))
        layers = [l.tolist() for l in ds.hierarchy.layers]
        samples = np.arange(n)
        k = target_layer(ds.tags, ds.hierarchy)
        expected = oracles.brute_best_gain(ds.features.tolist(), ds.tags.tolist(), layers, list(samples), "full")
        if k is None:
            got = 0.0
        else:
            wp, wn = layer_weights(ds.tags, ds.hierarchy, k, "full")
            sp = optimise_split(ds.features, wp, wn, samples, 3, rng)
            got = 0.0 if sp is None else sp.gain
        worst = max(worst, abs(got - expected))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and elapsed < 10
    record_criterion(1, ok, f"max |gain - brute force| = {worst:.2e} over 1000 nodes, {elapsed:.2f} s")
    assert ok


def test_criterion_02_single_layer_reduction():
    rng = np.random.default_rng(2)
    same = 0
    for t in range(100):
        ds = random_dataset(rng, n=int(rng.integers(4, 40)), d=int(rng.integers(1, 5)),
                            m=int(rng.integers(1, 6)), layers=1)
        a = train_tree(ds, ForestConfig(tau=1, phi=3, mode="full"), seed=t)
        b = train_tree(ds, ForestConfig(tau=1, phi=3, mode="flat_tags"), seed=t)
        same += a.equals(b)
    record_criterion(2, same == 100, f"{same}/100 single-layer datasets give identical trees")
    assert same == 100


def test_criterion_03_tag_statistics_oracle():
    rng = np.random.default_rng(3)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 21))
        m = int(rng.integers(2, 9))
        Y = (rng.random((n, m)) < rng.random()).astype(np.uint8)
        cut = int(rng.integers(1, m))
        h = TagHierarchy((np.arange(cut), np.arange(cut, m)))
        corr = correlation_tables(Y, h)
        L = Y.tolist()
        for i in range(m):
            for j in range(m):
                mismatches += corr.rho[i, j] != oracles.cooc(L, i, j)
                mismatches += corr.eps[i, j] != oracles.excl(L, i, j)
        s = soft_scores(Y, h, 0, corr)
        miss, rp, rn, pn, nn = oracles.soft(L, [l.tolist() for l in h.layers], 0)
        if miss:
            mismatches += s.raw_positive.tolist() != rp
            mismatches += s.raw_negative.tolist() != rn
            mismatches += s.positive.tolist() != pn
            mismatches += s.negative.tolist() != nn
        mismatches += s.samples.tolist() != miss
    record_criterion(3, mismatches == 0, f"{mismatches} exact mismatches over 1000 tag matrices")
    assert mismatches == 0


def test_criterion_04_partition_metric_oracle():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        pred = rng.integers(0, int(rng.integers(1, 5)), size=n).tolist()
        truth = rng.integers(0, int(rng.integers(1, 5)), size=n).tolist()
        tp, fp, fn, tn = oracles.pairs(pred, truth)
        pairs = [
            (purity(pred, truth), oracles.purity(pred, truth)),
            (nmi(pred, truth), oracles.nmi(pred, truth)),
            (rand_index(pred, truth), (tp + tn) / (tp + fp + fn + tn)),
            (adjusted_rand(pred, truth), oracles.ari(pred, truth)),
            (pair_f1(pred, truth), oracles.f1(pred, truth)),
        ]
        worst = max(worst, max(abs(a - b) for a, b in pairs))
    record_criterion(4, worst <= 1e-12, f"max deviation {worst:.2e} over 1000 partitions")
    assert worst <= 1e-12


def test_criterion_05_affinity_invariants():
    rng = np.random.default_rng(5)
    problems = []
    forests = [train_forest(random_dataset(rng, n=int(rng.integers(10, 50)), d=3, m=5),
                            ForestConfig(tau=int(rng.integers(1, 20)), phi=3), seed=s) for s in range(20)]
    forests += [planted_run("full", 0.3, s)[0].forest for s in SEEDS]
    for f in forests:
        A = forest_affinity(f)
        if not np.array_equal(A, A.T):
            problems.append("asymmetric")
        if not np.all(np.diag(A) == 1.0):
            problems.append("diagonal")
        if A.min() < 0 or A.max() > 1:
            problems.append("range")
        n = A.shape[0]
        S = normalize(knn_sparsify(A, min(20, n - 1)))
        emb = top_eigenvectors(S, min(4, n))
        resid = np.linalg.norm(S @ emb.vectors - emb.vectors * emb.eigenvalues, axis=0).max()
        if resid > 1e-8:
            problems.append(f"residual {resid:.1e}")
    blocks_ok = 0
    for p in range(2, 7):
        sizes = rng.integers(3, 12, size=p)
        truth = np.repeat(np.arange(p), sizes)
        perm = rng.permutation(len(truth))
        A = (truth[:, None] == truth[None, :]).astype(float)[np.ix_(perm, perm)]
        blocks_ok += nmi(cluster_affinity(A, p, k=2, seed=p), truth[perm]) == 1.0
    ok = not problems and blocks_ok == 5
    record_criterion(5, ok, f"{len(forests)} forests, {len(problems)} violations; "
                            f"{blocks_ok}/5 block-diagonal affinities recovered exactly")
    assert ok


def test_criterion_06_planted_clustering():
    scores = [planted_run("full", 0.3, s)[0].metrics["nmi"] for s in SEEDS]
    times = [planted_run("full", 0.3, s)[1] for s in SEEDS]
    mean = float(np.mean(scores))
    ok = mean >= 0.90 and max(times) < 60
    record_criterion(6, ok, f"mean NMI {mean:.4f} (per seed {np.round(scores, 3).tolist()}), "
                            f"slowest run {max(times):.1f} s")
    assert ok


def test_criterion_07_degradation_trend():
    clean, sparse = mean_nmi("full", 0.0), mean_nmi("full", 0.5)
    ok = clean >= sparse
    record_criterion(7, ok, f"mean NMI {clean:.4f} at 0% vs {sparse:.4f} at 50%")
    assert ok


def test_criterion_08_ablation_ordering():
    full, flat = mean_nmi("full", 0.0), mean_nmi("flat_tags", 0.0)
    ok = full >= flat
    record_criterion(8, ok, f"mean NMI full {full:.4f} vs flat-tags {flat:.4f} at 0%")
    assert ok


def test_criterion_09_completion():
    ap = [planted_run("full", 0.4, s)[0] for s in SEEDS]
    from hmlrf.completion import recover_all, CompletionScores
    from hmlrf.metrics import CompletionTruth, completion_metrics
    ap1, cov3 = [], []
    for res in ap:
        truth = CompletionTruth.from_pairs(res.removed, res.dataset.tags)
        sc = CompletionScores(res.scores, res.dataset.tags.astype(bool))
        ap1.append(completion_metrics(recover_all(sc, 1), truth, 1)[0])
        cov3.append(completion_metrics(recover_all(sc, 3), truth, 3)[2])
    rng = np.random.default_rng(9)
    mismatches = 0
    for trial in range(20):
        n = int(rng.integers(5, 31))
        ds = random_dataset(rng, n=n, d=3, m=4)
        forest = train_forest(ds, ForestConfig(tau=int(rng.integers(1, 6)), phi=2), seed=trial)
        A = forest_affinity(forest)
        clusters = rng.integers(0, 3, size=n)
        k = int(rng.integers(1, n))
        L = ds.tags.tolist()
        leafs = [t.leaf_of.tolist() for t in forest.trees]
        S_ln, S_gc, S_am = scores_ln(forest, ds.tags), scores_gc(clusters, ds.tags), scores_am(A, ds.tags, k)
        for s in range(n):
            for j in range(ds.m):
                mismatches += S_ln[s, j] != oracles.ln_score(leafs, L, s, j)
                mismatches += S_gc[s, j] != oracles.gc_score(clusters.tolist(), L, s, j)
                mismatches += S_am[s, j] != oracles.am_score(A.tolist(), L, s, j, k)
    m_ap1, m_cov3 = float(np.mean(ap1)), float(np.mean(cov3))
    ok = m_ap1 >= 0.80 and m_cov3 >= 0.90 and mismatches == 0
    record_criterion(9, ok, f"AP@1 {m_ap1:.4f} (need 0.80), Coverage@3 {m_cov3:.4f} (need 0.90), "
                            f"{mismatches} oracle mismatches")
    assert ok


def test_criterion_10_determinism(tmp_path):
    data.save_dataset_dir(make_planted(seed=0), tmp_path / "ds")
    cfg = RunConfig(p=4, seed=0, tau=TAU, sparsity=0.3)
    run_pipeline(tmp_path / "ds", tmp_path / "a", cfg)
    run_pipeline(tmp_path / "ds", tmp_path / "b", cfg)
    run_pipeline(tmp_path / "ds", tmp_path / "c", RunConfig(p=4, seed=0, tau=TAU, sparsity=0.3, jobs=4))
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    differing = [name for name in names for other in ("b", "c")
                 if (tmp_path / "a" / name).read_bytes() != (tmp_path / other / name).read_bytes()]
    ok = not differing
    record_criterion(10, ok, f"{len(names)} artifacts compared across 2 runs and jobs 1 vs 4; "
                             f"differing: {differing or 'none'}")
    assert ok
