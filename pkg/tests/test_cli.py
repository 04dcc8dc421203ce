import json

import numpy as np
import pytest

from hmlrf import data, pipeline
from hmlrf.cli import main
from hmlrf.forest import HmlForest
from hmlrf.synthetic import make_planted

METRICS = {"purity", "nmi", "ri", "ari", "f1", "ap", "ar", "coverage"}


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("synthetic")
    assert main(["gen-synthetic", "--out", str(d), "--seed", "3", "--n", "80"]) == 0
    return d


def run(args):
    return main([str(a) for a in args])


def test_generator_shape(dataset_dir):
    ds = data.load_dataset_dir(dataset_dir)
    assert (ds.n, ds.d, ds.m) == (80, 10, 16)
    assert [len(l) for l in ds.hierarchy.layers] == [4, 12]
    assert np.bincount(ds.ground_truth_clusters).tolist() == [20] * 4
    assert np.all(ds.tags[np.arange(80), ds.ground_truth_clusters] == 1)


def test_generator_deterministic():
    a, b = make_planted(seed=9), make_planted(seed=9)
    assert np.array_equal(a.features, b.features) and np.array_equal(a.tags, b.tags)


def test_run_writes_all_metrics(dataset_dir, tmp_path):
    out = tmp_path / "run"
    assert run(["run", "--dataset", dataset_dir, "--out", out, "--p", 4, "--seed", 0, "--tau", 10]) == 0
    metrics = json.loads((out / "metrics.json").read_text())
    assert METRICS <= set(metrics)
    assert all(metrics[k] is not None for k in METRICS)
    for name in ("observed_tags.csv", "hierarchy.json", "removed.csv", "corr.json", "forest.json",
                 "affinity.csv", "clusters.csv", "completed.csv"):
        assert (out / name).is_file()
    forest = HmlForest.load(out / "forest.json")
    assert forest.tau == 10
    assert len(data.load_labels(out / "clusters.csv")) == 80


def test_run_is_byte_identical(dataset_dir, tmp_path):
    args = ["--dataset", dataset_dir, "--p", 4, "--seed", 5, "--tau", 8, "--sparsity", 0.3]
    assert run(["run", *args, "--out", tmp_path / "a"]) == 0
    assert run(["run", *args, "--out", tmp_path / "b", "--jobs", 2]) == 0
    for name in ("metrics.json", "forest.json", "affinity.csv", "clusters.csv", "completed.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_missing_dataset(tmp_path, capsys):
    code = run(["run", "--dataset", tmp_path / "nowhere", "--out", tmp_path / "o", "--p", 2, "--seed", 0])
    assert code != 0
    assert "nowhere" in capsys.readouterr().err


def test_seed_is_required(dataset_dir, tmp_path):
    assert run(["train", "--dataset", dataset_dir, "--out", tmp_path / "f.json"]) != 0


def test_stagewise_commands(dataset_dir, tmp_path):
    t = tmp_path
    assert run(["build-hierarchy", "--tags", dataset_dir / "tags.csv", "--layers", 2, "--topics", 4,
                "--seed", 0, "--out", t / "h.json"]) == 0
    layers = json.loads((t / "h.json").read_text())["layers"]
    assert sorted(sum(layers, [])) == sorted(data.load_tags(dataset_dir / "tags.csv")[0])
    assert run(["tag-stats", "--dataset", dataset_dir, "--target-layer", 0, "--out", t / "c.json"]) == 0
    corr = json.loads((t / "c.json").read_text())
    assert corr["cooccurrence"]["event0"]["detail0_0"] == 1.0
    assert run(["tag-stats", "--dataset", dataset_dir, "--target-layer", 1, "--out", t / "c1.json"]) == 1
    assert run(["train", "--dataset", dataset_dir, "--tau", 6, "--mode", "flat-tags", "--seed", 2,
                "--out", t / "f.json"]) == 0
    assert run(["affinity", "--forest", t / "f.json", "--knn", 10, "--out", t / "A.csv"]) == 0
    A = data.load_matrix(t / "A.csv")
    assert np.array_equal(A, A.T)
    assert run(["cluster", "--affinity", t / "A.csv", "--p", 4, "--knn", 10, "--seed", 0,
                "--out", t / "cl.csv"]) == 0
    assert run(["evaluate", "--pred", t / "cl.csv", "--truth", dataset_dir / "clusters.csv",
                "--out", t / "e.json"]) == 0
    assert set(json.loads((t / "e.json").read_text())) == {"purity", "nmi", "ri", "ari", "f1"}
    ds = data.load_dataset_dir(dataset_dir)
    observed, removed = pipeline.prepare(ds, pipeline.RunConfig(p=4, seed=1, sparsity=0.4))
    data.save_tags(observed.tags, ds.tag_names, t / "obs.csv")
    pipeline.write_removed(removed, ds.tag_names, t / "removed.csv")
    for method in ("ln", "gc", "am"):
        assert run(["complete", "--tags", t / "obs.csv", "--method", method, "--forest", t / "f.json",
                    "--affinity", t / "A.csv", "--clusters", t / "cl.csv", "--topn", 3,
                    "--out", t / f"{method}.csv"]) == 0
        assert run(["evaluate-completion", "--recovered", t / f"{method}.csv", "--truth", t / "removed.csv",
                    "--n", "1..3", "--out", t / f"{method}.json"]) == 0
        rep = json.loads((t / f"{method}.json").read_text())
        assert set(rep) == {f"{m}@{n}" for m in ("AP", "AR", "Coverage") for n in (1, 2, 3)}


def test_complete_rejects_mismatched_inputs(dataset_dir, tmp_path):
    data.save_labels(np.zeros(5, dtype=int), tmp_path / "cl.csv")
    assert run(["complete", "--tags", dataset_dir / "tags.csv", "--method", "gc",
                "--clusters", tmp_path / "cl.csv", "--out", tmp_path / "x.csv"]) == 1


def test_ablation_rows(dataset_dir, tmp_path):
    args = ["ablation", "--dataset", dataset_dir, "--p", 4, "--seed", 0, "--tau", 4,
            "--grid", "0,0.5", "--repeats", 2]
    assert run([*args, "--out", tmp_path / "a.csv"]) == 0
    assert run([*args, "--jobs", 2, "--out", tmp_path / "b.csv"]) == 0
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[0] == "mode,sparsity,seed,nmi"
    assert len(lines) == 13
    assert [l.split(",")[0] for l in lines[1:]] == ["full"] * 4 + ["flat-tags"] * 4 + ["no-corr"] * 4
    assert [int(l.split(",")[2]) for l in lines[1:5]] == [0, 1000, 0, 1000]
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_bad_sparsity_reports_module(dataset_dir, tmp_path, capsys):
    code = run(["run", "--dataset", dataset_dir, "--out", tmp_path / "o", "--p", 4, "--seed", 0,
                "--sparsity", 1.5])
    assert code == 1
    assert "error [metrics]" in capsys.readouterr().err


def test_zero_sparsity_run_has_null_completion(dataset_dir):
    ds = data.load_dataset_dir(dataset_dir)
    res = pipeline.execute(ds, pipeline.RunConfig(p=4, seed=0, tau=4, sparsity=0.0))
    assert res.metrics["ap"] is None and res.metrics["nmi"] is not None


def test_rebuilt_hierarchy_run(dataset_dir):
    ds = data.load_dataset_dir(dataset_dir)
    res = pipeline.execute(ds, pipeline.RunConfig(p=4, seed=0, tau=4, sparsity=0.2,
                                                  hierarchy_layers=2, topics=4))
    assert res.dataset.hierarchy.num_layers == 2
