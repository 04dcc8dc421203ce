import numpy as np
import pytest

from hmlrf.data import Dataset, TagHierarchy


def random_dataset(rng, n=12, d=3, m=5, layers=2, p_tag=0.4):
    """Small random dataset with a random contiguous layer split."""
    X = rng.normal(size=(n, d)).round(2)
    Y = (rng.random((n, m)) < p_tag).astype(np.uint8)
    if layers == 1:
        h = TagHierarchy.flat(m)
    else:
        cuts = np.sort(rng.choice(np.arange(1, m), size=layers - 1, replace=False))
        h = TagHierarchy(tuple(np.split(np.arange(m), cuts)))
    return Dataset(X, Y, tuple(f"t{j}" for j in range(m)), h)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def tiny_dataset():
    X = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.5], [4.0, 0.5], [5.0, 3.0]])
    Y = np.array([[1, 0, 1, 0],
                  [1, 0, 0, 0],
                  [1, 0, 1, 0],
                  [0, 1, 0, 1],
                  [0, 1, 0, 0],
                  [0, 0, 0, 1]], dtype=np.uint8)
    h = TagHierarchy((np.array([0, 1]), np.array([2, 3])))
    return Dataset(X, Y, ("a", "b", "c", "d"), h, ground_truth_clusters=np.array([0, 0, 0, 1, 1, 1]))


ACCEPTANCE = {}


def record_criterion(number, ok, detail):
    """Store one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE[number] = (bool(ok), detail)
    print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
