import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from trihom.graph import Dataset, Graph  # noqa: E402

_CRITERIA = {}


def random_instance(rng, n_range=(10, 200), c_range=(2, 5), m_range=(1, 4), density=None):
    """Random labeled graph with features; every class is non-empty and has
    at least two members, and the graph has at least one edge."""
    n = int(rng.integers(*n_range, endpoint=True))
    C = int(rng.integers(*c_range, endpoint=True))
    M = int(rng.integers(*m_range, endpoint=True))
    base = np.repeat(np.arange(C), 2)
    y = np.concatenate([base, rng.integers(0, C, n - base.size)])
    rng.shuffle(y)
    p = density if density is not None else rng.uniform(1.5, 8.0) / n
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(iu.size) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    if edges.shape[0] == 0:
        edges = np.array([[0, 1]])
    x = rng.normal(size=(n, M)) + 0.5 * np.eye(C, M)[y]
    if M > 1:
        # one non-negative column exercises the unshifted attribute path
        x[:, 0] = np.abs(x[:, 0])
    return Dataset(Graph.from_edges(n, edges), y, C, x)


def as_lists(ds):
    nb = [list(map(int, ds.graph.neighbors(u))) for u in range(ds.num_nodes)]
    return nb, [int(v) for v in ds.labels], ds.features.tolist()


def small_dataset(n, edges, labels, features=None, C=None):
    labels = np.asarray(labels)
    C = C if C is not None else int(labels.max()) + 1
    x = np.zeros((n, 1)) if features is None else np.asarray(features, dtype=float)
    return Dataset(Graph.from_edges(n, edges), labels, C, x)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    num, text = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        # a criterion spread over several tests fails if any of them fails
        prev = _CRITERIA.get(num, (text, "PASS"))[1]
        _CRITERIA[num] = (text, "PASS" if rep.passed and prev == "PASS" else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        text, status = _CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:>2} {status}: {text}")
