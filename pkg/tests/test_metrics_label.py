import numpy as np
import pytest

import oracles
from conftest import as_lists, random_instance, small_dataset
from trihom.errors import DegenerateInput, EmptyGraph
from trihom.graph import Dataset
from trihom.metrics import label

TRIANGLE = [(0, 1), (1, 2), (0, 2)]


def test_edge_homophily_examples():
    assert label.edge_homophily(small_dataset(3, TRIANGLE, [0, 0, 0], C=2)) == 1.0
    k22 = [(0, 2), (0, 3), (1, 2), (1, 3)]
    assert label.edge_homophily(small_dataset(4, k22, [0, 0, 1, 1])) == 0.0
    assert label.edge_homophily(small_dataset(3, TRIANGLE, [0, 0, 1])) == pytest.approx(1 / 3)
    with pytest.raises(EmptyGraph):
        label.edge_homophily(small_dataset(3, [], [0, 1, 0]))


def test_node_homophily_examples():
    assert label.node_homophily(small_dataset(3, TRIANGLE, [0, 0, 1])) == pytest.approx(1 / 3)
    star = [(0, i) for i in range(1, 5)]
    assert label.node_homophily(small_dataset(5, star, [0, 1, 1, 1, 1])) == 0.0
    # isolated node 3 is left out
    assert label.node_homophily(small_dataset(4, [(0, 1)], [0, 0, 1, 1])) == 1.0


def test_class_homophily_examples():
    two_cliques = [(0, 1), (2, 3)]
    assert label.class_homophily(small_dataset(4, two_cliques, [0, 0, 1, 1])) == pytest.approx(1.0)
    mixed = [(0, 1), (0, 2), (1, 3), (2, 3)]
    ds = small_dataset(4, mixed + [(0, 3), (1, 2)], [0, 0, 1, 1])
    # K_4 with balanced labels: intra fraction 1/3 < 1/2 for both classes
    assert label.class_homophily(ds) == 0.0


def test_adjusted_homophily_examples():
    assert label.adjusted_homophily(small_dataset(4, [(0, 1), (2, 3)], [0, 0, 1, 1])) == pytest.approx(1.0)
    with pytest.raises(DegenerateInput):
        label.adjusted_homophily(small_dataset(3, TRIANGLE, [0, 0, 0], C=2))


def test_density_aware_examples():
    assert label.density_aware_homophily(small_dataset(4, [(0, 1), (2, 3)], [0, 0, 1, 1])) == 1.0
    kbip = [(0, 2), (0, 3), (1, 2), (1, 3)]
    assert label.density_aware_homophily(small_dataset(4, kbip, [0, 0, 1, 1])) == 0.0
    with pytest.raises(DegenerateInput):
        label.density_aware_homophily(small_dataset(3, TRIANGLE, [0, 0, 1]))


def test_two_hop_examples():
    assert label.two_hop_class_similarity(small_dataset(3, [(0, 1), (1, 2)], [0, 1, 0])) == 1.0
    c4 = [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert label.two_hop_class_similarity(small_dataset(4, c4, [0, 1, 0, 1])) == 1.0
    with pytest.raises(EmptyGraph):
        label.two_hop_class_similarity(small_dataset(3, [], [0, 1, 0]))


def test_two_hop_literal_denominator_can_exceed_one():
    # node 0 has degree 1 but three two-hop nodes of its own class
    ds = small_dataset(5, [(0, 1), (1, 2), (1, 3), (1, 4)], [0, 1, 0, 0, 0])
    assert label.two_hop_class_similarity(ds, literal_denominator=True) > 1.0
    assert label.two_hop_class_similarity(ds) <= 1.0


def test_neighbor_homophily_examples():
    c4 = [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert label.neighbor_homophily(small_dataset(4, c4, [0, 0, 0, 0], C=2)) == 1.0
    assert label.neighbor_homophily(small_dataset(4, c4, [0, 1, 0, 1]), k=1) == 1.0
    # k=2 on the alternating 4-cycle: each node sees two of the other class and one of its own
    assert label.neighbor_homophily(small_dataset(4, c4, [0, 1, 0, 1]), k=2) == pytest.approx(2 / 3)
    bal = [(0, 1), (0, 2), (3, 1), (3, 2)]
    assert label.neighbor_homophily(small_dataset(4, bal, [0, 0, 1, 1]), k=1) == 0.5
    with pytest.raises(ValueError):
        label.neighbor_homophily(small_dataset(4, c4, [0, 1, 0, 1]), k=0)


@pytest.mark.parametrize("seed", range(25))
def test_label_metrics_match_brute_force(seed):
    ds = random_instance(np.random.default_rng(seed))
    nb, y, _ = as_lists(ds)
    C = ds.num_classes
    assert label.edge_homophily(ds) == pytest.approx(oracles.edge_homophily(nb, y), abs=1e-12)
    assert label.node_homophily(ds) == pytest.approx(oracles.node_homophily(nb, y), abs=1e-12)
    assert label.class_homophily(ds) == pytest.approx(oracles.class_homophily(nb, y, C), abs=1e-12)
    assert label.adjusted_homophily(ds) == pytest.approx(oracles.adjusted_homophily(nb, y, C), abs=1e-12)
    assert label.density_aware_homophily(ds) == pytest.approx(oracles.density_aware_homophily(nb, y, C), abs=1e-12)
    assert label.two_hop_class_similarity(ds) == pytest.approx(oracles.two_hop(nb, y), abs=1e-12)
    for k in (1, 2, 3):
        assert label.neighbor_homophily(ds, k) == pytest.approx(oracles.neighbor_homophily(nb, y, C, k), abs=1e-12)


ALL = [label.edge_homophily, label.node_homophily, label.class_homophily, label.adjusted_homophily,
       label.density_aware_homophily, label.two_hop_class_similarity, label.neighbor_homophily]


@pytest.mark.parametrize("seed", range(5))
def test_invariant_to_node_and_class_relabeling(seed):
    rng = np.random.default_rng(100 + seed)
    ds = random_instance(rng)
    perm = rng.permutation(ds.num_nodes)
    cperm = rng.permutation(ds.num_classes)
    e = ds.graph.edge_array()
    inv = np.empty_like(perm)
    inv[perm] = np.arange(ds.num_nodes)
    y2 = np.empty_like(ds.labels)
    y2[perm] = cperm[ds.labels]
    ds2 = Dataset(type(ds.graph).from_edges(ds.num_nodes, perm[e]), y2, ds.num_classes, ds.features[inv])
    for fn in ALL:
        assert fn(ds) == pytest.approx(fn(ds2), abs=1e-12)


@pytest.mark.parametrize("seed", range(10))
def test_ranges(seed):
    ds = random_instance(np.random.default_rng(200 + seed))
    for fn in (label.edge_homophily, label.node_homophily, label.class_homophily, label.density_aware_homophily,
               label.two_hop_class_similarity, label.neighbor_homophily):
        assert -1e-12 <= fn(ds) <= 1 + 1e-12
    assert -1 - 1e-12 <= label.adjusted_homophily(ds) <= 1 + 1e-12
