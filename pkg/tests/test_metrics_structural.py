import warnings

import numpy as np
import pytest

import oracles
from conftest import as_lists, random_instance, small_dataset
from trihom.csbm3h import Csbm3hParams, generate
from trihom.errors import DegenerateInput
from trihom.graph import Dataset, Graph
from trihom.metrics import structural


def two_cliques(size):
    edges = [(i, j) for i in range(size) for j in range(i + 1, size)]
    edges += [(i + size, j + size) for i, j in edges]
    return small_dataset(2 * size, edges, [0] * size + [1] * size)


def test_h_s_identical_rows_is_one():
    h, per = structural.structural_homophily(two_cliques(4))
    assert h == 1.0 and per.tolist() == [1.0, 1.0]


def test_h_s_skips_small_classes_with_warning():
    ds = small_dataset(5, [(0, 1), (1, 2), (0, 2), (3, 4)], [0, 0, 0, 1, 2])
    with pytest.warns(RuntimeWarning):
        h, per = structural.structural_homophily(ds)
    assert np.isnan(per[1]) and np.isnan(per[2]) and h == per[0]
    with pytest.raises(DegenerateInput), warnings.catch_warnings():
        warnings.simplefilter("ignore")
        structural.structural_homophily(small_dataset(3, [(0, 1), (1, 2)], [0, 1, 2]))


@pytest.mark.parametrize("t", [0.0, 0.2, 0.5, 0.8, 0.95])
@pytest.mark.parametrize("C", [2, 3, 5])
def test_h_s_inverts_pure_noise_rows(t, C):
    rng = np.random.default_rng(int(t * 100) + C)
    # two classes average fewer entries, so they get more rows for the same precision
    n = 1000 if C > 2 else 4000
    y = rng.integers(0, C, n)
    base = np.full((C, C), 0.5 / (C - 1)) + np.eye(C) * (0.5 - 0.5 / (C - 1))
    rows = base[y] + rng.normal(0, (1 - t) / np.sqrt(C - 1), size=(n, C))
    h, _ = structural.structural_homophily_from_rows(rows, y, C)
    assert abs(h - t) <= 0.02


def test_h_s_high_degree_csbm():
    vals = [structural.structural_homophily(generate(Csbm3hParams(0.7, 1.0, 0.0, num_nodes=2000,
                                                                  degree_range=(20, 30), seed=s)).dataset)[0]
            for s in range(3)]
    assert np.mean(vals) >= 0.85


def test_li_examples():
    assert structural.label_informativeness(two_cliques(3)) == pytest.approx(1.0)
    with pytest.raises(DegenerateInput):
        structural.label_informativeness(small_dataset(3, [(0, 1), (1, 2)], [0, 0, 0], C=2))


def test_li_zero_when_independent():
    # 4-cycle where every class pair carries a quarter of the arcs
    ds = small_dataset(4, [(0, 2), (1, 3), (0, 1), (2, 3)], [0, 1, 0, 1])
    p = structural.edge_class_distribution(ds)
    pbar = p.sum(axis=1)
    assert np.allclose(p, np.outer(pbar, pbar))
    assert structural.label_informativeness(ds) == pytest.approx(0.0, abs=1e-12)


def test_li_literal_flag_differs():
    ds = random_instance(np.random.default_rng(4))
    assert structural.label_informativeness(ds, literal=True) != structural.label_informativeness(ds)


def test_h_ns_examples():
    c4 = [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert structural.neighborhood_similarity(small_dataset(4, c4, [0, 0, 1, 1])) == pytest.approx(1.0)
    # bipartite: class 0 sees only class 1 and vice versa
    kbip = [(0, 2), (0, 3), (1, 2), (1, 3)]
    with pytest.raises(DegenerateInput):
        structural.neighborhood_similarity(small_dataset(4, kbip, [0, 0, 1, 1]))


@pytest.mark.parametrize("seed", range(5))
def test_h_ns_sampled_agrees_with_exact(seed):
    ds = random_instance(np.random.default_rng(300 + seed), n_range=(150, 150), c_range=(3, 3))
    exact = structural.neighborhood_similarity_estimate(ds)
    s = structural.neighborhood_similarity_estimate(ds, max_pairs=20_000, seed=seed, exact_limit=0)
    assert s.method == "sampled" and exact.method == "exact"
    # delta-method standard error of the ratio
    se = abs(s.value) * np.sqrt((s.intra_se / s.intra_mean) ** 2 + (s.inter_se / s.inter_mean) ** 2)
    assert abs(s.value - exact.value) <= 3 * se


def test_h_agg_examples():
    c4 = [(0, 1), (1, 2), (2, 3), (3, 0)]
    assert structural.aggregation_homophily(small_dataset(4, c4, [0, 0, 1, 1])) == 1.0
    kbip = [(0, 2), (0, 3), (1, 2), (1, 3)]
    assert structural.aggregation_homophily(small_dataset(4, kbip, [0, 0, 1, 1])) == 1.0


@pytest.mark.parametrize("seed", range(25))
def test_structural_metrics_match_brute_force(seed):
    ds = random_instance(np.random.default_rng(seed))
    nb, y, _ = as_lists(ds)
    C = ds.num_classes
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert structural.structural_homophily(ds)[0] == pytest.approx(oracles.structural_homophily(nb, y, C),
                                                                       abs=1e-12)
    assert structural.label_informativeness(ds) == pytest.approx(oracles.label_informativeness(nb, y, C), abs=1e-12)
    assert structural.neighborhood_similarity(ds) == pytest.approx(oracles.neighborhood_similarity(nb, y, C),
                                                                   abs=1e-10)
    assert structural.aggregation_homophily(ds) == oracles.aggregation_homophily(nb, y, C)


def test_h_agg_ties_exact_on_regular_structure():
    # every node has the same neighbor distribution: all ties, all satisfied
    c6 = [(i, (i + 1) % 6) for i in range(6)]
    ds = small_dataset(6, c6, [0, 0, 1, 1, 2, 2])
    nb, y, _ = as_lists(ds)
    assert structural.aggregation_homophily(ds) == oracles.aggregation_homophily(nb, y, 3)


def test_h_s_invariant_to_relabeling():
    rng = np.random.default_rng(9)
    ds = random_instance(rng, n_range=(120, 120), c_range=(3, 3))
    perm = rng.permutation(ds.num_nodes)
    cperm = np.array([2, 0, 1])
    y2 = np.empty_like(ds.labels)
    y2[perm] = cperm[ds.labels]
    ds2 = Dataset(Graph.from_edges(ds.num_nodes, perm[ds.graph.edge_array()]), y2, 3, ds.features)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert structural.structural_homophily(ds)[0] == pytest.approx(structural.structural_homophily(ds2)[0],
                                                                       abs=1e-12)


def test_structural_report_fields():
    ds = generate(Csbm3hParams(0.6, 0.8, 0.0, num_nodes=300, seed=1)).dataset
    rep = structural.structural_report(ds)
    assert 0 <= rep.h_S <= 1 and 0 <= rep.h_agg <= 1
    assert rep.sampling_meta["method"] == "exact"
    assert len(rep.per_class_h_S) == 3
