from fractions import Fraction as Fr

import numpy as np
import pytest

from conftest import random_instance, small_dataset
from trihom import model
from trihom.csbm3h import Csbm3hParams, generate
from trihom.errors import DegenerateInput, NotApplicable
from trihom.model import GaussianSpec, TriHomPoint


def exact_terms(h_l, h_s, h_f, C, rho):
    """Rational evaluation of both factors and the critical value."""
    h_l, h_s, h_f, rho = Fr(h_l), Fr(h_s), Fr(h_f), Fr(rho)
    a = (1 - h_l) / (C - 1)
    p0 = (h_l * C - 1) / (C - 1)
    q = C * a * a + C * (1 - h_s) ** 2 / (C - 1) + p0 * p0
    w = h_f / rho
    agn = (1 - w * w * q) / (1 - w * p0) ** 2
    return agn, p0 * p0 / q * agn, rho * p0 / q


@pytest.mark.parametrize("pt", [(0.8, 0.5, 0.2), (0.9, 0.8, 0.3), (0.5, 1.0, -0.4), (0.1, 0.0, 0.9)])
def test_factors_match_rational_oracle(pt):
    agn, aware, crit = exact_terms(*pt, 3, 10)
    p = TriHomPoint(*pt)
    assert model.j_h_agnostic(p) == pytest.approx(float(agn), rel=1e-14)
    assert model.j_h_aware(p) == pytest.approx(float(aware), rel=1e-14)
    assert model.critical_feature_homophily(pt[0], pt[1], 3, 10) == pytest.approx(float(crit), rel=1e-14)


def test_factor_special_cases():
    for C in range(2, 11):
        assert model.j_h_aware(TriHomPoint(1 / C, 0.3, 0.5, C, 10)) == 0.0
        assert model.j_h_agnostic(TriHomPoint(0.7, 0.3, 0.0, C, 10)) == 1.0
    for h_f in (-0.9, 0.0, 0.6):
        w = h_f / 10
        p = TriHomPoint(1.0, 1.0, h_f)
        assert model.j_h_agnostic(p) == pytest.approx((1 + w) / (1 - w), rel=1e-14)
        assert model.j_h_aware(p) == pytest.approx(model.j_h_agnostic(p), rel=1e-14)
    assert model.j_h_aware_approx(1 / 3, 0.2, 3) == 0.0
    assert model.j_h_aware_approx(1.0, 1.0, 3) == 1.0


def test_point_validation():
    for bad in [(1.1, 0.5, 0.0), (0.5, -0.1, 0.0), (0.5, 0.5, 1.0)]:
        with pytest.raises(ValueError):
            TriHomPoint(*bad)
    with pytest.raises(ValueError):
        TriHomPoint(0.5, 0.5, 0.0, C=1)


def test_approx_is_large_rho_limit():
    # the gap is first order in h_F / rho, so 1e-9 needs rho near 1e10
    rng = np.random.default_rng(0)
    for _ in range(50):
        h_l, h_s, h_f = rng.random(), rng.random(), rng.uniform(-0.99, 0.99)
        approx = model.j_h_aware_approx(h_l, h_s, 3)
        assert abs(approx - model.j_h_aware(TriHomPoint(h_l, h_s, h_f, 3, 1e6))) <= 4e-6
        assert abs(approx - model.j_h_aware(TriHomPoint(h_l, h_s, h_f, 3, 1e10))) < 1e-9


def test_prefactor_in_unit_interval():
    L, S = np.meshgrid(np.linspace(0, 1, 41), np.linspace(0, 1, 41))
    for C in (2, 3, 7):
        pre = model.aware_prefactor(L, S, C)
        assert np.all(pre >= 0) and np.all(pre <= 1 + 1e-15)


def test_j_n_examples():
    assert model.j_N(GaussianSpec([[0.0], [2.0]], 1.0)) == pytest.approx(2.0)
    assert model.j_N(GaussianSpec(np.ones((3, 2)), 0.5)) == 0.0
    spec = GaussianSpec(np.eye(3), 1.0)
    assert model.j_N(spec) == pytest.approx(1 / 3)
    assert model.j_N(GaussianSpec(5 * np.eye(3), 1.0)) == pytest.approx(25 * model.j_N(spec))
    with pytest.raises(DegenerateInput):
        model.j_N(GaussianSpec(np.eye(3), 0.0))
    with pytest.raises(ValueError):
        GaussianSpec(np.eye(2), -1.0)


def test_j_n_brute_force():
    rng = np.random.default_rng(1)
    mu, var = rng.normal(size=(4, 3)), rng.random((4, 3))
    pairs = [np.sum((mu[a] - mu[b]) ** 2) for a in range(4) for b in range(4) if a != b]
    expected = (sum(pairs) / (2 * 4 * 3)) / (var.sum() / 4)
    assert model.j_N(GaussianSpec(mu, var)) == pytest.approx(expected, rel=1e-13)


def test_j_total():
    assert model.j_total(3.0, 0.0) == 1.0
    assert model.j_total(0.0, 5.0) == 1.0
    assert model.j_total(2.0, 1.0) == pytest.approx(1 / 3)
    with pytest.raises(DegenerateInput):
        model.j_total(1.0, -1.0)


def test_critical_value_sign():
    assert model.critical_feature_homophily(1 / 3, 0.4, 3, 10) == 0.0
    hl = np.linspace(0, 1, 201)
    for h_s in (0.0, 0.5, 1.0):
        crit = model.critical_feature_homophily(hl, h_s, 3, 10)
        assert np.all(np.sign(crit) == np.sign(np.round(hl - 1 / 3, 12)))


def test_critical_value_not_globally_monotone():
    # peaks before h_L = 1 once h_S > 0: 1.5 rho at h_L = 2/3 against rho at h_L = 1
    assert model.critical_feature_homophily(2 / 3, 1.0, 3, 10) == pytest.approx(15.0)
    assert model.critical_feature_homophily(1.0, 1.0, 3, 10) == pytest.approx(10.0)


@pytest.mark.parametrize("C", [2, 3, 5, 10])
@pytest.mark.parametrize("rho", [10.0, 50.0, 100.0])
def test_critical_value_monotone_between_bounds(C, rho):
    for h_s in np.linspace(0, 1, 11):
        lo, hi = model.critical_label_bounds(h_s, C, rho)
        crit = model.critical_feature_homophily(np.linspace(lo, hi, 300), h_s, C, rho)
        assert np.all(np.diff(crit) > 0)
        assert np.all(model.critical_feature_homophily(np.linspace(hi, 1, 100), h_s, C, rho) >= 1 - 1e-9)
        if lo > 0:
            assert np.all(model.critical_feature_homophily(np.linspace(0, lo, 100), h_s, C, rho) <= -1 + 1e-9)


@pytest.mark.parametrize("h_s", [0.0, 0.3, 0.7, 1.0])
@pytest.mark.parametrize("rho", [10.0, 50.0])
def test_critical_label_bounds(h_s, rho):
    lo, hi = model.critical_label_bounds(h_s, 3, rho)
    assert 0 < lo < hi < 1
    assert model.critical_feature_homophily(lo, h_s, 3, rho) == pytest.approx(-1.0, abs=1e-6)
    assert model.critical_feature_homophily(hi, h_s, 3, rho) == pytest.approx(1.0, abs=1e-6)


def test_critical_label_bounds_not_applicable():
    # with a tiny spectral radius the critical value never reaches +-1
    with pytest.raises(NotApplicable):
        model.critical_label_bounds(0.0, 3, 0.5)


def test_aggregate_examples():
    path = small_dataset(3, [(0, 1), (1, 2)], [0, 1, 0], features=[[0.0], [1.0], [2.0]])
    assert model.aggregate_representations(path)[:, 0].tolist() == [1.0, 1.0, 1.0]
    k3 = small_dataset(3, [(0, 1), (1, 2), (0, 2)], [0, 1, 2], features=np.eye(3))
    h = model.aggregate_representations(k3)
    assert np.allclose(h, (np.ones((3, 3)) - np.eye(3)) / 2)
    iso = small_dataset(3, [(0, 1)], [0, 1, 0], features=[[1.0], [3.0], [7.0]])
    h, flags = model.aggregate_representations(iso, return_isolated=True)
    assert h[:, 0].tolist() == [3.0, 1.0, 7.0] and flags.tolist() == [False, False, True]


def test_empirical_j_examples():
    ds = small_dataset(4, [(0, 1), (2, 3)], [0, 0, 1, 1], features=np.eye(2)[[0, 0, 1, 1]])
    est = model.empirical_J_estimate(ds, "agnostic")
    assert est.value == 0.0 and est.inter_mean == pytest.approx(2.0)
    with pytest.raises(DegenerateInput):
        model.empirical_J(small_dataset(4, [(0, 1)], [0, 0, 1, 1], features=np.ones((4, 2))), "agnostic")
    with pytest.raises(ValueError):
        model.empirical_J(ds, "both")


@pytest.mark.parametrize("seed", range(10))
def test_empirical_j_brute_force(seed):
    ds = random_instance(np.random.default_rng(seed))
    for mode in ("aware", "agnostic"):
        z = model.aggregate_representations(ds) if mode == "aware" else ds.features
        intra, inter = [], []
        for u in range(ds.num_nodes):
            for v in range(u + 1, ds.num_nodes):
                (intra if ds.labels[u] == ds.labels[v] else inter).append(np.sum((z[u] - z[v]) ** 2))
        assert model.empirical_J(ds, mode) == pytest.approx(np.mean(intra) / np.mean(inter), rel=1e-10)


def test_empirical_j_sampled_vs_exact():
    ds = generate(Csbm3hParams(0.6, 0.9, 0.3, num_nodes=800, seed=2)).dataset
    for mode in ("aware", "agnostic"):
        exact = model.empirical_J_estimate(ds, mode)
        for seed in range(3):
            s = model.empirical_J_estimate(ds, mode, max_pairs=20_000, seed=seed, exact_limit=0)
            assert s.method == "sampled" and s.se > 0
            assert abs(s.value - exact.value) <= 3 * s.se


def test_verifier_report():
    rep = model.verify_theorem_signs(C=3, rho=50.0)
    assert rep.passed and rep.approx_violations == 0
    assert rep.checked["aware_label_approx"] == 101 * 101
    assert rep.cross_checks["passed"]
    for claim in ("aware_feature_exact", "agnostic_label_exact", "agnostic_feature_exact"):
        assert rep.violation_rate(claim) < 0.01
    d = rep.to_dict()
    assert d["approx_violations"] == 0 and "aware_structural_exact" in d["violation_rates"]


def test_verifier_exact_h_s_at_rho_10():
    rep = model.verify_theorem_signs(C=3, rho=10.0)
    assert rep.violation_counts["aware_structural_exact"] == 0


def test_verifier_catches_flipped_sign(monkeypatch):
    monkeypatch.setattr(model, "j_h_aware_approx", lambda h_l, h_s, C: -model.aware_prefactor(h_l, h_s, C))
    rep = model.verify_theorem_signs()
    assert not rep.passed and rep.violations["aware_label_approx"]


def test_verifier_rejects_bad_steps():
    with pytest.raises(ValueError):
        model.verify_theorem_signs(grid_step=0)
