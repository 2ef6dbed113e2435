import math

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from congest_testing.generators import (CertificationFailed, CycleBudgetExceeded,
                                        LowerBoundParams, disjoint_triangles, enumerate_short_cycles,
                                        far_instance, girth, gnm, gnp, lower_bound_instance,
                                        random_bipartite, random_bounded_degree, random_forest,
                                        random_tree, trim_to_degree, windmill)
from congest_testing.graph import complete_graph
from congest_testing.oracles import certify, recheck, triangle_packing

from conftest import graphs, to_nx


# -- basic generators -----------------------------------------------------------------------

def test_gnp_extremes():
    assert gnp(30, 0, 1).m == 0
    assert gnp(30, 1, 1).m == 435
    with pytest.raises(ValueError):
        gnp(5, 1.2, 0)


def test_gnp_edge_count_mean():
    mean = sum(gnp(100, 0.1, s).m for s in range(1000)) / 1000
    sigma = math.sqrt(4950 * 0.1 * 0.9 / 1000)
    assert abs(mean - 495) <= 3 * sigma


def test_gnp_is_deterministic():
    assert list(gnp(50, 0.2, 7).edges()) == list(gnp(50, 0.2, 7).edges())
    assert list(gnp(50, 0.2, 7).edges()) != list(gnp(50, 0.2, 8).edges())


@given(st.integers(2, 30), st.data())
def test_gnm_exact_count(n, data):
    m = data.draw(st.integers(0, n * (n - 1) // 2))
    assert gnm(n, m, data.draw(st.integers(0, 99))).m == m


def test_gnm_rejects_impossible_m():
    with pytest.raises(ValueError):
        gnm(4, 7, 0)


@given(st.integers(1, 60), st.integers(1, 6), st.integers(0, 10**6))
def test_bounded_degree(n, d, seed):
    assert random_bounded_degree(n, d, seed).max_degree() <= d


@given(st.integers(1, 60), st.integers(1, 10), st.integers(0, 10**6))
def test_trees_and_forests(n, trees, seed):
    t = random_tree(n, seed)
    assert t.m == n - 1 and nx.is_tree(to_nx(t))
    f = random_forest(n, trees, seed)
    assert nx.is_forest(to_nx(f))
    assert nx.number_connected_components(to_nx(f)) == min(trees, n)


@given(st.integers(1, 10), st.integers(1, 10), st.integers(0, 10**6))
def test_random_bipartite_is_bipartite(a, b, seed):
    g = random_bipartite(a, b, 0.5, seed)
    assert all(u < a <= v for u, v in g.edges())


@given(graphs(max_n=14), st.integers(0, 5))
def test_trim_to_degree(g, d):
    h = trim_to_degree(g, d)
    assert h.max_degree() <= d and set(h.edges()) <= set(g.edges())


def test_structured_families():
    w = windmill(4)
    assert (w.n, w.m, len(triangle_packing(w))) == (9, 12, 4)
    t = disjoint_triangles(5)
    assert (t.n, t.m) == (15, 15)
    assert disjoint_triangles(0).n == 0


# -- short cycles and girth ------------------------------------------------------------------

@settings(max_examples=40)
@given(graphs(max_n=9, max_p=0.5), st.integers(0, 7))
def test_short_cycles_match_networkx(g, k):
    ours = enumerate_short_cycles(g, k)
    theirs = [c for c in nx.simple_cycles(to_nx(g), length_bound=k)]
    assert len(ours) == len(theirs)
    assert len(set(ours)) == len(ours)
    assert all(c[0] == min(c) and c[1] < c[-1] for c in ours)


@settings(max_examples=40)
@given(graphs(max_n=14, max_p=0.4))
def test_girth_matches_networkx(g):
    expected = nx.girth(to_nx(g))
    assert girth(g) == (None if expected == math.inf else expected)


def test_cycle_budget():
    with pytest.raises(CycleBudgetExceeded):
        enumerate_short_cycles(complete_graph(9), 6, budget=100)


# -- lower-bound construction ---------------------------------------------------------------------

def test_params_validation():
    assert LowerBoundParams(4096, 4, 8).girth_threshold == 6
    assert LowerBoundParams(256, 16, 32).girth_threshold == 2
    assert LowerBoundParams(1000).girth_threshold == 1
    with pytest.raises(ValueError):
        LowerBoundParams(100, c=1)
    with pytest.raises(ValueError):
        LowerBoundParams(100, c=10, degree_cap=5)


def test_construction_meaningful_threshold():
    params = LowerBoundParams(4096, 4, 8)
    g, log = lower_bound_instance(params, 0)
    assert girth(g) > 6 and g.max_degree() <= 8
    assert not enumerate_short_cycles(g, 6)
    assert log.short_cycles_found > 0 and log.cycle_breaking_removed
    assert log.sampled_edges == g.m + len(log.degree_trim_removed) + len(log.cycle_breaking_removed)


def test_construction_small_threshold():
    g, _ = lower_bound_instance(LowerBoundParams(256, 16, 32), 1)
    assert girth(g) is None or girth(g) > 2
    assert g.max_degree() <= 32


def test_construction_degenerate():
    g, log = lower_bound_instance(LowerBoundParams(4, 2, 2), 0)
    assert g.n == 4 and g.max_degree() <= 2
    assert log.to_dict()["seed"] == 0


@settings(max_examples=20)
@given(st.integers(16, 300), st.sampled_from([2, 3, 4, 6]), st.integers(0, 10**6))
def test_construction_invariants(n, c, seed):
    params = LowerBoundParams(n, c, 2 * c)
    g, log = lower_bound_instance(params, seed)
    assert g.max_degree() <= params.degree_cap
    gi = girth(g)
    assert gi is None or gi > params.girth_threshold
    assert set(log.over_cap_vertices) == {v for v in range(n) if gnp(n, params.edge_probability, seed).degree(v) > 2 * c}


def test_construction_is_deterministic():
    a = lower_bound_instance(LowerBoundParams(512, 4, 8), 3)
    b = lower_bound_instance(LowerBoundParams(512, 4, 8), 3)
    assert list(a[0].edges()) == list(b[0].edges()) and a[1] == b[1]


def test_scaled_instance_certified_far():
    target = 0.05
    for seed in range(10):
        g, _ = lower_bound_instance(LowerBoundParams(1024, 8, 16), seed)
        cert, verdict = certify(g, "bipartite", target, "general")
        if verdict == "epsilon_far":
            break
    assert cert.epsilon_star >= target and cert.method == "packing_bound"
    assert recheck(g, cert)


def test_over_cap_edges_below_expectation_curve():
    # removed edges <= sum of over-cap degrees, whose mean is n E[D; D > cap]
    n, c, cap = 256, 8, 12
    params = LowerBoundParams(n, c, cap)
    counts = [len(lower_bound_instance(params, s)[1].degree_trim_removed) for s in range(200)]
    dist = binom(n - 1, c / n)
    tail = sum(k * dist.pmf(k) for k in range(cap + 1, n))
    curve = n * tail
    mean = sum(counts) / len(counts)
    sd = (sum((x - mean) ** 2 for x in counts) / (len(counts) - 1)) ** 0.5
    assert mean <= curve + 3 * sd / math.sqrt(len(counts))


def test_short_cycle_count_below_power_curve():
    params = LowerBoundParams(1024, 4, 8)
    counts = [lower_bound_instance(params, s)[1].short_cycles_found for s in range(200)]
    mean = sum(counts) / len(counts)
    sd = (sum((x - mean) ** 2 for x in counts) / (len(counts) - 1)) ** 0.5
    assert mean <= params.c ** params.girth_threshold + 3 * sd / math.sqrt(len(counts))


# -- certified far instances ---------------------------------------------------------------

def test_far_cycle_free():
    g, cert, seed = far_instance("cycle_free", 512, 0.25, "general", 0)
    comps = nx.number_connected_components(to_nx(g))
    assert cert.distance == g.m - g.n + comps >= 0.25 * g.m
    assert recheck(g, cert)


def test_far_triangle_free_k30():
    g, cert, _ = far_instance("triangle_free", 30, 0.1, "general", 0)
    assert g.m == 435
    assert cert.distance == len(triangle_packing(g)) and cert.method == "packing_bound"
    assert cert.distance >= 0.1 * 435


def test_far_bipartite_exhaustive():
    g, cert, _ = far_instance("bipartite", 20, 0.05, "general", 0)
    assert cert.method == "exhaustive" and cert.exact
    assert cert.distance >= 0.05 * max(g.n, g.m)


def test_far_bounded_degree():
    g, cert, _ = far_instance("bipartite", 200, 0.01, "sparse", 0, d=4)
    assert g.max_degree() <= 4 and cert.epsilon_star >= 0.01


def test_far_instance_failures():
    with pytest.raises(CertificationFailed):
        far_instance("cycle_free", 10, 1, "general", 0, retries=2)
    with pytest.raises(ValueError):
        far_instance("planar", 10, 0.1, "general", 0)
