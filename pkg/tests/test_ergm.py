import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grfev import ergm
from grfev.core import ModelSpec
from grfev.diagnostics import state_tv
from grfev.ergm import UndirectedGraph
from grfev.simulate import simulate_stats


def random_graph(n, p, rng):
    a = np.triu(rng.random((n, n)) < p, 1).astype(np.int8)
    return UndirectedGraph(a + a.T)


def graphs(max_n=8):
    return st.integers(2, max_n).flatmap(
        lambda n: st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2).map(
            lambda bits: UndirectedGraph.from_edges(
                n, [d for d, b in zip([(i, j) for i in range(n) for j in range(i + 1, n)], bits) if b])))


def graph_code(g):
    n = g.n
    bits = [g.adjacency[i, j] for i in range(n) for j in range(i + 1, n)]
    return sum(int(b) << k for k, b in enumerate(bits))


def test_graph_stats_examples():
    assert ergm.graph_stats(UndirectedGraph.empty(16)).tolist() == [0, 0]
    path = UndirectedGraph.from_edges(3, [(0, 1), (1, 2)])
    assert ergm.graph_stats(path).tolist() == [2, 1]
    k4 = UndirectedGraph(np.ones((4, 4), dtype=np.int8) - np.eye(4, dtype=np.int8))
    assert ergm.graph_stats(k4).tolist() == [6, 12]
    assert ergm.graph_stats(k4, ModelSpec.ergm(4, two_stars=False)).tolist() == [6]


def test_graph_validation():
    with pytest.raises(ValueError):
        UndirectedGraph(np.array([[1, 0], [0, 0]]))
    with pytest.raises(ValueError):
        UndirectedGraph(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        UndirectedGraph(np.zeros((2, 3)))


def test_toggle_locality():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 21))
        g = random_graph(n, rng.random(), rng)
        stats = ergm.graph_stats(g)
        for _ in range(100):
            i, j = rng.choice(n, 2, replace=False)
            delta = ergm.toggle_delta(g, i, j)
            a = g.adjacency.copy()
            a[i, j] = a[j, i] = 1 - a[i, j]
            g = UndirectedGraph(a)
            stats = stats + delta
            assert np.array_equal(stats, ergm.graph_stats(g))


@settings(max_examples=50)
@given(graphs(), st.randoms(use_true_random=False))
def test_relabel_invariance(g, rnd):
    perm = list(range(g.n))
    rnd.shuffle(perm)
    h = UndirectedGraph(g.adjacency[np.ix_(perm, perm)])
    assert np.array_equal(ergm.graph_stats(h), ergm.graph_stats(g))
    deg = g.degrees()
    assert ergm.graph_stats(g)[1] == np.sum(deg * (deg - 1) // 2)


def test_z_graph_brute_examples():
    full, edges = ModelSpec.ergm(4), ModelSpec.ergm(4, two_stars=False)
    assert ergm.z_graph_brute([0.0, 0.0], full) == pytest.approx(6 * math.log(2))
    for t in (-2.0, -0.3, 0.0, 1.7):
        assert ergm.z_graph_brute([t], edges) == pytest.approx(6 * math.log1p(math.exp(t)), rel=1e-13)
    # direct 64-term sum
    total = 0.0
    for code in range(64):
        g = UndirectedGraph.from_edges(4, [d for k, d in enumerate([(i, j) for i in range(4) for j in range(i + 1, 4)])
                                           if code >> k & 1])
        total += math.exp(ergm.graph_stats(g) @ [0.3, -0.2])
    assert ergm.z_graph_brute([0.3, -0.2], full) == pytest.approx(math.log(total), rel=1e-13)
    # n = 3: graphs with 0, 1, 2, 3 edges have 0, 0, 1, 3 two-stars
    a, b = 0.4, -0.7
    want = math.log(1 + 3 * math.exp(a) + 3 * math.exp(2 * a + b) + math.exp(3 * a + 3 * b))
    assert ergm.z_graph_brute([a, b], ModelSpec.ergm(3)) == pytest.approx(want, rel=1e-13)
    with pytest.raises(ValueError):
        ergm.z_graph_brute([0.0, 0.0], ModelSpec.ergm(7))


@pytest.mark.parametrize("n", [4, 5])
@pytest.mark.parametrize("t", [-1.1, 0.35, 2.0])
def test_complement_symmetry(n, t):
    spec = ModelSpec.ergm(n, two_stars=False)
    d = n * (n - 1) // 2
    lhs = ergm.z_graph_brute([t], spec)
    rhs = t * d + ergm.z_graph_brute([-t], spec)
    assert abs(math.expm1(lhs - rhs)) < 1e-12


def test_sampler_uniform_edges():
    spec = ModelSpec.ergm(5, two_stars=False)
    stats = simulate_stats(spec, [0.0], 1, 1, s=100_000)[:, 0]
    # each dyad is resampled from a fair coin every sweep, so sweeps are independent
    freq = stats / 10
    assert abs(freq.mean() - 0.5) < 3 * freq.std() / math.sqrt(len(freq))


def test_sampler_sparse():
    g = ergm.graph_sample_approx([-10.0], ModelSpec.ergm(16, two_stars=False), 50, 2)
    assert ergm.graph_stats(g)[0] < 0.01 * 120
    stats = simulate_stats(ModelSpec.ergm(10, two_stars=False), [-10.0], 5, 3, s=1000)[:, 0]
    assert stats.mean() < 0.01 * 45


def test_sampler_exact_law():
    spec = ModelSpec.ergm(4)
    theta = [0.3, -0.2]
    stats = ergm.enumerate_graph_stats(4)
    logp = stats @ theta - ergm.z_graph_brute(theta, spec)
    gen = np.random.default_rng(4)
    codes = [graph_code(ergm.graph_sample_approx(theta, spec, 10, gen)) for _ in range(40_000)]
    # enumerate_graph_stats orders graphs by the same dyad bits
    assert state_tv(codes, np.exp(logp)) <= 0.02
    with pytest.raises(ValueError):
        ergm.graph_sample_approx(theta, spec, 0, gen)


def test_sampler_long_run_stats():
    spec = ModelSpec.ergm(5)
    theta = [0.5, -0.3]
    stats = ergm.enumerate_graph_stats(5)
    p = np.exp(stats @ theta - ergm.z_graph_brute(theta, spec))
    draws = simulate_stats(spec, theta, 100, 5, s=200_000)
    np.testing.assert_allclose(draws.mean(axis=0), p @ stats, rtol=0.01)


def test_edge_list_io(tmp_path):
    f = tmp_path / "g.txt"
    f.write_text("n=3\n1 2\n")
    g = ergm.load_edge_list(f)
    assert g.n == 3 and g.edges() == [(0, 1)]
    for body, msg in [("n 3\n1 1\n", "self-loop"), ("n 3\n1 2\n2 1\n", "duplicate"),
                      ("n 3\n1 4\n", "range"), ("n 3\n1 2 3\n", "malformed"), ("3\n", "header"),
                      ("", "empty")]:
        f.write_text(body)
        with pytest.raises(ValueError, match=msg):
            ergm.load_edge_list(f)
    g = random_graph(12, 0.3, np.random.default_rng(1))
    ergm.write_edge_list(g, f, header="test graph")
    assert ergm.load_edge_list(f) == g


def test_gamaneg_asset():
    g = ergm.load_gamaneg()
    assert g.n == 16
    assert ergm.graph_stats(g)[0] == 29
