"""Undirected exponential random graph models with edge and two-star terms."""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
from scipy.special import logsumexp

from .core import ModelSpec
from .rng import as_generator

MAX_BRUTE_DYADS = 20


@dataclass
class UndirectedGraph:
    adjacency: np.ndarray  # symmetric 0/1, zero diagonal

    def __post_init__(self):
        a = np.asarray(self.adjacency)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.all((a == 0) | (a == 1)):
            raise ValueError("adjacency entries must be 0 or 1")
        if np.any(np.diag(a)):
            raise ValueError("self-loops are not allowed")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        self.adjacency = np.ascontiguousarray(a, dtype=np.int8)

    @classmethod
    def empty(cls, n: int) -> "UndirectedGraph":
        return cls(np.zeros((n, n), dtype=np.int8))

    @classmethod
    def from_edges(cls, n: int, edges) -> "UndirectedGraph":
        """Edges are 0-indexed (i, j) pairs."""
        a = np.zeros((n, n), dtype=np.int8)
        for i, j in edges:
            a[i, j] = a[j, i] = 1
        return cls(a)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        i, j = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(i.tolist(), j.tolist()))

    def degrees(self) -> np.ndarray:
        return self.adjacency.sum(axis=1, dtype=np.int64)

    def __eq__(self, other):
        return isinstance(other, UndirectedGraph) and np.array_equal(self.adjacency, other.adjacency)


@numba.njit(cache=True)
def _graph_stats(adj):
    n = adj.shape[0]
    edges = 0
    two_stars = 0
    for i in range(n):
        d = 0
        for j in range(n):
            d += adj[i, j]
        two_stars += d * (d - 1) // 2
        for j in range(i + 1, n):
            edges += adj[i, j]
    return edges, two_stars


def graph_stats(g: UndirectedGraph, spec: ModelSpec | None = None) -> np.ndarray:
    """(edges[, two-stars]) with two-stars = sum_k C(deg(k), 2)."""
    e, t = _graph_stats(g.adjacency)
    m = 2 if spec is None else spec.statistic_count
    return np.array([e, t][:m], dtype=float)


def toggle_delta(g: UndirectedGraph, i: int, j: int) -> np.ndarray:
    """Change in (edges, two-stars) from flipping dyad (i, j)."""
    y = int(g.adjacency[i, j])
    deg = g.degrees()
    sign = 1 - 2 * y
    return np.array([sign, sign * (deg[i] + deg[j] - 2 * y)], dtype=float)


@numba.njit(cache=True)
def _toggle_sweeps(adj, deg, table, n_sweeps, rng):
    # heat-bath update of every dyad in lexicographic order; table[k] is the
    # probability of an edge given k = number of other edges at its endpoints
    n = adj.shape[0]
    for _ in range(n_sweeps):
        for i in range(n - 1):
            for j in range(i + 1, n):
                y = adj[i, j]
                k = deg[i] + deg[j] - 2 * y
                new = 1 if rng.random() < table[k] else 0
                if new != y:
                    adj[i, j] = new
                    adj[j, i] = new
                    step = new - y
                    deg[i] += step
                    deg[j] += step


@numba.njit(cache=True)
def _edge_table(n, phi1, phi2):
    table = np.empty(2 * n)
    for k in range(2 * n):
        table[k] = 1.0 / (1.0 + math.exp(-(phi1 + phi2 * k)))
    return table


@numba.njit(cache=True)
def graph_draws(n, phi1, phi2, n_sweeps, s, thin, rng):
    """(edges, two-stars) of ``s`` successive states of one toggle chain started
    from the empty graph; first after ``n_sweeps`` sweeps, then every ``thin``."""
    adj = np.zeros((n, n), dtype=np.int8)
    deg = np.zeros(n, dtype=np.int64)
    table = _edge_table(n, phi1, phi2)
    out = np.empty((s, 2))
    _toggle_sweeps(adj, deg, table, n_sweeps, rng)
    for k in range(s):
        if k > 0:
            _toggle_sweeps(adj, deg, table, thin, rng)
        e = 0
        t = 0
        for i in range(n):
            t += deg[i] * (deg[i] - 1) // 2
            e += deg[i]
        out[k, 0] = e // 2
        out[k, 1] = t
    return out


def _padded(theta, spec: ModelSpec) -> tuple[float, float]:
    theta = spec.check_theta(theta)
    return float(theta[0]), float(theta[1]) if spec.statistic_count == 2 else 0.0


def graph_sample_approx(theta, spec: ModelSpec, n_sweeps: int, rng) -> UndirectedGraph:
    """Approximate draw from f(.|theta): n_sweeps full dyad sweeps from the empty graph."""
    if n_sweeps < 1:
        raise ValueError("n_sweeps must be at least 1")
    phi1, phi2 = _padded(theta, spec)
    n = spec.dims[0]
    adj = np.zeros((n, n), dtype=np.int8)
    deg = np.zeros(n, dtype=np.int64)
    _toggle_sweeps(adj, deg, _edge_table(n, phi1, phi2), n_sweeps, as_generator(rng))
    return UndirectedGraph(adj)


@functools.lru_cache(maxsize=8)
def enumerate_graph_stats(n: int) -> np.ndarray:
    """(edges, two-stars) for all 2**C(n,2) graphs."""
    dyads = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if len(dyads) > MAX_BRUTE_DYADS:
        raise ValueError(f"{len(dyads)} dyads is too many to enumerate (max {MAX_BRUTE_DYADS})")
    ids = np.arange(2 ** len(dyads), dtype=np.int64)
    bits = (ids[:, None] >> np.arange(len(dyads))) & 1
    deg = np.zeros((len(ids), n), dtype=np.int64)
    for d, (i, j) in enumerate(dyads):
        deg[:, i] += bits[:, d]
        deg[:, j] += bits[:, d]
    out = np.stack([bits.sum(axis=1), (deg * (deg - 1) // 2).sum(axis=1)], axis=1).astype(float)
    out.setflags(write=False)
    return out


def z_graph_brute(theta, spec: ModelSpec) -> float:
    """log z(theta) by summing over every graph on spec's node set."""
    theta = spec.check_theta(theta)
    stats = enumerate_graph_stats(spec.dims[0])[:, : spec.statistic_count]
    return float(logsumexp(stats @ theta))


# ---------------------------------------------------------------- edge lists

def load_edge_list(path) -> UndirectedGraph:
    """Read ``n <count>`` then one 1-indexed ``i j`` pair per line.

    Lines starting with ``#`` are comments.  ``n=3`` is accepted for the header.
    """
    n = None
    edges = set()
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if n is None:
            head = line.replace("=", " ").split()
            if len(head) != 2 or head[0] != "n" or not head[1].isdigit():
                raise ValueError(f"{path}:{lineno}: expected header 'n <count>'")
            n = int(head[1])
            continue
        parts = line.split()
        if len(parts) != 2 or not all(p.lstrip("-").isdigit() for p in parts):
            raise ValueError(f"{path}:{lineno}: malformed edge line {raw!r}")
        i, j = int(parts[0]), int(parts[1])
        if i == j:
            raise ValueError(f"{path}:{lineno}: self-loop at node {i}")
        if not (1 <= i <= n and 1 <= j <= n):
            raise ValueError(f"{path}:{lineno}: node index out of range 1..{n}")
        key = (min(i, j) - 1, max(i, j) - 1)
        if key in edges:
            raise ValueError(f"{path}:{lineno}: duplicate edge {i} {j}")
        edges.add(key)
    if n is None:
        raise ValueError(f"{path}: empty edge list")
    return UndirectedGraph.from_edges(n, sorted(edges))


def write_edge_list(g: UndirectedGraph, path, header: str = "") -> None:
    lines = [f"# {ln}" for ln in header.splitlines()]
    lines.append(f"n {g.n}")
    lines += [f"{i + 1} {j + 1}" for i, j in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def gamaneg_path() -> Path:
    return Path(__file__).with_name("data") / "gamaneg.txt"


def load_gamaneg() -> UndirectedGraph:
    return load_edge_list(gamaneg_path())
