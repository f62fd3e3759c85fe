"""Small-world and scale-free graph generators with exact analytics.

Two classic random-graph constructions: ring lattices whose edges are
rewired with probability p (interpolating between regular order at p = 0
and near-random wiring at p = 1), and preferential-attachment growth
yielding power-law degree tails.  Metrics are exact — local clustering by
triangle counting, characteristic path length by all-sources BFS — so the
generators carry all the randomness.

The scan over rewiring probability exposes the small-world window: a range
of p where the path length has already collapsed while clustering is still
close to the lattice value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

from .core import RngStream

__all__ = [
    "Graph",
    "NetworkMetrics",
    "SmallWorldPoint",
    "SmallWorldScan",
    "watts_strogatz",
    "barabasi_albert",
    "metrics",
    "small_world_scan",
    "edge_list_text",
    "parse_edge_list",
]


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph: ``n`` nodes, edges as a frozenset of (u, v).

    Edges are stored with u < v, which rules out self-loops and makes the
    set representation duplicate-free and orientation-free by construction.
    ``skipped_rewires`` is generation bookkeeping: how many rewiring
    attempts were abandoned because the chosen node already neighbored
    every other node (only ever nonzero for rewired ring lattices).
    """

    n: int
    edges: frozenset
    skipped_rewires: int = 0

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        for u, v in self.edges:
            if not (0 <= u < v < self.n):
                raise ValueError(f"edge ({u}, {v}) is not ordered within range")

    @classmethod
    def from_edges(cls, n: int, pairs: Iterable[tuple[int, int]],
                   skipped_rewires: int = 0) -> "Graph":
        """Normalize arbitrary (u, v) pairs; rejects self-loops."""
        normalized = set()
        for u, v in pairs:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at node {u}")
            normalized.add((min(u, v), max(u, v)))
        return cls(n=n, edges=frozenset(normalized),
                   skipped_rewires=skipped_rewires)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def neighbor_sets(self) -> list[set]:
        adj = [set() for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj


@dataclass(frozen=True)
class NetworkMetrics:
    """Exact graph statistics.

    ``clustering`` is the mean local clustering coefficient (nodes of
    degree < 2 contribute 0); ``transitivity`` is the global triangle
    density 3*triangles/triads, reported alongside because the two
    definitions are often conflated.  ``path_length`` is the mean
    shortest-path distance over connected node pairs — computed on the
    largest component with ``connected=False`` when the graph is not
    connected.  ``clustering_defined`` is False for n < 3, where the
    coefficient is reported as 0 by convention.
    """

    clustering: float
    path_length: float
    degree_histogram: np.ndarray
    transitivity: float
    connected: bool
    clustering_defined: bool


class SmallWorldPoint(NamedTuple):
    p: float
    clustering_ratio: float
    path_length_ratio: float


@dataclass(frozen=True)
class SmallWorldScan:
    """Normalized clustering and path length versus rewiring probability.

    ``has_window`` records the small-world verdict: some scanned p has
    path_length_ratio < 0.5 while clustering_ratio > 0.7.  Baselines are
    the p = 0 ensemble means, so the p = 0 row is (1.0, 1.0) exactly.
    """

    points: tuple
    clustering_base: float
    path_length_base: float
    has_window: bool


def watts_strogatz(n: int, k: int, p: float, rng: RngStream) -> Graph:
    """Ring lattice over n nodes, k nearest neighbors, rewired with prob p.

    Every lattice edge is visited once (by lag, then by node); with
    probability p its far endpoint is moved to a uniformly random node that
    is neither the near endpoint nor already adjacent to it.  A rewire with
    no feasible target (near endpoint saturated) is skipped and counted.
    """
    if k < 2 or k % 2 != 0:
        raise ValueError("k must be an even count >= 2")
    if n <= k:
        raise ValueError("need n > k nodes")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    gen = rng.gen
    adj = [set() for _ in range(n)]
    for lag in range(1, k // 2 + 1):
        for u in range(n):
            v = (u + lag) % n
            adj[u].add(v)
            adj[v].add(u)
    skipped = 0
    for lag in range(1, k // 2 + 1):
        for u in range(n):
            far = (u + lag) % n
            if gen.random() >= p:
                continue
            if len(adj[u]) >= n - 1:
                skipped += 1
                continue
            while True:
                target = int(gen.integers(n))
                if target != u and target not in adj[u]:
                    break
            adj[u].discard(far)
            adj[far].discard(u)
            adj[u].add(target)
            adj[target].add(u)
    edges = frozenset((u, v) for u in range(n) for v in adj[u] if u < v)
    return Graph(n=n, edges=edges, skipped_rewires=skipped)


def barabasi_albert(n: int, m: int, rng: RngStream) -> Graph:
    """Preferential-attachment growth from an (m+1)-clique.

    Each arriving node attaches m edges to distinct existing nodes chosen
    with probability proportional to current degree (redraws on collision).
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if n <= m:
        raise ValueError("need n > m nodes")
    gen = rng.gen
    edges = set()
    # each node appears in `attachment` once per unit of degree
    attachment: list[int] = []
    seed_size = m + 1
    for u in range(seed_size):
        for v in range(u + 1, seed_size):
            edges.add((u, v))
        attachment.extend([u] * m)
    for new in range(seed_size, n):
        chosen: set[int] = set()
        while len(chosen) < m:
            candidate = attachment[int(gen.integers(len(attachment)))]
            chosen.add(candidate)
        for old in sorted(chosen):
            edges.add((old, new))
            attachment.append(old)
        attachment.extend([new] * m)
    return Graph(n=n, edges=frozenset(edges))


def _clustering_stats(g: Graph) -> tuple[float, float]:
    """(mean local coefficient, global transitivity) by triangle counting."""
    adj = g.neighbor_sets()
    local_sum = 0.0
    wedge_ends = 0  # 2 * number of triangles, summed over nodes
    triads = 0
    for u in range(g.n):
        neighbors = sorted(adj[u])
        d = len(neighbors)
        if d < 2:
            continue
        links = 0
        for a in range(d):
            na = adj[neighbors[a]]
            for b in range(a + 1, d):
                if neighbors[b] in na:
                    links += 1
        pairs = d * (d - 1) // 2
        local_sum += links / pairs
        wedge_ends += links
        triads += pairs
    mean_local = local_sum / g.n
    transitivity = wedge_ends / triads if triads else 0.0
    return mean_local, transitivity


def metrics(g: Graph) -> NetworkMetrics:
    """Exact clustering, characteristic path length, and degree histogram.

    Path length averages shortest-path distances (all-sources BFS) over all
    connected node pairs; on a disconnected graph the largest component is
    used and the result is flagged via ``connected=False``.
    """
    degrees = g.degrees
    histogram = np.bincount(degrees, minlength=1)
    clustering_defined = g.n >= 3
    clustering, transitivity = (_clustering_stats(g) if clustering_defined
                                else (0.0, 0.0))

    if g.edges:
        rows = np.fromiter((u for u, _ in g.edges), dtype=np.int64,
                           count=g.edge_count)
        cols = np.fromiter((v for _, v in g.edges), dtype=np.int64,
                           count=g.edge_count)
        data = np.ones(g.edge_count, dtype=np.int8)
        sparse = csr_matrix(
            (np.concatenate([data, data]),
             (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(g.n, g.n),
        )
    else:
        sparse = csr_matrix((g.n, g.n), dtype=np.int8)
    n_components, labels = connected_components(sparse, directed=False)
    connected = n_components == 1
    members = (np.arange(g.n) if connected
               else np.flatnonzero(labels == np.bincount(labels).argmax()))
    if members.size < 2:
        path_length = 0.0
    else:
        dist = shortest_path(sparse, method="D", unweighted=True,
                             indices=members)[:, members]
        path_length = float(dist.sum() / (members.size * (members.size - 1)))
    return NetworkMetrics(
        clustering=clustering,
        path_length=path_length,
        degree_histogram=histogram,
        transitivity=transitivity,
        connected=connected,
        clustering_defined=clustering_defined,
    )


def small_world_scan(n: int, k: int, p_values: Sequence[float], seeds: int,
                     rng: RngStream) -> SmallWorldScan:
    """Ensemble means of C(p)/C(0) and L(p)/L(0) over rewiring probability.

    Each (p, seed) pair draws its graph from an independent substream, so
    the table is reproducible row by row.  Rows come out in ascending p.
    """
    p_sorted = sorted(float(p) for p in p_values)
    if not p_sorted or p_sorted[0] != 0.0:
        raise ValueError("p_values must include 0 (the lattice baseline)")
    if len(set(p_sorted)) != len(p_sorted):
        raise ValueError("p_values must be distinct")
    if seeds < 10:
        raise ValueError("need at least 10 seeds per p")

    means = []
    for i, p in enumerate(p_sorted):
        c_total = 0.0
        l_total = 0.0
        for s in range(seeds):
            g = watts_strogatz(n, k, p, rng.substream(i * seeds + s))
            m = metrics(g)
            c_total += m.clustering
            l_total += m.path_length
        means.append((c_total / seeds, l_total / seeds))
    c_base, l_base = means[0]
    points = tuple(
        SmallWorldPoint(p=p, clustering_ratio=c / c_base,
                        path_length_ratio=length / l_base)
        for p, (c, length) in zip(p_sorted, means)
    )
    has_window = any(pt.path_length_ratio < 0.5 and pt.clustering_ratio > 0.7
                     for pt in points)
    return SmallWorldScan(points=points, clustering_base=c_base,
                          path_length_base=l_base, has_window=has_window)


def edge_list_text(g: Graph) -> str:
    """Canonical edge-list serialization: sorted "u v" lines."""
    return "".join(f"{u} {v}\n" for u, v in sorted(g.edges))


def parse_edge_list(text: str, n: int) -> Graph:
    """Inverse of :func:`edge_list_text`."""
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        u, v = line.split()
        pairs.append((int(u), int(v)))
    return Graph.from_edges(n, pairs)
