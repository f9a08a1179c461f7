"""Small simple graphs, homomorphism counting, and dense graph configurations.

``SmallGraph`` plays the role of a subgraph statistic (triangle, two-star,
...); ``GraphConfig`` is a configuration of the edge variables of the
complete graph on ``n`` vertices, stored both as an edge bitmask and as
per-vertex adjacency bitmasks so popcount tricks stay cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations

import numpy as np


@dataclass(frozen=True)
class SmallGraph:
    """Simple graph on vertices ``0..n_vertices-1`` with sorted edge tuples."""

    n_vertices: int
    edges: tuple

    def __post_init__(self):
        seen = set()
        for (u, v) in self.edges:
            if not (0 <= u < v < self.n_vertices):
                raise ValueError("edges must satisfy 0 <= u < v < n_vertices")
            if (u, v) in seen:
                raise ValueError("duplicate edge")
            seen.add((u, v))

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degree_list(self):
        deg = [0] * self.n_vertices
        for u, v in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg

    def has_isolated_vertex(self) -> bool:
        return 0 in self.degree_list() if self.n_vertices > 0 else False

    def is_connected(self) -> bool:
        if self.n_vertices == 0:
            return False
        adj = [[] for _ in range(self.n_vertices)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        seen = {0}
        stack = [0]
        while stack:
            w = stack.pop()
            for z in adj[w]:
                if z not in seen:
                    seen.add(z)
                    stack.append(z)
        return len(seen) == self.n_vertices

    def canonical_key(self):
        """Minimal edge mask over all vertex relabelings; isomorphism key."""
        best = None
        pairs = list(combinations(range(self.n_vertices), 2))
        pair_index = {p: k for k, p in enumerate(pairs)}
        for perm in permutations(range(self.n_vertices)):
            mask = 0
            for u, v in self.edges:
                a, b = perm[u], perm[v]
                if a > b:
                    a, b = b, a
                mask |= 1 << pair_index[(a, b)]
            if best is None or mask < best:
                best = mask
        return (self.n_vertices, best)


SINGLE_EDGE = SmallGraph(2, ((0, 1),))
TWO_STAR = SmallGraph(3, ((0, 1), (0, 2)))
TRIANGLE = SmallGraph(3, ((0, 1), (0, 2), (1, 2)))


@lru_cache(maxsize=None)
def probe_graphs(v_max: int) -> tuple:
    """Connected graphs with ``2..v_max`` vertices and at least two edges,
    one representative per isomorphism class.

    These are the statistics entering the good-set membership checks; a
    connected graph on >= 2 vertices has no isolated vertex by construction.
    """
    if not 2 <= v_max <= 5:
        raise ValueError("v_max must be between 2 and 5")
    out = []
    seen = set()
    for nv in range(2, v_max + 1):
        pairs = list(combinations(range(nv), 2))
        for mask in range(1 << len(pairs)):
            if mask.bit_count() < 2:
                continue
            edges = tuple(p for k, p in enumerate(pairs) if (mask >> k) & 1)
            g = SmallGraph(nv, edges)
            if not g.is_connected():
                continue
            key = g.canonical_key()
            if key in seen:
                continue
            seen.add(key)
            out.append(g)
    return tuple(out)


def _edge_pairs(n):
    return list(combinations(range(n), 2))


@lru_cache(maxsize=None)
def edge_index_table(n: int):
    """Lexicographic (u, v) -> edge index map for the complete graph."""
    pairs = _edge_pairs(n)
    index = {p: k for k, p in enumerate(pairs)}
    return pairs, index


@dataclass(frozen=True)
class GraphConfig:
    """Edge configuration on ``n`` labeled vertices (edge variables 0/1)."""

    n: int
    edge_mask: int

    def __post_init__(self):
        n_edges = self.n * (self.n - 1) // 2
        if not 0 <= self.edge_mask < (1 << n_edges):
            raise ValueError("edge mask out of range")

    @property
    def n_edge_vars(self) -> int:
        return self.n * (self.n - 1) // 2

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        _, index = edge_index_table(self.n)
        return bool((self.edge_mask >> index[(u, v)]) & 1)

    def with_edge(self, u: int, v: int, present: bool) -> "GraphConfig":
        if u > v:
            u, v = v, u
        _, index = edge_index_table(self.n)
        bit = 1 << index[(u, v)]
        mask = (self.edge_mask | bit) if present else (self.edge_mask & ~bit)
        return GraphConfig(self.n, mask)

    def adjacency_masks(self) -> np.ndarray:
        """Per-vertex neighbor bitmasks as uint64 (n <= 64)."""
        if self.n > 64:
            raise ValueError("adjacency bitmasks support n <= 64")
        pairs, _ = edge_index_table(self.n)
        adj = np.zeros(self.n, dtype=np.uint64)
        m = self.edge_mask
        for k, (u, v) in enumerate(pairs):
            if (m >> k) & 1:
                adj[u] |= np.uint64(1 << v)
                adj[v] |= np.uint64(1 << u)
        return adj

    def edge_count(self) -> int:
        return self.edge_mask.bit_count()

    def edge_list(self):
        pairs, _ = edge_index_table(self.n)
        return [p for k, p in enumerate(pairs) if (self.edge_mask >> k) & 1]


def complete_graph_config(n: int) -> GraphConfig:
    return GraphConfig(n, (1 << (n * (n - 1) // 2)) - 1)


def empty_graph_config(n: int) -> GraphConfig:
    return GraphConfig(n, 0)


def gnp_config(n: int, p: float, rng) -> GraphConfig:
    k = n * (n - 1) // 2
    bits = rng.random(k) < p
    mask = 0
    for i in range(k):
        if bits[i]:
            mask |= 1 << i
    return GraphConfig(n, mask)


def parse_edge_list(text: str, n: int) -> GraphConfig:
    """Read the ``u v`` per-line format (0-indexed, u < v)."""
    mask = 0
    _, index = edge_index_table(n)
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"malformed edge line: {line!r}")
        u, v = int(parts[0]), int(parts[1])
        if not 0 <= u < v < n:
            raise ValueError(f"edge ({u}, {v}) violates 0 <= u < v < n")
        mask |= 1 << index[(u, v)]
    return GraphConfig(n, mask)


def format_edge_list(config: GraphConfig) -> str:
    """Sorted ``u v`` per-line text form, LF-terminated."""
    lines = [f"{u} {v}" for u, v in config.edge_list()]
    return "\n".join(lines) + ("\n" if lines else "")


def count_homomorphisms(g: SmallGraph, config: GraphConfig) -> int:
    """Number of maps V(g) -> V(config) sending every edge to an edge.

    Not necessarily injective.  Backtracking over vertices in a BFS-ish
    order with adjacency-bitmask pruning; intended for ``|V(g)| <= 6``.
    """
    if g.n_vertices > 6:
        raise ValueError("homomorphism counting supports at most 6 pattern vertices")
    if g.n_vertices == 0:
        return 1
    n = config.n
    adj = [int(a) for a in config.adjacency_masks()]
    full = (1 << n) - 1

    order, placed_neighbors = _hom_order(g)
    counts = 0
    assignment = [0] * g.n_vertices

    def rec(pos):
        nonlocal counts
        if pos == len(order):
            counts += 1
            return
        v = order[pos]
        cand = full
        for w in placed_neighbors[pos]:
            cand &= adj[assignment[w]]
        while cand:
            bit = cand & (-cand)
            cand ^= bit
            assignment[v] = bit.bit_length() - 1
            rec(pos + 1)

    rec(0)
    return counts


@lru_cache(maxsize=None)
def _hom_order_cached(nv, edges):
    g = SmallGraph(nv, edges)
    return _hom_order_impl(g)


def _hom_order(g: SmallGraph):
    return _hom_order_cached(g.n_vertices, g.edges)


def _hom_order_impl(g: SmallGraph):
    """Vertex order maximizing early adjacency constraints."""
    nbrs = [set() for _ in range(g.n_vertices)]
    for u, v in g.edges:
        nbrs[u].add(v)
        nbrs[v].add(u)
    order = []
    placed = set()
    while len(order) < g.n_vertices:
        best, best_score = None, (-1, -1)
        for v in range(g.n_vertices):
            if v in placed:
                continue
            score = (len(nbrs[v] & placed), len(nbrs[v]))
            if score > best_score:
                best, best_score = v, score
        order.append(best)
        placed.add(best)
    placed_neighbors = []
    for k, v in enumerate(order):
        placed_neighbors.append(tuple(w for w in order[:k] if w in nbrs[v]))
    return order, placed_neighbors


def hom_density(g: SmallGraph, config: GraphConfig) -> float:
    """Homomorphism count normalised by ``n^{|V(g)|}``."""
    return count_homomorphisms(g, config) / float(config.n) ** g.n_vertices


def hom_count_delta(g: SmallGraph, config: GraphConfig, u: int, v: int) -> int:
    """Forced-edge difference ``N_g(x with uv) - N_g(x without uv)``."""
    with_e = count_homomorphisms(g, config.with_edge(u, v, True))
    without_e = count_homomorphisms(g, config.with_edge(u, v, False))
    return with_e - without_e
