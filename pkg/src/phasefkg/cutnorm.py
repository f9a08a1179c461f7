"""Cut distance from a graph's empirical graphon to a constant graphon.

Against a constant function ``p`` the measure-preserving rearrangement in
the graphon metric is irrelevant, and the bilinear objective attains its
maximum at integral vertex subsets, so

    d(x, p) = (1/n^2) * max over S,T of | e(S, T) - p |S| |T| |

where ``e(S, T)`` counts ordered adjacent pairs (u, v) with u in S, v in T.
Given S the optimal T is read off the column sums ``|N(v) & S| - p |S|``
(take the positive or the negative part), which brings exact evaluation
down to an O(2^n * n) scan over S.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .graphs import GraphConfig, edge_index_table

EXACT_MAX_N = 12
_HARD_MAX_N = 16


@dataclass(frozen=True)
class CutNormResult:
    value: float
    mode: str  # EXACT | LOWER_BOUND
    upper_bound: float
    n: int
    p: float


def _adjacency_matrix(x: GraphConfig) -> np.ndarray:
    n = x.n
    a = np.zeros((n, n), dtype=np.float64)
    for (u, v) in x.edge_list():
        a[u, v] = 1.0
        a[v, u] = 1.0
    return a


def _subset_table(n: int) -> np.ndarray:
    """Membership matrix of all 2^n vertex subsets, shape (2^n, n)."""
    subs = np.arange(1 << n, dtype=np.int64)
    return ((subs[:, None] >> np.arange(n)) & 1).astype(np.float64)


def exact_cut_distance(x: GraphConfig, p: float) -> float:
    """Exact scan; exponential in n, capped well below memory trouble."""
    n = x.n
    if n > _HARD_MAX_N:
        raise ValueError(f"exact cut distance limited to n <= {_HARD_MAX_N}")
    a = _adjacency_matrix(x)
    member = _subset_table(n)
    deg = member @ a  # deg[S, v] = |N(v) & S|
    c = deg - p * member.sum(axis=1)[:, None]
    pos = np.maximum(c, 0.0).sum(axis=1)
    neg = np.minimum(c, 0.0).sum(axis=1)
    return float(max(pos.max(), -neg.min()) / (n * n))


def greedy_cut_lower_bound(
    x: GraphConfig, p: float, restarts: int = 32, rng: Optional[np.random.Generator] = None
) -> float:
    """Alternating-maximization local search; certified lower bound only."""
    if rng is None:
        rng = np.random.default_rng(0)
    n = x.n
    a = _adjacency_matrix(x)
    best = 0.0
    for _ in range(restarts):
        start = rng.uniform(size=n) < 0.5
        for sign in (1.0, -1.0):
            # A is symmetric, so alternating the S and T updates is just
            # iterating one map: T(S) = {v : sign * (deg_S(v) - p|S|) > 0}
            cur = start.copy()
            prev = -math.inf
            for _ in range(64):
                c = a @ cur.astype(np.float64) - p * cur.sum()
                nxt = (sign * c) > 0
                val = sign * float(c[nxt].sum())
                if val <= prev + 1e-12:
                    break
                prev = val
                cur = nxt
            best = max(best, prev)
    return best / (n * n)


def cut_distance_to_constant(
    x: GraphConfig,
    p: float,
    exact_max_n: int = EXACT_MAX_N,
    restarts: int = 32,
    rng: Optional[np.random.Generator] = None,
) -> CutNormResult:
    """Exact for small n, labeled greedy lower bound beyond.

    The upper bound in LOWER_BOUND mode is the trivial envelope
    ``max(p, 1 - p)`` of the pointwise graphon difference.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("constant graphon level must lie in [0, 1]")
    if x.n <= exact_max_n:
        v = exact_cut_distance(x, p)
        return CutNormResult(value=v, mode="EXACT", upper_bound=v, n=x.n, p=p)
    v = greedy_cut_lower_bound(x, p, restarts=restarts, rng=rng)
    return CutNormResult(
        value=v, mode="LOWER_BOUND", upper_bound=max(p, 1.0 - p), n=x.n, p=p
    )


def all_states_cut_distance(n: int, p: float) -> np.ndarray:
    """Exact cut distance for every edge configuration on n vertices.

    Returns a float64 array indexed by the packed edge bitset; n <= 6
    (the table has 2^C(n,2) entries).
    """
    if n > 6:
        raise ValueError("all-states table limited to n <= 6")
    _, index = edge_index_table(n)
    n_edges = n * (n - 1) // 2
    states = np.arange(1 << n_edges, dtype=np.int64)
    best = np.zeros(len(states), dtype=np.float64)
    for sub in range(1 << n):
        size = int(sub).bit_count()
        pos = np.zeros(len(states), dtype=np.float64)
        neg = np.zeros(len(states), dtype=np.float64)
        for v in range(n):
            mask = 0
            for u in range(n):
                if u != v and (sub >> u) & 1:
                    mask |= 1 << index[(min(u, v), max(u, v))]
            cnt = np.bitwise_count(states & mask).astype(np.float64)
            c = cnt - p * size
            pos += np.maximum(c, 0.0)
            neg += np.minimum(c, 0.0)
        np.maximum(best, pos, out=best)
        np.maximum(best, -neg, out=best)
    return best / (n * n)


class CutNormTracker:
    """Exact cut distance under single-edge flips, n <= 12.

    Maintains ``deg[S, v] = |N(v) & S|`` for every vertex subset S; a flip
    touches the 2^(n-1) rows containing one endpoint, per endpoint, and a
    full evaluation is one O(2^n * n) reduction.
    """

    def __init__(self, n: int, p: float, edge_mask: int = 0):
        if n > EXACT_MAX_N:
            raise ValueError(f"tracker limited to n <= {EXACT_MAX_N}")
        self.n = n
        self.p = float(p)
        self._edges, _ = edge_index_table(n)
        subs = np.arange(1 << n, dtype=np.int64)
        self._sizes = np.bitwise_count(subs).astype(np.float64)
        self._rows_with = [np.nonzero((subs >> u) & 1)[0] for u in range(n)]
        self._deg = np.zeros((1 << n, n), dtype=np.int32)
        self.edge_mask = 0
        for e in range(len(self._edges)):
            if (edge_mask >> e) & 1:
                self.flip(e)

    def flip(self, e: int) -> None:
        u, v = self._edges[e]
        delta = -1 if (self.edge_mask >> e) & 1 else 1
        self._deg[self._rows_with[u], v] += delta
        self._deg[self._rows_with[v], u] += delta
        self.edge_mask ^= 1 << e

    def set_edge(self, e: int, value: int) -> None:
        if ((self.edge_mask >> e) & 1) != value:
            self.flip(e)

    def value(self) -> float:
        c = self._deg - self.p * self._sizes[:, None]
        pos = np.maximum(c, 0.0).sum(axis=1)
        neg = np.minimum(c, 0.0).sum(axis=1)
        return float(max(pos.max(), -neg.min()) / (self.n * self.n))

    def in_ball(self, eta: float) -> bool:
        return self.value() <= eta
