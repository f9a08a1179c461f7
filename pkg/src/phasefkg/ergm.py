"""Exponential random graph models with ferromagnetic subgraph weights.

The model on ``n`` vertices weights an edge configuration x by
``exp(n^2 H(x))`` with ``H(x) = sum_j beta_j t(G_j, x)``, where ``G_0`` is a
single edge, the remaining coefficients are nonnegative, and ``t`` is
homomorphism density.  The module covers the scalar rate function and its
maximizers (the phases), r-statistics and the good set they define,
phase-conditioned Glauber sampling (exact cut-distance ball for small n,
good-set/density proxy beyond), and local FKG witnesses on exhaustive
instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit

from . import kernels
from .cutnorm import EXACT_MAX_N, CutNormTracker, all_states_cut_distance
from .graphs import (
    SINGLE_EDGE,
    TRIANGLE,
    TWO_STAR,
    GraphConfig,
    SmallGraph,
    count_homomorphisms,
    edge_index_table,
    gnp_config,
    hom_count_delta,
    hom_density,
    probe_graphs,
)
from .rng import coordinate_blocks, stream

_EDGE_KEY = SINGLE_EDGE.canonical_key()
_P3_KEY = TWO_STAR.canonical_key()
_K3_KEY = TRIANGLE.canonical_key()


@dataclass(frozen=True)
class ErgmSpec:
    """Model graphs ``G_0..G_K`` with coefficients ``beta`` on n vertices.

    ``G_0`` must be a single edge (free sign); every further graph must be
    connected with no isolated vertices and carry ``beta_j >= 0``.
    """

    graphs: tuple
    beta: tuple
    n: int

    def __post_init__(self):
        if len(self.graphs) != len(self.beta) or not self.graphs:
            raise ValueError("need one coefficient per model graph")
        if self.n < 2:
            raise ValueError("need at least two vertices")
        if self.graphs[0].canonical_key() != _EDGE_KEY:
            raise ValueError("the first model graph must be a single edge")
        for j, g in enumerate(self.graphs):
            if not isinstance(g, SmallGraph):
                raise TypeError("model graphs must be SmallGraph instances")
            if g.degree_list().count(0) > 0:
                raise ValueError(f"model graph {j} has an isolated vertex")
            if not g.is_connected():
                raise ValueError(f"model graph {j} is not connected")
        for j, b in enumerate(self.beta):
            if not math.isfinite(b):
                raise ValueError("coefficients must be finite")
            if j >= 1 and b < 0:
                raise ValueError(
                    f"ferromagnetic violation j={j}: beta must be nonnegative"
                )

    @property
    def v_max(self) -> int:
        return max(g.n_vertices for g in self.graphs)

    @property
    def n_edge_vars(self) -> int:
        return self.n * (self.n - 1) // 2


def edge_triangle_spec(beta_edge: float, beta_triangle: float, n: int) -> ErgmSpec:
    return ErgmSpec(graphs=(SINGLE_EDGE, TRIANGLE), beta=(beta_edge, beta_triangle), n=n)


def h_value(spec: ErgmSpec, p):
    p = np.asarray(p, dtype=np.float64)
    acc = np.zeros_like(p)
    for g, b in zip(spec.graphs, spec.beta):
        acc = acc + b * p ** g.n_edges
    return acc


def h_prime(spec: ErgmSpec, p):
    p = np.asarray(p, dtype=np.float64)
    acc = np.zeros_like(p)
    for g, b in zip(spec.graphs, spec.beta):
        acc = acc + b * g.n_edges * p ** (g.n_edges - 1)
    return acc


def h_second(spec: ErgmSpec, p):
    p = np.asarray(p, dtype=np.float64)
    acc = np.zeros_like(p)
    for g, b in zip(spec.graphs, spec.beta):
        e = g.n_edges
        if e >= 2:
            acc = acc + b * e * (e - 1) * p ** (e - 2)
    return acc


def rate_function(spec: ErgmSpec, p):
    """``(L, L', L'')`` with the half-entropy normalization of edge variables."""
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("rate function defined on the open interval (0, 1)")
    ent = -0.5 * (p * np.log(p) + (1 - p) * np.log1p(-p))
    L = h_value(spec, p) + ent
    Lp = h_prime(spec, p) - 0.5 * (np.log(p) - np.log1p(-p))
    Lpp = h_second(spec, p) - 1.0 / (2.0 * p * (1.0 - p))
    return L, Lp, Lpp


def fixed_point_residual(spec: ErgmSpec, p):
    """``p - logistic(2 h'(p))``; zero exactly at stationary points of L."""
    p = np.asarray(p, dtype=np.float64)
    return p - expit(2.0 * h_prime(spec, p))


def map_derivative(spec: ErgmSpec, p):
    """Derivative of ``p -> logistic(2 h'(p))``; < 1 marks attracting points."""
    p = np.asarray(p, dtype=np.float64)
    q = expit(2.0 * h_prime(spec, p))
    return 2.0 * q * (1.0 - q) * h_second(spec, p)


def sigma_n_squared(spec: ErgmSpec, p_star: float) -> float:
    """Edge-count variance scale at an attracting phase density.

    ``p(1-p) C(n,2) / (1 - 2 p(1-p) h''(p))``; the denominator is positive
    exactly when the phase is attracting, and the value strictly exceeds
    the independent-edge variance whenever ``h'' > 0``.
    """
    p = float(p_star)
    denom = 1.0 - 2.0 * p * (1.0 - p) * float(h_second(spec, p))
    if denom <= 0:
        raise ValueError(
            "inconsistent phase: variance denominator nonpositive "
            "(the density is not an attracting fixed point)"
        )
    pairs = spec.n * (spec.n - 1) / 2.0
    return p * (1.0 - p) * pairs / denom


@dataclass(frozen=True)
class GraphDensityPoint:
    p: float
    rate_value: float
    rate_slope: float
    rate_curvature: float
    fixed_point_residual: float
    map_derivative: float
    is_global_max: bool
    is_attracting: bool
    is_near_critical: bool
    sigma_n_squared: Optional[float]


@dataclass(frozen=True)
class ErgmRateAnalysis:
    spec: ErgmSpec
    points: tuple
    tol: float
    grid_size: int

    @property
    def maximizers(self) -> tuple:
        return tuple(pt for pt in self.points if pt.is_global_max)

    @property
    def attracting_maximizers(self) -> tuple:
        return tuple(
            pt for pt in self.points if pt.is_global_max and pt.is_attracting
        )


def ergm_rate_analysis(
    spec: ErgmSpec, grid_size: int = 10000, tol: float = 1e-9
) -> ErgmRateAnalysis:
    """Stationary densities of L by grid sign changes plus bisection."""
    if tol > 1e-8:
        raise ValueError("tol must be at most 1e-8")
    ps = np.linspace(0.0, 1.0, grid_size + 2)[1:-1]
    _, slopes, _ = rate_function(spec, ps)
    sign = np.sign(slopes)
    roots = []
    for k in range(len(ps) - 1):
        if sign[k] == 0:
            roots.append(float(ps[k]))
        elif sign[k] * sign[k + 1] < 0:
            lo, hi = float(ps[k]), float(ps[k + 1])
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                _, smid, _ = rate_function(spec, mid)
                if np.sign(smid) == sign[k]:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-15:
                    break
            roots.append(0.5 * (lo + hi))
    if sign[-1] == 0:
        roots.append(float(ps[-1]))

    points = []
    if roots:
        vals = [float(rate_function(spec, r)[0]) for r in roots]
        top = max(vals)
        for r, v in zip(roots, vals):
            _, slope, curv = rate_function(spec, r)
            attracting = float(map_derivative(spec, r)) < 1.0
            global_max = v >= top - tol
            sigma = None
            if global_max and attracting:
                sigma = sigma_n_squared(spec, r)
            points.append(
                GraphDensityPoint(
                    p=r,
                    rate_value=v,
                    rate_slope=float(slope),
                    rate_curvature=float(curv),
                    fixed_point_residual=float(fixed_point_residual(spec, r)),
                    map_derivative=float(map_derivative(spec, r)),
                    is_global_max=global_max,
                    is_attracting=attracting,
                    is_near_critical=abs(float(curv)) <= tol,
                    sigma_n_squared=sigma,
                )
            )
    return ErgmRateAnalysis(spec=spec, points=tuple(points), tol=tol, grid_size=grid_size)


def hamiltonian(spec: ErgmSpec, x: GraphConfig) -> float:
    if x.n != spec.n:
        raise ValueError("configuration size does not match the model")
    return float(
        sum(b * hom_density(g, x) for g, b in zip(spec.graphs, spec.beta))
    )


def r_statistic(g: SmallGraph, x: GraphConfig, u: int, v: int) -> float:
    """Normalized edge influence on the homomorphism count of ``g``.

    ``(d_e N_g / (2 |E_g| n^{|V_g|-2}))^{1/(|E_g|-1)}``; concentrates near
    the edge density for quasirandom configurations.
    """
    if g.n_edges < 2:
        raise ValueError("r-statistic needs a probe with at least two edges")
    delta = hom_count_delta(g, x, u, v)
    base = 2.0 * g.n_edges * float(x.n) ** (g.n_vertices - 2)
    return float((delta / base) ** (1.0 / (g.n_edges - 1)))


@dataclass(frozen=True)
class GoodSet:
    """States whose r-statistics all sit within ``epsilon`` of ``p_star``."""

    p_star: float
    epsilon: float
    v_max: int
    probes: tuple = field(default=())

    def __post_init__(self):
        if not self.probes:
            object.__setattr__(self, "probes", probe_graphs(self.v_max))


def good_set(spec: ErgmSpec, p_star: float, epsilon: float) -> GoodSet:
    return GoodSet(p_star=float(p_star), epsilon=float(epsilon), v_max=spec.v_max)


def gamma_membership(x: GraphConfig, gs: GoodSet, atol: float = 1e-9) -> dict:
    """Worst r-statistic deviation over all probes and potential edges.

    Boundary ties are admitted within ``atol``, matching the rounding guard
    of the integer windows.
    """
    worst = -1.0
    worst_probe = None
    worst_edge = None
    for g in gs.probes:
        for u in range(x.n):
            for v in range(u + 1, x.n):
                dev = abs(r_statistic(g, x, u, v) - gs.p_star)
                if dev > worst:
                    worst, worst_probe, worst_edge = dev, g, (u, v)
    return {
        "member": bool(worst <= gs.epsilon + atol),
        "worst_deviation": float(worst),
        "worst_probe": worst_probe,
        "worst_edge": worst_edge,
    }


def gamma_windows(gs: GoodSet, n: int) -> np.ndarray:
    """Integer (s, cd) windows equivalent to good-set membership, v_max <= 3.

    With three-vertex probes the only r-statistics are the two-edge path,
    ``r = (s+1)/(2n)`` in the endpoint degree sum s (edge excluded), and the
    triangle, ``r = sqrt(cd/n)`` in the common-neighbor count, so membership
    is a box constraint the samplers can check in integers.
    """
    keys = {g.canonical_key() for g in gs.probes}
    if not keys <= {_P3_KEY, _K3_KEY}:
        raise ValueError("integer windows only exist for probes on <= 3 vertices")
    p, eps = gs.p_star, gs.epsilon
    smin, smax = 0, 2 * (n - 2)
    if _P3_KEY in keys:
        smin = max(smin, math.ceil(2.0 * n * (p - eps) - 1.0 - 1e-9))
        smax = min(smax, math.floor(2.0 * n * (p + eps) - 1.0 + 1e-9))
    cdmin, cdmax = 0, n - 2
    if _K3_KEY in keys:
        lo = max(p - eps, 0.0)
        cdmin = max(cdmin, math.ceil(n * lo * lo - 1e-9))
        cdmax = min(cdmax, math.floor(n * (p + eps) * (p + eps) + 1e-9))
    if smin > smax or cdmin > cdmax:
        raise ValueError("empty good-set windows; epsilon too small for this n")
    return np.array([smin, smax, cdmin, cdmax], dtype=np.int64)


@dataclass(frozen=True)
class CutBall:
    """Cut-distance ball of radius ``eta`` around the constant graphon."""

    p_star: float
    eta: float
    exact_mode_max_n: int = EXACT_MAX_N

    def __post_init__(self):
        if not 0 < self.p_star < 1:
            raise ValueError("ball center must lie in (0, 1)")
        if self.eta <= 0:
            raise ValueError("ball radius must be positive")


def balls_disjoint(a: CutBall, b: CutBall) -> bool:
    """Triangle-inequality certificate: |p_a - p_b| exceeds the radius sum."""
    return abs(a.p_star - b.p_star) > a.eta + b.eta


def density_window(n: int, p_star: float, width: float) -> tuple:
    """Edge-count window for ``|2 E(x)/n^2 - p_star| <= width``."""
    n_edges = n * (n - 1) // 2
    lo = math.ceil(n * n * (p_star - width) / 2.0 - 1e-9)
    hi = math.floor(n * n * (p_star + width) / 2.0 + 1e-9)
    return max(0, lo), min(n_edges, hi)


# ---------------------------------------------------------------------------
# vectorized whole-state-space statistics, n <= 6


def _vertex_edge_masks(n: int) -> list:
    _, index = edge_index_table(n)
    masks = [0] * n
    for (u, v), k in index.items():
        masks[u] |= 1 << k
        masks[v] |= 1 << k
    return masks


def _table_kinds(spec: ErgmSpec) -> Optional[list]:
    """(kind, beta) pairs when every model graph is an edge, path, or triangle."""
    kinds = []
    for g, b in zip(spec.graphs, spec.beta):
        key = g.canonical_key()
        if key == _EDGE_KEY:
            kinds.append(("edge", b))
        elif key == _P3_KEY:
            kinds.append(("p3", b))
        elif key == _K3_KEY:
            kinds.append(("k3", b))
        else:
            return None
    return kinds


def state_log_weights(spec: ErgmSpec, states: Optional[np.ndarray] = None) -> np.ndarray:
    """``n^2 H`` for every packed edge state; n <= 6.

    Fast closed forms for edge/path/triangle terms, generic homomorphism
    counting otherwise.
    """
    n = spec.n
    n_edges = spec.n_edge_vars
    if n > 6:
        raise ValueError("whole-state-space weights limited to n <= 6")
    if states is None:
        states = np.arange(1 << n_edges, dtype=np.int64)
    kinds = _table_kinds(spec)
    logw = np.zeros(len(states), dtype=np.float64)
    if kinds is not None:
        vmasks = _vertex_edge_masks(n)
        degs = None
        for kind, b in kinds:
            if b == 0:
                continue
            if kind == "edge":
                logw += 2.0 * b * np.bitwise_count(states).astype(np.float64)
            elif kind == "p3":
                if degs is None:
                    degs = [
                        np.bitwise_count(states & m).astype(np.float64) for m in vmasks
                    ]
                logw += (b / n) * sum(d * d for d in degs)
            else:
                tri = _triangle_counts(n, states)
                logw += (6.0 * b / n) * tri
        return logw
    _, index = edge_index_table(n)
    for k, s in enumerate(np.asarray(states).tolist()):
        cfg = GraphConfig(n=n, edge_mask=int(s))
        logw[k] = n * n * hamiltonian(spec, cfg)
    return logw


def _triangle_counts(n: int, states: np.ndarray) -> np.ndarray:
    _, index = edge_index_table(n)
    tri = np.zeros(len(states), dtype=np.float64)
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                mask = (
                    (1 << index[(a, b)]) | (1 << index[(a, c)]) | (1 << index[(b, c)])
                )
                tri += (states & mask) == mask
    return tri


def state_gamma_mask(spec: ErgmSpec, gs: GoodSet) -> np.ndarray:
    """Good-set membership of every packed edge state; n <= 6, v_max <= 3."""
    n = spec.n
    win = gamma_windows(gs, n)
    smin, smax, cdmin, cdmax = (int(w) for w in win)
    n_edges = spec.n_edge_vars
    states = np.arange(1 << n_edges, dtype=np.int64)
    vmasks = _vertex_edge_masks(n)
    _, index = edge_index_table(n)
    ok = np.ones(len(states), dtype=bool)
    for (u, v), k in index.items():
        cur = (states >> k) & 1
        s = (
            np.bitwise_count(states & vmasks[u])
            + np.bitwise_count(states & vmasks[v])
            - 2 * cur
        )
        cd = np.zeros(len(states), dtype=np.int64)
        for w in range(n):
            if w in (u, v):
                continue
            ku = index[(min(u, w), max(u, w))]
            kv = index[(min(v, w), max(v, w))]
            cd += ((states >> ku) & 1) & ((states >> kv) & 1)
        ok &= (s >= smin) & (s <= smax) & (cd >= cdmin) & (cd <= cdmax)
    return ok


@dataclass(frozen=True)
class ExactEnumeration:
    """Exact conditioned law over all edge states; n <= 6."""

    spec: ErgmSpec
    ball: Optional[CutBall]
    probs: np.ndarray
    support: np.ndarray
    log_weights: np.ndarray
    edge_counts: np.ndarray

    def edge_count_law(self) -> np.ndarray:
        return np.bincount(
            self.edge_counts, weights=self.probs, minlength=self.spec.n_edge_vars + 1
        )


def exact_enumeration(spec: ErgmSpec, ball: Optional[CutBall] = None) -> ExactEnumeration:
    n = spec.n
    if n > 6:
        raise ValueError("exact enumeration limited to n <= 6")
    logw = state_log_weights(spec)
    states = np.arange(1 << spec.n_edge_vars, dtype=np.int64)
    if ball is not None:
        support = all_states_cut_distance(n, ball.p_star) <= ball.eta
        if not support.any():
            raise ValueError("conditioning ball captures no state")
    else:
        support = np.ones(len(states), dtype=bool)
    shifted = np.where(support, logw, -np.inf)
    mx = shifted.max()
    w = np.exp(shifted - mx, where=np.isfinite(shifted), out=np.zeros(len(states)))
    probs = w / w.sum()
    return ExactEnumeration(
        spec=spec,
        ball=ball,
        probs=probs,
        support=support,
        log_weights=logw,
        edge_counts=np.bitwise_count(states).astype(np.int64),
    )


# ---------------------------------------------------------------------------
# phase-conditioned sampling


def update_probability_table(spec: ErgmSpec, tilt_log: Optional[np.ndarray] = None) -> np.ndarray:
    """Absent-probability of an edge given (degree sum s, common neighbors cd).

    Requires every model graph to be an edge, path, or triangle, which makes
    the scaled Hamiltonian difference of a single edge flip a function of
    the two integers alone: ``2 b_edge + b_p3 (2s+2)/n + 6 b_k3 cd / n``.
    """
    kinds = _table_kinds(spec)
    if kinds is None:
        raise ValueError(
            "closed-form update tables need models built from edges, paths, "
            "and triangles; use the generic stepper instead"
        )
    n = spec.n
    s = np.arange(2 * (n - 2) + 1, dtype=np.float64)[:, None]
    cd = np.arange(n - 1, dtype=np.float64)[None, :]
    acc = np.zeros((s.shape[0], cd.shape[1]), dtype=np.float64)
    for kind, b in kinds:
        if kind == "edge":
            acc += 2.0 * b
        elif kind == "p3":
            acc = acc + b * (2.0 * s + 2.0) / n
        else:
            acc = acc + 6.0 * b * cd / n
    if tilt_log is not None:
        acc = acc + tilt_log
    return expit(-acc)


_COND_MODES = ("none", "edge-band", "exact-ball", "gamma-band")


@dataclass
class SamplerResult:
    spec: ErgmSpec
    steps: int
    mode: str
    approximate: bool
    edge_count_hist: np.ndarray
    rejections: int
    final_config: GraphConfig
    warm_start_attempts: int
    snapshots: Optional[np.ndarray] = None
    edge_trace: Optional[np.ndarray] = None
    flip_trace: Optional[np.ndarray] = None
    accept_trace: Optional[np.ndarray] = None

    def snapshot_configs(self) -> list:
        if self.snapshots is None:
            return []
        return [_config_from_adjacency(row, self.spec.n) for row in self.snapshots]

    def snapshot_edge_counts(self) -> np.ndarray:
        if self.snapshots is None:
            return np.zeros(0, dtype=np.int64)
        counts = np.bitwise_count(self.snapshots).sum(axis=1)
        return (counts // 2).astype(np.int64)

    def snapshot_triangle_homs(self) -> np.ndarray:
        """Triangle homomorphism count (6x triangle count) per snapshot."""
        if self.snapshots is None:
            return np.zeros(0, dtype=np.int64)
        out = np.zeros(len(self.snapshots), dtype=np.int64)
        for k, row in enumerate(self.snapshots):
            a = [int(v) for v in row]
            total = 0
            for u in range(self.spec.n):
                for v in range(u + 1, self.spec.n):
                    if (a[u] >> v) & 1:
                        total += (a[u] & a[v]).bit_count()
            out[k] = 2 * total  # each triangle seen on 3 edges; homs = 6 T
        return out


def _config_from_adjacency(row: np.ndarray, n: int) -> GraphConfig:
    _, index = edge_index_table(n)
    mask = 0
    a = [int(v) for v in row]
    for (u, v), k in index.items():
        if (a[u] >> v) & 1:
            mask |= 1 << k
    return GraphConfig(n=n, edge_mask=mask)


def _adjacency_from_config(x: GraphConfig) -> np.ndarray:
    return x.adjacency_masks()


def _edge_endpoints(n: int) -> tuple:
    pairs, _ = edge_index_table(n)
    eu = np.array([p[0] for p in pairs], dtype=np.int64)
    ev = np.array([p[1] for p in pairs], dtype=np.int64)
    return eu, ev


def _resolve_mode(spec: ErgmSpec, ball: Optional[CutBall], mode: str) -> str:
    if mode != "auto":
        if mode not in _COND_MODES:
            raise ValueError(f"unknown conditioning mode {mode!r}")
        return mode
    if ball is None:
        return "none"
    if spec.n <= ball.exact_mode_max_n:
        return "exact-ball"
    return "gamma-band"


def circulant_config(n: int, chords: Sequence[int], half_chord: bool = False) -> GraphConfig:
    """Circulant graph on Z_n with symmetric connection set {+-a: a in chords}.

    ``half_chord`` adds the n/2 chord (even n), giving odd regular degree.
    Flat-autocorrelation circulants sit at the center of good-set windows,
    which makes them warm starts for regions far too thin for random draws.
    """
    _, index = edge_index_table(n)
    mask = 0
    chord_set = set(int(a) for a in chords)
    if half_chord:
        if n % 2:
            raise ValueError("half chord needs even n")
        chord_set.add(n // 2)
    for a in chord_set:
        if not 1 <= a <= n // 2:
            raise ValueError("chords must lie in 1..n//2")
        for u in range(n):
            v = (u + a) % n
            mask |= 1 << index[(min(u, v), max(u, v))]
    return GraphConfig(n=n, edge_mask=mask)


def _circulant_candidates(n: int, p_star: float, gen, attempts: int):
    """Random symmetric connection sets near the target density."""
    half = n // 2 if n % 2 == 0 else 0
    n_pairs = (n - 1) // 2
    deg_target = p_star * (n - 1)
    for _ in range(attempts):
        deg = int(round(deg_target + gen.uniform(-1.0, 1.0)))
        deg = max(1, min(n - 1, deg))
        use_half = bool(half) and (deg % 2 == 1)
        k = (deg - (1 if use_half else 0)) // 2
        if k > n_pairs or k < 0:
            continue
        chords = gen.choice(np.arange(1, n_pairs + 1), size=k, replace=False)
        yield circulant_config(n, chords.tolist(), half_chord=use_half)


def _state_in_gamma_windows(adj: list, n: int, win: np.ndarray) -> np.ndarray:
    """Per-edge window flags for a full state; plain-int adjacency masks."""
    smin, smax, cdmin, cdmax = (int(w) for w in win)
    pairs, _ = edge_index_table(n)
    flags = np.zeros(len(pairs), dtype=np.uint8)
    for k, (u, v) in enumerate(pairs):
        cur = (adj[u] >> v) & 1
        s = adj[u].bit_count() + adj[v].bit_count() - 2 * cur
        cd = (adj[u] & adj[v]).bit_count()
        flags[k] = 1 if (smin <= s <= smax and cdmin <= cd <= cdmax) else 0
    return flags


def phase_sampler(
    spec: ErgmSpec,
    p_star: float,
    steps: int,
    seed: int,
    replica: int = 0,
    ball: Optional[CutBall] = None,
    mode: str = "auto",
    epsilon: Optional[float] = None,
    snap_every: int = 0,
    record_trace: bool = False,
    warm_attempts: int = 100,
    init: Optional[GraphConfig] = None,
    tag: str = "ergm-sampler",
    tilt_log: Optional[np.ndarray] = None,
) -> SamplerResult:
    """Glauber dynamics of the (optionally phase-conditioned) measure.

    Warm start from an Erdos-Renyi(n, p_star) draw inside the conditioning
    region; moves that exit the region are rejected in place.  Conditioning
    modes: ``none``; ``edge-band`` (edge density within eta/2 of p_star);
    ``exact-ball`` (cut-distance ball, exact, n <= 12: a full membership
    table for n <= 6, the incremental tracker above that); ``gamma-band``
    (good-set windows intersected with the density band, the surrogate
    region for large n, reported APPROXIMATE).
    """
    n = spec.n
    n_edges = spec.n_edge_vars
    use = _resolve_mode(spec, ball, mode)
    needs_ball = use in ("edge-band", "exact-ball", "gamma-band")
    if needs_ball and ball is None:
        raise ValueError(f"conditioning mode {use!r} needs a ball")
    p0_table = update_probability_table(spec, tilt_log=tilt_log)
    eu, ev = _edge_endpoints(n)
    gen = stream(seed, tag, replica)

    emin, emax = 0, n_edges
    state_table = np.zeros(1, dtype=np.uint8)
    win = np.zeros(4, dtype=np.int64)
    tracker = None
    cond_mode = 0
    if use == "edge-band":
        emin, emax = density_window(n, ball.p_star, ball.eta / 2.0)
        cond_mode = 1
    elif use == "exact-ball":
        if n <= 6:
            state_table = (
                all_states_cut_distance(n, ball.p_star) <= ball.eta
            ).astype(np.uint8)
            cond_mode = 2
        elif n <= ball.exact_mode_max_n:
            tracker = CutNormTracker(n, ball.p_star)
            cond_mode = -1  # python loop below
        else:
            raise ValueError("exact ball conditioning limited to n <= 12")
    elif use == "gamma-band":
        eps = ball.eta if epsilon is None else epsilon
        win = gamma_windows(good_set(spec, p_star, eps), n)
        emin, emax = density_window(n, ball.p_star, ball.eta / 2.0)
        cond_mode = 3

    def admits(cfg: GraphConfig) -> bool:
        if use == "none":
            return True
        if use == "edge-band":
            return emin <= cfg.edge_count() <= emax
        if use == "exact-ball":
            if n <= 6:
                return bool(state_table[cfg.edge_mask])
            tracker_probe = CutNormTracker(n, ball.p_star, edge_mask=cfg.edge_mask)
            return tracker_probe.value() <= ball.eta
        if not (emin <= cfg.edge_count() <= emax):
            return False
        adj = [int(v) for v in cfg.adjacency_masks()]
        return bool(_state_in_gamma_windows(adj, n, win).all())

    attempts = 0
    start = init
    if start is None or not admits(start):
        found = False
        for attempts in range(1, warm_attempts + 1):
            start = gnp_config(n, p_star, gen)
            if admits(start):
                found = True
                break
        if not found:
            # thin regions reject every random draw; fall back to flat
            # circulants, which center the degree and common-neighbor stats
            for cand in _circulant_candidates(n, p_star, gen, warm_attempts):
                attempts += 1
                if admits(cand):
                    start = cand
                    found = True
                    break
        if not found:
            raise ValueError(
                f"no warm start found in the conditioning region after "
                f"{attempts} draws; the region is too small"
            )

    adj = _adjacency_from_config(start).copy()
    hist = np.zeros(n_edges + 1, dtype=np.int64)
    n_snaps = steps // snap_every if snap_every > 0 else 0
    snaps = np.zeros((max(n_snaps, 1), n), dtype=np.uint64)
    counters = np.zeros(6, dtype=np.int64)
    counters[0] = start.edge_count()
    counters[4] = start.edge_mask if cond_mode == 2 else 0
    traces = [] if record_trace else None
    flip_traces = [] if record_trace else None
    acc_traces = [] if record_trace else None

    if cond_mode >= 0:
        flags = np.ones(n_edges, dtype=np.uint8)
        if cond_mode == 3:
            flags = _state_in_gamma_windows([int(v) for v in adj], n, win)
            counters[2] = int((flags == 0).sum())
        for idx, u in coordinate_blocks(gen, n_edges, steps):
            ec = np.zeros(len(idx), dtype=np.int64)
            le = np.zeros(len(idx) if record_trace else 0, dtype=np.int64)
            la = np.zeros(len(idx) if record_trace else 0, dtype=np.uint8)
            kernels.ergm_chain_run(
                adj, n, eu, ev, p0_table, cond_mode, emin, emax,
                state_table, win, flags, idx, u, ec,
                snap_every, snaps, le, la, counters,
            )
            hist += np.bincount(ec, minlength=n_edges + 1)
            if record_trace:
                traces.append(ec)
                flip_traces.append(le)
                acc_traces.append(la)
    else:
        # incremental exact-ball loop, 7 <= n <= 12
        tracker = CutNormTracker(n, ball.p_star, edge_mask=start.edge_mask)
        a = [int(v) for v in adj]
        pairs, _ = edge_index_table(n)
        ecount = start.edge_count()
        rej = 0
        t_global = 0
        snap_cursor = 0
        p0 = p0_table
        hist_list = np.zeros(n_edges + 1, dtype=np.int64)
        for idx, u in coordinate_blocks(gen, n_edges, steps):
            ec = np.zeros(len(idx), dtype=np.int64)
            for t in range(len(idx)):
                e = int(idx[t])
                uu, vv = pairs[e]
                cur = (a[uu] >> vv) & 1
                s = a[uu].bit_count() + a[vv].bit_count() - 2 * cur
                cd = (a[uu] & a[vv]).bit_count()
                new = 0 if u[t] < p0[s, cd] else 1
                accepted = 1
                if new != cur:
                    tracker.flip(e)
                    if tracker.value() <= ball.eta:
                        bu, bv = 1 << vv, 1 << uu
                        if new:
                            a[uu] |= bu
                            a[vv] |= bv
                        else:
                            a[uu] &= ~bu
                            a[vv] &= ~bv
                        ecount += new - cur
                    else:
                        tracker.flip(e)
                        accepted = 0
                        rej += 1
                ec[t] = ecount
                t_global += 1
                if snap_every > 0 and t_global % snap_every == 0 and snap_cursor < n_snaps:
                    snaps[snap_cursor] = np.array(a, dtype=np.uint64)
                    snap_cursor += 1
            hist_list += np.bincount(ec, minlength=n_edges + 1)
            if record_trace:
                traces.append(ec)
        hist = hist_list
        counters[0] = ecount
        counters[1] = rej
        counters[3] = snap_cursor
        adj = np.array(a, dtype=np.uint64)

    final = _config_from_adjacency(adj, n)
    return SamplerResult(
        spec=spec,
        steps=steps,
        mode=use,
        approximate=(use in ("gamma-band", "edge-band")),
        edge_count_hist=hist,
        rejections=int(counters[1]),
        final_config=final,
        warm_start_attempts=attempts,
        snapshots=snaps[: int(counters[3])] if snap_every > 0 else None,
        edge_trace=np.concatenate(traces) if record_trace and traces else None,
        flip_trace=np.concatenate(flip_traces) if record_trace and flip_traces else None,
        accept_trace=np.concatenate(acc_traces) if record_trace and acc_traces else None,
    )


def glauber_step_generic(
    spec: ErgmSpec, x: GraphConfig, u_vtx: int, v_vtx: int, u_draw: float
) -> GraphConfig:
    """One heat-bath update of a single edge, any model graphs; slow path."""
    acc = 0.0
    for g, b in zip(spec.graphs, spec.beta):
        if b == 0:
            continue
        acc += b * hom_count_delta(g, x, u_vtx, v_vtx) * float(spec.n) ** (
            2 - g.n_vertices
        )
    p_absent = float(expit(-acc))
    new = 0 if u_draw < p_absent else 1
    return x.with_edge(u_vtx, v_vtx, bool(new))


# ---------------------------------------------------------------------------
# contraction and local FKG diagnostics


def contraction_estimate_ergm(
    spec: ErgmSpec,
    p_star: float,
    epsilon: float,
    eta: float,
    reps: int,
    seed: int,
    burn_sweeps: int = 50,
):
    """One-step coupled contraction for good-set neighbor pairs.

    Draws base states from a conditioned chain, flips one uniformly chosen
    edge that keeps the state in the good set, runs one shared-randomness
    update on both, and averages the Hamming distance.  Scale is n^2.
    """
    from .engine import ContractionEstimate  # local to avoid a cycle

    if reps < 100:
        raise ValueError("need at least 100 replicas for a usable interval")
    n = spec.n
    n_edges = spec.n_edge_vars
    ball = CutBall(p_star=p_star, eta=eta)
    burn = burn_sweeps * n_edges
    run = phase_sampler(
        spec, p_star, steps=burn + reps * n_edges, seed=seed,
        ball=ball, mode="gamma-band", epsilon=epsilon,
        snap_every=n_edges, tag="ergm-contraction",
    )
    snaps = run.snapshots
    if snaps is None or len(snaps) <= burn_sweeps:
        raise ValueError("not enough snapshots for contraction sampling")
    snaps = snaps[burn_sweeps:]
    win = gamma_windows(good_set(spec, p_star, epsilon), n)
    p0 = update_probability_table(spec)
    pairs, _ = edge_index_table(n)
    gen = stream(seed, "ergm-contraction-pairs")
    dists = np.empty(reps, dtype=np.float64)
    snap_idx = gen.integers(0, len(snaps), size=reps)
    for r in range(reps):
        a = [int(v) for v in snaps[snap_idx[r]]]
        b = None
        for _ in range(64):
            f = int(gen.integers(0, n_edges))
            uf, vf = pairs[f]
            bb = list(a)
            bit_u, bit_v = 1 << vf, 1 << uf
            if (a[uf] >> vf) & 1:
                bb[uf] &= ~bit_u
                bb[vf] &= ~bit_v
            else:
                bb[uf] |= bit_u
                bb[vf] |= bit_v
            if _state_in_gamma_windows(bb, n, win).all():
                b = bb
                break
        if b is None:
            dists[r] = 1.0  # no admissible neighbor; neutral contribution
            continue
        e = int(gen.integers(0, n_edges))
        uu = float(gen.random())
        na, nb = list(a), list(b)
        for src, dst in ((a, na), (b, nb)):
            up, vp = pairs[e]
            cur = (src[up] >> vp) & 1
            s = src[up].bit_count() + src[vp].bit_count() - 2 * cur
            cd = (src[up] & src[vp]).bit_count()
            new = 0 if uu < p0[s, cd] else 1
            bit_u, bit_v = 1 << vp, 1 << up
            if new:
                dst[up] |= bit_u
                dst[vp] |= bit_v
            else:
                dst[up] &= ~bit_u
                dst[vp] &= ~bit_v
        d = 0
        for k, (up, vp) in enumerate(pairs):
            if ((na[up] >> vp) & 1) != ((nb[up] >> vp) & 1):
                d += 1
        dists[r] = d
    alpha_hat = float(dists.mean())
    half = 1.96 * float(dists.std(ddof=1) / math.sqrt(reps))
    scale = float(n * n)
    return ContractionEstimate(
        alpha_hat=alpha_hat,
        confidence_halfwidth=half,
        sample_count=reps,
        kappa_hat=scale * (1.0 - alpha_hat),
        kappa_ci_low=scale * (1.0 - alpha_hat - half),
        kappa_ci_high=scale * (1.0 - alpha_hat + half),
        scale=scale,
    )


@dataclass(frozen=True)
class ErgmWitnessReport:
    min_log_ratio: float
    witness_x: int
    witness_y: int
    pairs_checked: int
    lambda_size: int
    support_size: int
    superadditivity_min_slack: int


def local_fkg_witness_ergm(
    spec: ErgmSpec,
    ball: CutBall,
    epsilon: Optional[float] = None,
    superadditivity_pairs: int = 2000,
    seed: int = 0,
) -> ErgmWitnessReport:
    """Exhaustive local FKG check near the phase region; n <= 6.

    The measure is conditioned on the cut ball; the inner region is the
    half-radius ball intersected with the good set.  The minimum runs over
    pairs within Hamming distance 1 of the inner region whose meet and join
    stay within distance 1 of the pair.  Also verifies the meet/join
    superadditivity of every model graph's homomorphism count on random
    pairs, which is the mechanism making the minimum nonnegative.
    """
    n = spec.n
    if n > 6:
        raise ValueError("exhaustive witness limited to n <= 6")
    eps = ball.eta if epsilon is None else epsilon
    dist = all_states_cut_distance(n, ball.p_star)
    support = dist <= ball.eta
    lam = (dist <= ball.eta / 2.0) & state_gamma_mask(
        spec, good_set(spec, ball.p_star, eps)
    )
    if not lam.any():
        raise ValueError("inner region is empty; widen the ball or epsilon")
    logw = state_log_weights(spec)
    near = kernels.dilate_mask(lam, spec.n_edge_vars)
    best, wx, wy, pairs = kernels.local_fkg_min(
        logw, near, support, spec.n_edge_vars
    )
    slack = superadditivity_min_slack(
        spec.graphs, n, superadditivity_pairs, seed
    )
    return ErgmWitnessReport(
        min_log_ratio=float(best),
        witness_x=int(wx),
        witness_y=int(wy),
        pairs_checked=int(pairs),
        lambda_size=int(lam.sum()),
        support_size=int(support.sum()),
        superadditivity_min_slack=slack,
    )


def superadditivity_min_slack(
    graphs: Sequence[SmallGraph], n: int, pairs: int, seed: int
) -> int:
    """Min of ``N_G(join) + N_G(meet) - N_G(x) - N_G(y)`` over random pairs."""
    gen = stream(seed, "superadditivity")
    n_edges = n * (n - 1) // 2
    worst = None
    for _ in range(pairs):
        x = GraphConfig(n=n, edge_mask=int(gen.integers(0, 1 << n_edges)))
        y = GraphConfig(n=n, edge_mask=int(gen.integers(0, 1 << n_edges)))
        meet = GraphConfig(n=n, edge_mask=x.edge_mask & y.edge_mask)
        join = GraphConfig(n=n, edge_mask=x.edge_mask | y.edge_mask)
        for g in graphs:
            slack = (
                count_homomorphisms(g, join)
                + count_homomorphisms(g, meet)
                - count_homomorphisms(g, x)
                - count_homomorphisms(g, y)
            )
            worst = slack if worst is None else min(worst, slack)
    return int(worst)
