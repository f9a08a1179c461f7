"""Lattice-condition checks, positive-association defect estimates, coupled
four-chain experiments, and the master coupling bound.

The FKG lattice condition ``w(join) w(meet) >= w(x) w(y)`` survives
ferromagnetic weights but dies under band conditioning: meets and joins of
in-band states can leave the band, and the checker here produces explicit
violating pairs.  What survives is quantitative: the defect
``delta = 4 max(0, sup_{U,V} P(U) P(V) - P(U cap V))`` over increasing
events stays small near a phase, and coupled chains started inside the
phase region coalesce at rates the bound functions below control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .engine import MeasureSpec, exact_state_distribution
from .gcwm import (
    GcwmParams,
    PhaseBand,
    band_diameter,
    conditional_p0_table,
    exact_magnetization_law,
    tilted_conditional_p0_table,
)
from .lattice import INFINITE, SpinConfig, enumerate_upsets
from .rng import coordinate_blocks, stream


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("need at least one trial")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


# ---------------------------------------------------------------------------
# lattice condition


@dataclass(frozen=True)
class LatticeCheckReport:
    holds: bool
    worst_slack: float
    witness_x: Optional[int]
    witness_y: Optional[int]
    pairs_checked: int
    method: str


def _packed_log_weights(mu: MeasureSpec) -> np.ndarray:
    """Log weights over all packed states, -inf off support; dim <= 20."""
    n = mu.dimension
    if mu.alphabet_size != 2:
        raise ValueError("lattice checks implemented for binary alphabet")
    if n > 20:
        raise ValueError("packed enumeration limited to dimension <= 20")
    states = np.arange(1 << n, dtype=np.int64)
    if mu.log_weight_packed is not None:
        logs = np.asarray(mu.log_weight_packed(states), dtype=np.float64)
    else:
        logs = np.array(
            [mu.log_weight(SpinConfig.from_packed(int(s), n)) for s in states]
        )
    support = np.array(
        [mu.in_support(SpinConfig.from_packed(int(s), n)) for s in states],
        dtype=bool,
    )
    return np.where(support, logs, -np.inf)


def check_lattice_condition(
    mu: MeasureSpec,
    tol: float = 1e-9,
    max_exhaustive_dim: int = 12,
    sample_pairs: int = 4000,
    seed: int = 0,
) -> LatticeCheckReport:
    """Search for pairs violating ``w(join) w(meet) >= w(x) w(y)``.

    Exhaustive over all support pairs up to ``max_exhaustive_dim``
    dimensions; beyond that, pairs are sampled from the measure itself
    (dimension <= 20), which gives an existence check rather than a proof.
    A meet or join falling off the support counts as ``-inf`` slack.
    """
    lw = _packed_log_weights(mu)
    sup_states = np.nonzero(np.isfinite(lw))[0]
    n = mu.dimension
    worst = math.inf
    wx = wy = None
    pairs = 0
    if n <= max_exhaustive_dim:
        for a in sup_states:
            ys = sup_states[sup_states >= a]
            slack = lw[a | ys] + lw[a & ys] - lw[a] - lw[ys]
            pairs += len(ys)
            k = int(np.argmin(slack))
            if slack[k] < worst:
                worst, wx, wy = float(slack[k]), int(a), int(ys[k])
        method = "EXHAUSTIVE"
    else:
        probs = np.zeros(len(lw))
        finite = np.isfinite(lw)
        mx = lw[finite].max()
        np.exp(lw - mx, where=finite, out=probs)
        probs /= probs.sum()
        gen = stream(seed, "lattice-check")
        xs = gen.choice(len(probs), size=sample_pairs, p=probs)
        ys = gen.choice(len(probs), size=sample_pairs, p=probs)
        slack = lw[xs | ys] + lw[xs & ys] - lw[xs] - lw[ys]
        pairs = sample_pairs
        k = int(np.argmin(slack))
        worst, wx, wy = float(slack[k]), int(xs[k]), int(ys[k])
        method = "SAMPLED"
    return LatticeCheckReport(
        holds=bool(worst >= -tol),
        worst_slack=worst,
        witness_x=wx,
        witness_y=wy,
        pairs_checked=pairs,
        method=method,
    )


# ---------------------------------------------------------------------------
# defect estimates


@dataclass(frozen=True)
class DefectReport:
    delta: float
    method: str
    witness: tuple
    pairs_checked: int
    sample_count: Optional[int] = None
    stderr: Optional[float] = None


def exact_defect(mu: MeasureSpec) -> DefectReport:
    """Defect over the full up-set family; dimension <= 5.

    The family of increasing events is complete here, so this is the exact
    positive-association defect of the measure.
    """
    n = mu.dimension
    if n > 5:
        raise ValueError(
            "full up-set enumeration limited to dimension <= 5; "
            "use sampled_defect for larger measures"
        )
    probs, _ = exact_state_distribution(mu)
    ups = enumerate_upsets(n)
    n_states = 1 << n
    member = np.zeros((len(ups), n_states), dtype=np.float64)
    for i, up in enumerate(ups):
        m = up.member_mask
        for s in range(n_states):
            if (m >> s) & 1:
                member[i, s] = 1.0
    p_up = member @ probs
    weighted = member * probs
    best = -math.inf
    wit = (0, 0)
    block = 512
    for lo in range(0, len(ups), block):
        hi = min(lo + block, len(ups))
        inter = weighted[lo:hi] @ member.T
        gap = np.outer(p_up[lo:hi], p_up) - inter
        k = int(np.argmax(gap))
        i, j = divmod(k, len(ups))
        if gap[i, j] > best:
            best = float(gap[i, j])
            wit = (ups[lo + i].member_mask, ups[j].member_mask)
    return DefectReport(
        delta=4.0 * max(0.0, best),
        method="EXACT_UPSET",
        witness=wit,
        pairs_checked=len(ups) * len(ups),
    )


def _score_events(scores: dict, max_cuts: int = 64) -> list:
    """(name, cut, indicator) triples for the events {score >= cut}."""
    events = []
    for name, vals in scores.items():
        vals = np.asarray(vals)
        cuts = np.unique(vals)
        if len(cuts) > max_cuts:
            qs = np.linspace(0.0, 1.0, max_cuts)
            cuts = np.unique(np.quantile(vals, qs))
        for c in cuts:
            events.append((name, float(c), vals >= c))
    return events


def threshold_defect(probs: np.ndarray, scores: dict) -> DefectReport:
    """Defect lower bound over threshold events of increasing scores.

    ``scores`` maps names to per-state arrays of increasing statistics
    (levels, edge counts, single coordinates); the events are
    ``{score >= cut}``.  Exact probabilities; the value lower-bounds the
    full defect because the family is a subfamily of all up-sets.
    """
    probs = np.asarray(probs, dtype=np.float64)
    events = _score_events(scores)
    if not events:
        raise ValueError("need at least one score")
    ind = np.stack([e[2] for e in events]).astype(np.float64)
    p_u = ind @ probs
    inter = (ind * probs) @ ind.T
    gap = np.outer(p_u, p_u) - inter
    k = int(np.argmax(gap))
    i, j = divmod(k, len(events))
    return DefectReport(
        delta=4.0 * max(0.0, float(gap[i, j])),
        method="THRESHOLD_LOWER_BOUND",
        witness=(events[i][:2], events[j][:2]),
        pairs_checked=len(events) ** 2,
    )


def sampled_threshold_defect(
    sample_scores: dict, min_samples: int = 30
) -> DefectReport:
    """Plug-in threshold defect from sampled score trajectories.

    ``sample_scores`` maps names to per-draw values of increasing
    statistics.  A lower-bound estimate: subfamily of events and empirical
    probabilities.
    """
    lengths = {len(np.asarray(v)) for v in sample_scores.values()}
    if len(lengths) != 1:
        raise ValueError("all score trajectories need equal length")
    m = lengths.pop()
    if m < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {m}")
    probs = np.full(m, 1.0 / m)
    rep = threshold_defect(probs, sample_scores)
    return DefectReport(
        delta=rep.delta,
        method="SAMPLED_LOWER_BOUND",
        witness=rep.witness,
        pairs_checked=rep.pairs_checked,
        sample_count=m,
    )


def sampled_defect(
    configs: np.ndarray,
    rng,
    extra_scores: Optional[dict] = None,
    n_random_scores: int = 24,
    min_samples: int = 30,
) -> DefectReport:
    """Monte Carlo defect lower bound from sampled configurations.

    ``configs`` is an ``(M, dim)`` 0/1 array of draws from the measure.
    Random increasing scores (nonnegative random weight vectors applied to
    the coordinates) plus any caller-supplied increasing statistics are
    thresholded into up-events; the reported delta is the largest empirical
    ``-Cov`` over event pairs, a lower bound on the true defect, with the
    standard error of the winning covariance attached.
    """
    configs = np.asarray(configs, dtype=np.float64)
    m, dim = configs.shape
    if m < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {m}")
    scores = {} if extra_scores is None else dict(extra_scores)
    weights = rng.exponential(size=(n_random_scores, dim))
    for t in range(n_random_scores):
        scores[f"random-{t}"] = configs @ weights[t]
    scores.setdefault("level", configs.sum(axis=1))
    base = sampled_threshold_defect(scores, min_samples=min_samples)
    (name_u, cut_u), (name_v, cut_v) = base.witness
    u = (np.asarray(scores[name_u]) >= cut_u).astype(np.float64)
    v = (np.asarray(scores[name_v]) >= cut_v).astype(np.float64)
    prod = (u - u.mean()) * (v - v.mean())
    se = 4.0 * float(prod.std(ddof=1) / math.sqrt(m))
    return DefectReport(
        delta=base.delta,
        method="SAMPLED",
        witness=base.witness,
        pairs_checked=base.pairs_checked,
        sample_count=m,
        stderr=se,
    )


# ---------------------------------------------------------------------------
# coupling bounds


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the coupling bounds.

    ``escape_mass`` is the conditioned stationary mass outside the analysis
    region, ``alpha`` the one-step mean contraction factor, ``region_size``
    the number of coordinates the tilt can touch, ``diameter`` the intrinsic
    diameter of the analysis region (may be infinite), ``epsilon`` the tilt
    strength (defaults to 1/T).
    """

    T: int
    escape_mass: float
    alpha: float
    diameter: float
    region_size: float
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError("need a positive horizon")
        for name in ("escape_mass", "alpha", "diameter", "region_size"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    @property
    def eps(self) -> float:
        return 1.0 / self.T if self.epsilon is None else self.epsilon


def _geometric_tail(rate: float, T: int, diam: float) -> float:
    """``rate^T * diam`` with overflow-safe handling of the extremes."""
    if diam == 0.0:
        return 0.0
    if rate == 0.0:
        return 0.0
    if diam == INFINITE:
        return math.inf
    log_term = T * math.log(rate)
    if log_term > 700.0:
        return math.inf
    return math.exp(log_term) * diam


def coupling_rhs(inputs: BoundInputs) -> dict:
    """Disagreement bounds for the base pair, tilted pair, and domination.

    base: ``2 T mu_c + alpha^T diam``;
    tilted: ``2 e^{2 eps T} T mu_c + (alpha + 10 |A| eps)^T diam``;
    domination: ``2 e^{2 eps T} T mu_c`` (order breaks only via escape).
    An infinite diameter makes the first two vacuous, never the third.
    """
    T, mu_c, eps = inputs.T, inputs.escape_mass, inputs.eps
    esc = 2.0 * T * mu_c
    esc_tilt = esc * math.exp(min(2.0 * eps * T, 700.0))
    base = esc + _geometric_tail(inputs.alpha, T, inputs.diameter)
    rate = inputs.alpha + 10.0 * inputs.region_size * eps
    tilted = esc_tilt + _geometric_tail(rate, T, inputs.diameter)
    return {"base": base, "tilted": tilted, "domination": esc_tilt}


def master_bound(inputs: BoundInputs) -> float:
    """Covariance master bound ``300 sqrt(T) (T mu_c + (alpha + 10|A|/T)^T diam)``.

    Uses the default tilt strength ``eps = 1/T``; infinite diameters
    propagate to an infinite bound unless the contraction coefficient
    vanishes.
    """
    T = inputs.T
    rate = inputs.alpha + 10.0 * inputs.region_size / T
    tail = _geometric_tail(rate, T, inputs.diameter)
    return 300.0 * math.sqrt(T) * (T * inputs.escape_mass + tail)


# ---------------------------------------------------------------------------
# coupled four-chain experiment


def _pilot_escape_rate(
    p0, n, T, kmin, kmax, lmin, lmax, k0, reps, gen
) -> float:
    """Escape frequency of the banded level chain started at level k0.

    By exchangeability the level process is itself Markov, so the scan for
    a good pinned start only needs this one-dimensional walk: heat-bath
    update with support-band rejection, escape = leaving the inner band.
    """
    k = np.full(reps, k0, dtype=np.int64)
    escaped = np.zeros(reps, dtype=bool)
    for _ in range(T):
        pick_one = gen.random(reps) < k / n
        k_other = k - pick_one
        new_one = gen.random(reps) >= p0[k_other]
        k_new = k_other + new_one
        reject = (k_new < kmin) | (k_new > kmax)
        k = np.where(reject, k, k_new)
        escaped |= (k < lmin) | (k > lmax)
    return float(escaped.mean())


def select_pinned_level(
    params: GcwmParams,
    n: int,
    band: PhaseBand,
    T: int,
    seed: int = 0,
    candidates: int = 6,
    pilot_reps: int = 200,
) -> int:
    """Scan stationary draws for a pinned start that rarely escapes.

    Candidate levels come from the band-conditioned stationary law
    restricted to the inner band; each gets a pilot run of the level chain,
    and the first whose empirical escape rate is at most twice the exact
    escape mass times T wins.  If none clears the threshold the level with
    the smallest observed escape rate is returned.
    """
    kmin, kmax = band.level_bounds(n)
    lmin, lmax = band.level_bounds(n, inner=True)
    p0 = conditional_p0_table(params, n)
    law = exact_magnetization_law(params, n, band=band)
    probs = law.probs()
    escape_mass = float(max(0.0, 1.0 - probs[lmin : lmax + 1].sum()))
    threshold = 2.0 * T * escape_mass
    inner = probs[lmin : lmax + 1].copy()
    inner /= inner.sum()
    gen = stream(seed, "z-scan")
    order = np.argsort(inner)[::-1]
    cand_levels = [int(lmin + j) for j in order[:candidates]]
    best_level, best_rate = cand_levels[0], math.inf
    for k0 in cand_levels:
        rate = _pilot_escape_rate(
            p0, n, T, kmin, kmax, lmin, lmax, k0, pilot_reps, gen
        )
        if rate <= threshold:
            return k0
        if rate < best_rate:
            best_level, best_rate = k0, rate
    return best_level


@dataclass(frozen=True)
class CouplingReplica:
    hamming_base: int
    hamming_tilted: int
    dominance_defect: int
    escaped: bool
    first_escape_step: int
    order_violations: int
    rejections: int


@dataclass(frozen=True)
class CouplingReport:
    n: int
    T: int
    reps: int
    epsilon: float
    alpha_used: float
    escape_mass: float
    diameter: float
    region_size: float
    z_level: int
    disagree_base: float
    disagree_tilted: float
    order_violation_rate: float
    escape_rate: float
    wilson_base: tuple
    wilson_tilted: tuple
    wilson_violation: tuple
    rhs: dict
    replicas: tuple = field(repr=False)

    def passes(self, slack_halfwidths: float = 2.0) -> dict:
        """Empirical rate <= bound + slack * Wilson halfwidth, per check."""

        def ok(rate, ci, bound):
            half = (ci[1] - ci[0]) / 2.0
            return bool(rate <= bound + slack_halfwidths * half)

        return {
            "base": ok(self.disagree_base, self.wilson_base, self.rhs["base"]),
            "tilted": ok(self.disagree_tilted, self.wilson_tilted, self.rhs["tilted"]),
            "domination": ok(
                self.order_violation_rate, self.wilson_violation, self.rhs["domination"]
            ),
        }


def coupling_experiment_gcwm(
    params: GcwmParams,
    n: int,
    band: PhaseBand,
    alpha: float,
    T: Optional[int] = None,
    reps: int = 500,
    seed: int = 0,
    epsilon: Optional[float] = None,
    g_level_values: Optional[np.ndarray] = None,
    z_level: Optional[int] = None,
) -> CouplingReport:
    """Four coupled banded chains: do starts forget each other in time T?

    Chains: (stationary start, base), (stationary start, tilted), (pinned
    start, base), (pinned start, tilted), all driven by shared (coordinate,
    uniform) draws.  The pinned start sits at the level
    :func:`select_pinned_level` picks (or ``z_level`` when given), the
    stationary start is an exact draw from the band-conditioned measure.
    Records per replica the final Hamming distances of the two dynamics
    pairs, escape of the pinned chains from the inner band, and coordinate
    order violations of tilted below base before escape.  Default tilt:
    ``g(level) = level / n`` at strength ``eps = 1/T``.
    """
    T = n * n if T is None else T
    eps = 1.0 / T if epsilon is None else epsilon
    kmin, kmax = band.level_bounds(n)
    lmin, lmax = band.level_bounds(n, inner=True)
    if g_level_values is None:
        g_level_values = np.arange(n + 1, dtype=np.float64) / n
    g_level_values = np.asarray(g_level_values, dtype=np.float64)
    shift = (2.0 / math.sqrt(eps)) * float(np.abs(g_level_values).max())
    p0_base = conditional_p0_table(params, n)
    p0_tilt = tilted_conditional_p0_table(params, n, g_level_values, shift)

    law = exact_magnetization_law(params, n, band=band)
    probs = law.probs()
    mass_inner = probs[lmin : lmax + 1].sum()
    escape_mass = float(max(0.0, 1.0 - mass_inner))
    diam = band_diameter(n, lmin, lmax)

    if z_level is None:
        z_level = select_pinned_level(params, n, band, T, seed=seed)
    if not lmin <= z_level <= lmax:
        raise ValueError("pinned level outside the inner band")
    pinned = np.zeros(n, dtype=np.uint8)
    pinned[:z_level] = 1
    replicas = []
    for r in range(reps):
        gen = stream(seed, "coupling", r)
        k_start = int(gen.choice(n + 1, p=probs))
        coords = gen.choice(n, size=k_start, replace=False)
        x0 = np.zeros(n, dtype=np.uint8)
        x0[coords] = 1
        xs = np.stack([x0, x0.copy(), pinned.copy(), pinned.copy()])
        ones4 = np.array([k_start, k_start, z_level, z_level], dtype=np.int64)
        d0 = int((x0 != pinned).sum())
        counters = np.array([d0, d0, 0, 0, -1, 0, 0], dtype=np.int64)
        offset = 0
        for idx, u in coordinate_blocks(gen, n, T):
            kernels.gcwm_quadruple_run(
                xs, ones4, p0_base, p0_tilt, kmin, kmax, lmin, lmax,
                idx, u, counters, offset,
            )
            offset += len(idx)
        replicas.append(
            CouplingReplica(
                hamming_base=int(counters[0]),
                hamming_tilted=int(counters[1]),
                dominance_defect=int(counters[2]),
                escaped=bool(counters[3]),
                first_escape_step=int(counters[4]),
                order_violations=int(counters[5]),
                rejections=int(counters[6]),
            )
        )

    n_base = sum(r.hamming_base > 0 for r in replicas)
    n_tilt = sum(r.hamming_tilted > 0 for r in replicas)
    n_viol = sum(r.order_violations > 0 for r in replicas)
    n_esc = sum(r.escaped for r in replicas)
    inputs = BoundInputs(
        T=T, escape_mass=escape_mass, alpha=alpha,
        diameter=diam, region_size=float(n), epsilon=eps,
    )
    return CouplingReport(
        n=n, T=T, reps=reps, epsilon=eps, alpha_used=alpha,
        escape_mass=escape_mass, diameter=diam, region_size=float(n),
        z_level=int(z_level),
        disagree_base=n_base / reps,
        disagree_tilted=n_tilt / reps,
        order_violation_rate=n_viol / reps,
        escape_rate=n_esc / reps,
        wilson_base=wilson_interval(n_base, reps),
        wilson_tilted=wilson_interval(n_tilt, reps),
        wilson_violation=wilson_interval(n_viol, reps),
        rhs=coupling_rhs(inputs),
        replicas=tuple(replicas),
    )