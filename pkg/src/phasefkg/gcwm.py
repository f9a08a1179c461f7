"""Mean-field spin models whose Hamiltonian is a polynomial of the mean.

The model on ``n`` binary spins has ``H(x) = h(m(x))`` with
``h(m) = sum_j beta_j m^j`` (``j >= 1``; coefficients of the nonlinear terms
must be nonnegative) and weight ``exp(n * H)``.  Everything about the
magnetization is exactly computable in ``O(n)`` through the level law
``P(k) ~ C(n, k) * exp(n * h(k/n))``, which is what this module exploits:
rate-function analysis, phase bands around maximizers, exact conditioned
laws and samplers, and local FKG witnesses on banded measures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import expit, gammaln, logsumexp

from . import kernels
from .engine import MeasureSpec
from .lattice import INFINITE, Region, SpinConfig
from .rng import stream


@dataclass(frozen=True)
class GcwmParams:
    """Coefficients ``beta = (beta_1, ..., beta_K)`` of ``h``.

    ``beta_1`` may take either sign (external field direction); the higher
    coefficients must be nonnegative, which is the ferromagnetic regime
    where meet/join superadditivity of ``H`` holds.
    """

    beta: tuple

    def __post_init__(self):
        if len(self.beta) == 0:
            raise ValueError("need at least one coefficient")
        if not all(math.isfinite(b) for b in self.beta):
            raise ValueError("coefficients must be finite")
        if any(b < 0 for b in self.beta[1:]):
            raise ValueError("coefficients of m^j for j >= 2 must be nonnegative")

    @property
    def degree(self) -> int:
        return len(self.beta)


def h_value(params: GcwmParams, m):
    """``h(m)``, vectorized over m."""
    m = np.asarray(m, dtype=np.float64)
    acc = np.zeros_like(m)
    for b in reversed(params.beta):
        acc = (acc + b) * m
    return acc


def h_prime(params: GcwmParams, m):
    m = np.asarray(m, dtype=np.float64)
    acc = np.zeros_like(m)
    for j in range(params.degree, 0, -1):
        acc = acc * m + j * params.beta[j - 1]
    return acc


def h_second(params: GcwmParams, m):
    m = np.asarray(m, dtype=np.float64)
    acc = np.zeros_like(m)
    for j in range(params.degree, 1, -1):
        acc = acc * m + j * (j - 1) * params.beta[j - 1]
    return acc


def rate_function(params: GcwmParams, m):
    """``(L, L', L'')`` at m in (0,1): energy plus binary entropy.

    ``L(m) = h(m) - m log m - (1-m) log(1-m)``; maximizers of L are the
    phases of the model.
    """
    m = np.asarray(m, dtype=np.float64)
    if np.any((m <= 0) | (m >= 1)):
        raise ValueError("rate function defined on the open interval (0, 1)")
    ent = -(m * np.log(m) + (1 - m) * np.log1p(-m))
    L = h_value(params, m) + ent
    Lp = h_prime(params, m) - (np.log(m) - np.log1p(-m))
    Lpp = h_second(params, m) - 1.0 / (m * (1.0 - m))
    return L, Lp, Lpp


def fixed_point_residual(params: GcwmParams, m):
    """``m - logistic(h'(m))``; zero exactly at stationary points of L."""
    m = np.asarray(m, dtype=np.float64)
    return m - expit(h_prime(params, m))


def phi_map_derivative(params: GcwmParams, m):
    """Derivative of ``m -> logistic(h'(m))``; < 1 marks attracting points."""
    m = np.asarray(m, dtype=np.float64)
    p = expit(h_prime(params, m))
    return p * (1.0 - p) * h_second(params, m)


def hamiltonian(params: GcwmParams, x: SpinConfig) -> float:
    """``H(x) = h(mean(x))`` for a binary configuration."""
    if x.alphabet_size != 2:
        raise ValueError("mean-field Hamiltonian defined for binary spins")
    m = sum(x.values) / x.dimension
    return float(h_value(params, m))


def discrete_partial(params: GcwmParams, x: SpinConfig, i: int) -> dict:
    """Exact discrete partial of H at coordinate i, with the 1/n expansion.

    Exact value ``H(x with x_i=1) - H(x with x_i=0)``; the leading-order
    approximation is ``h'(m(x^-i)) / n`` with ``m(x^-i)`` the mean of the
    other coordinates (each monomial ``m^k`` contributes
    ``k m^{k-1} / n + O(1/n^2)``).
    """
    n = x.dimension
    k_other = sum(x.values) - x.values[i]
    exact = float(h_value(params, (k_other + 1) / n) - h_value(params, k_other / n))
    approx = float(h_prime(params, k_other / n)) / n
    return {"exact": exact, "approx": approx, "gap": exact - approx}


def discrete_partial2(params: GcwmParams, x: SpinConfig, i: int, j: int) -> dict:
    """Exact mixed second difference of H, with the 1/n^2 expansion.

    The approximation for ``m^k`` is ``k (k-1) m(x^-ij)^{k-2} / n^2``; the
    remaining gap is O(1/n^3).
    """
    if i == j:
        raise ValueError("mixed partial needs distinct coordinates")
    n = x.dimension
    k_other = sum(x.values) - x.values[i] - x.values[j]
    hv = lambda k: float(h_value(params, k / n))  # noqa: E731
    exact = hv(k_other + 2) - 2.0 * hv(k_other + 1) + hv(k_other)
    approx = float(h_second(params, k_other / n)) / (n * n)
    return {"exact": exact, "approx": approx, "gap": exact - approx}


@dataclass(frozen=True)
class StationaryPoint:
    m: float
    rate_value: float
    rate_slope: float
    rate_curvature: float
    fixed_point_residual: float
    phi_map_derivative: float
    is_global_max: bool
    is_attracting: bool
    is_near_critical: bool


@dataclass(frozen=True)
class RateAnalysis:
    params: GcwmParams
    points: tuple
    tol: float
    grid_size: int

    @property
    def maximizers(self) -> tuple:
        return tuple(p for p in self.points if p.is_global_max)

    @property
    def attracting_maximizers(self) -> tuple:
        return tuple(p for p in self.points if p.is_global_max and p.is_attracting)


def find_maximizers(params: GcwmParams, grid_size: int = 10000, tol: float = 1e-9) -> RateAnalysis:
    """Stationary points of L by grid sign changes plus bisection.

    ``L'`` diverges to +inf at 0 and -inf at 1, so every stationary point is
    interior and the grid brackets all simple roots once ``grid_size`` beats
    the root separation.
    """
    if tol > 1e-8:
        raise ValueError("tol must be at most 1e-8")
    ms = np.linspace(0.0, 1.0, grid_size + 2)[1:-1]
    _, slopes, _ = rate_function(params, ms)
    roots = []
    sign = np.sign(slopes)
    for k in range(len(ms) - 1):
        if sign[k] == 0:
            roots.append(float(ms[k]))
        elif sign[k] * sign[k + 1] < 0:
            lo, hi = float(ms[k]), float(ms[k + 1])
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                _, smid, _ = rate_function(params, mid)
                if np.sign(smid) == sign[k]:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-15:
                    break
            roots.append(0.5 * (lo + hi))
    if sign[-1] == 0:
        roots.append(float(ms[-1]))

    points = []
    if roots:
        vals = [float(rate_function(params, r)[0]) for r in roots]
        top = max(vals)
        for r, v in zip(roots, vals):
            _, slope, curv = rate_function(params, r)
            resid = float(fixed_point_residual(params, r))
            phid = float(phi_map_derivative(params, r))
            points.append(
                StationaryPoint(
                    m=r,
                    rate_value=v,
                    rate_slope=float(slope),
                    rate_curvature=float(curv),
                    fixed_point_residual=resid,
                    phi_map_derivative=phid,
                    is_global_max=v >= top - tol,
                    is_attracting=phid < 1.0,
                    is_near_critical=abs(float(curv)) <= tol,
                )
            )
    return RateAnalysis(params=params, points=tuple(points), tol=tol, grid_size=grid_size)


def classify_stationary_point(params: GcwmParams, m: float, tol: float = 1e-8) -> dict:
    """Classify one point through both characterizations.

    Route "rate": stationarity by ``|L'| <= tol`` and concavity ``L'' < 0``.
    Route "fixed-point": ``|m - logistic(h'(m))| <= tol`` and map derivative
    below one.  The two stability tests agree exactly away from criticality
    because ``phi_map_derivative - 1 = m(1-m) * L''`` at fixed points.
    """
    _, slope, curv = rate_function(params, m)
    resid = float(fixed_point_residual(params, m))
    phid = float(phi_map_derivative(params, m))
    return {
        "m": float(m),
        "rate_slope": float(slope),
        "rate_curvature": float(curv),
        "fixed_point_residual": resid,
        "phi_map_derivative": phid,
        "stationary_by_rate": bool(abs(slope) <= tol),
        "stationary_by_fixed_point": bool(abs(resid) <= tol),
        "stable_by_rate": bool(curv < -tol),
        "stable_by_fixed_point": bool(phid < 1.0 - tol * float(m) * (1.0 - float(m))),
        "near_critical": bool(abs(curv) <= tol),
    }


def equivalence_report(params: GcwmParams, m: float, tol: float = 1e-8) -> dict:
    """Compare the two phase characterizations at one point.

    Statement A: stationary concave maximizer of the rate function
    (``L'(m) = 0`` and ``L'' < 0``).  Statement B: attracting fixed point of
    the logistic map (``m = logistic(h'(m))`` with map derivative < 1).
    They agree away from criticality since the residuals are related by
    ``phi_map_derivative - 1 = m(1-m) L''`` at fixed points.
    """
    c = classify_stationary_point(params, m, tol)
    statement_a = c["stationary_by_rate"] and c["stable_by_rate"]
    statement_b = c["stationary_by_fixed_point"] and c["stable_by_fixed_point"]
    return {
        **c,
        "statement_a": bool(statement_a),
        "statement_b": bool(statement_b),
        "agree": bool(statement_a == statement_b),
    }


@dataclass(frozen=True)
class PhaseBand:
    """Band ``|m - m_star| <= eta`` with inner analysis band ``epsilon``."""

    m_star: float
    eta: float
    epsilon: float

    def __post_init__(self):
        if not (0 < self.eta <= 1 and 0 < self.epsilon <= self.eta):
            raise ValueError("need 0 < epsilon <= eta <= 1")

    def level_mask(self, n: int, inner: bool = False) -> np.ndarray:
        k = np.arange(n + 1)
        half = self.epsilon if inner else self.eta
        return np.abs(k / n - self.m_star) <= half

    def level_bounds(self, n: int, inner: bool = False) -> tuple:
        mask = self.level_mask(n, inner=inner)
        idx = np.nonzero(mask)[0]
        if len(idx) == 0:
            raise ValueError("band contains no magnetization level")
        return int(idx[0]), int(idx[-1])


def default_band(analysis: RateAnalysis, which: int = 0, eta_cap: float = 0.1) -> PhaseBand:
    """Band around the chosen attracting maximizer.

    Half-width is the smaller of ``eta_cap`` and half the gap to the nearest
    other maximizer; the inner band is half of that.
    """
    maxs = analysis.attracting_maximizers
    if not maxs:
        raise ValueError("no attracting maximizer")
    m0 = maxs[which].m
    eta = eta_cap
    for p in maxs:
        if p is not maxs[which]:
            eta = min(eta, abs(p.m - m0) / 2.0)
    return PhaseBand(m_star=m0, eta=eta, epsilon=eta / 2.0)


@dataclass(frozen=True)
class MagnetizationLaw:
    """Exact law of the level ``k = sum_i x_i`` (possibly band-restricted)."""

    params: GcwmParams
    n_spins: int
    log_probs: np.ndarray
    band: Optional[PhaseBand] = None

    def probs(self) -> np.ndarray:
        out = np.zeros(self.n_spins + 1)
        finite = np.isfinite(self.log_probs)
        out[finite] = np.exp(self.log_probs[finite])
        return out

    def level_support(self) -> np.ndarray:
        return np.nonzero(np.isfinite(self.log_probs))[0]

    def mean_level(self) -> float:
        p = self.probs()
        return float(np.dot(p, np.arange(self.n_spins + 1)))

    def var_level(self) -> float:
        p = self.probs()
        k = np.arange(self.n_spins + 1)
        mu = np.dot(p, k)
        return float(np.dot(p, (k - mu) ** 2))

    def sample_levels(self, rng, size: int) -> np.ndarray:
        return rng.choice(self.n_spins + 1, size=size, p=self.probs())

    def sample_config(self, rng) -> SpinConfig:
        k = int(self.sample_levels(rng, 1)[0])
        ones = rng.choice(self.n_spins, size=k, replace=False)
        vals = [0] * self.n_spins
        for i in ones:
            vals[int(i)] = 1
        return SpinConfig(tuple(vals), 2)


def exact_magnetization_law(
    params: GcwmParams, n: int, band: Optional[PhaseBand] = None
) -> MagnetizationLaw:
    """Level law ``P(k) ~ C(n,k) exp(n h(k/n))``, optionally band-restricted.

    Linear in ``n``; stays in the log domain so it is usable far past the
    sizes where ``exp(n h)`` overflows.
    """
    if n < 1:
        raise ValueError("n must be positive")
    k = np.arange(n + 1, dtype=np.float64)
    logw = (
        gammaln(n + 1.0)
        - gammaln(k + 1.0)
        - gammaln(n - k + 1.0)
        + n * h_value(params, k / n)
    )
    if band is not None:
        mask = band.level_mask(n)
        if not mask.any():
            raise ValueError("band contains no magnetization level")
        logw = np.where(mask, logw, -np.inf)
    logz = logsumexp(logw[np.isfinite(logw)])
    return MagnetizationLaw(params=params, n_spins=n, log_probs=logw - logz, band=band)


@dataclass(frozen=True)
class ExchangeableMoments:
    mean_single: float
    cov_pair: float
    var_sum: float
    mean_level: float
    var_level: float


def exchangeable_moments(law: MagnetizationLaw) -> ExchangeableMoments:
    """Spin moments from the level law via exchangeability.

    ``E[x_1] = E[k]/n``, ``E[x_1 x_2] = E[k(k-1)]/(n(n-1))``, and the sum
    variance recombines them; all exact.
    """
    n = law.n_spins
    p = law.probs()
    k = np.arange(n + 1, dtype=np.float64)
    e1 = float(np.dot(p, k)) / n
    if n >= 2:
        e11 = float(np.dot(p, k * (k - 1.0))) / (n * (n - 1.0))
    else:
        e11 = 0.0
    cov = e11 - e1 * e1
    var_single = e1 * (1.0 - e1)
    var_sum = n * var_single + n * (n - 1.0) * cov if n >= 2 else var_single
    return ExchangeableMoments(
        mean_single=e1,
        cov_pair=cov,
        var_sum=var_sum,
        mean_level=float(np.dot(p, k)),
        var_level=law.var_level(),
    )


def ldp_tail_rate(params: GcwmParams, n: int, bands: Sequence[PhaseBand]) -> float:
    """``-log P(m outside every band) / n`` under the unconditioned law."""
    law = exact_magnetization_law(params, n)
    k = np.arange(n + 1)
    outside = np.ones(n + 1, dtype=bool)
    for b in bands:
        outside &= ~b.level_mask(n)
    if not outside.any():
        raise ValueError("bands cover every level")
    log_mass = logsumexp(law.log_probs[outside])
    return float(-log_mass / n)


def band_diameter(n: int, kmin: int, kmax: int) -> float:
    """Exact intrinsic diameter of the level band ``kmin..kmax``.

    With at least two levels, greedy single-flip paths realise the Hamming
    distance inside the band, so the diameter is the largest Hamming
    distance ``min(k1 + k2, 2n - k1 - k2)`` over level pairs.  A one-level
    band with more than one state is disconnected.
    """
    if kmin == kmax:
        n_states = math.comb(n, kmin)
        return 0.0 if n_states == 1 else INFINITE
    best = 0
    for k1 in range(kmin, kmax + 1):
        for k2 in range(k1, kmax + 1):
            best = max(best, min(k1 + k2, 2 * n - k1 - k2))
    return float(best)


def _popcounts(n_bits: int) -> np.ndarray:
    states = np.arange(1 << n_bits, dtype=np.int64)
    pc = np.zeros(1 << n_bits, dtype=np.int64)
    for b in range(n_bits):
        pc += (states >> b) & 1
    return pc


def phase_measure(params: GcwmParams, n: int, band: Optional[PhaseBand] = None) -> MeasureSpec:
    """Measure ``exp(n h(m(x)))`` restricted to the band (or unrestricted)."""
    level_logw = np.asarray(n * h_value(params, np.arange(n + 1) / n), dtype=np.float64)
    if band is not None:
        kmin, kmax = band.level_bounds(n)
    else:
        kmin, kmax = 0, n

    def lw(x: SpinConfig) -> float:
        return float(level_logw[sum(x.values)])

    def member(x: SpinConfig) -> bool:
        return kmin <= sum(x.values) <= kmax

    lw_packed = None
    if n <= 20:
        pc = _popcounts(n)

        def lw_packed(states):
            return level_logw[pc[np.asarray(states, dtype=np.int64)]]

    diam = band_diameter(n, kmin, kmax)
    label = f"gcwm(n={n},beta={params.beta})"
    if band is not None:
        label += f"|band({band.m_star:.6g},{band.eta:g})"
    support = Region(
        membership=member,
        label=label,
        certified_diameter=None if diam == INFINITE else diam,
    )
    return MeasureSpec(
        dimension=n,
        alphabet_size=2,
        log_weight=lw,
        support=support,
        label=label,
        log_weight_packed=lw_packed,
        structure={
            "kind": "gcwm-level",
            "n": n,
            "level_log_weight": level_logw,
            "band": (kmin, kmax),
        },
    )


def conditional_p0_table(params: GcwmParams, n: int) -> np.ndarray:
    """``P(x_i <- 0 | rest)`` indexed by the level of the other spins.

    The heat-bath odds for a single spin are
    ``exp(n * (h((k+1)/n) - h(k/n)))`` when ``k`` other spins are up, so a
    single table drives every update.
    """
    k = np.arange(n, dtype=np.float64)
    s = n * h_value(params, (k + 1.0) / n) - n * h_value(params, k / n)
    return 1.0 - expit(s)


def tilted_conditional_p0_table(
    params: GcwmParams, n: int, g_level_values: np.ndarray, shift: float
) -> np.ndarray:
    """Same table for the chain tilted by ``g(level) + shift``."""
    g = np.asarray(g_level_values, dtype=np.float64)
    if g.shape != (n + 1,):
        raise ValueError("need one g value per level 0..n")
    if np.any(g + shift <= 0):
        raise ValueError("tilt must keep the weight positive")
    k = np.arange(n, dtype=np.float64)
    s = (
        n * h_value(params, (k + 1.0) / n)
        - n * h_value(params, k / n)
        + np.log(g[1:] + shift)
        - np.log(g[:-1] + shift)
    )
    return 1.0 - expit(s)


def contraction_alpha(
    params: GcwmParams, n: int, band: PhaseBand, reps: int, seed: int
):
    """One-step coupled contraction for neighbor pairs in the inner band.

    Exchangeability makes the coupled update a function of levels alone, so
    the whole replica batch vectorizes: sample the level of the lower state
    from the band-conditioned law restricted to the inner band, place the
    extra spin of the upper state at a fresh coordinate, and run one shared
    (coordinate, uniform) heat-bath update on both.  ``kappa = n (1 - alpha)``.
    """
    from .engine import ContractionEstimate

    if reps < 100:
        raise ValueError("need at least 100 replicas for a usable interval")
    kmin, kmax = band.level_bounds(n)
    lmin, lmax = band.level_bounds(n, inner=True)
    if lmax - lmin < 1:
        raise ValueError("inner band needs at least two levels")
    law = exact_magnetization_law(params, n, band=band)
    probs = law.probs()
    inner = np.zeros(n + 1)
    inner[lmin : lmax + 1] = probs[lmin : lmax + 1]
    inner /= inner.sum()
    gen = stream(seed, "gcwm-contraction")
    k = gen.choice(n + 1, size=reps, p=inner)
    up = gen.random(reps) < (n - k) / n
    up &= k + 1 <= lmax
    up |= k - 1 < lmin
    k0 = np.where(up, k, k - 1)  # lower state level; upper state is k0 + 1

    p0 = conditional_p0_table(params, n)
    i_is_j = gen.random(reps) < 1.0 / n
    u = gen.random(reps)
    # shared coordinate elsewhere: its value is 1 with prob k0 / (n - 1)
    xi = (gen.random(reps) < k0 / (n - 1.0)).astype(np.int64)
    nu_a = (u >= p0[k0 - xi]).astype(np.int64)
    nu_b = (u >= p0[k0 + 1 - xi]).astype(np.int64)
    cand_a = k0 + nu_a - xi
    cand_b = k0 + 1 + nu_b - xi
    nu_a = np.where((cand_a < kmin) | (cand_a > kmax), xi, nu_a)
    nu_b = np.where((cand_b < kmin) | (cand_b > kmax), xi, nu_b)
    # the differing coordinate resolves whenever it is selected: both
    # conditionals read the same other-spin level k0 and share the uniform
    dists = np.where(i_is_j, 0.0, 1.0 + (nu_a != nu_b))
    alpha_hat = float(dists.mean())
    half = 1.96 * float(dists.std(ddof=1) / math.sqrt(reps))
    return ContractionEstimate(
        alpha_hat=alpha_hat,
        confidence_halfwidth=half,
        sample_count=reps,
        kappa_hat=n * (1.0 - alpha_hat),
        kappa_ci_low=n * (1.0 - alpha_hat - half),
        kappa_ci_high=n * (1.0 - alpha_hat + half),
        scale=float(n),
    )


@dataclass(frozen=True)
class WitnessReport:
    min_log_ratio: float
    witness_x: Optional[int]
    witness_y: Optional[int]
    pairs_checked: int


def local_fkg_witness(params: GcwmParams, n: int, band: PhaseBand) -> WitnessReport:
    """Worst FKG log-ratio over near-ordered pairs near the inner band.

    Scans pairs (x, y) within Hamming distance one of the inner band whose
    meet and join stay within one flip of the pair, evaluating
    ``log w(meet) + log w(join) - log w(x) - log w(y)`` for the banded
    measure (``-inf`` when meet or join leaves the outer band).  Exhaustive;
    ``n <= 12``.
    """
    if n > 12:
        raise ValueError("exhaustive witness scan limited to n <= 12")
    level_logw = np.asarray(n * h_value(params, np.arange(n + 1) / n), dtype=np.float64)
    kmin, kmax = band.level_bounds(n)
    lmin, lmax = band.level_bounds(n, inner=True)
    pc = _popcounts(n)
    logw = level_logw[pc]
    support = (pc >= kmin) & (pc <= kmax)
    in_lambda = (pc >= lmin) & (pc <= lmax) & support
    near = kernels.dilate_mask(in_lambda, n)
    min_ratio, wx, wy, pairs = kernels.local_fkg_min(logw, near, support, n)
    return WitnessReport(
        min_log_ratio=min_ratio,
        witness_x=wx,
        witness_y=wy,
        pairs_checked=pairs,
    )
