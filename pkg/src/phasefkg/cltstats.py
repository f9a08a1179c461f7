"""Covariance bounds, decorrelation probes, and CLT diagnostics.

Everything here quantifies how close a phase-conditioned measure is to a
product-like or Gaussian limit: pairwise-covariance bounds for increasing
Lipschitz observables, factorization error of multilinear moments across
sizes, sup-deviation of edge marginals, Kolmogorov and Wasserstein
distances to the normal (exact laws and MCMC samples), and autocorrelation
accounting for honest effective sample sizes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .ergm import ErgmSpec, SamplerResult, sigma_n_squared
from .gcwm import GcwmParams, PhaseBand, exact_magnetization_law, h_second


# ---------------------------------------------------------------------------
# covariance bound for increasing Lipschitz observables


@dataclass(frozen=True)
class CovBoundCheck:
    lhs: float
    rhs: float
    holds: bool
    cov_term: float
    defect_term: float
    delta: float
    index_count: int


def _bit_matrix(dim: int) -> np.ndarray:
    states = np.arange(1 << dim, dtype=np.int64)
    return ((states[:, None] >> np.arange(dim)[None, :]) & 1).astype(np.float64)


def coordinate_covariances(probs: np.ndarray, dim: int) -> np.ndarray:
    """Exact ``Cov[X_i, X_j]`` matrix of a packed-state distribution."""
    bits = _bit_matrix(dim)
    mean = probs @ bits
    second = (bits * probs[:, None]).T @ bits
    return second - np.outer(mean, mean)


def cov_bound_check(
    probs: np.ndarray,
    dim: int,
    f_values: np.ndarray,
    g_values: np.ndarray,
    lip_f: np.ndarray,
    lip_g: np.ndarray,
    delta: float,
) -> CovBoundCheck:
    """Check ``|Cov[F,G]| <= sum_ij Lip_i Lip_j (Cov[X_i,X_j] + 4 |I|^2 delta)``.

    Exact enumeration: ``probs`` over packed states, observable values per
    state, per-coordinate Lipschitz bounds, and a positive-association
    defect ``delta`` of the measure.
    """
    probs = np.asarray(probs, dtype=np.float64)
    ef = float(probs @ f_values)
    eg = float(probs @ g_values)
    lhs = abs(float(probs @ (f_values * g_values)) - ef * eg)
    cov = coordinate_covariances(probs, dim)
    lf = np.asarray(lip_f, dtype=np.float64)
    lg = np.asarray(lip_g, dtype=np.float64)
    cov_term = float(lf @ cov @ lg)
    defect_term = float(lf.sum() * lg.sum() * 4.0 * dim * dim * delta)
    rhs = cov_term + defect_term
    return CovBoundCheck(
        lhs=lhs,
        rhs=rhs,
        holds=bool(lhs <= rhs + 1e-12),
        cov_term=cov_term,
        defect_term=defect_term,
        delta=delta,
        index_count=dim,
    )


def random_increasing_observable(dim: int, rng) -> tuple:
    """A random increasing observable with exact per-coordinate Lipschitz bounds.

    Forms: a nonnegative linear functional, a clipped linear functional, or
    a max of two linear functionals; returns ``(values over packed states,
    lipschitz vector)``.
    """
    bits = _bit_matrix(dim)
    kind = rng.integers(0, 3)
    w = rng.random(dim)
    if kind == 0:
        return bits @ w, w
    if kind == 1:
        cap = float(rng.uniform(0.3, 0.9)) * w.sum()
        return np.minimum(bits @ w, cap), w
    w2 = rng.random(dim)
    return np.maximum(bits @ w, bits @ w2), np.maximum(w, w2)


# ---------------------------------------------------------------------------
# decorrelation probes across sizes


def multilinear_probe(
    snapshots: np.ndarray,
    n: int,
    k: int,
    rng,
    n_tuples: int = 300,
    style: str = "star",
) -> dict:
    """Factorization error of k-edge product moments from sampler snapshots.

    Averages ``E[prod x_e] - prod E[x_e]`` over random tuples of ``k``
    distinct edges and reports the absolute gap for a log-log slope fit
    across sizes.  ``style="star"`` draws edges sharing one vertex, which
    probes the direct interaction and decays like ``1/n``; ``"matching"``
    draws pairwise vertex-disjoint edges, whose far smaller gap is usually
    below Monte Carlo resolution.
    """
    if not 2 <= k <= 4:
        raise ValueError("probe order limited to 2..4")
    if style not in ("star", "matching"):
        raise ValueError("style must be 'star' or 'matching'")
    need = k + 1 if style == "star" else 2 * k
    if need > n:
        raise ValueError("not enough vertices for the requested tuple")
    m = len(snapshots)
    if m < 30:
        raise ValueError("need at least 30 snapshots")
    rows = snapshots.astype(np.uint64)
    gaps = []
    for _ in range(n_tuples):
        verts = rng.choice(n, size=need, replace=False)
        if style == "star":
            hub = int(verts[0])
            edges = [(hub, int(verts[1 + t])) for t in range(k)]
        else:
            edges = [(int(verts[2 * t]), int(verts[2 * t + 1])) for t in range(k)]
        ind = np.ones(m, dtype=np.float64)
        margs = []
        for u, v in edges:
            e = ((rows[:, u] >> np.uint64(v)) & np.uint64(1)).astype(np.float64)
            margs.append(e.mean())
            ind *= e
        gaps.append(ind.mean() - float(np.prod(margs)))
    gaps = np.asarray(gaps)
    return {
        "k": k,
        "n": n,
        "style": style,
        "gap": float(gaps.mean()),
        "abs_gap": float(abs(gaps.mean())),
        "tuple_std": float(gaps.std(ddof=1) / math.sqrt(len(gaps))),
        "n_tuples": n_tuples,
        "n_snapshots": m,
    }


def decorrelation_slope(sizes: Sequence[int], abs_gaps: Sequence[float]) -> float:
    """Least-squares slope of ``log |gap|`` against ``log n``."""
    x = np.log(np.asarray(sizes, dtype=np.float64))
    y = np.log(np.maximum(np.asarray(abs_gaps, dtype=np.float64), 1e-300))
    x = x - x.mean()
    return float((x @ (y - y.mean())) / (x @ x))


def marginal_probe(snapshots: np.ndarray, n: int, p_star: float) -> dict:
    """Sup-deviation of per-edge marginals from the phase density.

    The comparison envelope ``sqrt(log n / n)`` is the scale of the worst
    pair statistic in a quasirandom graph; conditioned phases should stay
    inside a constant multiple of it.
    """
    rows = snapshots.astype(np.uint64)
    m = len(rows)
    worst = 0.0
    for u in range(n):
        for v in range(u + 1, n):
            marg = float(((rows[:, u] >> np.uint64(v)) & np.uint64(1)).mean())
            worst = max(worst, abs(marg - p_star))
    return {
        "sup_deviation": worst,
        "envelope": math.sqrt(math.log(n) / n),
        "n_snapshots": m,
    }


# ---------------------------------------------------------------------------
# normal distance


def _standardize(values: np.ndarray, probs: Optional[np.ndarray] = None) -> tuple:
    v = np.asarray(values, dtype=np.float64)
    if probs is None:
        mean = v.mean()
        std = v.std(ddof=1)
    else:
        mean = float(probs @ v)
        std = math.sqrt(max(float(probs @ (v - mean) ** 2), 0.0))
    if std <= 0:
        raise ValueError("degenerate distribution: zero variance")
    return (v - mean) / std, mean, std


def normal_distance_exact(values: np.ndarray, probs: np.ndarray) -> dict:
    """Kolmogorov and Wasserstein distance of a discrete law to the normal.

    The law is standardized by its own mean and standard deviation.  The
    Kolmogorov distance is evaluated from both sides of every atom; the
    Wasserstein distance integrates ``|F - Phi|`` in closed form between
    atoms using the antiderivative ``psi(z) = z Phi(z) + phi(z)``.
    """
    probs = np.asarray(probs, dtype=np.float64)
    keep = probs > 0
    z, mean, std = _standardize(np.asarray(values)[keep], probs[keep] / probs[keep].sum())
    p = probs[keep] / probs[keep].sum()
    order = np.argsort(z)
    z, p = z[order], p[order]
    cdf = np.cumsum(p)
    cdf_left = cdf - p
    phi_at = ndtr(z)
    d_k = float(np.max(np.maximum(np.abs(cdf - phi_at), np.abs(cdf_left - phi_at))))

    def psi(x):
        return x * ndtr(x) + np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)

    # integral of |F - Phi|: F is the step function with jumps at z
    total = psi(z[0])  # left tail: integral of Phi below the first atom
    for i in range(len(z) - 1):
        a, b, c = z[i], z[i + 1], cdf[i]
        # on [a, b], F = c; Phi crosses c at zc when inside the interval
        zc = min(max(ndtri(min(max(c, 1e-300), 1 - 1e-16)), a), b)
        int_phi_lo = psi(zc) - psi(a)
        int_phi_hi = psi(b) - psi(zc)
        total += (c * (zc - a) - int_phi_lo) + (int_phi_hi - c * (b - zc))
    total += psi(-z[-1])  # right tail: integral of 1 - Phi above the last atom
    return {
        "d_kolmogorov": d_k,
        "d_wasserstein": float(total),
        "mean": mean,
        "std": std,
    }


def normal_distance_samples(samples: np.ndarray, min_samples: int = 100) -> dict:
    """KS and plug-in Wasserstein distance of standardized samples to the normal."""
    x = np.asarray(samples, dtype=np.float64)
    if len(x) < min_samples:
        raise ValueError(f"need at least {min_samples} samples")
    z, mean, std = _standardize(x)
    z = np.sort(z)
    m = len(z)
    grid = (np.arange(1, m + 1)) / m
    phi_at = ndtr(z)
    d_k = float(max(np.max(np.abs(grid - phi_at)), np.max(np.abs(grid - 1.0 / m - phi_at))))
    quantiles = ndtri((np.arange(m) + 0.5) / m)
    d_w = float(np.mean(np.abs(z - quantiles)))
    return {
        "d_kolmogorov": d_k,
        "d_wasserstein": d_w,
        "mean": mean,
        "std": std,
        "n_samples": m,
    }


# ---------------------------------------------------------------------------
# autocorrelation


@dataclass(frozen=True)
class AutocorrReport:
    tau: float
    ess: float
    thin: int
    n_terms: int
    n_samples: int


def integrated_autocorr_time(trace: np.ndarray, max_lag: Optional[int] = None) -> AutocorrReport:
    """Initial-positive-sequence estimate of the integrated autocorrelation.

    Sums autocovariances in adjacent pairs while the pair sums stay
    positive, which is the standard conservative truncation for reversible
    chains.  ``thin = ceil(2 tau)`` spacing gives nearly independent draws.
    """
    x = np.asarray(trace, dtype=np.float64)
    m = len(x)
    if m < 10:
        raise ValueError("trace too short")
    x = x - x.mean()
    size = 1 << (2 * m - 1).bit_length()
    f = np.fft.rfft(x, n=size)
    acov = np.fft.irfft(f * np.conj(f), n=size)[:m] / m
    if acov[0] <= 0:
        raise ValueError("constant trace")
    if max_lag is None:
        max_lag = m - 1
    tau = acov[0]
    n_terms = 0
    lag = 1
    while lag + 1 <= max_lag:
        pair = acov[lag] + acov[lag + 1]
        if pair <= 0:
            break
        tau += 2.0 * pair
        n_terms += 1
        lag += 2
    tau /= acov[0]
    return AutocorrReport(
        tau=float(tau),
        ess=float(m / tau),
        thin=int(math.ceil(2.0 * tau)),
        n_terms=n_terms,
        n_samples=m,
    )


# ---------------------------------------------------------------------------
# CLT reports


@dataclass(frozen=True)
class GcwmCltPoint:
    n: int
    d_kolmogorov: float
    d_wasserstein: float
    var_exact: float
    var_formula: float
    var_ratio: float


def gcwm_level_variance_formula(params: GcwmParams, m_star: float, n: int) -> float:
    """Predicted variance of the level in the phase band.

    ``n m (1-m) / (1 - m (1-m) h''(m))`` at the phase magnetization: the
    binomial variance inflated by the interaction susceptibility.
    """
    mm = m_star * (1.0 - m_star)
    denom = 1.0 - mm * float(h_second(params, m_star))
    if denom <= 0:
        raise ValueError("phase is not attracting; variance formula invalid")
    return n * mm / denom


def clt_report_gcwm(
    params: GcwmParams, m_star: float, band: PhaseBand, sizes: Sequence[int]
) -> list:
    """Exact normal-distance scan of the banded level law across sizes."""
    out = []
    for n in sizes:
        law = exact_magnetization_law(params, n, band=band)
        ks = law.level_support()
        probs = law.probs()[ks]
        nd = normal_distance_exact(ks.astype(np.float64), probs)
        var_exact = nd["std"] ** 2
        var_formula = gcwm_level_variance_formula(params, m_star, n)
        out.append(
            GcwmCltPoint(
                n=n,
                d_kolmogorov=nd["d_kolmogorov"],
                d_wasserstein=nd["d_wasserstein"],
                var_exact=var_exact,
                var_formula=var_formula,
                var_ratio=var_exact / var_formula,
            )
        )
    return out


@dataclass(frozen=True)
class ErgmCltReport:
    n: int
    ess: float
    tau: float
    thin: int
    accepted: bool
    d_kolmogorov: float
    d_wasserstein: float
    var_edge_empirical: float
    var_edge_formula: float
    var_edge_ratio: float
    triangle_sd_empirical: Optional[float] = None
    triangle_sd_formula: Optional[float] = None
    triangle_sd_ratio: Optional[float] = None
    edge_triangle_corr: Optional[float] = None


def clt_report_ergm(
    run: SamplerResult,
    spec: ErgmSpec,
    p_star: float,
    min_ess: float = 200.0,
) -> ErgmCltReport:
    """Edge-count CLT diagnostics from a sampler run with an edge trace.

    Thins the per-step edge-count trace by twice its integrated
    autocorrelation time before computing normal distances; runs with fewer
    than ``min_ess`` effective samples are marked rejected.  When snapshots
    are present, also compares the triangle-count spread to the chain-rule
    prediction ``2 |E_G| p^{|E_G|-1} n^{|V_G|-2} sigma_n`` for the triangle.
    """
    if run.edge_trace is None:
        raise ValueError("sampler run needs record_trace=True")
    trace = run.edge_trace.astype(np.float64)
    ac = integrated_autocorr_time(trace)
    accepted = ac.ess >= min_ess
    thinned = trace[:: ac.thin]
    nd = normal_distance_samples(thinned) if len(thinned) >= 100 else {
        "d_kolmogorov": math.nan, "d_wasserstein": math.nan, "std": math.nan,
    }
    var_emp = float(np.var(thinned, ddof=1)) if len(thinned) >= 2 else math.nan
    var_formula = sigma_n_squared(spec, p_star)

    tri_sd_emp = tri_sd_form = tri_ratio = corr = None
    if run.snapshots is not None and len(run.snapshots) >= 30:
        tri = run.snapshot_triangle_homs().astype(np.float64)
        if tri.std(ddof=1) > 0:
            tri_sd_emp = float(tri.std(ddof=1))
            tri_sd_form = 6.0 * p_star**2 * spec.n * math.sqrt(var_formula)
            tri_ratio = tri_sd_emp / tri_sd_form
            ec = run.snapshot_edge_counts().astype(np.float64)
            if ec.std(ddof=1) > 0:
                corr = float(np.corrcoef(ec, tri)[0, 1])
    return ErgmCltReport(
        n=spec.n,
        ess=ac.ess,
        tau=ac.tau,
        thin=ac.thin,
        accepted=accepted,
        d_kolmogorov=nd["d_kolmogorov"],
        d_wasserstein=nd["d_wasserstein"],
        var_edge_empirical=var_emp,
        var_edge_formula=var_formula,
        var_edge_ratio=var_emp / var_formula,
        triangle_sd_empirical=tri_sd_emp,
        triangle_sd_formula=tri_sd_form,
        triangle_sd_ratio=tri_ratio,
        edge_triangle_corr=corr,
    )