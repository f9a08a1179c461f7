"""Heat-bath dynamics, tilts, couplings, contraction estimation."""

import math

import numpy as np
import pytest

from phasefkg import engine, gcwm
from phasefkg.engine import (
    CoupledQuadruple,
    MeasureSpec,
    conditional_update_distribution,
    coupled_pair_step,
    estimate_contraction,
    exact_state_distribution,
    glauber_step_at,
    inverse_cdf_value,
    make_tilt,
    mildness_interval,
    monotone_coupled_step,
    sample_from_exact,
    sample_tilted,
)
from phasefkg.lattice import IncreasingFunction, Region, SpinConfig, leq

from conftest import brute_gcwm_probs


def product_measure(n, p):
    logit = math.log(p / (1.0 - p))

    def lw(x):
        return logit * sum(x.values)

    return MeasureSpec(
        dimension=n,
        alphabet_size=2,
        log_weight=lw,
        support=Region(membership=lambda x: True, label="all"),
        label=f"product(p={p})",
    )


def banded_gcwm_measure(beta=(0.0, 1.0), n=4, band=None):
    params = gcwm.GcwmParams(beta=beta)
    if band is None:
        band = gcwm.PhaseBand(m_star=0.8, eta=0.45, epsilon=0.2)
    return params, band, gcwm.phase_measure(params, n, band)


def transition_matrix(mu):
    """Exact single-step kernel of the stay-put heat-bath chain."""
    n = mu.dimension
    n_states = 1 << n
    P = np.zeros((n_states, n_states))
    for s in range(n_states):
        x = SpinConfig.from_packed(s, n)
        if not mu.in_support(x):
            continue
        for i in range(n):
            probs = conditional_update_distribution(mu, x, i, restrict_support=False)
            for v, pv in enumerate(probs):
                cand = x.with_value(i, v)
                t = cand.packed if mu.in_support(cand) else s
                P[s, t] += pv / n
    return P


class TestStationarity:
    def test_detailed_balance_free_measure(self):
        params, band, _ = banded_gcwm_measure()
        mu = gcwm.phase_measure(params, 4)
        pi, _ = exact_state_distribution(mu)
        P = transition_matrix(mu)
        assert np.allclose(pi[:, None] * P, pi[None, :] * P.T, atol=1e-14)

    def test_detailed_balance_conditioned_measure(self):
        # support rejection keeps the kernel reversible for the banded law
        _, _, mu = banded_gcwm_measure(n=5)
        pi, support = exact_state_distribution(mu)
        P = transition_matrix(mu)
        assert np.allclose(pi @ P, pi, atol=1e-14)
        assert np.allclose(pi[:, None] * P, pi[None, :] * P.T, atol=1e-14)
        assert np.all(pi[~support] == 0.0)

    def test_exact_distribution_matches_brute_enumeration(self):
        params, band, mu = banded_gcwm_measure(n=5)
        pi, _ = exact_state_distribution(mu)
        brute, _ = brute_gcwm_probs(params, 5, band)
        assert np.allclose(pi, brute, atol=1e-13)

    def test_empty_support_rejected(self):
        mu = MeasureSpec(
            dimension=3,
            alphabet_size=2,
            log_weight=lambda x: 0.0,
            support=Region(membership=lambda x: False),
        )
        with pytest.raises(ValueError):
            exact_state_distribution(mu)


class TestUpdates:
    def test_inverse_cdf_semantics(self):
        probs = np.array([0.2, 0.3, 0.5])
        assert inverse_cdf_value(probs, 0.1) == 0
        assert inverse_cdf_value(probs, 0.2) == 1
        assert inverse_cdf_value(probs, 0.49) == 1
        assert inverse_cdf_value(probs, 0.9999) == 2
        assert inverse_cdf_value(probs, 1.0) == 2

    def test_conditional_distribution_product_measure(self):
        mu = product_measure(4, 0.7)
        x = SpinConfig(values=(1, 0, 1, 0))
        for i in range(4):
            probs = conditional_update_distribution(mu, x, i)
            assert probs[1] == pytest.approx(0.7, abs=1e-12)

    def test_stay_put_at_support_boundary(self):
        # band floor: proposing the down-spin would exit, so the chain stays
        _, band, mu = banded_gcwm_measure(n=4)
        kmin, _ = band.level_bounds(4)
        x = SpinConfig.from_packed((1 << kmin) - 1, 4)
        assert mu.in_support(x)
        moved = glauber_step_at(mu, x, 0, 0.0)  # u=0 picks value 0 when possible
        probs = conditional_update_distribution(mu, x, 0, restrict_support=False)
        if probs[0] > 0:
            assert moved == x

    def test_coordinate_out_of_range(self):
        mu = product_measure(3, 0.5)
        with pytest.raises(ValueError):
            conditional_update_distribution(mu, SpinConfig(values=(0, 0, 0)), 3)


class TestCoupling:
    def test_pair_step_preserves_order_ferromagnetic(self):
        # attractive conditionals + shared inverse-CDF draw keep a <= b
        params = gcwm.GcwmParams(beta=(0.5, 1.0))
        mu = gcwm.phase_measure(params, 6)
        rng = np.random.default_rng(7)
        for _ in range(300):
            lo_mask = int(rng.integers(0, 1 << 6))
            hi_mask = lo_mask | int(rng.integers(0, 1 << 6))
            a = SpinConfig.from_packed(lo_mask, 6)
            b = SpinConfig.from_packed(hi_mask, 6)
            i = int(rng.integers(0, 6))
            u = float(rng.random())
            na, nb = coupled_pair_step(mu, a, b, i, u)
            assert leq(na, nb)

    def test_quadruple_marginals_match_single_chain(self):
        params, band, mu = banded_gcwm_measure(n=4)
        tilt = make_tilt(
            mu,
            IncreasingFunction(evaluator=lambda x: sum(x.values) / 4.0, sup_norm_bound=1.0),
            eps=0.25,
        )
        rng = np.random.default_rng(8)
        start = SpinConfig.from_packed(0b0111, 4)
        quad = CoupledQuadruple(start, start, start, start)
        singles = [start, start, start, start]
        for _ in range(50):
            i = int(rng.integers(0, 4))
            u = float(rng.random())
            quad = monotone_coupled_step(quad, mu, tilt.measure, i, u)
            for k, m in enumerate((mu, tilt.measure, mu, tilt.measure)):
                singles[k] = glauber_step_at(m, singles[k], i, u)
        assert (quad.stat_base, quad.stat_tilt, quad.z_base, quad.z_tilt) == tuple(singles)


class TestTilt:
    def test_tilted_distribution_is_reweighted_base(self):
        mu = product_measure(4, 0.6)
        g = IncreasingFunction(evaluator=lambda x: sum(x.values) / 4.0, sup_norm_bound=1.0)
        tilt = make_tilt(mu, g, eps=0.25)
        base, _ = exact_state_distribution(mu)
        tilted, _ = exact_state_distribution(tilt.measure)
        weights = np.array(
            [tilt.g_tilde(SpinConfig.from_packed(s, 4)) for s in range(16)]
        )
        expected = base * weights
        expected /= expected.sum()
        assert np.allclose(tilted, expected, atol=1e-14)

    def test_mildness_interval_within_envelope(self):
        eps = 0.25
        envelope = math.sqrt(eps) + eps / 4.0
        mu = product_measure(5, 0.5)
        g = IncreasingFunction(evaluator=lambda x: sum(x.values) / 5.0, sup_norm_bound=1.0)
        lo, hi = mildness_interval(make_tilt(mu, g, eps))
        assert -envelope <= lo <= hi <= envelope

    def test_make_tilt_validation(self):
        mu = product_measure(3, 0.5)
        g = IncreasingFunction(evaluator=lambda x: 0.0, sup_norm_bound=1.0)
        with pytest.raises(ValueError):
            make_tilt(mu, g, eps=0.0)
        with pytest.raises(ValueError):
            make_tilt(mu, g, eps=1.5)
        with pytest.raises(ValueError):
            make_tilt(mu, IncreasingFunction(evaluator=lambda x: 0.0, sup_norm_bound=0.0), 0.25)

    def test_rejection_sampler_hits_tilted_law(self):
        mu = product_measure(3, 0.5)
        g = IncreasingFunction(evaluator=lambda x: sum(x.values) / 3.0, sup_norm_bound=1.0)
        tilt = make_tilt(mu, g, eps=0.25)
        rng = np.random.default_rng(9)
        sampler = lambda r: sample_from_exact(mu, r, size=1)[0]
        counts = np.zeros(8)
        draws = 20000
        for _ in range(draws):
            counts[sample_tilted(sampler, tilt, rng).packed] += 1
        tilted, _ = exact_state_distribution(tilt.measure)
        tv = 0.5 * np.abs(counts / draws - tilted).sum()
        assert tv < 0.02


class TestContraction:
    def test_product_measure_contracts_at_one_over_n(self):
        # the differing coordinate coalesces iff selected: alpha = 1 - 1/n
        n = 8
        mu = product_measure(n, 0.5)
        rng = np.random.default_rng(10)

        def pair_sampler(r):
            base = int(r.integers(0, 1 << n))
            i = int(r.integers(0, n))
            lo = base & ~(1 << i)
            hi = base | (1 << i)
            return SpinConfig.from_packed(lo, n), SpinConfig.from_packed(hi, n)

        est = estimate_contraction(mu, pair_sampler, reps=4000, rng=rng)
        expected = 1.0 - 1.0 / n
        assert abs(est.alpha_hat - expected) <= est.confidence_halfwidth
        assert est.kappa_ci_low <= 1.0 <= est.kappa_ci_high
        assert est.scale == n

    def test_minimum_replica_count_enforced(self):
        mu = product_measure(3, 0.5)
        with pytest.raises(ValueError):
            estimate_contraction(mu, lambda r: None, reps=50, rng=np.random.default_rng(0))


class TestExactSampling:
    def test_samples_match_distribution(self):
        _, _, mu = banded_gcwm_measure(n=4)
        rng = np.random.default_rng(11)
        draws = sample_from_exact(mu, rng, size=20000)
        counts = np.zeros(16)
        for x in draws:
            counts[x.packed] += 1
        pi, _ = exact_state_distribution(mu)
        tv = 0.5 * np.abs(counts / len(draws) - pi).sum()
        assert tv < 0.02