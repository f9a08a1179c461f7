"""Mean-field model: rate function, phases, exact laws, witnesses."""

import math

import numpy as np
import pytest
from scipy.special import expit

from phasefkg import engine, gcwm
from phasefkg.lattice import INFINITE, IncreasingFunction, Region, SpinConfig

from conftest import brute_gcwm_probs


BETA_SINGLE = (0.0, 1.0)  # unique phase near 0.8439
BETA_DOUBLE = (-4.0, 4.0)  # symmetric double well


class TestRateFunction:
    def test_polynomial_evaluation(self):
        params = gcwm.GcwmParams(beta=(1.5, 0.5, 0.25))
        m = 0.4
        assert gcwm.h_value(params, m) == pytest.approx(
            1.5 * m + 0.5 * m**2 + 0.25 * m**3, abs=1e-15
        )
        assert gcwm.h_prime(params, m) == pytest.approx(
            1.5 + 1.0 * m + 0.75 * m**2, abs=1e-15
        )
        assert gcwm.h_second(params, m) == pytest.approx(1.0 + 1.5 * m, abs=1e-15)

    def test_derivatives_match_finite_differences(self):
        params = gcwm.GcwmParams(beta=(-2.0, 3.0, 0.5))
        eps = 1e-6
        for m in (0.2, 0.5, 0.8):
            L0, Lp, Lpp = gcwm.rate_function(params, m)
            Lm = gcwm.rate_function(params, m - eps)[0]
            Lp_ = gcwm.rate_function(params, m + eps)[0]
            assert Lp == pytest.approx((Lp_ - Lm) / (2 * eps), abs=1e-6)
            assert Lpp == pytest.approx((Lp_ - 2 * L0 + Lm) / eps**2, rel=1e-3)

    def test_open_interval_enforced(self):
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        with pytest.raises(ValueError):
            gcwm.rate_function(params, 0.0)

    def test_parameter_validation(self):
        gcwm.GcwmParams(beta=(-3.0, 2.0))  # negative field is fine
        with pytest.raises(ValueError):
            gcwm.GcwmParams(beta=(0.0, -1.0))
        with pytest.raises(ValueError):
            gcwm.GcwmParams(beta=())


class TestPhases:
    def test_pure_field_fixed_point(self):
        # h' is constant 2.5, so the unique phase is expit(2.5) exactly
        analysis = gcwm.find_maximizers(gcwm.GcwmParams(beta=(2.5,)))
        assert len(analysis.maximizers) == 1
        assert analysis.maximizers[0].m == pytest.approx(expit(2.5), abs=1e-9)
        assert analysis.maximizers[0].is_attracting

    def test_quadratic_phase_location(self):
        analysis = gcwm.find_maximizers(gcwm.GcwmParams(beta=BETA_SINGLE))
        assert len(analysis.attracting_maximizers) == 1
        m_star = analysis.attracting_maximizers[0].m
        assert m_star == pytest.approx(0.8439, abs=1e-4)
        # self-consistency: m = logistic(h'(m))
        assert gcwm.fixed_point_residual(gcwm.GcwmParams(beta=BETA_SINGLE), m_star) == (
            pytest.approx(0.0, abs=1e-9)
        )

    def test_symmetric_double_well(self):
        analysis = gcwm.find_maximizers(gcwm.GcwmParams(beta=BETA_DOUBLE))
        ms = sorted(p.m for p in analysis.maximizers)
        assert len(ms) == 2
        assert ms[0] == pytest.approx(1.0 - ms[1], abs=1e-9)
        assert all(p.is_attracting for p in analysis.maximizers)
        # the middle stationary point exists but is not a global max
        interior = [p for p in analysis.points if not p.is_global_max]
        assert len(interior) == 1
        assert interior[0].m == pytest.approx(0.5, abs=1e-9)

    def test_equivalence_of_characterizations(self):
        params = gcwm.GcwmParams(beta=BETA_DOUBLE)
        analysis = gcwm.find_maximizers(params)
        for p in analysis.points:
            rep = gcwm.equivalence_report(params, p.m)
            assert rep["agree"]
            if p.is_global_max:
                assert rep["statement_a"] and rep["statement_b"]
            else:
                assert not rep["statement_a"] and not rep["statement_b"]

    def test_equivalence_fails_off_stationary_points(self):
        rep = gcwm.equivalence_report(gcwm.GcwmParams(beta=BETA_SINGLE), 0.5)
        assert not rep["statement_a"] and not rep["statement_b"] and rep["agree"]


class TestExactLaw:
    @pytest.mark.parametrize("beta", [(0.0, 1.0), (-1.0, 0.0, 2.0), (2.5,)])
    def test_level_law_matches_state_enumeration(self, beta):
        params = gcwm.GcwmParams(beta=beta)
        n = 8
        probs, levels = brute_gcwm_probs(params, n)
        law = gcwm.exact_magnetization_law(params, n)
        agg = np.bincount(levels, weights=probs, minlength=n + 1)
        assert np.allclose(law.probs(), agg, atol=1e-12)

    def test_banded_law_matches_state_enumeration(self):
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        band = gcwm.PhaseBand(m_star=0.8, eta=0.25, epsilon=0.1)
        n = 9
        probs, levels = brute_gcwm_probs(params, n, band)
        law = gcwm.exact_magnetization_law(params, n, band)
        agg = np.bincount(levels, weights=probs, minlength=n + 1)
        assert np.allclose(law.probs(), agg, atol=1e-12)
        kmin, kmax = band.level_bounds(n)
        assert list(law.level_support()) == list(range(kmin, kmax + 1))

    def test_zero_interaction_is_binomial(self):
        params = gcwm.GcwmParams(beta=(0.0,))
        law = gcwm.exact_magnetization_law(params, 10)
        from scipy.stats import binom

        assert np.allclose(law.probs(), binom.pmf(np.arange(11), 10, 0.5), atol=1e-12)

    def test_large_n_stays_finite(self):
        params = gcwm.GcwmParams(beta=(0.0, 2.0))
        law = gcwm.exact_magnetization_law(params, 5000)
        p = law.probs()
        assert np.isfinite(p).all()
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_exchangeable_moments_against_state_enumeration(self):
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        n = 7
        probs, levels = brute_gcwm_probs(params, n)
        x1 = np.array([(s >> 0) & 1 for s in range(1 << n)], dtype=float)
        x2 = np.array([(s >> 1) & 1 for s in range(1 << n)], dtype=float)
        e1 = float(probs @ x1)
        cov = float(probs @ (x1 * x2)) - e1 * float(probs @ x2)
        var_sum = float(probs @ levels.astype(float) ** 2) - float(probs @ levels) ** 2
        mom = gcwm.exchangeable_moments(gcwm.exact_magnetization_law(params, n))
        assert mom.mean_single == pytest.approx(e1, abs=1e-12)
        assert mom.cov_pair == pytest.approx(cov, abs=1e-12)
        assert mom.var_sum == pytest.approx(var_sum, abs=1e-10)


class TestBands:
    def test_band_validation(self):
        with pytest.raises(ValueError):
            gcwm.PhaseBand(m_star=0.5, eta=0.0, epsilon=0.0)
        with pytest.raises(ValueError):
            gcwm.PhaseBand(m_star=0.5, eta=0.1, epsilon=0.2)

    def test_level_bounds(self):
        band = gcwm.PhaseBand(m_star=0.5, eta=0.2, epsilon=0.1)
        assert band.level_bounds(10) == (3, 7)
        assert band.level_bounds(10, inner=True) == (4, 6)

    def test_default_band_respects_gap(self):
        analysis = gcwm.find_maximizers(gcwm.GcwmParams(beta=BETA_DOUBLE))
        band = gcwm.default_band(analysis, which=0)
        ms = sorted(p.m for p in analysis.maximizers)
        gap = ms[1] - ms[0]
        assert band.eta <= gap / 2 + 1e-12

    def test_tail_rate_matches_direct_mass(self):
        params = gcwm.GcwmParams(beta=BETA_DOUBLE)
        analysis = gcwm.find_maximizers(params)
        bands = [
            gcwm.PhaseBand(m_star=p.m, eta=0.1, epsilon=0.05) for p in analysis.maximizers
        ]
        n = 60
        rate = gcwm.ldp_tail_rate(params, n, bands)
        law = gcwm.exact_magnetization_law(params, n)
        outside = np.ones(n + 1, dtype=bool)
        for b in bands:
            outside &= ~b.level_mask(n)
        assert rate == pytest.approx(-math.log(law.probs()[outside].sum()) / n, abs=1e-9)

    def test_band_diameter_matches_region_bfs(self):
        from phasefkg import lattice

        n, kmin, kmax = 5, 2, 4
        states = tuple(
            SpinConfig.from_packed(m, n)
            for m in range(1 << n)
            if kmin <= bin(m).count("1") <= kmax
        )
        reg = Region(
            membership=lambda x: kmin <= sum(x.values) <= kmax, enumeration=states
        )
        assert gcwm.band_diameter(n, kmin, kmax) == lattice.intrinsic_diameter(reg)

    def test_single_level_band_diameter(self):
        assert gcwm.band_diameter(4, 0, 0) == 0.0
        assert gcwm.band_diameter(4, 4, 4) == 0.0
        assert gcwm.band_diameter(4, 2, 2) == INFINITE


class TestUpdateTables:
    def test_p0_table_matches_measure_conditionals(self):
        params = gcwm.GcwmParams(beta=(0.5, 1.5))
        n = 6
        table = gcwm.conditional_p0_table(params, n)
        mu = gcwm.phase_measure(params, n)
        rng = np.random.default_rng(3)
        for _ in range(20):
            x = SpinConfig.from_packed(int(rng.integers(0, 1 << n)), n)
            i = int(rng.integers(0, n))
            probs = engine.conditional_update_distribution(mu, x, i)
            k_other = sum(x.values) - x.values[i]
            assert table[k_other] == pytest.approx(probs[0], abs=1e-12)

    def test_tilted_table_matches_tilted_measure(self):
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        n = 6
        mu = gcwm.phase_measure(params, n)
        g_level = (np.arange(n + 1) / n).astype(np.float64)
        g = IncreasingFunction(
            evaluator=lambda x: sum(x.values) / n,
            sup_norm_bound=1.0,
            level_values=tuple(g_level),
        )
        tilt = engine.make_tilt(mu, g, eps=0.25)
        table = gcwm.tilted_conditional_p0_table(params, n, g_level, tilt.shift)
        rng = np.random.default_rng(4)
        for _ in range(20):
            x = SpinConfig.from_packed(int(rng.integers(0, 1 << n)), n)
            i = int(rng.integers(0, n))
            probs = engine.conditional_update_distribution(tilt.measure, x, i)
            k_other = sum(x.values) - x.values[i]
            assert table[k_other] == pytest.approx(probs[0], abs=1e-12)

    def test_tilted_table_validation(self):
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        with pytest.raises(ValueError):
            gcwm.tilted_conditional_p0_table(params, 4, np.zeros(3), 1.0)
        with pytest.raises(ValueError):
            gcwm.tilted_conditional_p0_table(params, 4, -np.ones(5), 0.5)


class TestWitness:
    def test_free_ferromagnet_is_nonnegative(self):
        params = gcwm.GcwmParams(beta=(0.0, 1.0))
        band = gcwm.PhaseBand(m_star=0.5, eta=0.5, epsilon=0.5)  # whole cube
        rep = gcwm.local_fkg_witness(params, 8, band)
        assert rep.min_log_ratio >= -1e-9
        assert rep.pairs_checked > 0

    def test_margin_safe_band_is_nonnegative(self):
        # bottom margin (eta - epsilon) n = 2 flips; top side flush at n
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        band = gcwm.PhaseBand(m_star=0.8439, eta=0.35, epsilon=0.1)
        rep = gcwm.local_fkg_witness(params, 8, band)
        assert rep.min_log_ratio >= -1e-9

    def test_thin_margin_exits_support(self):
        # (eta - epsilon) n < 2: meets/joins of inner-band pairs can leave
        # the band, which the witness reports as -inf rather than hiding
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        band = gcwm.PhaseBand(m_star=0.8439, eta=0.25, epsilon=0.15)
        rep = gcwm.local_fkg_witness(params, 8, band)
        assert rep.min_log_ratio == -INFINITE

    def test_witness_pair_is_reported(self):
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        band = gcwm.PhaseBand(m_star=0.8439, eta=0.35, epsilon=0.1)
        rep = gcwm.local_fkg_witness(params, 6, band)
        assert rep.witness_x is not None and rep.witness_y is not None

    def test_dimension_cap(self):
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        band = gcwm.PhaseBand(m_star=0.8, eta=0.4, epsilon=0.2)
        with pytest.raises(ValueError):
            gcwm.local_fkg_witness(params, 13, band)


class TestContraction:
    def test_kappa_tracks_map_derivative(self):
        # n(1 - alpha) estimates 1 - phi'(m*) for a band around a unique phase
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        analysis = gcwm.find_maximizers(params)
        m_star = analysis.attracting_maximizers[0].m
        kappa_theory = 1.0 - gcwm.phi_map_derivative(params, m_star)
        band = gcwm.PhaseBand(m_star=m_star, eta=0.1, epsilon=0.05)
        est = gcwm.contraction_alpha(params, 200, band, reps=20000, seed=5)
        half = (est.kappa_ci_high - est.kappa_ci_low) / 2
        assert abs(est.kappa_hat - kappa_theory) <= 3 * half + 0.05
        assert est.alpha_hat < 1.0

    def test_minimum_replica_count(self):
        params = gcwm.GcwmParams(beta=BETA_SINGLE)
        band = gcwm.PhaseBand(m_star=0.8439, eta=0.1, epsilon=0.05)
        with pytest.raises(ValueError):
            gcwm.contraction_alpha(params, 50, band, reps=10, seed=0)