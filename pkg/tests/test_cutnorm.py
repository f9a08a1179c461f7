"""Cut distance between edge configurations and constant graphons."""

import numpy as np
import pytest

from phasefkg import cutnorm
from phasefkg.graphs import (
    GraphConfig,
    complete_graph_config,
    empty_graph_config,
    gnp_config,
)


def brute_cut_distance(x, p):
    """Double loop over ordered subset pairs (S, T); no column-sum shortcut."""
    n = x.n
    a = np.zeros((n, n))
    for (u, v) in x.edge_list():
        a[u, v] = a[v, u] = 1.0
    best = 0.0
    for s_mask in range(1 << n):
        s = [u for u in range(n) if (s_mask >> u) & 1]
        for t_mask in range(1 << n):
            t = [v for v in range(n) if (t_mask >> v) & 1]
            e_st = sum(a[u, v] for u in s for v in t)
            best = max(best, abs(e_st - p * len(s) * len(t)))
    return best / (n * n)


class TestExactCutDistance:
    def test_matches_brute_force_on_random_graphs(self):
        rng = np.random.default_rng(10)
        for _ in range(6):
            x = gnp_config(5, 0.5, rng)
            p = float(rng.uniform(0.1, 0.9))
            assert cutnorm.exact_cut_distance(x, p) == pytest.approx(
                brute_cut_distance(x, p), abs=1e-12
            )

    def test_empty_graph(self):
        # best subsets are everything: p * n^2 / n^2
        for n in (4, 6):
            x = empty_graph_config(n)
            assert cutnorm.exact_cut_distance(x, 0.3) == pytest.approx(0.3, abs=1e-12)

    def test_complete_graph_approaches_constant_one(self):
        # missing diagonal only: e(V, V) = n(n-1), so distance 1/n at p = 1
        for n in (5, 8, 10):
            x = complete_graph_config(n)
            assert cutnorm.exact_cut_distance(x, 1.0) == pytest.approx(1.0 / n, abs=1e-12)

    def test_complement_symmetry_within_diagonal_slack(self):
        # graphon(x) + graphon(complement) = 1 off the diagonal; the diagonal
        # contributes at most 1/n to either side
        rng = np.random.default_rng(11)
        full = (1 << 15) - 1
        for _ in range(6):
            x = gnp_config(6, 0.5, rng)
            xc = GraphConfig(6, x.edge_mask ^ full)
            p = float(rng.uniform(0.2, 0.8))
            d = cutnorm.exact_cut_distance(x, p)
            dc = cutnorm.exact_cut_distance(xc, 1.0 - p)
            assert abs(d - dc) <= 1.0 / 6 + 1e-12

    def test_rejects_oversized_instance(self):
        with pytest.raises(ValueError):
            cutnorm.exact_cut_distance(empty_graph_config(17), 0.5)


class TestGreedyLowerBound:
    def test_never_exceeds_exact(self):
        rng = np.random.default_rng(12)
        for _ in range(8):
            x = gnp_config(7, 0.4, rng)
            p = float(rng.uniform(0.1, 0.9))
            exact = cutnorm.exact_cut_distance(x, p)
            greedy = cutnorm.greedy_cut_lower_bound(x, p, restarts=16, rng=rng)
            assert greedy <= exact + 1e-12

    def test_usually_tight_on_small_instances(self):
        rng = np.random.default_rng(13)
        x = gnp_config(8, 0.5, rng)
        exact = cutnorm.exact_cut_distance(x, 0.5)
        greedy = cutnorm.greedy_cut_lower_bound(x, 0.5, restarts=64, rng=rng)
        assert greedy == pytest.approx(exact, rel=0.05)


class TestDispatch:
    def test_small_instances_exact(self):
        res = cutnorm.cut_distance_to_constant(complete_graph_config(6), 0.5)
        assert res.mode == "EXACT"
        assert res.value == res.upper_bound

    def test_large_instances_labeled_lower_bound(self):
        rng = np.random.default_rng(14)
        x = gnp_config(14, 0.5, rng)
        res = cutnorm.cut_distance_to_constant(x, 0.3, rng=rng)
        assert res.mode == "LOWER_BOUND"
        assert res.value <= res.upper_bound == 0.7

    def test_rejects_bad_level(self):
        with pytest.raises(ValueError):
            cutnorm.cut_distance_to_constant(empty_graph_config(4), 1.2)


class TestAllStatesTable:
    def test_matches_pointwise_evaluation(self):
        n, p = 4, 0.45
        table = cutnorm.all_states_cut_distance(n, p)
        assert len(table) == 1 << 6
        rng = np.random.default_rng(15)
        for mask in rng.integers(0, 1 << 6, size=12):
            x = GraphConfig(n, int(mask))
            assert table[mask] == pytest.approx(cutnorm.exact_cut_distance(x, p), abs=1e-12)

    def test_rejects_large_n(self):
        with pytest.raises(ValueError):
            cutnorm.all_states_cut_distance(7, 0.5)


class TestTracker:
    def test_tracks_flips_exactly(self):
        n, p = 6, 0.5
        rng = np.random.default_rng(16)
        tracker = cutnorm.CutNormTracker(n, p)
        mask = 0
        for _ in range(40):
            e = int(rng.integers(0, n * (n - 1) // 2))
            tracker.flip(e)
            mask ^= 1 << e
            assert tracker.edge_mask == mask
            direct = cutnorm.exact_cut_distance(GraphConfig(n, mask), p)
            assert tracker.value() == pytest.approx(direct, abs=1e-12)

    def test_initial_mask_and_set_edge(self):
        n, p = 5, 0.4
        mask = 0b1010011
        tracker = cutnorm.CutNormTracker(n, p, edge_mask=mask)
        assert tracker.value() == pytest.approx(
            cutnorm.exact_cut_distance(GraphConfig(n, mask), p), abs=1e-12
        )
        tracker.set_edge(0, 1)  # already set: no-op
        assert tracker.edge_mask == mask
        tracker.set_edge(2, 1)
        assert tracker.edge_mask == mask | 0b100

    def test_in_ball_threshold(self):
        tracker = cutnorm.CutNormTracker(5, 0.5, edge_mask=0)
        v = tracker.value()
        assert tracker.in_ball(v + 1e-9)
        assert not tracker.in_ball(v - 1e-9)

    def test_rejects_large_n(self):
        with pytest.raises(ValueError):
            cutnorm.CutNormTracker(13, 0.5)