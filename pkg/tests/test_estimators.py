import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from percolab.errors import DomainError, EnumerationGuardError
from percolab import exact
from percolab.estimators import (
    MCResult,
    dgrsy_cross_check,
    est_capacity,
    est_cluster_tail,
    est_disconnect_prob,
    est_Ir_prob,
    est_psi_sum,
    est_repulsion_tail,
    markov_lower_bound,
    run_reduce,
    verdict_lower,
    verdict_upper,
    wilson_interval,
    _kernel_disconnect,
)
from percolab.graph_core import ball, build_window


@pytest.fixture(scope="module")
def path3():
    return build_window("hypercubic", d=1, L=3)


@pytest.fixture(scope="module")
def path4():
    return build_window("hypercubic", d=1, L=4)


class TestWilson:
    def test_extremes(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == 0.0 and 0 < hi < 0.1
        lo, hi = wilson_interval(100, 100)
        assert hi == 1.0 and 0.9 < lo < 1.0

    def test_contains_phat(self):
        lo, hi = wilson_interval(37, 200)
        assert lo < 37 / 200 < hi

    def test_no_trials(self):
        assert wilson_interval(0, 0) == (0.0, 1.0)

    @given(successes=st.integers(0, 500), extra=st.integers(0, 500))
    @settings(max_examples=50, deadline=None)
    def test_bounds_property(self, successes, extra):
        trials = successes + extra
        if trials == 0:
            return
        lo, hi = wilson_interval(successes, trials)
        assert 0.0 <= lo <= successes / trials <= hi <= 1.0


class TestExactOracles:
    def test_disconnect_path3(self, path3):
        # S = {1} on 0-1-2: disconnected from the boundary iff both edges closed
        for p in (0.2, 0.5, 0.8):
            assert exact.exact_disconnect_prob(path3, [1], p) == pytest.approx(
                (1 - p) ** 2
            )

    def test_psi_sum_path5(self, path5):
        # S = {2}: head 1 reaches the boundary off S iff edge (0,1) is open,
        # symmetrically for head 3, so the sum is 2p
        for p in (0.3, 0.6):
            assert exact.exact_psi_sum(path5, [2], p) == pytest.approx(2 * p)

    def test_cluster_size_dist_normalizes(self, path4):
        dist, p_inf = exact.exact_cluster_size_dist(path4, 1, 0.4)
        assert sum(dist.values()) + p_inf == pytest.approx(1.0)
        # finite K_1 cannot contain the boundary vertices 0 or 3
        assert set(dist) <= {1, 2}

    def test_cluster_size_dist_path3(self, path3):
        p = 0.3
        dist, p_inf = exact.exact_cluster_size_dist(path3, 1, p)
        # K_1 finite iff both edges closed
        assert dist == {1: pytest.approx((1 - p) ** 2)}
        assert p_inf == pytest.approx(1 - (1 - p) ** 2)

    def test_edge_count_dist(self, path3):
        dist = exact.exact_edge_count_dist(path3, 1, 0.5)
        # |E(K_1)| = 2 whenever K_1 = {1}; opening any edge still touches 2
        # window edges for the merged cluster
        assert sum(dist.values()) == pytest.approx(1.0)
        assert dist == {2: pytest.approx(1.0)}

    def test_ir_prob_path5(self, path5):
        # two disjoint paths from {2} need both sides fully open
        p = 0.6
        assert exact.exact_Ir_prob(path5, [2], p, 1) == pytest.approx(p**4)
        # one path: either side fully open
        assert exact.exact_Ir_prob(path5, [2], p, 0) == pytest.approx(
            2 * p**2 - p**4
        )

    def test_repulsion_tail_monotone(self, path4):
        tail = exact.exact_repulsion_tail(path4, 1, 0.4, 0.6, 3)
        values = [tail[n] for n in range(4)]
        assert values == sorted(values, reverse=True)
        assert tail[0] == pytest.approx(
            sum(exact.exact_cluster_size_dist(path4, 1, 0.6)[0].values())
        )

    def test_conditional_law_tv_tiny(self, path4):
        assert exact.conditional_law_tv(path4, 0.45, 0.7) < 1e-10

    def test_guards(self, grid5):
        with pytest.raises(EnumerationGuardError):
            next(exact.iter_configs(grid5, 0.5))
        with pytest.raises(EnumerationGuardError):
            next(exact.iter_coupling_states(grid5, 0.4, 0.6))

    def test_config_weights_sum(self, path3):
        total = sum(prob for _, prob in exact.iter_configs(path3, 0.37))
        assert total == pytest.approx(1.0)
        total = sum(prob for _, _, prob in exact.iter_coupling_states(path3, 0.3, 0.6))
        assert total == pytest.approx(1.0)


class TestExactWalks:
    def test_escape_path3(self, path3):
        # S = {1}: both neighbors are boundary, escape is certain
        esc = exact.exact_escape_probabilities(path3, [1])
        assert esc[1] == pytest.approx(1.0)
        assert exact.exact_capacity(path3, [1]) == pytest.approx(2.0)

    def test_escape_path5(self, path5):
        # S = {2}: h(1) = 1/2 (gambler's ruin between boundary 0 and S), so
        # escape = (h(1) + h(3)) / 2 = 1/2 and Cap = 2 * 1/2 = 1
        esc = exact.exact_escape_probabilities(path5, [2])
        assert esc[2] == pytest.approx(0.5)
        assert exact.exact_capacity(path5, [2]) == pytest.approx(1.0)

    def test_rejects_boundary_s(self, path5):
        with pytest.raises(DomainError):
            exact.exact_escape_probabilities(path5, [0])


class TestEstimatorsAgainstOracles:
    SAMPLES = 20000

    def test_disconnect(self, path4):
        target = exact.exact_disconnect_prob(path4, [1, 2], 0.45)
        mc = est_disconnect_prob(path4, [1, 2], 0.45, self.SAMPLES, seed=21)
        assert mc.ci_low <= target <= mc.ci_high

    def test_psi_sum(self, path5):
        target = exact.exact_psi_sum(path5, [2], 0.55)
        mc = est_psi_sum(path5, [2], 0.55, self.SAMPLES, seed=22)
        assert mc.ci_low <= target <= mc.ci_high

    def test_cluster_tail(self, path4):
        dist, p_inf = exact.exact_cluster_size_dist(path4, 1, 0.5)
        tail, ek, finite = est_cluster_tail(
            path4, 1, 0.5, [1, 2], self.SAMPLES, seed=23, ek_grid=[2, 3]
        )
        assert finite.ci_low <= 1 - p_inf <= finite.ci_high
        for n, mc in tail.items():
            target = sum(q for k, q in dist.items() if k >= n)
            assert mc.ci_low <= target <= mc.ci_high
        ek_dist = exact.exact_edge_count_dist(path4, 1, 0.5)
        for n, mc in ek.items():
            assert mc.ci_low <= ek_dist.get(n, 0.0) <= mc.ci_high

    def test_repulsion_tail(self, path4):
        exact_tail = exact.exact_repulsion_tail(path4, 1, 0.4, 0.6, 2)
        per_n = est_repulsion_tail(path4, 1, 0.4, 0.6, [1, 2], self.SAMPLES, seed=24)
        for n, mc in per_n.items():
            assert mc.ci_low <= exact_tail[n] <= mc.ci_high

    def test_repulsion_rejects_bad_pair(self, path4):
        with pytest.raises(DomainError):
            est_repulsion_tail(path4, 1, 0.6, 0.4, [1], 10, seed=0)

    def test_ir_prob(self, path5):
        target = exact.exact_Ir_prob(path5, [2], 0.6, 1)
        mc = est_Ir_prob(path5, [2], 0.6, 1, self.SAMPLES, seed=25)
        assert mc.ci_low <= target <= mc.ci_high
        with pytest.raises(DomainError):
            est_Ir_prob(path5, [2], 0.6, -1, 10, seed=0)

    def test_capacity_against_linear_solve(self):
        w = build_window("hypercubic", d=2, L=9)
        S = ball(w, w.center_vertex(), 1)
        target = exact.exact_capacity(w, S)
        mc = est_capacity(w, S, walkers=20000, max_steps=100000, seed=26)
        assert mc.ci_low <= target <= mc.ci_high

    def test_capacity_rejects_boundary(self, path5):
        with pytest.raises(DomainError):
            est_capacity(path5, [0], walkers=10, max_steps=10, seed=0)


class TestRunReduce:
    def test_worker_count_invariance(self, path4):
        params = {"p": 0.5, "S": (1,)}
        t1 = run_reduce(_kernel_disconnect, path4, params, 5, 2000, workers=1)
        t3 = run_reduce(_kernel_disconnect, path4, params, 5, 2000, workers=3)
        assert np.array_equal(t1, t3)

    def test_rejects_zero_samples(self, path4):
        with pytest.raises(DomainError):
            run_reduce(_kernel_disconnect, path4, {"p": 0.5, "S": (1,)}, 0, 0)

    def test_margin_warning(self):
        w = build_window("hypercubic", d=2, L=9)
        near_edge = est_disconnect_prob(w, [1], 0.5, 100, seed=0)
        assert any("margin" in msg for msg in near_edge.warnings)
        centered = est_disconnect_prob(w, [w.center_vertex()], 0.5, 100, seed=0)
        assert centered.warnings == ()


class TestMarkov:
    def test_value(self):
        assert markov_lower_bound(4.0, 10.0, 0.5) == pytest.approx(0.2)

    def test_rejects_bad_args(self):
        with pytest.raises(DomainError):
            markov_lower_bound(4.0, 10.0, 1.5)
        with pytest.raises(DomainError):
            markov_lower_bound(-1.0, 10.0, 0.5)
        with pytest.raises(DomainError):
            markov_lower_bound(4.0, 0.0, 0.5)

    @given(
        weights=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=6),
        theta=st.floats(0.05, 0.95),
    )
    @settings(max_examples=100, deadline=None)
    def test_bound_holds_exactly(self, weights, theta):
        support = np.arange(len(weights), dtype=float)
        w = np.array(weights) / sum(weights)
        M = float(support[-1]) if support[-1] > 0 else 1.0
        mean = float(np.dot(support, w))
        p_exceed = float(w[support > theta * mean].sum())
        assert p_exceed >= markov_lower_bound(mean, M, theta) - 1e-12


class TestVerdicts:
    def _mc(self, estimate, lo, hi):
        return MCResult(estimate, lo, hi, 1000, None, 0)

    def test_upper(self):
        assert verdict_upper("t", 0.5, self._mc(0.3, 0.25, 0.35)).verdict == "consistent"
        assert verdict_upper("t", 0.2, self._mc(0.3, 0.25, 0.35)).verdict == "violated"
        assert verdict_upper("t", 1.2, self._mc(0.3, 0.25, 0.35)).verdict == "vacuous"

    def test_lower(self):
        assert verdict_lower("t", 0.2, self._mc(0.3, 0.25, 0.35)).verdict == "consistent"
        assert verdict_lower("t", 0.4, self._mc(0.3, 0.25, 0.35)).verdict == "violated"
        assert verdict_lower("t", -0.1, self._mc(0.3, 0.25, 0.35)).verdict == "vacuous"

    def test_dgrsy_caveat_low_dimension(self):
        w = build_window("hypercubic", d=2, L=7)
        vd = dgrsy_cross_check(
            w, ball(w, w.center_vertex(), 1), 0.7, 500, seed=1, walkers=500
        )
        assert "d=2" in vd.caveat
        assert vd.check == "dgrsy"
