import math

import numpy as np
import pytest
from scipy.stats import ks_2samp

from lambdawf.fixation_line import (
    ExplosionSample,
    FixationLinePath,
    beta_jump_cdf,
    explosion_times_beta,
    explosion_times_kingman,
    inverse_time,
    sample_explosion,
    simulate_path,
    tail_mean_bound,
    visited_levels,
)
from lambdawf.measures import BetaComponent, LambdaSpec, ModelParams

KINGMAN = ModelParams(d=1, lam=LambdaSpec(kingman_mass=1.0))
BETA15 = ModelParams(d=1, lam=LambdaSpec(beta=BetaComponent(alpha=1.5)))


class TestPathTypes:
    def test_invariants_enforced(self):
        with pytest.raises(ValueError):
            FixationLinePath(1, np.array([1.0, 0.5]), np.array([2, 3]), 10)
        with pytest.raises(ValueError):
            FixationLinePath(1, np.array([0.5, 1.0]), np.array([3, 2]), 10)
        with pytest.raises(ValueError):
            ExplosionSample(elapsed=1.0, tail_bound=0.1, exact=True)
        ExplosionSample(elapsed=1.0, tail_bound=0.0, exact=True)

    def test_level_at(self):
        path = FixationLinePath(1, np.array([0.5, 1.0]), np.array([2, 5]), 10)
        assert path.level_at(0.0) == 1
        assert path.level_at(0.7) == 2
        assert path.level_at(2.0) == 5


class TestSimulatePath:
    def test_zero_measure_never_jumps(self):
        params = ModelParams(d=1, lam=LambdaSpec())
        path = simulate_path(params, 1, 100, 0)
        assert path.times.size == 0

    def test_cap_validation(self):
        with pytest.raises(ValueError):
            simulate_path(KINGMAN, 5, 5, 0)

    def test_kingman_only_unit_jumps(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            path = simulate_path(KINGMAN, 1, 50, rng)
            assert np.array_equal(path.levels, np.arange(2, 51))

    def test_kingman_occupation_means(self):
        rng = np.random.default_rng(2)
        hold = np.zeros(4)
        reps = 3000
        for _ in range(reps):
            path = simulate_path(KINGMAN, 1, 6, rng)
            t = np.concatenate([[0.0], path.times])
            hold += np.diff(t)[:4]
        hold /= reps
        for i, n in enumerate(range(1, 5)):
            mean = 1.0 / math.comb(n + 1, 2)
            se = mean / math.sqrt(reps)
            assert abs(hold[i] - mean) < 4 * se

    def test_beta_first_jump_size_law(self):
        # P(jump size is 1) = alpha/2, independent of the level
        from lambdawf.fixation_line import _sample_jump_size

        rng = np.random.default_rng(3)
        reps = 20000
        for level in (1, 7):
            ones = sum(
                _sample_jump_size(BETA15, level, 10**9, rng) == 1
                for _ in range(reps)
            )
            p = ones / reps
            se = math.sqrt(0.75 * 0.25 / reps)
            assert abs(p - 0.75) < 4 * se

    def test_jump_cdf_normalisation(self):
        for alpha in (1.2, 1.5, 1.8):
            cdf = beta_jump_cdf(alpha, 10000)
            assert cdf[-1] == 1.0
            assert cdf[0] == pytest.approx(alpha / 2.0, rel=1e-12)
            assert 1.0 - cdf[-2] < 1e-4


class TestInverseTime:
    def test_trivial(self):
        path = FixationLinePath(3, np.array([1.7]), np.array([5]), 10)
        assert inverse_time(path, 3) == 0.0
        assert inverse_time(path, 2) == 0.0
        assert inverse_time(path, 4) == 1.7
        assert inverse_time(path, 5) == 1.7
        with pytest.raises(ValueError):
            inverse_time(path, 11)

    def test_kingman_mean_inverse(self):
        rng = np.random.default_rng(4)
        reps = 4000
        acc = 0.0
        for _ in range(reps):
            acc += inverse_time(simulate_path(KINGMAN, 1, 10, rng), 3)
        mean = acc / reps
        target = 1.0 + 1.0 / 3.0
        assert abs(mean - target) < 4 * 1.1 / math.sqrt(reps)


class TestVisitedLevels:
    def test_kingman_full_range(self):
        assert visited_levels(KINGMAN, 2, 30, 0) == set(range(2, 31))

    def test_beta_renewal_hit_probability(self):
        # probability that the range contains start+1 equals alpha/2
        rng = np.random.default_rng(5)
        reps = 8000
        hits = 0
        for _ in range(reps):
            path = simulate_path(BETA15, 1, 40, rng)
            if 2 in set(path.levels.tolist()):
                hits += 1
        p = hits / reps
        se = math.sqrt(0.75 * 0.25 / reps)
        assert abs(p - 0.75) < 4 * se


class TestExplosion:
    def test_requires_coming_down(self):
        params = ModelParams(d=1, lam=LambdaSpec(atoms=((0.5, 1.0),)))
        with pytest.raises(ValueError):
            sample_explosion(params, 1, 100, 0)

    def test_kingman_batch_means(self):
        rng = np.random.default_rng(6)
        for c in (1.0, 2.0):
            for p in (1, 2, 5, 10):
                reps = 20000
                times, err = explosion_times_kingman(
                    c, 0.0, np.full(reps, p), 2000, rng
                )
                assert err == 0.0
                target = 2.0 / (c * p)
                z = (times.mean() - target) / (times.std(ddof=1) / math.sqrt(reps))
                assert abs(z) < 4

    def test_kingman_mixed_start_levels(self):
        rng = np.random.default_rng(7)
        start = np.concatenate([np.full(4000, 1), np.full(4000, 5)])
        times, _ = explosion_times_kingman(1.0, 0.0, start, 2000, rng)
        for p, sl in ((1, slice(0, 4000)), (5, slice(4000, 8000))):
            seg = times[sl]
            z = (seg.mean() - 2.0 / p) / (seg.std(ddof=1) / math.sqrt(seg.size))
            assert abs(z) < 4

    def test_beta_batch_mean(self):
        times, tail = explosion_times_beta(1.5, 1.0, np.full(20000, 1), 10**4, 8)
        se = times.std(ddof=1) / math.sqrt(times.size)
        assert 0.0 < tail < 1e-1
        # truncated mean lies in [2.25 - tail, 2.25]
        assert times.mean() < 2.25 + 4 * se
        assert times.mean() > 2.25 - tail - 4 * se

    def test_tail_bound_is_true_upper_bound(self):
        # enlarging M tenfold moves the compensated mean by less than the bound
        reps = 10000
        t1, tail1 = explosion_times_beta(1.5, 1.0, np.full(reps, 1), 10**3, 9)
        t2, tail2 = explosion_times_beta(1.5, 1.0, np.full(reps, 1), 10**4, 10)
        assert tail2 < tail1
        assert abs((t2.mean() + tail2) - (t1.mean() + tail1)) < tail1

    def test_stochastic_dominance_in_start_level(self):
        # explosion from a higher level is stochastically smaller
        t1, _ = explosion_times_beta(1.5, 1.0, np.full(10000, 1), 10**3, 11)
        t3, _ = explosion_times_beta(1.5, 1.0, np.full(10000, 3), 10**3, 12)
        stat = ks_2samp(t1, t3, alternative="greater")
        assert np.median(t3) < np.median(t1)
        assert ks_2samp(t1, t3).pvalue < 1e-3

    def test_sample_explosion_generic_matches_kingman(self):
        rng = np.random.default_rng(13)
        reps = 1500
        acc = np.empty(reps)
        for i in range(reps):
            s = sample_explosion(KINGMAN, 2, 500, rng)
            assert s.tail_bound > 0.0
            acc[i] = s.elapsed + s.tail_bound
        z = (acc.mean() - 1.0) / (acc.std(ddof=1) / math.sqrt(reps))
        assert abs(z) < 4


class TestTailMeanBound:
    def test_kingman_closed_form(self):
        params = ModelParams(d=1, lam=LambdaSpec(kingman_mass=2.0))
        assert tail_mean_bound(params, 1000) == pytest.approx(
            2.0 / (2.0 * 1000), rel=1e-3
        )

    def test_beta_level_cut(self):
        bound = tail_mean_bound(BETA15, 10**4)
        # analytic size: ~ alpha Gamma(alpha) / ((alpha-1) M^(alpha-1))
        approx = 1.5 * math.gamma(1.5) / (0.5 * (10**4) ** 0.5)
        assert 0.5 * approx < bound < 2.0 * approx

    def test_monotone_in_m(self):
        assert tail_mean_bound(BETA15, 2000) < tail_mean_bound(BETA15, 1000)
