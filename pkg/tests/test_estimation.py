import math

import numpy as np
import pytest

from lambdawf import estimation as est
from lambdawf import formulas as fm
from lambdawf.measures import BetaComponent, LambdaSpec, ModelParams
from lambdawf.reporting import CSV_HEADER


def kingman(d=1, c=1.0, theta=0.0, nu=()):
    return ModelParams(d=d, lam=LambdaSpec(kingman_mass=c), theta=theta, nu=nu)


def beta_params(d=1, alpha=1.5):
    return ModelParams(d=d, lam=LambdaSpec(beta=BetaComponent(alpha=alpha)))


class TestSeeds:
    def test_deterministic(self):
        assert est._child_seeds(3, "a", 4) == est._child_seeds(3, "a", 4)

    def test_labels_distinct(self):
        assert est._child_seeds(3, "a", 2) != est._child_seeds(3, "b", 2)

    def test_tuple_seed(self):
        a = est._child_seeds((3, "x"), "a", 2)
        b = est._child_seeds((3, "y"), "a", 2)
        assert a != b and a == est._child_seeds((3, "x"), "a", 2)


class TestCouponBatch:
    def test_matches_pmf(self):
        rng = est._rng_for(0, "coupon-test")
        v = est.sample_coupon_level_batch([0.5, 0.3], 1, 50_000, rng)
        for p in (2, 3, 4, 6):
            hit = float(np.mean(v == p))
            tgt = fm.coupon_pmf([0.5, 0.3], 1, p)
            se = math.sqrt(tgt * (1 - tgt) / v.size)
            assert abs(hit - tgt) < 4 * se

    def test_minimum_value(self):
        rng = est._rng_for(0, "coupon-min")
        v = est.sample_coupon_level_batch([0.4, 0.3], 2, 2000, rng)
        assert v.min() >= 3

    def test_undefined(self):
        rng = est._rng_for(0, "x")
        with pytest.raises(ValueError):
            est.sample_coupon_level_batch([1.0], 1, 10, rng)


class TestFixationTime:
    def test_kingman_mean(self):
        e, tail = est.estimate_fixation_time(kingman(), [0.5], 1, 20_000, 0)
        assert tail == 0.0
        assert abs(e.mean - 2 * math.log(2)) < 4 * e.stderr

    def test_kingman_d2(self):
        e, tail = est.estimate_fixation_time(
            kingman(d=2), [1 / 3, 1 / 3], 1, 20_000, 0
        )
        assert abs(e.mean - 4 * math.log(1.5)) < 4 * e.stderr

    def test_beta_mean(self):
        e, tail = est.estimate_fixation_time(
            beta_params(), [0.5], 1, 5000, 0, M=3000
        )
        tgt = fm.mean_fixation_beta([0.5], 1, 1.5)
        assert abs(e.mean - tgt) < 4 * e.stderr + tail

    def test_corner_zero(self):
        e, tail = est.estimate_fixation_time(kingman(), [1.0], 1, 100, 0)
        assert e.mean == 0.0 and tail == 0.0

    def test_theta_rejected(self):
        with pytest.raises(ValueError):
            est.estimate_fixation_time(
                kingman(theta=1.0, nu=(0.5,)), [0.5], 1, 10, 0
            )


class TestDisappearanceOrder:
    def test_levels_mode(self):
        orders = est.estimate_disappearance_order(
            kingman(d=2), [0.5, 0.3], 30_000, 0, mode="levels"
        )
        total = sum(e.mean for e in orders.values())
        assert total == pytest.approx(1.0)
        for order, e in orders.items():
            tgt = fm.disappearance_order_prob([0.5, 0.3], order)
            assert abs(e.mean - tgt) < 5 * max(e.stderr, 1e-9)

    def test_lookdown_mode(self):
        orders = est.estimate_disappearance_order(
            kingman(d=2), [0.5, 0.3], 400, 0, mode="lookdown", N=100
        )
        assert sum(e.mean for e in orders.values()) == pytest.approx(1.0)
        for order, e in orders.items():
            tgt = fm.disappearance_order_prob([0.5, 0.3], order)
            assert abs(e.mean - tgt) < 5 * max(e.stderr, 1e-9)

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            est.estimate_disappearance_order(kingman(), [0.5], 10, 0, mode="nope")


class TestStationaryTime:
    def test_unit_mean(self):
        p = kingman(c=2.0, theta=2.0, nu=(0.5,))
        e, leftover = est.estimate_stationary_time(p, 20_000, 0)
        assert leftover < 1e-5
        assert abs(e.mean - 1.0) < 4 * e.stderr + leftover

    def test_basel_mean(self):
        p = kingman(c=2.0, theta=1.0, nu=(0.5,))
        e, leftover = est.estimate_stationary_time(p, 20_000, 0)
        assert abs(e.mean - math.pi**2 / 6) < 4 * e.stderr + leftover

    def test_requires_theta(self):
        with pytest.raises(ValueError):
            est.estimate_stationary_time(kingman(), 10, 0)


class TestDuality:
    def test_kingman_report(self):
        rep = est.duality_check(kingman(), [0.5], (2,), 0.5, 3000, 0, N=100)
        assert rep.passed
        target = math.exp(-0.5) * 0.25 + (1 - math.exp(-0.5)) * 0.5
        assert abs(rep.estimate.mean - target) < 5 * rep.estimate.stderr

    def test_worker_invariance(self):
        args = (kingman(d=2), [[0.3, 0.3]], [0.5], 50, 64, 9)
        a = est.forward_frequency_samples(*args, workers=1)
        b = est.forward_frequency_samples(*args, workers=3)
        assert np.array_equal(a, b)

    def test_unsorted_times_rejected(self):
        with pytest.raises(ValueError):
            est.forward_frequency_samples(kingman(), [[0.5]], [1.0, 0.5], 10, 4, 0)


class TestFixlineRates:
    def test_kingman_levels(self):
        rates = est.estimate_fixline_rates(kingman(), 100, 1, 3, 600, 1)
        assert [n for n, _, _ in rates] == [1, 2, 3]
        for n, e, formula in rates:
            assert formula == pytest.approx(n * (n + 1) / 2)
            assert abs(e.mean - formula) < 5 * e.stderr

    def test_too_few_runs(self):
        with pytest.raises(ArithmeticError):
            est.estimate_fixline_rates(kingman(), 50, 1, 30, 1, 0)


class TestCoalescence:
    def test_exact_identity(self):
        res = est.coalescence_experiment(60, 0)
        assert res["checked"] + res["trivial"] <= res["runs"]
        assert res["checked"] > 0 and res["trivial"] > 0
        assert res["time_mismatch"] == 0
        assert res["order_violation"] == 0


class TestHeatmap:
    def test_grid_shape(self):
        rows = est.heatmap_grid("kingman", 1, 4)
        assert len(rows) == 5 * 6 // 2
        # corners carry a single type, so fixation is immediate
        vals = {(round(x1, 6), round(x2, 6)): v for x1, x2, v in rows}
        assert vals[(1.0, 0.0)] == 0.0
        assert vals[(0.0, 0.0)] == 0.0
        assert vals[(0.25, 0.5)] > 0.0

    def test_beta_matches_formula(self):
        rows = est.heatmap_grid("beta:1.5", 1, 2)
        vals = {(x1, x2): v for x1, x2, v in rows}
        assert vals[(0.5, 0.5)] == pytest.approx(
            fm.mean_fixation_beta([0.5, 0.5], 1, 1.5)
        )

    def test_csv(self, tmp_path):
        path = tmp_path / "grid.csv"
        est.write_heatmap_csv(est.heatmap_grid("kingman", 1, 2), str(path))
        lines = path.read_text().strip().split("\n")
        assert lines[0] == "x1,x2,value"
        assert len(lines) == 1 + 6

    def test_bad_measure(self):
        with pytest.raises(ValueError):
            est.heatmap_grid("gamma", 1, 2)


class TestSuitePlumbing:
    def test_unknown_suite(self):
        with pytest.raises(KeyError):
            est.run_suite("nope")

    def test_report_csv(self):
        rows, ok = est.run_suite("stationarity", seed=0, scale=0.02)
        text = est.report_csv(rows)
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == len(rows) + 1
        assert all(line.count(",") == 6 for line in lines[1:])
