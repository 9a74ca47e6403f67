import math

import numpy as np
import pytest

from lambdawf.dual import (
    CEMETERY,
    dual_moment,
    dual_rates,
    duality_h,
    simulate_dual,
)
from lambdawf.measures import BetaComponent, LambdaSpec, ModelParams


def kingman(d=1, c=1.0, theta=0.0, nu=None):
    return ModelParams(
        d=d,
        lam=LambdaSpec(kingman_mass=c),
        theta=theta,
        nu=nu if nu is not None else (),
    )


class TestRates:
    def test_within_type_merge(self):
        moves = dict(dual_rates(kingman(), (2,)))
        assert moves == {(1,): pytest.approx(1.0)}

    def test_cross_type_kill(self):
        moves = dict(dual_rates(kingman(d=2), (1, 1)))
        assert moves == {CEMETERY: pytest.approx(1.0)}

    def test_mutation_split(self):
        params = ModelParams(d=1, lam=LambdaSpec(), theta=1.0, nu=(0.6,))
        moves = dict(dual_rates(params, (2,)))
        assert moves[(1,)] == pytest.approx(1.2)
        assert moves[CEMETERY] == pytest.approx(0.8)

    def test_cemetery_empty(self):
        assert dual_rates(kingman(), CEMETERY) == []

    def test_multi_merger_split(self):
        from lambdawf.measures import lambda_rate

        spec = LambdaSpec(beta=BetaComponent(alpha=1.5))
        params = ModelParams(d=2, lam=spec)
        moves = dict(dual_rates(params, (2, 1)))
        lam32 = lambda_rate(spec, 3, 2)
        lam33 = lambda_rate(spec, 3, 3)
        assert moves[(1, 1)] == pytest.approx(lam32)
        # total multi-merger rate among 3 blocks: 3 pairs + 1 triple
        assert moves[CEMETERY] == pytest.approx(2.0 * lam32 + lam33)

    def test_total_outflow_closed_form(self):
        spec = LambdaSpec(
            kingman_mass=0.7,
            beta=BetaComponent(alpha=1.4, scale=0.9),
            atoms=((0.3, 0.2),),
        )
        params = ModelParams(d=2, lam=spec, theta=0.6, nu=(0.3, 0.4))
        from lambdawf.dual import _multi_merger_total

        for n in [(2, 1), (3, 0), (1, 1), (4, 3)]:
            m = sum(n)
            total = sum(rate for _, rate in dual_rates(params, n))
            expected = (
                0.7 * math.comb(m, 2) + _multi_merger_total(params, m) + 0.6 * m
            )
            assert total == pytest.approx(expected, rel=1e-10)

    def test_block_count_nonincreasing(self):
        spec = LambdaSpec(kingman_mass=1.0, beta=BetaComponent(alpha=1.5))
        params = ModelParams(d=2, lam=spec, theta=0.5, nu=(0.3, 0.3))
        for n in [(3, 2), (1, 4)]:
            for tgt, rate in dual_rates(params, n):
                assert rate > 0
                if tgt != CEMETERY:
                    assert sum(tgt) < sum(n)

    def test_validation(self):
        with pytest.raises(ValueError):
            dual_rates(kingman(), (-1,))
        with pytest.raises(ValueError):
            dual_rates(kingman(d=2), (1,))


class TestSimulate:
    def test_zero_state_frozen(self):
        assert simulate_dual(kingman(d=2), (0, 0), 10.0, 0) == (0, 0)

    def test_cemetery_absorbing(self):
        assert simulate_dual(kingman(), CEMETERY, 5.0, 0) == CEMETERY

    def test_single_exponential_decay(self):
        rng = np.random.default_rng(1)
        reps = 5000
        still = sum(
            simulate_dual(kingman(), (2,), 1.0, rng) == (2,) for _ in range(reps)
        )
        p = still / reps
        target = math.exp(-1.0)
        assert abs(p - target) < 4 * math.sqrt(target * (1 - target) / reps)


class TestMoment:
    def test_h_values(self):
        assert duality_h([0.5], CEMETERY) == 0.0
        assert duality_h([0.5], (0,)) == 1.0
        assert duality_h([0.3, 0.4], (2, 1)) == pytest.approx(0.09 * 0.4)

    def test_t0_exact(self):
        est = dual_moment(kingman(), [0.5], (3,), 0.0, 10, 0)
        assert est.mean == 0.125 and est.stderr == 0.0

    def test_corner_survival(self):
        est = dual_moment(kingman(), [1.0], (2,), 2.0, 200, 0)
        assert est.mean == 1.0

    def test_two_state_exact_value(self):
        target = math.exp(-1.0) * 0.25 + (1 - math.exp(-1.0)) * 0.5
        est = dual_moment(kingman(), [0.5], (2,), 1.0, 20000, 1)
        assert abs(est.mean - target) < 4 * est.stderr
        lo, hi = est.ci95
        assert lo < target < hi
