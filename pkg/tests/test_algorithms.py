import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onlinesearch.algorithms import (
    Purchase,
    RunRecord,
    ThresholdStrategy,
    competitive_ratio,
    double_schedule,
    expected_ratio,
    graceful_bound,
    pad_schedule,
    predicted_length,
    ratios_for_all_T,
    run_double,
    run_predict_and_double,
    run_thresholds,
    threshold_schedule,
    truncate,
)
from onlinesearch.errors import InfeasibleError, ParameterError
from onlinesearch.optcurve import OfflineOracle, OptCurve, analytic_curve, near_doubling_curve

import oracles

DOUBLING = OptCurve([(1, 1), (2, 2), (3, 4), (4, 8)])
TWO_STEP = OptCurve([(1, 2), (2, 4)])
LINEAR200 = analytic_curve("linear", horizon=200)


def costs_strategy(max_len=40):
    jumps = st.lists(st.sampled_from([1.0, 1.0, 1.001, 1.3, 1.99, 2.0, 2.01, 3.0, 10.0]), max_size=max_len - 1)
    return st.tuples(st.sampled_from([1.0, 2.0, 7.5]), jumps).map(
        lambda sj: list(sj[0] * np.cumprod([1.0] + sj[1]))
    )


eps_strategy = st.sampled_from([0.05, 0.1, 0.2, 0.5, 1.0])


# DOUBLE


def test_double_step_through_example():
    r = run_double(DOUBLING, 2)
    assert r.total_cost == 3
    assert [(p.time, p.cost) for p in r.purchases] == [(1, 1), (2, 2)]
    assert competitive_ratio(r, DOUBLING) == 1.5


@settings(max_examples=200, deadline=None)
@given(costs_strategy())
def test_double_matches_replay_and_is_4_competitive(costs):
    c = OptCurve.from_dense(costs)
    ratios = ratios_for_all_T(double_schedule(c), c)
    for T in range(1, c.horizon + 1):
        r = run_double(c, T)
        total, purchases = oracles.replay_double(costs, T)
        assert r.total_cost == total
        assert [(p.time, p.covered) for p in r.purchases] == [(t, cv) for t, cv, _ in purchases]
        assert r.is_feasible()
        assert r.total_cost <= 4 * c.opt_at(T)
        assert ratios[T - 1] == pytest.approx(competitive_ratio(r, c), rel=1e-15)
    assert run_double(c, 1).total_cost < 2 * c.opt_at(1)


def test_double_near_tight():
    c = near_doubling_curve(10)
    assert max(ratios_for_all_T(double_schedule(c), c)) >= 3.9


def test_double_rejects_bad_T():
    with pytest.raises(ParameterError):
        run_double(DOUBLING, 0)
    with pytest.raises(ParameterError):
        run_double(DOUBLING, 5)


# PREDICT-AND-DOUBLE


def test_pad_consistency_example():
    r = run_predict_and_double(LINEAR200, 100, 100, 0.5)
    assert competitive_ratio(r, LINEAR200) <= 1.5


def test_pad_robustness_example():
    worst = max(ratios_for_all_T(pad_schedule(LINEAR200, 100, 0.5).purchases, LINEAR200))
    assert worst <= 5 * (1 + 1 / 0.5)


def test_pad_degenerate_prediction():
    r = run_predict_and_double(LINEAR200, 1, 1, 0.5)
    s = pad_schedule(LINEAR200, 1, 0.5)
    assert s.t1 == 1
    assert len(r.purchases) == 1
    assert competitive_ratio(r, LINEAR200) == LINEAR200.opt_at(s.t2) / LINEAR200.opt_at(1)


@settings(max_examples=200, deadline=None)
@given(costs_strategy(), eps_strategy, st.data())
def test_pad_matches_replay(costs, eps, data):
    c = OptCurve.from_dense(costs)
    T_hat = data.draw(st.integers(1, c.horizon))
    sched = pad_schedule(c, T_hat, eps).purchases
    for T in range(1, c.horizon + 1):
        total, purchases = oracles.replay_pad(costs, T, T_hat, eps)
        r = truncate(sched, T)
        assert r.total_cost == total
        assert [(p.time, p.covered) for p in r.purchases] == [(t, cv) for t, cv, _ in purchases]


@settings(max_examples=300, deadline=None)
@given(costs_strategy(), eps_strategy, st.data())
def test_pad_consistency_and_robustness_on_any_curve(costs, eps, data):
    # the phase-1 spend stays below (4 eps / 5) opt(T_hat) even with large jumps,
    # so these hold without any smoothness slack
    c = OptCurve.from_dense(costs)
    T_hat = data.draw(st.integers(1, c.horizon))
    ratios = ratios_for_all_T(pad_schedule(c, T_hat, eps).purchases, c)
    assert ratios[T_hat - 1] < 1 + eps
    assert ratios.max() <= 5 * (1 + 1 / eps)


@pytest.mark.parametrize("eps", [0.1, 0.2, 0.5, 1.0])
def test_graceful_profile_on_linear(eps):
    for T_hat in range(1, 201, 3):
        s = pad_schedule(LINEAR200, T_hat, eps)
        ratios = ratios_for_all_T(s.purchases, LINEAR200)
        bound = graceful_bound(LINEAR200, T_hat, eps)
        assert np.all(ratios <= bound * 1.01)
        mid = np.arange(s.t1, s.t2 + 1) - 1
        assert np.all(ratios[mid] <= (1 + eps) * T_hat / (mid + 1))


def test_pad_with_approximate_oracle_scales_costs():
    oracle = OfflineOracle(1.5, LINEAR200)
    exact = run_predict_and_double(LINEAR200, 120, 100, 0.2)
    approx = run_predict_and_double(LINEAR200, 120, 100, 0.2, oracle)
    assert approx.total_cost == pytest.approx(1.5 * exact.total_cost)


def test_oracle_for_other_curve_rejected():
    with pytest.raises(ParameterError):
        run_double(DOUBLING, 1, OfflineOracle(1.0, TWO_STEP))


# thresholds


def test_two_point_uniform_expected_ratio():
    buy_2_then_4 = ThresholdStrategy.from_covers([1, 2])
    assert expected_ratio(TWO_STEP, [(1, 0.5), (2, 0.5)], buy_2_then_4) == pytest.approx(1.25, abs=1e-15)


def test_buy_four_immediately():
    s = ThresholdStrategy.from_covers([2])
    assert competitive_ratio(run_thresholds(TWO_STEP, 1, s), TWO_STEP) == 2


def test_single_threshold_beyond_horizon():
    s = ThresholdStrategy((10,))
    for T in range(1, 5):
        r = run_thresholds(DOUBLING, T, s)
        assert competitive_ratio(r, DOUBLING) == DOUBLING.opt_at(4) / DOUBLING.opt_at(T)


def test_threshold_not_covering_T():
    with pytest.raises(InfeasibleError):
        run_thresholds(DOUBLING, 4, ThresholdStrategy((2, 3)))


def test_threshold_validation():
    with pytest.raises(ParameterError):
        ThresholdStrategy((1, 3))
    with pytest.raises(ParameterError):
        ThresholdStrategy((3, 3))
    with pytest.raises(ParameterError):
        ThresholdStrategy(())


@settings(max_examples=200, deadline=None)
@given(costs_strategy(20), st.data())
def test_thresholds_match_replay(costs, data):
    c = OptCurve.from_dense(costs)
    inner = data.draw(st.lists(st.integers(2, c.horizon + 1), unique=True))
    ts = tuple(sorted(set(inner) | {c.horizon + 1}))
    s = ThresholdStrategy(ts)
    for T in range(1, c.horizon + 1):
        assert run_thresholds(c, T, s).total_cost == oracles.replay_thresholds(costs, T, ts)


def test_mixture_expected_ratio():
    a = ThresholdStrategy.from_covers([1, 2])
    b = ThresholdStrategy.from_covers([2])
    law = [(1, 0.5), (2, 0.5)]
    mixed = expected_ratio(TWO_STEP, law, [(0.25, a), (0.75, b)])
    assert mixed == pytest.approx(0.25 * 1.25 + 0.75 * 1.5, abs=1e-15)
    with pytest.raises(ParameterError):
        expected_ratio(TWO_STEP, law, [(0.5, a), (0.4, b)])


# records and helpers


def test_run_record_invariants():
    r = run_double(DOUBLING, 3)
    assert r.total_cost == math.fsum(p.cost for p in r.purchases)
    assert r.is_feasible()
    doc = r.to_dict(DOUBLING)
    assert doc["T"] == 3 and doc["total"] == r.total_cost
    assert doc["cr"] == r.total_cost / 4
    assert doc["purchases"][0] == {"t": 1, "covered": 1, "cost": 1.0}


def test_gap_is_infeasible():
    r = RunRecord((Purchase(1, 1, 1.0), Purchase(3, 5, 2.0)), 4)
    assert not r.is_feasible()
    with pytest.raises(InfeasibleError):
        ratios_for_all_T(threshold_schedule(DOUBLING, ThresholdStrategy((2, 3))), DOUBLING)


def test_predicted_length():
    assert predicted_length(LINEAR200, math.log(50)) == 50
    assert predicted_length(TWO_STEP, math.log(3)) == 1
    assert predicted_length(TWO_STEP, math.log(4)) == 2
    assert predicted_length(TWO_STEP, 0.1) == 1
