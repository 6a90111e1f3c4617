import json
import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import kendalltau

from dmcmle.engine import Params, Theta, deconstruct, forward_generate
from dmcmle.evaluation import (
    ExperimentPlan,
    _replay_order,
    default_grid,
    format_rmse_table,
    kendall_tau,
    lenient_order,
    rmse_table,
    run_experiment,
    shuffle_labels,
    strict_order,
    true_order,
    worst_case_rmse,
    write_records_csv,
    write_summary_json,
)


@given(st.permutations(list(range(12))), st.permutations(list(range(12))))
def test_kendall_tau_matches_scipy(a, b):
    t = {i: r for i, r in enumerate(a)}
    e = {i: r for i, r in enumerate(b)}
    want = kendalltau(a, b).statistic
    assert kendall_tau(t, e) == pytest.approx(want, abs=1e-12)
    assert kendall_tau(e, t) == pytest.approx(want, abs=1e-12)


def test_kendall_tau_extremes_and_errors():
    t = {u: u for u in range(5)}
    assert kendall_tau(t, t) == 1.0
    assert kendall_tau(t, {u: 5 - u for u in range(5)}) == -1.0
    assert math.isnan(kendall_tau({0: 1}, {0: 1}))
    with pytest.raises(ValueError):
        kendall_tau(t, {u: u for u in range(1, 6)})
    with pytest.raises(ValueError):
        kendall_tau(t, {u: 1 for u in range(5)})


def test_true_theta_lenient_is_exact():
    for seed in range(20):
        g, theta = forward_generate(30, Params(0.5, 0.5), seed)
        truth = true_order(theta)
        assert kendall_tau(truth, lenient_order(theta, truth)) == 1.0


def test_lenient_reversed_history_on_three_nodes():
    # truth 0 < 1 < 2; estimate claims 0 arrived last, anchored on 1, after 2
    truth = {0: 1, 1: 2, 2: 3}
    est = Theta((1, 2, 0), (1, 1))
    assert kendall_tau(truth, lenient_order(est, truth)) == pytest.approx(1 / 3)


def test_strict_order_monte_carlo_matches_enumeration():
    truth = {0: 1, 1: 2, 2: 3}
    theta = Theta((0, 1, 2), (0, 1))
    exact = []
    for coins in product([0, 1], repeat=2):
        it = iter(coins)
        order = _replay_order(theta, lambda a, b: (a, b) if next(it) else (b, a))
        exact.append(kendall_tau(truth, order))
    want = float(np.mean(exact))
    rng = np.random.default_rng(0)
    got = np.mean([kendall_tau(truth, strict_order(theta, rng)) for _ in range(4000)])
    assert abs(got - want) < 0.03


@given(st.integers(2, 25), st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_orders_are_permutations_of_ranks(n, seed):
    g, theta = forward_generate(n, Params(0.4, 0.4), seed)
    truth = true_order(theta)
    for order in (strict_order(theta, seed), lenient_order(theta, truth)):
        assert sorted(order) == sorted(truth)
        assert sorted(order.values()) == list(range(1, n + 1))


def test_shuffle_labels_preserves_statistics():
    g, theta = forward_generate(20, Params(0.3, 0.7), 1)
    g2, theta2 = shuffle_labels(g, theta, 5)
    assert deconstruct(g, theta) == deconstruct(g2, theta2)
    assert theta2.arrival_order != theta.arrival_order


def test_worst_case_rmse():
    assert worst_case_rmse() == pytest.approx(0.739, abs=5e-4)


def test_default_grid_is_interior():
    grid = default_grid()
    assert len(grid) == 100
    assert all(p.is_interior() for p in grid)


def test_plan_validation():
    with pytest.raises(ValueError):
        ExperimentPlan([10], ["bogus"])
    with pytest.raises(ValueError):
        ExperimentPlan([10], ["minimize_y"], param_grid=[Params(0.0, 0.5)])


def _small_plan(**kw):
    grid = [Params(0.3, 0.4), Params(0.6, 0.7)]
    return ExperimentPlan([6, 9], ["true_theta", "minimize_y", "exhaustive", "uniform_rv"],
                          param_grid=grid, seed=3, replicates=2, **kw)


def test_experiment_reproducible_and_tables(tmp_path):
    recs_a, summ_a = run_experiment(_small_plan())
    recs_b, _ = run_experiment(_small_plan())
    strip = lambda rs: [(r.method, r.q_m_max, r.q_c_max, r.tau_strict) for r in rs]
    assert strip(recs_a) == strip(recs_b)
    assert len(recs_a) == 2 * 2 * 2 * 4
    na = [r for r in recs_a if r.status == "n/a"]
    assert {(r.method, r.size) for r in na} == {("exhaustive", 9)}
    table = rmse_table(recs_a)
    assert 9 not in table["exhaustive"] and 6 in table["exhaustive"]
    text = format_rmse_table(summ_a)
    assert "minimize_y" in text and "N/A" in text
    write_records_csv(recs_a, tmp_path / "r.csv")
    write_summary_json(summ_a, tmp_path / "s.json")
    assert json.loads((tmp_path / "s.json").read_text())


def test_experiment_parallel_matches_serial():
    serial, _ = run_experiment(_small_plan())
    parallel, _ = run_experiment(_small_plan(threads=2))
    key = lambda r: (r.size, r.grid_index, r.replicate, r.method)
    a = {key(r): (r.q_m_max, r.q_c_max, r.tau_strict) for r in serial}
    b = {key(r): (r.q_m_max, r.q_c_max, r.tau_strict) for r in parallel}
    assert a == b
