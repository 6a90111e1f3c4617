import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dmcmle.engine import Params, SufficientStats, Theta, forward_generate
from dmcmle.estimation import (
    Estimate,
    ThetaEnsemble,
    averaged_estimate,
    covers,
    em_estimate,
    estimate_all,
    max_likelihood_select,
    responsibilities,
    wald_ci,
)
from dmcmle.reconstruction import DeconstructionResult, exhaustive, random_sequences
from tests.conftest import graph_from_rows


def _res(w, x, y, n, order=None, tag="t"):
    from dmcmle.engine import loglik_at_mle

    s = SufficientStats(w, x, y, n)
    order = order or tuple(range(n))
    return DeconstructionResult(Theta(order, tuple(order[:1] * (n - 1))), s, loglik_at_mle(s), tag)


def _objective(ens, q_m, q_c):
    w, x, y = ens.count_arrays()
    n = ens.n
    f = q_c ** w * (1 - q_c) ** (n - 1 - w) * q_m ** (y - x) * (1 - q_m) ** x
    return math.log(f.sum())


def test_max_select_first_wins_ties():
    a = _res(1, 1, 2, 3, (0, 1, 2))
    b = _res(1, 1, 2, 3, (2, 1, 0))
    est = max_likelihood_select(ThetaEnsemble([a, b], "x"))
    assert est.result is a
    assert (est.q_m_hat, est.q_c_hat) == (0.5, 0.5)


def test_ensemble_rejects_mixed_sizes_and_empty():
    with pytest.raises(ValueError):
        ThetaEnsemble([])
    with pytest.raises(ValueError):
        ThetaEnsemble([_res(0, 0, 0, 3), _res(0, 0, 0, 4)])


def test_distinct_drops_repeated_histories():
    a = _res(1, 1, 2, 3, (0, 1, 2))
    ens = ThetaEnsemble([a, a, _res(0, 0, 1, 3, (1, 0, 2))])
    assert len(ens.distinct()) == 2


@given(st.lists(st.floats(-700, 0), min_size=1, max_size=20), st.floats(-500, 500))
def test_responsibilities_normalised_and_shift_invariant(ll, shift):
    r = responsibilities(ll)
    assert r.sum() == pytest.approx(1.0)
    assert np.allclose(r, responsibilities(np.array(ll) + shift), atol=1e-12)


def test_responsibilities_all_zero():
    with pytest.raises(ValueError):
        responsibilities([-np.inf, -np.inf])


def test_em_reaches_ensemble_maximum_on_path():
    # all 18 histories of the four-node path form the ensemble
    g = graph_from_rows("0100/1010/0101/0010")
    ens = ThetaEnsemble(exhaustive(g), "exhaustive")
    est = em_estimate(ens, init=Params(0.5, 0.5))
    axis = np.linspace(0.0005, 0.9995, 400)
    grid_best = max(_objective(ens, m, c) for m in axis for c in axis)
    assert _objective(ens, est.q_m_hat, est.q_c_hat) >= grid_best - 1e-6
    assert est.info["violations"] == []


@given(st.integers(4, 9), st.floats(0.1, 0.9), st.floats(0.1, 0.9), st.integers(0, 2**31))
@settings(max_examples=25, deadline=None)
def test_em_objective_never_decreases(n, q_m, q_c, seed):
    g, _ = forward_generate(n, Params(q_m, q_c), seed)
    ens = ThetaEnsemble(random_sequences(g, 30, seed), "random")
    est = em_estimate(ens, check_monotone=True)
    obj = est.info["objective"]
    assert len(obj) >= 2


def test_em_interior_init_objective_monotone_strictly_checked():
    g, _ = forward_generate(7, Params(0.4, 0.6), 3)
    ens = ThetaEnsemble(exhaustive(g), "exhaustive")
    est = em_estimate(ens, init=Params(0.2, 0.2))
    obj = np.array(est.info["objective"])
    assert np.all(np.diff(obj) >= -1e-10 * np.abs(obj[:-1]))


def test_averaged_matches_exact_fractions():
    g = graph_from_rows("0100/1010/0101/0010")
    ens = ThetaEnsemble(exhaustive(g), "exhaustive")
    at = Params(1 / 3, 2 / 3)
    est = averaged_estimate(ens, at=at)
    m, c = Fraction(1, 3), Fraction(2, 3)
    num_w = num_x = num_y = tot = Fraction(0)
    seen = set()
    for r in ens.results:
        key = (r.theta.arrival_order, r.theta.anchors)
        if key in seen:
            continue
        seen.add(key)
        s = r.stats
        f = c ** s.w * (1 - c) ** (s.n - 1 - s.w) * m ** (s.y - s.x) * (1 - m) ** s.x
        tot += f
        num_w += f * s.w
        num_x += f * s.x
        num_y += f * s.y
    want_c = num_w / tot / 3
    want_m = 1 - num_x / num_y
    assert est.q_c_hat == pytest.approx(float(want_c), rel=1e-13)
    assert est.q_m_hat == pytest.approx(float(want_m), rel=1e-13)


def test_wald_interval_formula_and_clamp():
    s = SufficientStats(w=3, x=8, y=10, n=5)
    est = wald_ci(Estimate(0.2, 0.75, 0.0), s)
    half_m = 1.96 * math.sqrt(0.2 * 0.8 / 10)
    half_c = 1.96 * math.sqrt(0.75 * 0.25 / 4)
    assert est.ci_m == pytest.approx((0.2 - half_m, 0.2 + half_m))
    assert est.ci_c == pytest.approx((0.75 - half_c, 0.75 + half_c))
    assert est.ci_c[1] > 1.0  # raw bounds are kept
    assert est.clamped_ci()[1][1] == 1.0
    assert covers(est.ci_c, 0.5) is True
    assert covers(None, 0.5) is None


def test_wald_interval_missing_q_m():
    est = wald_ci(Estimate(None, 0.5, 0.0), SufficientStats(2, 0, 0, 5))
    assert est.ci_m is None and est.ci_c is not None


def test_estimate_all_singleton_ensemble():
    g, theta = forward_generate(12, Params(0.3, 0.5), 0)
    from dmcmle.reconstruction import true_theta

    ests = estimate_all(ThetaEnsemble([true_theta(g, theta)], "t"))
    assert ests["em"].q_m_hat == ests["max"].q_m_hat
    assert ests["ave"].q_c_hat == ests["max"].q_c_hat
    assert ests["max"].ci_c is not None
    assert ests["em"].ci_c is None
