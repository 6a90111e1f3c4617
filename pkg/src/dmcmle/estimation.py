"""Estimators that pool one or many candidate histories.

All ensemble computations run in log space.  The ``1/(n!(n-1)!)`` prior on
histories is dropped throughout since it cancels in every ratio below.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import logsumexp

from .engine import Params, SufficientStats, log_likelihood, log_likelihood_array
from .reconstruction import DeconstructionResult

Z95 = 1.96


class EMMonotonicityError(AssertionError):
    """The ensemble-restricted EM objective decreased between iterations."""


@dataclass
class Estimate:
    q_m_hat: float | None
    q_c_hat: float | None
    log_likelihood: float
    method_tag: str = ""
    ci_m: tuple[float, float] | None = None
    ci_c: tuple[float, float] | None = None
    result: DeconstructionResult | None = None
    info: dict = field(default_factory=dict)

    @property
    def params(self) -> Params:
        return Params(self.q_m_hat, self.q_c_hat)

    def clamped_ci(self):
        """Intervals clipped to [0, 1] for display; raw bounds stay on the object."""
        def clip(ci):
            return None if ci is None else (max(ci[0], 0.0), min(ci[1], 1.0))
        return clip(self.ci_m), clip(self.ci_c)


@dataclass
class ThetaEnsemble:
    results: list[DeconstructionResult]
    source: str = ""

    def __post_init__(self):
        if not self.results:
            raise ValueError("ensemble is empty")
        ns = {r.stats.n for r in self.results}
        if len(ns) != 1:
            raise ValueError(f"ensemble mixes graphs of sizes {sorted(ns)}")

    @property
    def n(self) -> int:
        return self.results[0].stats.n

    def distinct(self) -> list[DeconstructionResult]:
        """Results with repeated histories dropped, first occurrence kept."""
        seen = set()
        out = []
        for r in self.results:
            key = (r.theta.arrival_order, r.theta.anchors)
            if key not in seen:
                seen.add(key)
                out.append(r)
        return out

    def count_arrays(self):
        rs = self.distinct()
        w = np.array([r.stats.w for r in rs], dtype=np.float64)
        x = np.array([r.stats.x for r in rs], dtype=np.float64)
        y = np.array([r.stats.y for r in rs], dtype=np.float64)
        return w, x, y


def max_likelihood_select(ens: ThetaEnsemble) -> Estimate:
    """MLE at the history with the largest profile likelihood (first wins ties)."""
    best = ens.results[0]
    for r in ens.results[1:]:
        if r.log_likelihood_at_mle > best.log_likelihood_at_mle:
            best = r
    q_m, q_c = best.q_hat
    return Estimate(q_m, q_c, best.log_likelihood_at_mle, f"{ens.source}:max", result=best)


def _weighted_update(w, x, y, n, resp):
    sy = float(resp @ y)
    q_m = None if sy == 0.0 else 1.0 - float(resp @ x) / sy
    q_c = float(resp @ w) / (n - 1)
    # ratios of nonnegative weights can stray past [0, 1] by an ulp
    if q_m is not None:
        q_m = min(max(q_m, 0.0), 1.0)
    return q_m, min(max(q_c, 0.0), 1.0)


def responsibilities(log_weights) -> np.ndarray:
    """Normalised weights ``exp(l - logsumexp(l))``; invariant to shifting ``l``."""
    log_weights = np.asarray(log_weights, dtype=np.float64)
    total = logsumexp(log_weights)
    if not np.isfinite(total):
        raise ValueError("all weights are zero")
    return np.exp(log_weights - total)


def _log_weights(w, x, y, n, params: Params):
    ll = log_likelihood_array(w, x, y, n, params)
    total = logsumexp(ll)
    if not np.isfinite(total):
        raise ValueError(f"every history has zero likelihood at {params}")
    return ll, total


def em_estimate(ens: ThetaEnsemble, init: Params | None = None, tol: float = 1e-8,
                max_iter: int = 500, check_monotone: bool = True) -> Estimate:
    """EM over the histories in ``ens`` treated as the whole latent space.

    E-step: responsibilities proportional to each history's complete-data
    likelihood at the current parameters.  M-step::

        q_c = sum r W / (n - 1)
        q_m = 1 - sum r X / sum r Y

    Starts from the ensemble's maximum-likelihood estimate unless ``init`` is
    given.  The observed objective ``log sum_z f(G, z; q)`` is recorded in
    ``info["objective"]`` and must never decrease.
    """
    n = ens.n
    if n < 2:
        ml = max_likelihood_select(ens)
        return replace(ml, method_tag=f"{ens.source}:em", info={"iterations": 0, "objective": []})
    if init is None:
        ml = max_likelihood_select(ens)
        init = Params(ml.q_m_hat, ml.q_c_hat)
    w, x, y = ens.count_arrays()
    q = init
    objective = []
    q_m_defined = []
    iterations = 0
    for iterations in range(1, max_iter + 1):
        ll, total = _log_weights(w, x, y, n, q)
        objective.append(float(total))
        q_m_defined.append(q.q_m is not None)
        q_m, q_c = _weighted_update(w, x, y, n, responsibilities(ll))
        if (q_m is None) != (q.q_m is None):
            delta = math.inf
        else:
            delta = max(abs(q_c - q.q_c), 0.0 if q_m is None else abs(q_m - q.q_m))
        q = Params(q_m, q_c)
        if delta < tol:
            break
    ll, total = _log_weights(w, x, y, n, q)
    objective.append(float(total))
    q_m_defined.append(q.q_m is not None)
    violations = _monotone_violations(objective, q_m_defined)
    if check_monotone and violations:
        raise EMMonotonicityError(f"EM objective decreased at iterations {violations}: {objective}")
    info = {"iterations": iterations, "objective": objective, "violations": violations,
            "init": init}
    best = int(np.argmax(ll))
    return Estimate(q.q_m, q.q_c, float(ll[best]), f"{ens.source}:em",
                    result=ens.distinct()[best], info=info)


def _monotone_violations(objective, q_m_defined, rel_tol=1e-10):
    # objectives with and without the q_m factor are different functions;
    # only compare consecutive iterates of the same kind
    bad = []
    for k in range(1, len(objective)):
        if q_m_defined[k] != q_m_defined[k - 1]:
            continue
        prev, cur = objective[k - 1], objective[k]
        if cur < prev - rel_tol * max(1.0, abs(prev)):
            bad.append(k)
    return bad


def averaged_estimate(ens: ThetaEnsemble, at: Params | None = None) -> Estimate:
    """Likelihood-weighted average of the per-history counts.

    Weights are each history's likelihood at ``at`` (by default the
    ensemble's maximum-likelihood estimate).
    """
    n = ens.n
    if at is None:
        ml = max_likelihood_select(ens)
        if n < 2:
            return replace(ml, method_tag=f"{ens.source}:ave")
        at = Params(ml.q_m_hat, ml.q_c_hat)
    w, x, y = ens.count_arrays()
    ll, _ = _log_weights(w, x, y, n, at)
    q_m, q_c = _weighted_update(w, x, y, n, responsibilities(ll))
    ll_new = log_likelihood_array(w, x, y, n, Params(q_m, q_c))
    best = int(np.argmax(ll_new))
    return Estimate(q_m, q_c, float(ll_new[best]), f"{ens.source}:ave",
                    result=ens.distinct()[best], info={"at": at})


def wald_ci(est: Estimate, stats: SufficientStats) -> Estimate:
    """Attach 95% Wald intervals treating every Bernoulli trial as independent.

    Bounds are stored unclamped; see :meth:`Estimate.clamped_ci`.
    """
    ci_c = None
    if est.q_c_hat is not None and stats.n > 1:
        half = Z95 * math.sqrt(est.q_c_hat * (1.0 - est.q_c_hat) / (stats.n - 1))
        ci_c = (est.q_c_hat - half, est.q_c_hat + half)
    ci_m = None
    if est.q_m_hat is not None and stats.y > 0:
        half = Z95 * math.sqrt(est.q_m_hat * (1.0 - est.q_m_hat) / stats.y)
        ci_m = (est.q_m_hat - half, est.q_m_hat + half)
    return replace(est, ci_m=ci_m, ci_c=ci_c)


def covers(ci: tuple[float, float] | None, truth: float) -> bool | None:
    if ci is None:
        return None
    return ci[0] <= truth <= ci[1]


def estimate_all(ens: ThetaEnsemble, check_monotone: bool = True) -> dict[str, Estimate]:
    """Max (with intervals), EM and averaged estimates for one ensemble."""
    ml = max_likelihood_select(ens)
    ml = wald_ci(ml, ml.result.stats)
    if len(ens.distinct()) == 1:
        return {"max": ml, "em": replace(ml, method_tag=f"{ens.source}:em", ci_m=None, ci_c=None),
                "ave": replace(ml, method_tag=f"{ens.source}:ave", ci_m=None, ci_c=None)}
    return {"max": ml, "em": em_estimate(ens, check_monotone=check_monotone),
            "ave": averaged_estimate(ens)}


def true_log_likelihood(stats: SufficientStats, truth: Params) -> float:
    return log_likelihood(stats, truth)
