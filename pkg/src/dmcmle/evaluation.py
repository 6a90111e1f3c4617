"""Arrival-order scoring and the Monte Carlo experiment harness.

The harness grows one DMC graph per (size, grid point, replicate), runs each
deconstruction method on it and stores one :class:`ExperimentRecord` per
(graph, method).  Every summary table is a pure function of the records.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .engine import Params, Theta, forward_generate, log_likelihood
from .estimation import ThetaEnsemble, covers, estimate_all
from .graph import Graph
from .reconstruction import (
    DEFAULT_EXHAUSTIVE_CAP,
    NkConfig,
    exhaustive,
    minimize_y,
    minimize_y_then_nk,
    nk_greedy,
    nk_grid_search,
    random_sequences,
    true_new_random_anchor,
    true_theta,
)

log = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# arrival orders and Kendall's tau

ArrivalOrder = dict  # node id -> arrival rank, 1 = oldest


def true_order(theta: Theta) -> ArrivalOrder:
    return {u: i + 1 for i, u in enumerate(theta.arrival_order)}


def _replay_order(theta: Theta, pick_removed) -> ArrivalOrder:
    # labels in theta refer to whichever real node survived the earlier
    # merges, so track label -> current real node
    alias = {u: u for u in theta.arrival_order}
    ranks = {}
    n = theta.n
    for step, (new, anchor) in enumerate(theta.removal_pairs()):
        a, b = alias.pop(new), alias[anchor]
        removed, kept = pick_removed(a, b)
        ranks[removed] = n - step
        alias[anchor] = kept
    if n:
        ranks[alias[theta.arrival_order[0]]] = 1
    return ranks


def strict_order(theta_est: Theta, seed=None) -> ArrivalOrder:
    """Arrival ranks when the removed member of each pair is a fair coin flip."""
    rng = np.random.default_rng(seed)

    def pick(a, b):
        return (a, b) if rng.random() < 0.5 else (b, a)

    return _replay_order(theta_est, pick)


def lenient_order(theta_est: Theta, truth: ArrivalOrder) -> ArrivalOrder:
    """Arrival ranks when the truly newer member of each pair is removed."""
    def pick(a, b):
        return (a, b) if truth[a] > truth[b] else (b, a)

    return _replay_order(theta_est, pick)


def kendall_tau(true_ranks: ArrivalOrder, est_ranks: ArrivalOrder) -> float:
    """(concordant - discordant) / C(n, 2) for two tie-free rankings."""
    if set(true_ranks) != set(est_ranks):
        raise ValueError("rankings cover different node sets")
    nodes = list(true_ranks)
    n = len(nodes)
    if n < 2:
        return float("nan")
    t = np.array([true_ranks[u] for u in nodes], dtype=np.float64)
    e = np.array([est_ranks[u] for u in nodes], dtype=np.float64)
    if len(np.unique(t)) != n or len(np.unique(e)) != n:
        raise ValueError("rankings must not contain ties")
    iu = np.triu_indices(n, 1)
    s = np.sign(t[:, None] - t[None, :])[iu] * np.sign(e[:, None] - e[None, :])[iu]
    return float(s.sum()) / (n * (n - 1) / 2)


# ---------------------------------------------------------------------------
# methods


METHODS = (
    "true_theta",
    "true_new_random_anchor",
    "nk_true_initial",
    "exhaustive",
    "nk",
    "nk_plus_1",
    "minimize_y",
    "minimize_y_then_nk",
    "random_1",
    "random_100",
    "uniform_rv",
)

# default size limits: exhaustive up to 8 nodes, NK variants up to 100
DEFAULT_MAX_NODES = {"exhaustive": DEFAULT_EXHAUSTIVE_CAP, "nk": 100, "nk_plus_1": 100}


def run_method(method: str, g: Graph, theta: Theta, truth: Params, rng,
               exhaustive_cap: int = DEFAULT_EXHAUSTIVE_CAP):
    """Histories produced by ``method`` on ``g`` (``None`` for uniform_rv)."""
    if method == "true_theta":
        return [true_theta(g, theta)]
    if method == "true_new_random_anchor":
        return [true_new_random_anchor(g, theta, rng)]
    if method == "nk_true_initial":
        return [nk_greedy(g, truth, rng, tag="nk_true_initial")]
    if method == "exhaustive":
        return exhaustive(g, exhaustive_cap)
    if method == "nk":
        return nk_grid_search(g, NkConfig(), rng).visited
    if method == "nk_plus_1":
        return nk_grid_search(g, NkConfig(extra_rounds=1), rng).visited
    if method == "minimize_y":
        return [minimize_y(g, rng)]
    if method == "minimize_y_then_nk":
        return minimize_y_then_nk(g, rng).visited
    if method == "random_1":
        return random_sequences(g, 1, rng)
    if method == "random_100":
        return random_sequences(g, 100, rng)
    if method == "uniform_rv":
        return None
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# harness


def default_grid(k: int = 11) -> list[Params]:
    vals = [i / k for i in range(1, k)]
    return [Params(a, b) for a in vals for b in vals]


@dataclass
class ExperimentPlan:
    node_sizes: list[int]
    methods: list[str]
    param_grid: list[Params] = field(default_factory=default_grid)
    seed: int = 0
    replicates: int = 1
    threads: int = 1
    max_nodes: dict = field(default_factory=lambda: dict(DEFAULT_MAX_NODES))
    exhaustive_cap: int = DEFAULT_EXHAUSTIVE_CAP

    def __post_init__(self):
        for p in self.param_grid:
            if p.q_m is None or not p.is_interior():
                raise ValueError(f"grid point {p} is not interior to (0, 1)^2")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ValueError(f"unknown methods {sorted(unknown)}")


@dataclass
class ExperimentRecord:
    size: int
    grid_index: int
    replicate: int
    q_m_true: float
    q_c_true: float
    method: str
    status: str = "ok"
    q_m_max: float | None = None
    q_c_max: float | None = None
    q_m_em: float | None = None
    q_c_em: float | None = None
    q_m_ave: float | None = None
    q_c_ave: float | None = None
    ci_m_lo: float | None = None
    ci_m_hi: float | None = None
    ci_c_lo: float | None = None
    ci_c_hi: float | None = None
    cover_m: bool | None = None
    cover_c: bool | None = None
    tau_strict: float | None = None
    tau_lenient: float | None = None
    loglik_est: float | None = None
    loglik_true: float | None = None
    n_thetas: int = 0
    em_iterations: int = 0
    em_violations: int = 0
    wall_time: float = 0.0


RECORD_FIELDS = [f.name for f in fields(ExperimentRecord)]


def shuffle_labels(g: Graph, theta: Theta, seed=None) -> tuple[Graph, Theta]:
    """Relabel nodes by a random permutation.

    Generated ids follow arrival order; any deterministic tie-break over ids
    would otherwise leak the true history into the estimates.
    """
    rng = np.random.default_rng(seed)
    perm = [int(u) for u in rng.permutation(g.nodes())]
    new_id = {u: i for i, u in enumerate(perm)}
    return (g.induced_subgraph(perm),
            Theta(tuple(new_id[u] for u in theta.arrival_order),
                  tuple(new_id[u] for u in theta.anchors)))


def _task_seed(master: int, size: int, index: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master, spawn_key=(size, index, rep))


def run_replicate(plan: ExperimentPlan, size: int, index: int, rep: int) -> list[ExperimentRecord]:
    """Grow one graph and score every method of the plan on it."""
    truth = plan.param_grid[index]
    ss = _task_seed(plan.seed, size, index, rep)
    graph_ss, label_ss, *method_ss = ss.spawn(2 + len(METHODS))
    g, theta = shuffle_labels(*forward_generate(size, truth, graph_ss), label_ss)
    true_stats = true_theta(g, theta).stats
    ll_true = log_likelihood(true_stats, truth)
    truth_ranks = true_order(theta)
    out = []
    for method in plan.methods:
        rec = ExperimentRecord(size, index, rep, truth.q_m, truth.q_c, method, loglik_true=ll_true)
        limit = plan.max_nodes.get(method)
        if limit is not None and size > limit:
            rec.status = "n/a"
            out.append(rec)
            continue
        rng = np.random.default_rng(method_ss[METHODS.index(method)])
        t0 = time.perf_counter()
        results = run_method(method, g, theta, truth, rng, plan.exhaustive_cap)
        if results is None:
            rec.q_m_max, rec.q_c_max = float(rng.random()), float(rng.random())
            rec.q_m_em, rec.q_c_em = rec.q_m_max, rec.q_c_max
            rec.q_m_ave, rec.q_c_ave = rec.q_m_max, rec.q_c_max
            rec.wall_time = time.perf_counter() - t0
            out.append(rec)
            continue
        # violations are recorded rather than raised so one bad run cannot
        # hide the rest of the table
        ests = estimate_all(ThetaEnsemble(results, method), check_monotone=False)
        rec.wall_time = time.perf_counter() - t0
        ml, em, ave = ests["max"], ests["em"], ests["ave"]
        rec.n_thetas = len(results)
        rec.q_m_max, rec.q_c_max = ml.q_m_hat, ml.q_c_hat
        rec.q_m_em, rec.q_c_em = em.q_m_hat, em.q_c_hat
        rec.q_m_ave, rec.q_c_ave = ave.q_m_hat, ave.q_c_hat
        rec.em_iterations = em.info.get("iterations", 0)
        rec.em_violations = len(em.info.get("violations", []))
        if ml.ci_m is not None:
            rec.ci_m_lo, rec.ci_m_hi = ml.ci_m
        if ml.ci_c is not None:
            rec.ci_c_lo, rec.ci_c_hi = ml.ci_c
        rec.cover_m = covers(ml.ci_m, truth.q_m)
        rec.cover_c = covers(ml.ci_c, truth.q_c)
        rec.loglik_est = ml.log_likelihood
        est_theta = ml.result.theta
        rec.tau_strict = kendall_tau(truth_ranks, strict_order(est_theta, rng))
        rec.tau_lenient = kendall_tau(truth_ranks, lenient_order(est_theta, truth_ranks))
        out.append(rec)
    return out


def _run_task(args):
    return run_replicate(*args)


def run_experiment(plan: ExperimentPlan) -> tuple[list[ExperimentRecord], dict]:
    """All records of ``plan`` plus the summary tables built from them."""
    tasks = [(plan, size, i, rep)
             for size in plan.node_sizes
             for i in range(len(plan.param_grid))
             for rep in range(plan.replicates)]
    t0 = time.perf_counter()
    records: list[ExperimentRecord] = []
    if not plan.methods:
        tasks = []
    if plan.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=plan.threads) as pool:
            for recs in pool.map(_run_task, tasks, chunksize=1):
                records.extend(recs)
    else:
        for t in tasks:
            records.extend(_run_task(t))
    log.info("experiment finished: %d records in %.1fs", len(records), time.perf_counter() - t0)
    return records, summarize(records, threads=plan.threads)


# ---------------------------------------------------------------------------
# summary tables (pure views over records)


def worst_case_rmse(grid_values=None) -> float:
    """RMSE of always guessing the far boundary (1 if q <= 0.5 else 0)."""
    vals = [i / 11 for i in range(1, 11)] if grid_values is None else list(grid_values)
    err = [(1.0 - q) if q <= 0.5 else q for q in vals]
    return math.sqrt(sum(e * e for e in err) / len(err))


def _groups(records):
    out: dict[tuple[str, int], list[ExperimentRecord]] = {}
    for r in records:
        if r.status == "ok":
            out.setdefault((r.method, r.size), []).append(r)
    return out


def _rmse(pairs):
    pairs = [(e, t) for e, t in pairs if e is not None]
    if not pairs:
        return None
    return math.sqrt(sum((e - t) ** 2 for e, t in pairs) / len(pairs))


def _mean(vals):
    vals = [v for v in vals if v is not None and not (isinstance(v, float) and math.isnan(v))]
    return sum(vals) / len(vals) if vals else None


def rmse_table(records, estimator: str = "max") -> dict:
    out = {}
    for (method, size), rs in _groups(records).items():
        out.setdefault(method, {})[size] = {
            "q_m": _rmse((getattr(r, f"q_m_{estimator}"), r.q_m_true) for r in rs),
            "q_c": _rmse((getattr(r, f"q_c_{estimator}"), r.q_c_true) for r in rs),
            "n": len(rs),
            "q_m_missing": sum(getattr(r, f"q_m_{estimator}") is None for r in rs),
        }
    return out


def overfit_table(records) -> dict:
    """Missing q_m, boundary q_m, boundary q_c and log-likelihood bias counts."""
    out = {}
    for (method, size), rs in _groups(records).items():
        if method == "uniform_rv":
            continue
        pairs = [(r.loglik_est, r.loglik_true) for r in rs
                 if r.loglik_est is not None and math.isfinite(r.loglik_est)
                 and math.isfinite(r.loglik_true)]
        bias = None
        if pairs:
            bias = sum(p[0] for p in pairs) / len(pairs) - sum(p[1] for p in pairs) / len(pairs)
        out.setdefault(method, {})[size] = {
            "q_m_missing": sum(r.q_m_max is None for r in rs),
            "q_m_boundary": sum(r.q_m_max in (0.0, 1.0) for r in rs),
            "q_c_boundary": sum(r.q_c_max in (0.0, 1.0) for r in rs),
            "loglik_bias": bias,
            "loglik_excluded": len(rs) - len(pairs),
        }
    return out


def coverage_table(records) -> dict:
    out = {}
    for (method, size), rs in _groups(records).items():
        if method == "uniform_rv":
            continue
        cm = [r.cover_m for r in rs if r.cover_m is not None]
        cc = [r.cover_c for r in rs if r.cover_c is not None]
        out.setdefault(method, {})[size] = {
            "q_m": sum(cm) / len(cm) if cm else None,
            "q_c": sum(cc) / len(cc) if cc else None,
            "q_m_excluded": len(rs) - len(cm),
            "q_c_excluded": len(rs) - len(cc),
        }
    return out


def tau_table(records) -> dict:
    out = {}
    for (method, size), rs in _groups(records).items():
        if method == "uniform_rv":
            continue
        out.setdefault(method, {})[size] = {
            "strict": _mean(r.tau_strict for r in rs),
            "lenient": _mean(r.tau_lenient for r in rs),
        }
    return out


def duration_table(records, threads: int = 1) -> dict:
    out = {}
    for (method, size), rs in _groups(records).items():
        out.setdefault(method, {})[size] = {
            "hours": sum(r.wall_time for r in rs) / 3600.0,
            "graphs": len(rs),
            "threads": threads,
        }
    return out


def summarize(records, threads: int = 1) -> dict:
    return {
        "rmse_max": rmse_table(records, "max"),
        "rmse_em": rmse_table(records, "em"),
        "rmse_ave": rmse_table(records, "ave"),
        "overfit": overfit_table(records),
        "coverage": coverage_table(records),
        "tau": tau_table(records),
        "duration": duration_table(records, threads),
        "worst_case_rmse": worst_case_rmse(),
        "notes": {
            "loglik_bias": "mean estimated minus mean true log-likelihood; "
                           "rows with -inf on either side are excluded and counted",
            "coverage": "raw (unclamped) Wald bounds; replicates without an interval are "
                        "excluded and counted",
            "q_c_boundary": "count of q_c estimates equal to 0 or 1",
        },
    }


def format_rmse_table(summary: dict, estimator: str = "max") -> str:
    table = summary[f"rmse_{estimator}"]
    sizes = sorted({s for m in table.values() for s in m})
    lines = [f"{'method':<24}" + "".join(f"{f'{s} q_m':>10}{f'{s} q_c':>10}" for s in sizes)]
    for method in METHODS:
        if method not in table:
            continue
        row = f"{method:<24}"
        for s in sizes:
            cell = table[method].get(s)
            for key in ("q_m", "q_c"):
                v = None if cell is None else cell[key]
                row += f"{'N/A' if v is None else f'{v:.3f}':>10}"
        lines.append(row)
    lines.append(f"worst possible RMSE: {summary['worst_case_rmse']:.3f}")
    return "\n".join(lines)


def write_records_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
        writer.writeheader()
        for r in records:
            row = asdict(r)
            writer.writerow({k: ("" if v is None else v) for k, v in row.items()})


def write_summary_json(summary: dict, path) -> None:
    def keyfix(obj):
        if isinstance(obj, dict):
            return {str(k): keyfix(v) for k, v in obj.items()}
        if isinstance(obj, float) and not math.isfinite(obj):
            return None
        return obj

    with open(path, "w") as fh:
        json.dump(keyfix(summary), fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# log-likelihood surface


def surface_graphs(n: int = 100, seed=0) -> list[tuple[Graph, Theta, Params]]:
    """The four graphs with (q_m, q_c) in {1/3, 2/3}^2."""
    ss = np.random.SeedSequence(seed).spawn(4)
    grid = [Params(a, b) for a in (1 / 3, 2 / 3) for b in (1 / 3, 2 / 3)]
    return [(*forward_generate(n, p, s), p) for p, s in zip(grid, ss)]


def loglik_surface(graphs, methods, seed=0) -> list[dict]:
    """One (q_m_hat, q_c_hat, log-likelihood) point per graph and method."""
    out = []
    for gi, (g, theta, truth) in enumerate(graphs):
        for method in methods:
            rng = np.random.default_rng([seed, gi, METHODS.index(method)])
            try:
                results = run_method(method, g, theta, truth, rng)
            except ValueError as exc:
                log.warning("surface: %s failed on graph %d: %s", method, gi, exc)
                continue
            if results is None:
                continue
            ml = estimate_all(ThetaEnsemble(results, method))["max"]
            out.append({"graph": gi, "q_m_true": truth.q_m, "q_c_true": truth.q_c,
                        "method": method, "q_m_hat": ml.q_m_hat, "q_c_hat": ml.q_c_hat,
                        "log_likelihood": ml.log_likelihood})
    return out
