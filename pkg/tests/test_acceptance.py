"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v``.  The criteria
sharing the 100/200-node Monte Carlo experiment reuse one module-scoped run.
"""
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from dmcmle.engine import (
    GenerationTrace,
    Params,
    SufficientStats,
    deconstruct,
    forward_generate,
    loglik_at_mle,
    theta_space_size,
)
from dmcmle.evaluation import ExperimentPlan, run_experiment
from dmcmle.io import EdgeListSpec, ingest_edge_list, sample_induced_subgraph
from dmcmle.reconstruction import class_mle, class_probability, exhaustive, minimize_y
from tests.conftest import graph_from_rows
from tests.fixtures import HURI_EDGES, HURI_SELF_LOOPS, huri_shaped_rows
from tests.test_small_graph_classes import CLASSES, GRID

MONTE_CARLO_SEED = 1
NAIVE = ["nk", "nk_plus_1", "minimize_y", "minimize_y_then_nk", "random_1", "random_100"]


@pytest.fixture
def report(capsys):
    """Print a PASS/FAIL line past pytest's capture, then assert."""
    def _report(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number:>2}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail
    return _report


# -- shared experiments ------------------------------------------------------


@pytest.fixture(scope="module")
def seven_node_run():
    vals = [k / 6 for k in range(1, 6)]
    grid = [Params(a, b) for a in vals for b in vals]
    methods = ["true_theta", "true_new_random_anchor", "nk_true_initial", "exhaustive", "nk",
               "nk_plus_1", "minimize_y", "minimize_y_then_nk", "random_1", "random_100"]
    t0 = time.perf_counter()
    records, _ = run_experiment(ExperimentPlan([7], methods, param_grid=grid, seed=MONTE_CARLO_SEED))
    return records, time.perf_counter() - t0


@pytest.fixture(scope="module")
def full_scale_run():
    methods = ["true_theta", *NAIVE]
    t0 = time.perf_counter()
    records, summary = run_experiment(ExperimentPlan([100, 200], methods, seed=MONTE_CARLO_SEED))
    return records, summary, time.perf_counter() - t0


# -- criteria ------------------------------------------------------------------


def test_criterion_01_small_graph_golden_suite(report):
    t0 = time.perf_counter()
    worst_rel = 0.0
    worst_mle = 0.0
    for rows, (closed, q_m_hat, q_c_hat) in CLASSES.items():
        g = graph_from_rows(rows)
        for m, c in GRID:
            want = closed(m, c)
            worst_rel = max(worst_rel, abs(class_probability(g, Params(m, c)) - want) / abs(want))
        got_m, got_c = class_mle(g)
        for got, want in ((got_m, q_m_hat), (got_c, q_c_hat)):
            if (got is None) != (want is None):
                worst_mle = math.inf
            elif got is not None:
                worst_mle = max(worst_mle, abs(got - want))
    elapsed = time.perf_counter() - t0
    ok = worst_rel <= 1e-12 and worst_mle <= 1e-9 and elapsed < 60
    report(1, ok, f"{len(CLASSES)} classes x {len(GRID)} points: max rel err {worst_rel:.2e}, "
                  f"max MLE err {worst_mle:.2e}, {elapsed:.1f}s")


def _xlog_grid(count, p):
    with np.errstate(divide="ignore"):
        return np.zeros_like(p) if count == 0 else count * np.log(p)


def test_criterion_02_closed_form_mle_vs_grid(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    axis = np.linspace(0.0, 1.0, 1001)
    worst_gap = -math.inf
    for _ in range(200):
        n = int(rng.integers(2, 201))
        y = int(rng.integers(0, 5 * n))
        s = SufficientStats(int(rng.integers(0, n)), int(rng.integers(0, y + 1)), y, n)
        lc = _xlog_grid(s.w, axis) + _xlog_grid(n - 1 - s.w, 1 - axis)
        lm = _xlog_grid(s.y - s.x, axis) + _xlog_grid(s.x, 1 - axis)
        grid_best = (lc[:, None] + lm[None, :]).max()
        worst_gap = max(worst_gap, grid_best - loglik_at_mle(s))
    elapsed = time.perf_counter() - t0
    ok = worst_gap <= 1e-9 and elapsed < 60
    report(2, ok, f"200 stats vs 1001^2 grid: max(grid - closed form) = {worst_gap:.2e}, {elapsed:.1f}s")


def test_criterion_03_exhaustive_dominance(report, seven_node_run):
    records, elapsed = seven_node_run
    by_graph: dict = {}
    for r in records:
        by_graph.setdefault(r.grid_index, {})[r.method] = r.loglik_est
    losses = []
    for idx, lls in by_graph.items():
        ex = lls["exhaustive"]
        for method, ll in lls.items():
            if ll is not None and ll > ex + 1e-9:
                losses.append((idx, method, ll - ex))
    ok = not losses and len(by_graph) == 25 and elapsed < 600
    report(3, ok, f"{len(by_graph)} seven-node graphs, {len(losses)} instances beaten "
                  f"{losses[:3]}, {elapsed:.0f}s")


def test_criterion_04_rmse_at_full_scale(report, full_scale_run):
    records, summary, elapsed = full_scale_run
    table = summary["rmse_max"]
    targets = {("true_theta", "q_m"): (0.034, 0.02), ("true_theta", "q_c"): (0.037, 0.02),
               ("minimize_y", "q_m"): (0.095, 0.04), ("minimize_y", "q_c"): (0.109, 0.04)}
    cells = []
    ok = True
    for (method, key), (want, tol) in targets.items():
        got = table[method][100][key]
        good = got is not None and abs(got - want) <= tol
        ok &= good
        cells.append(f"{method} {key} {got:.3f} (target {want} +/- {tol})")
    my_hours = sum(r.wall_time for r in records if r.method == "minimize_y" and r.size == 100) / 3600
    ok &= my_hours <= 0.353 * 10
    report(4, ok, "; ".join(cells) + f"; minimize_y@100 {my_hours:.4f} core-h; "
                  f"whole run {elapsed:.0f}s on 1 core")


def test_criterion_05_tau_rows(report, full_scale_run):
    records, summary, _ = full_scale_run
    lenient = [r.tau_lenient for r in records if r.method == "true_theta"]
    exact = all(t == 1.0 for t in lenient)
    strict = {m: summary["tau"][m][100]["strict"] for m in NAIVE}
    in_band = all(-0.1 <= v <= 0.1 for v in strict.values())
    report(5, exact and in_band,
           f"true_theta lenient == 1 on {sum(t == 1.0 for t in lenient)}/{len(lenient)} graphs; "
           + ", ".join(f"{m} strict {v:+.3f}" for m, v in strict.items()))


def test_criterion_06_true_theta_coverage(report, full_scale_run):
    _, summary, _ = full_scale_run
    cov = summary["coverage"]["true_theta"]
    vals = {(n, k): cov[n][k] for n in (100, 200) for k in ("q_m", "q_c")}
    ok = all(v is not None and 0.90 <= v <= 1.00 for v in vals.values())
    report(6, ok, ", ".join(f"n={n} {k} {v:.2f}" for (n, k), v in vals.items()))


def test_criterion_07_em_monotone(report, seven_node_run, full_scale_run):
    runs = [r for r in seven_node_run[0] + full_scale_run[0] if r.status == "ok"]
    em_runs = [r for r in runs if r.n_thetas > 1]
    bad = [(r.size, r.grid_index, r.method, r.em_violations) for r in em_runs if r.em_violations]
    report(7, not bad, f"{len(em_runs)} EM runs over multi-history ensembles, "
                       f"{len(bad)} with a decrease {bad[:3]}")


def test_criterion_08_trace_consistency(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(8)
    mismatches = 0
    for i in range(1000):
        n = int(rng.integers(1, 51))
        params = Params(float(rng.random()), float(rng.random()))
        trace = GenerationTrace()
        g, theta = forward_generate(n, params, rng.integers(2**63), trace)
        s = deconstruct(g, theta)
        if (s.w, s.y, s.y - s.x) != (trace.complemented, trace.anchor_degrees, trace.modified):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    report(8, mismatches == 0 and elapsed < 60,
           f"1000 round trips, {mismatches} count mismatches, {elapsed:.1f}s")


def test_criterion_09_ingestion(report, tmp_path):
    path = tmp_path / "huri_shaped.tsv"
    path.write_text("\n".join(huri_shaped_rows(seed=0)) + "\n")
    g, labels, rep = ingest_edge_list(EdgeListSpec(str(path)))
    identity = (rep.rows == HURI_EDGES + HURI_SELF_LOOPS and rep.self_loops == HURI_SELF_LOOPS
                and rep.edges == HURI_EDGES == g.edge_count())
    rng = np.random.default_rng(0)
    sub = sample_induced_subgraph(g, 0.10, rng)
    q_m, q_c = minimize_y(sub, rng).q_hat
    band = q_m is not None and 0.6 <= q_m <= 0.8 and 0.15 <= q_c <= 0.25
    detail = (f"{rep.rows} rows, {rep.self_loops} self-loops -> {rep.edges} edges; "
              f"10% subsample ({len(sub)} nodes) q_m={q_m:.3f} q_c={q_c:.3f} "
              f"(band [0.6, 0.8] x [0.15, 0.25])")
    real = os.environ.get("DMCMLE_HURI")
    if real and Path(real).exists():
        g_real, _, _ = ingest_edge_list(EdgeListSpec(real))
        rq_m, rq_c = minimize_y(g_real, 0).q_hat
        band &= abs(rq_m - 0.760) <= 0.05 and abs(rq_c - 0.204) <= 0.05
        detail += f"; real data q_m={rq_m:.3f} q_c={rq_c:.3f} (reported 0.760 / 0.204)"
    else:
        detail += "; real data not supplied (set DMCMLE_HURI)"
    report(9, identity and band, detail)


def _count_sequences(n):
    """Independent enumerator: distinct unordered pair sequences on n labels."""
    found = set()

    def rec(alive, path):
        if len(alive) == 1:
            found.add(tuple(path))
            return
        for i in range(len(alive)):
            for j in range(i + 1, len(alive)):
                rest = alive[:j] + alive[j + 1:]
                rec(rest, path + [(alive[j], alive[i])])

    rec(list(range(n)), [])
    return len(found)


def test_criterion_10_theta_counting(report):
    t0 = time.perf_counter()
    rows = []
    ok = True
    for n in range(2, 8):
        oracle = _count_sequences(n)
        g, _ = forward_generate(n, Params(0.5, 0.5), n)
        engine = len(exhaustive(g))
        ok &= theta_space_size(n) == oracle == engine
        rows.append(f"n={n}: {theta_space_size(n)}/{oracle}/{engine}")
    ok &= [theta_space_size(n) for n in range(3, 8)] == [3, 18, 180, 2700, 56700]
    elapsed = time.perf_counter() - t0
    report(10, ok and elapsed < 60, "formula/oracle/exhaustive " + ", ".join(rows) + f", {elapsed:.1f}s")
