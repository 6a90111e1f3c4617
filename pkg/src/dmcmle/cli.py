"""Command-line entry point: ``dmcmle <command> ...``.

Exit codes: 0 success, 2 usage error, 3 data error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .engine import Params, forward_generate
from .estimation import ThetaEnsemble, estimate_all
from .evaluation import (
    METHODS,
    ExperimentPlan,
    default_grid,
    format_rmse_table,
    kendall_tau,
    lenient_order,
    run_experiment,
    strict_order,
    true_order,
    write_records_csv,
    write_summary_json,
)
from .io import (
    DataError,
    EdgeListSpec,
    dump_json,
    estimate_to_dict,
    ingest_edge_list,
    read_graph,
    read_theta,
    result_from_dict,
    result_to_dict,
    sample_node_ids,
    versions,
    write_graph,
    write_theta,
)
from .reconstruction import (
    DEFAULT_EXHAUSTIVE_CAP,
    ExhaustiveCapError,
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

log = logging.getLogger("dmcmle")

ALGORITHMS = ("true-theta", "true-new-random-anchor", "nk-greedy", "nk", "nk-plus-1",
              "minimize-y", "minimize-y-then-nk", "random", "exhaustive")


class UsageError(Exception):
    pass


def _seed(args) -> int:
    if args.seed is None:
        args.seed = int(np.random.SeedSequence().entropy % 2**32)
        log.warning("no --seed given; using %d", args.seed)
    return args.seed


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(out: Path, args, extra=None) -> None:
    config = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {"command": args.command, "seed": args.seed, "config": config,
                "versions": versions()}
    if extra:
        manifest.update(extra)
    dump_json(manifest, out / "manifest.json")


def _params(args, required=True) -> Params | None:
    if args.qm is None or args.qc is None:
        if required:
            raise UsageError("--qm and --qc are required")
        return None
    try:
        return Params(args.qm, args.qc)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- commands -----------------------------------------------------------------


def cmd_generate(args) -> None:
    seed = _seed(args)
    if args.nodes < 1:
        raise UsageError("--nodes must be at least 1")
    g, theta = forward_generate(args.nodes, _params(args), seed)
    out = _outdir(args)
    write_graph(g, out / "graph.txt")
    write_theta(theta, out / "theta.txt")
    _manifest(out, args)
    print(f"wrote {len(g)} nodes / {g.edge_count()} edges to {out}")


def _run_algorithm(args, g, labels):
    rng = np.random.default_rng(args.seed)
    alg = args.algorithm
    if alg in ("true-theta", "true-new-random-anchor"):
        if not args.theta:
            raise UsageError(f"--theta is required for {alg}")
        theta = read_theta(args.theta, labels)
        try:
            theta.validate(g)
        except ValueError as exc:
            raise DataError(str(exc)) from None
        if alg == "true-theta":
            return [true_theta(g, theta)]
        return [true_new_random_anchor(g, theta, rng)]
    if alg == "nk-greedy":
        return [nk_greedy(g, _params(args), rng)]
    if alg in ("nk", "nk-plus-1"):
        return nk_grid_search(g, NkConfig(extra_rounds=int(alg == "nk-plus-1")), rng).visited
    if alg == "minimize-y":
        return [minimize_y(g, rng)]
    if alg == "minimize-y-then-nk":
        return minimize_y_then_nk(g, rng).visited
    if alg == "random":
        return random_sequences(g, args.runs, rng)
    if alg == "exhaustive":
        try:
            return exhaustive(g, args.exhaustive_cap)
        except ExhaustiveCapError as exc:
            raise UsageError(str(exc)) from None
    raise UsageError(f"unknown algorithm {alg!r}")


def cmd_deconstruct(args) -> None:
    _seed(args)
    g, labels = read_graph(args.graph)
    results = _run_algorithm(args, g, labels)
    best = max(range(len(results)), key=lambda i: (results[i].log_likelihood_at_mle, -i))
    out = _outdir(args)
    dump_json({"graph": str(args.graph), "algorithm": args.algorithm, "best_index": best,
               "labels": labels, "results": [result_to_dict(r, labels) for r in results]},
              out / "results.json")
    _manifest(out, args)
    q_m, q_c = results[best].q_hat
    print(f"{len(results)} histories; best q_m={q_m} q_c={q_c}")


def cmd_estimate(args) -> None:
    _seed(args)
    try:
        data = json.loads(Path(args.results).read_text())
        labels = data.get("labels")
        results = [result_from_dict(d, labels) for d in data["results"]]
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DataError(f"cannot load results from {args.results}: {exc}") from None
    if not results:
        raise DataError("results file holds no histories")
    ests = estimate_all(ThetaEnsemble(results, data.get("algorithm", "")))
    out = _outdir(args)
    payload = {k: estimate_to_dict(v) for k, v in ests.items()}
    payload["n_histories"] = len(results)
    dump_json(payload, out / "estimates.json")
    _manifest(out, args)
    print(json.dumps(payload, indent=2))


def cmd_simulate(args) -> None:
    seed = _seed(args)
    unknown = set(args.methods) - set(METHODS)
    if unknown:
        raise UsageError(f"unknown methods {sorted(unknown)}")
    plan = ExperimentPlan(node_sizes=args.nodes, methods=args.methods,
                          param_grid=default_grid(args.grid_size + 1), seed=seed,
                          replicates=args.replicates, threads=args.threads,
                          exhaustive_cap=args.exhaustive_cap)
    plan.max_nodes["exhaustive"] = args.exhaustive_cap
    records, summary = run_experiment(plan)
    out = _outdir(args)
    write_records_csv(records, out / "records.csv")
    write_summary_json(summary, out / "summary.json")
    _manifest(out, args)
    print(format_rmse_table(summary))


def cmd_tau(args) -> None:
    seed = _seed(args)
    labels = read_graph(args.graph)[1] if args.graph else None
    truth = read_theta(args.truth, labels)
    est = read_theta(args.estimate, labels)
    if set(truth.arrival_order) != set(est.arrival_order):
        raise DataError("true and estimated thetas cover different nodes")
    ranks = true_order(truth)
    res = {"strict": kendall_tau(ranks, strict_order(est, seed)),
           "lenient": kendall_tau(ranks, lenient_order(est, ranks)), "seed": seed}
    if args.out:
        out = _outdir(args)
        dump_json(res, out / "tau.json")
        _manifest(out, args)
    print(json.dumps(res))


def cmd_ingest_estimate(args) -> None:
    from scipy import stats as sstats

    seed = _seed(args)
    try:
        spec = EdgeListSpec(args.edges, delimiter=args.delimiter, has_header=args.header,
                            score_column=args.score_column, score_threshold=args.score_threshold)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not 0.0 < args.sample_fraction <= 1.0:
        raise UsageError("--sample-fraction must be in (0, 1]")
    g, labels, report = ingest_edge_list(spec)
    rng = np.random.default_rng(seed)
    keep = sample_node_ids(g, args.sample_fraction, rng) if args.sample_fraction < 1.0 else g.nodes()
    sub = g.induced_subgraph(keep)
    sub_labels = [labels[u] for u in keep]
    result = minimize_y(sub, rng)
    est = estimate_all(ThetaEnsemble([result], "minimize_y"))["max"]
    order = strict_order(result.theta, rng)
    nodes = sub.nodes()
    ranks = np.array([order[u] for u in nodes], dtype=float)
    degrees = np.array([sub.degree(u) for u in nodes], dtype=float)
    corr = None
    if len(nodes) > 2 and degrees.std() > 0:
        r, p = sstats.pearsonr(ranks, degrees)
        corr = {"pearson_r": float(r), "p_value": float(p)}
    out = _outdir(args)
    with open(out / "node_order.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["label", "estimated_rank", "degree"])
        for u in nodes:
            wr.writerow([sub_labels[u], order[u], sub.degree(u)])
    payload = {"ingest": vars(report), "sample_fraction": args.sample_fraction,
               "nodes": len(sub), "edges": sub.edge_count(),
               "estimate": estimate_to_dict(est), "order_degree_correlation": corr}
    dump_json(payload, out / "estimates.json")
    _manifest(out, args)
    print(json.dumps(payload, indent=2))


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmcmle", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out_required=True):
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", required=out_required, help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        return sp

    sp = common(sub.add_parser("generate", help="grow a DMC graph"))
    sp.add_argument("--nodes", type=int, required=True)
    sp.add_argument("--qm", type=float, required=True)
    sp.add_argument("--qc", type=float, required=True)
    sp.set_defaults(func=cmd_generate)

    sp = common(sub.add_parser("deconstruct", help="run a deconstruction algorithm"))
    sp.add_argument("graph")
    sp.add_argument("--algorithm", choices=ALGORITHMS, required=True)
    sp.add_argument("--theta", help="theta file (true-theta / true-new-random-anchor)")
    sp.add_argument("--qm", type=float)
    sp.add_argument("--qc", type=float)
    sp.add_argument("--runs", type=int, default=1)
    sp.add_argument("--exhaustive-cap", type=int, default=DEFAULT_EXHAUSTIVE_CAP)
    sp.set_defaults(func=cmd_deconstruct)

    sp = common(sub.add_parser("estimate", help="max / EM / averaged estimates"))
    sp.add_argument("results")
    sp.set_defaults(func=cmd_estimate)

    sp = common(sub.add_parser("simulate", help="Monte Carlo accuracy experiment"))
    sp.add_argument("--nodes", type=int, nargs="+", required=True)
    sp.add_argument("--methods", nargs="+", default=list(METHODS))
    sp.add_argument("--replicates", type=int, default=1)
    sp.add_argument("--grid-size", type=int, default=10,
                    help="grid values per axis: k/(grid_size+1), k=1..grid_size")
    sp.add_argument("--exhaustive-cap", type=int, default=DEFAULT_EXHAUSTIVE_CAP)
    sp.set_defaults(func=cmd_simulate)

    sp = common(sub.add_parser("tau", help="Kendall's tau of an estimated theta"), out_required=False)
    sp.add_argument("--truth", required=True)
    sp.add_argument("--estimate", required=True)
    sp.add_argument("--graph", help="graph file providing the label map")
    sp.set_defaults(func=cmd_tau)

    sp = common(sub.add_parser("ingest-estimate", help="estimate from an interaction list"))
    sp.add_argument("edges")
    sp.add_argument("--delimiter", default=None)
    sp.add_argument("--header", action="store_true")
    sp.add_argument("--score-column", type=int)
    sp.add_argument("--score-threshold", type=float)
    sp.add_argument("--sample-fraction", type=float, default=1.0)
    sp.set_defaults(func=cmd_ingest_estimate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"dmcmle {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ValueError) as exc:
        print(f"dmcmle {args.command}: data error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
