"""Edge-list ingestion, subgraph sampling and file formats.

Graph files
    Plain text, one record per line.  A line with one label declares a node;
    a line with two labels is an edge; blank lines and lines starting with
    ``#`` are ignored.  Writers emit every node as a one-label line (in id
    order) before the edges, so isolated nodes survive and ids round-trip.

Theta files
    Line 1: arrival order as space-separated labels.  Line 2: the anchor of
    each arrival after the first (may be empty for a one-node graph).

Result files
    JSON; a missing ``q_m`` estimate is written as ``null``.
"""
from __future__ import annotations

import json
import math
import platform
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .engine import SufficientStats, Theta
from .graph import Graph
from .reconstruction import DeconstructionResult


class DataError(ValueError):
    """Input file is unreadable or malformed."""


@dataclass
class EdgeListSpec:
    path: str
    delimiter: str | None = None
    has_header: bool = False
    score_column: int | None = None
    score_threshold: float | None = None
    drop_self_loops: bool = True

    def __post_init__(self):
        if self.score_threshold is not None and self.score_column is None:
            raise ValueError("score_threshold requires score_column")


@dataclass
class IngestReport:
    rows: int = 0
    self_loops: int = 0
    duplicates: int = 0
    below_threshold: int = 0
    edges: int = 0
    nodes: int = 0


def ingest_edge_list(spec: EdgeListSpec) -> tuple[Graph, list[str], IngestReport]:
    """Read an interaction list into a simple graph.

    Self-loops are dropped, repeated pairs (in either direction) collapse to
    one edge, and with a score column only rows scoring strictly above the
    threshold are kept.  Every label seen in a data row becomes a node even
    if all its rows were dropped.  The report satisfies
    ``rows == self_loops + duplicates + below_threshold + edges``.
    """
    path = Path(spec.path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    g = Graph()
    labels: list[str] = []
    index: dict[str, int] = {}
    report = IngestReport()

    def node(label: str) -> int:
        u = index.get(label)
        if u is None:
            u = index[label] = g.add_node()
            labels.append(label)
        return u

    need = 2 if spec.score_column is None else max(2, spec.score_column + 1)
    lines = text.splitlines()
    start = 1 if spec.has_header else 0
    for lineno in range(start, len(lines)):
        line = lines[lineno].strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(spec.delimiter)
        if len(parts) < need:
            raise DataError(f"{path}:{lineno + 1}: expected at least {need} columns, got {len(parts)}")
        report.rows += 1
        a, b = node(parts[0].strip()), node(parts[1].strip())
        if spec.score_threshold is not None:
            try:
                score = float(parts[spec.score_column])
            except ValueError:
                raise DataError(f"{path}:{lineno + 1}: non-numeric score {parts[spec.score_column]!r}") from None
            if not score > spec.score_threshold:
                report.below_threshold += 1
                continue
        if a == b:
            if spec.drop_self_loops:
                report.self_loops += 1
                continue
            raise DataError(f"{path}:{lineno + 1}: self-loop on {parts[0]!r}")
        if g.has_edge(a, b):
            report.duplicates += 1
            continue
        g.add_edge(a, b)
    if report.rows == 0:
        raise DataError(f"{path}: no edge rows found")
    report.edges = g.edge_count()
    report.nodes = len(g)
    return g, labels, report


def sample_node_ids(g: Graph, p: float, seed=None) -> list[int]:
    """``round(p * n)`` node ids drawn uniformly without replacement (at least one)."""
    if not (0.0 < p <= 1.0):
        raise ValueError(f"sample fraction must be in (0, 1], got {p}")
    nodes = g.nodes()
    k = max(1, math.floor(p * len(nodes) + 0.5))
    if k >= len(nodes):
        return nodes
    rng = np.random.default_rng(seed)
    picked = rng.choice(len(nodes), size=k, replace=False)
    return [nodes[i] for i in sorted(picked.tolist())]


def sample_induced_subgraph(g: Graph, p: float, seed=None) -> Graph:
    return g.induced_subgraph(sample_node_ids(g, p, seed))


# -- graph / theta files ---------------------------------------------------


def _labels_for(g: Graph, labels):
    if labels is None:
        return {u: str(u) for u in g.adj}
    if isinstance(labels, dict):
        return labels
    return {u: labels[u] for u in g.adj}


def write_graph(g: Graph, path, labels=None) -> None:
    lab = _labels_for(g, labels)
    nodes = g.nodes()
    lines = [f"# {len(nodes)} nodes, {g.edge_count()} edges"]
    lines += [lab[u] for u in nodes]
    lines += [f"{lab[u]} {lab[v]}" for u, v in g.edges()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path) -> tuple[Graph, list[str]]:
    """Parse a graph file; node ids follow first appearance of each label."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    g = Graph()
    labels: list[str] = []
    index: dict[str, int] = {}

    def node(label):
        u = index.get(label)
        if u is None:
            u = index[label] = g.add_node()
            labels.append(label)
        return u

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 1:
            node(parts[0])
        elif len(parts) == 2:
            a, b = node(parts[0]), node(parts[1])
            if a == b:
                raise DataError(f"{path}:{lineno}: self-loop on {parts[0]!r}")
            g.add_edge(a, b)
        else:
            raise DataError(f"{path}:{lineno}: expected one or two labels, got {len(parts)}")
    return g, labels


def write_theta(theta: Theta, path, labels=None) -> None:
    lab = (lambda u: str(u)) if labels is None else (lambda u: labels[u])
    order = " ".join(lab(u) for u in theta.arrival_order)
    anchors = " ".join(lab(u) for u in theta.anchors)
    Path(path).write_text(f"{order}\n{anchors}\n")


def read_theta(path, labels: list[str] | None = None) -> Theta:
    """Parse a theta file, mapping labels back to ids via ``labels``."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise DataError(f"{path}: empty theta file")
    if labels is None:
        def to_id(s):
            try:
                return int(s)
            except ValueError:
                raise DataError(f"{path}: non-integer label {s!r} and no label map") from None
    else:
        index = {lab: i for i, lab in enumerate(labels)}

        def to_id(s):
            if s not in index:
                raise DataError(f"{path}: unknown node label {s!r}")
            return index[s]

    order = tuple(to_id(s) for s in lines[0].split())
    anchors = tuple(to_id(s) for s in lines[1].split()) if len(lines) > 1 else ()
    theta = Theta(order, anchors)
    try:
        theta.validate()
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from exc
    return theta


# -- JSON ---------------------------------------------------------------------


def _finite(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("-inf" if v < 0 else "inf")
    return v


def result_to_dict(r: DeconstructionResult, labels=None) -> dict:
    lab = (lambda u: str(u)) if labels is None else (lambda u: labels[u])
    q_m, q_c = r.q_hat
    return {
        "algorithm": r.algorithm,
        "theta": {"arrival_order": [lab(u) for u in r.theta.arrival_order],
                  "anchors": [lab(u) for u in r.theta.anchors]},
        "stats": asdict(r.stats),
        "q_m_hat": q_m,
        "q_c_hat": q_c,
        "log_likelihood": _finite(r.log_likelihood_at_mle),
    }


def result_from_dict(d: dict, labels: list[str] | None = None) -> DeconstructionResult:
    if labels is None:
        to_id = int
    else:
        index = {lab: i for i, lab in enumerate(labels)}
        to_id = index.__getitem__
    theta = Theta(tuple(to_id(s) for s in d["theta"]["arrival_order"]),
                  tuple(to_id(s) for s in d["theta"]["anchors"]))
    from .engine import loglik_at_mle

    stats = SufficientStats(**d["stats"])
    return DeconstructionResult(theta, stats, loglik_at_mle(stats), d.get("algorithm", ""))


def estimate_to_dict(est) -> dict:
    ci_m, ci_c = est.clamped_ci()
    return {
        "method": est.method_tag,
        "q_m_hat": est.q_m_hat,
        "q_c_hat": est.q_c_hat,
        "log_likelihood": _finite(est.log_likelihood),
        "ci_m_raw": list(est.ci_m) if est.ci_m else None,
        "ci_c_raw": list(est.ci_c) if est.ci_c else None,
        "ci_m": list(ci_m) if ci_m else None,
        "ci_c": list(ci_c) if ci_c else None,
    }


def dump_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def versions() -> dict:
    import scipy

    from . import __version__

    return {"dmcmle": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}
