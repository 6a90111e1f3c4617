"""Forward DMC generation, the reverse step and the complete-data likelihood.

A graph grown by duplication-mutation-complementation can be run backwards
one (new, anchor) pair at a time.  Every reverse step yields three counts:

* ``w`` -- 1 if new and anchor were joined by the complementation edge,
* ``x`` -- neighbours shared by new and anchor (unmodified neighbours),
* ``y`` -- neighbours of either (the anchor's degree before mutation).

Summed over a whole history these are sufficient for ``(q_m, q_c)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .graph import Graph


@dataclass(frozen=True)
class Params:
    """Mutation and complementation probabilities.

    ``q_m`` may be ``None``: likelihoods are then evaluated without the
    mutation factor, which is what a missing ``q_m`` estimate feeds into
    downstream scoring.
    """

    q_m: float | None
    q_c: float

    def __post_init__(self):
        for name in ("q_m", "q_c"):
            v = getattr(self, name)
            if v is None and name == "q_m":
                continue
            if v is None or not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    def is_interior(self) -> bool:
        return (self.q_m is None or 0.0 < self.q_m < 1.0) and 0.0 < self.q_c < 1.0


class StepStats(NamedTuple):
    w: int
    x: int
    y: int


@dataclass(frozen=True)
class SufficientStats:
    w: int
    x: int
    y: int
    n: int

    def __post_init__(self):
        if self.n < 1 or min(self.w, self.x, self.y) < 0:
            raise ValueError(f"invalid stats {self}")
        if self.x > self.y or self.w > self.n - 1:
            raise ValueError(f"inconsistent stats {self}")

    @property
    def modified(self) -> int:
        return self.y - self.x


@dataclass(frozen=True)
class Theta:
    """Arrival history: node arrival order and the anchor of each arrival.

    ``anchors[i]`` anchored ``arrival_order[i + 1]``; the first node has no
    anchor.
    """

    arrival_order: tuple[int, ...]
    anchors: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "arrival_order", tuple(self.arrival_order))
        object.__setattr__(self, "anchors", tuple(self.anchors))

    @property
    def n(self) -> int:
        return len(self.arrival_order)

    def removal_pairs(self) -> list[tuple[int, int]]:
        """(new, anchor) pairs in deconstruction order, latest arrival first."""
        a, b = self.arrival_order, self.anchors
        return [(a[i], b[i - 1]) for i in range(len(a) - 1, 0, -1)]

    @classmethod
    def from_removals(cls, pairs, survivor: int) -> "Theta":
        """Inverse of :meth:`removal_pairs`."""
        pairs = list(pairs)
        order = [survivor] + [new for new, _ in reversed(pairs)]
        anchors = [anchor for _, anchor in reversed(pairs)]
        return cls(tuple(order), tuple(anchors))

    def validate(self, g: Graph | None = None) -> None:
        order, anchors = self.arrival_order, self.anchors
        if len(anchors) != max(len(order) - 1, 0):
            raise ValueError("need exactly n-1 anchors")
        if len(set(order)) != len(order):
            raise ValueError("arrival order contains duplicate nodes")
        if g is not None and set(order) != set(g.adj):
            raise ValueError("arrival order is not a permutation of the graph's nodes")
        seen = {order[0]} if order else set()
        for i, anchor in enumerate(anchors):
            new = order[i + 1]
            if anchor == new:
                raise ValueError(f"node {new} anchors itself")
            if anchor not in seen:
                raise ValueError(f"anchor {anchor} of {new} has not arrived yet")
            seen.add(new)


@dataclass
class StepRecord:
    """Bernoulli outcomes of one forward step, for trace checks."""

    new: int
    anchor: int
    anchor_degree: int
    modified: int
    complemented: bool


@dataclass
class GenerationTrace:
    steps: list[StepRecord] = field(default_factory=list)

    @property
    def complemented(self) -> int:
        return sum(s.complemented for s in self.steps)

    @property
    def modified(self) -> int:
        return sum(s.modified for s in self.steps)

    @property
    def anchor_degrees(self) -> int:
        return sum(s.anchor_degree for s in self.steps)


def forward_generate(n: int, params: Params, rng_seed=None,
                     trace: GenerationTrace | None = None) -> tuple[Graph, Theta]:
    """Grow an ``n``-node DMC graph from a single seed node.

    Random stream order per step: anchor index, then for each anchor
    neighbour in increasing id order a mutation draw followed (if mutated)
    by the edge coin, then the complementation draw.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if params.q_m is None:
        raise ValueError("generation needs q_m")
    rng = np.random.default_rng(rng_seed)
    q_m, q_c = params.q_m, params.q_c
    g = Graph()
    order = [g.add_node()]
    anchors = []
    for _ in range(1, n):
        anchor = order[int(rng.integers(len(order)))]
        new = g.add_node()
        nbrs = sorted(g.adj[anchor])
        for w in nbrs:
            g.add_edge(new, w)
        modified = 0
        for w in nbrs:
            if rng.random() < q_m:
                modified += 1
                # the coin decides which copy of the function is lost
                if rng.random() < 0.5:
                    g.remove_edge(anchor, w)
                else:
                    g.remove_edge(new, w)
        complemented = bool(rng.random() < q_c)
        if complemented:
            g.add_edge(new, anchor)
        order.append(new)
        anchors.append(anchor)
        if trace is not None:
            trace.steps.append(StepRecord(new, anchor, len(nbrs), modified, complemented))
    return g, Theta(tuple(order), tuple(anchors))


def reverse_step(g: Graph, new: int, anchor: int) -> tuple[StepStats, Graph]:
    """Undo one DMC step in place, removing ``new`` and merging it into ``anchor``."""
    if new == anchor:
        raise ValueError("new and anchor must differ")
    a_nb = g.adj.get(anchor)
    n_nb = g.adj.get(new)
    if a_nb is None or n_nb is None:
        raise KeyError(f"unknown node in pair ({new!r}, {anchor!r})")
    w = 0
    if anchor in n_nb:
        w = 1
        n_nb.discard(anchor)
        a_nb.discard(new)
    x = len(a_nb & n_nb)
    y = len(a_nb) + len(n_nb) - x
    for k in n_nb:
        adj_k = g.adj[k]
        adj_k.discard(new)
        adj_k.add(anchor)
        a_nb.add(k)
    del g.adj[new]
    return StepStats(w, x, y), g


def deconstruct(g: Graph, theta: Theta, copy: bool = True) -> SufficientStats:
    """Run the full history ``theta`` backwards and sum the step counts."""
    theta.validate(g)
    work = g.copy() if copy else g
    w = x = y = 0
    for new, anchor in theta.removal_pairs():
        s, _ = reverse_step(work, new, anchor)
        w += s.w
        x += s.x
        y += s.y
    return SufficientStats(w, x, y, theta.n)


def _xlog(count, p) -> float:
    # 0 * log 0 = 0
    if count == 0:
        return 0.0
    if p <= 0.0:
        return -math.inf
    return count * math.log(p)


def log_likelihood(stats: SufficientStats, params: Params) -> float:
    """Complete-data log-likelihood of ``(q_m, q_c)`` given summed counts."""
    ll = _xlog(stats.w, params.q_c) + _xlog(stats.n - 1 - stats.w, 1.0 - params.q_c)
    if params.q_m is not None:
        ll += _xlog(stats.y - stats.x, params.q_m) + _xlog(stats.x, 1.0 - params.q_m)
    return ll


def xlog_array(count, p: float) -> np.ndarray:
    """Vectorised ``count * log(p)`` with ``0 * log 0 = 0``."""
    count = np.asarray(count, dtype=np.float64)
    if p > 0.0:
        return count * math.log(p)
    return np.where(count > 0, -np.inf, 0.0)


def log_likelihood_array(w, x, y, n: int, params: Params) -> np.ndarray:
    """:func:`log_likelihood` over arrays of counts sharing one ``n``."""
    w = np.asarray(w)
    ll = xlog_array(w, params.q_c) + xlog_array(n - 1 - w, 1.0 - params.q_c)
    if params.q_m is not None:
        x = np.asarray(x)
        ll = ll + xlog_array(np.asarray(y) - x, params.q_m) + xlog_array(x, 1.0 - params.q_m)
    return ll


def mle(stats: SufficientStats) -> tuple[float | None, float | None]:
    """Closed-form maximisers ``(1 - x/y, w/(n-1))``.

    ``q_m`` is ``None`` when ``y == 0`` (no neighbour was ever at risk of
    mutation); both are ``None`` for a single-node graph.
    """
    if stats.n < 2:
        return None, None
    q_m = None if stats.y == 0 else 1.0 - stats.x / stats.y
    return q_m, stats.w / (stats.n - 1)


def loglik_at_mle(stats: SufficientStats) -> float:
    q_m, q_c = mle(stats)
    if q_c is None:
        return 0.0
    return log_likelihood(stats, Params(q_m, q_c))


def theta_space_size(n: int) -> int:
    """Number of distinct unordered pair sequences, ``n!(n-1)!/2^(n-1)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return math.prod(math.comb(i, 2) for i in range(2, n + 1))
