"""Deconstruction algorithms: ways of choosing the (new, anchor) pair at each
reverse step.

Every algorithm returns :class:`DeconstructionResult` objects whose ``stats``
equal ``deconstruct(g, result.theta)``.  Algorithms that visit several
histories (grid-restarted NK, repeated random runs, exhaustive search) return
all of them so the estimators can pool them.

The greedy scans (NK and minimise-Y) work on a dense 0/1 adjacency matrix
together with the common-neighbour matrix ``C = A @ A``.  For a pair (u, v)::

    W = A[u, v]
    X = C[u, v]                       # shared neighbours, u and v excluded
    Y = deg u + deg v - 2 W - X       # union of neighbourhoods minus the pair

``C`` is patched after each merge with a few rank-one updates instead of
being recomputed; ``incremental=False`` recomputes it from scratch and is
kept for cross-checking.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .engine import (
    Params,
    SufficientStats,
    Theta,
    deconstruct,
    log_likelihood,
    loglik_at_mle,
    mle,
    reverse_step,
    xlog_array,
)
from .graph import Graph

DEFAULT_EXHAUSTIVE_CAP = 8
LL_TOL = 1e-12


@dataclass
class DeconstructionResult:
    theta: Theta
    stats: SufficientStats
    log_likelihood_at_mle: float
    algorithm: str = ""

    @property
    def q_hat(self) -> tuple[float | None, float | None]:
        return mle(self.stats)


@dataclass
class SearchResult:
    """Best history found plus every history visited on the way."""

    best: DeconstructionResult
    visited: list[DeconstructionResult]


def _result(theta: Theta, stats: SufficientStats, tag: str) -> DeconstructionResult:
    return DeconstructionResult(theta, stats, loglik_at_mle(stats), tag)


def _trivial(g: Graph, tag: str) -> DeconstructionResult:
    nodes = g.nodes()
    theta = Theta(tuple(nodes), ())
    return _result(theta, SufficientStats(0, 0, 0, max(len(nodes), 1)), tag)


def true_theta(g: Graph, recorded: Theta) -> DeconstructionResult:
    return _result(recorded, deconstruct(g, recorded), "true_theta")


def true_new_random_anchor(g: Graph, recorded: Theta, seed=None) -> DeconstructionResult:
    """Remove nodes in true reverse arrival order, drawing each anchor uniformly."""
    recorded.validate(g)
    rng = np.random.default_rng(seed)
    order = recorded.arrival_order
    anchors = [order[int(rng.integers(i))] for i in range(1, len(order))]
    theta = Theta(order, tuple(anchors))
    return _result(theta, deconstruct(g, theta), "true_new_random_anchor")


# -- dense pair scanner ----------------------------------------------------


class _PairScanner:
    """Dense adjacency state shared by the greedy algorithms.

    Active nodes occupy positions ``0..m-1``; a removed node is swapped with
    the last active position so every array op works on a leading block.
    """

    def __init__(self, g: Graph, incremental: bool = True):
        self.ids = np.array(g.nodes(), dtype=np.int64)
        self.A = g.to_numpy(self.ids.tolist())
        self.C = self.A @ self.A
        self.deg = self.A.sum(axis=1)
        self.m = len(self.ids)
        self.incremental = incremental
        self._upper = np.triu(np.ones((self.m, self.m), dtype=bool), 1)
        self.pairs: list[tuple[int, int]] = []
        self.w = self.x = self.y = 0

    def counts(self):
        m = self.m
        W = self.A[:m, :m]
        X = self.C[:m, :m]
        d = self.deg[:m]
        Y = d[:, None] + d[None, :] - 2.0 * W - X
        return W, X, Y

    def pick_max(self, score: np.ndarray, rng) -> tuple[int, int]:
        """Uniformly random position pair among the upper-triangle maxima."""
        m = self.m
        mask = self._upper[:m, :m]
        best = score[mask].max()
        cand = np.flatnonzero(mask & (score == best))
        k = int(cand[rng.integers(len(cand))]) if len(cand) > 1 else int(cand[0])
        return divmod(k, m)

    def merge(self, i: int, j: int) -> None:
        """Reverse step removing position ``j`` into position ``i``."""
        m = self.m
        A, C = self.A, self.C
        a_i = A[:m, i].copy()
        a_j = A[:m, j].copy()
        w = A[i, j]
        x = C[i, j]
        y = self.deg[i] + self.deg[j] - 2.0 * w - x
        merged = np.maximum(a_i, a_j)
        merged[i] = merged[j] = 0.0
        A[:m, i] = merged
        A[i, :m] = merged
        A[:m, j] = 0.0
        A[j, :m] = 0.0
        if self.incremental:
            blk = C[:m, :m]
            blk -= np.outer(a_i, a_i)
            blk -= np.outer(a_j, a_j)
            blk += np.outer(merged, merged)
            row = merged @ A[:m, :m]
            C[i, :m] = row
            C[:m, i] = row
            C[j, :m] = 0.0
            C[:m, j] = 0.0
        else:
            C[:m, :m] = A[:m, :m] @ A[:m, :m]
        self.deg[:m] = A[:m, :m].sum(axis=1)
        self.w += int(w)
        self.x += int(x)
        self.y += int(y)
        self.pairs.append((int(self.ids[j]), int(self.ids[i])))
        last = m - 1
        if j != last:
            for arr in (A, C):
                arr[[j, last], :m] = arr[[last, j], :m]
                arr[:m, [j, last]] = arr[:m, [last, j]]
            self.deg[[j, last]] = self.deg[[last, j]]
            self.ids[[j, last]] = self.ids[[last, j]]
        self.m = last

    def result(self, tag: str) -> DeconstructionResult:
        theta = Theta.from_removals(self.pairs, int(self.ids[0]))
        stats = SufficientStats(self.w, self.x, self.y, theta.n)
        return _result(theta, stats, tag)


def _greedy(g: Graph, score_fn: Callable, seed, tag: str, incremental: bool) -> DeconstructionResult:
    if len(g) <= 1:
        return _trivial(g, tag)
    rng = np.random.default_rng(seed)
    sc = _PairScanner(g, incremental)
    with np.errstate(invalid="ignore"):
        while sc.m > 1:
            i, j = sc.pick_max(score_fn(*sc.counts()), rng)
            sc.merge(i, j)
    return sc.result(tag)


def pair_log_likelihood(W, X, Y, params: Params):
    """Per-pair log L(u, v) used by the NK greedy choice."""
    s = xlog_array(W, params.q_c) + xlog_array(1.0 - W, 1.0 - params.q_c)
    if params.q_m is not None:
        s = s + xlog_array(Y - X, params.q_m) + xlog_array(X, 1.0 - params.q_m)
    return s


def nk_greedy(g: Graph, params_init: Params, seed=None, incremental: bool = True,
              tag: str = "nk") -> DeconstructionResult:
    """Repeatedly undo the pair with the highest pairwise likelihood at fixed params."""
    return _greedy(g, lambda W, X, Y: pair_log_likelihood(W, X, Y, params_init),
                   seed, tag, incremental)


def minimize_y(g: Graph, seed=None, incremental: bool = True) -> DeconstructionResult:
    """Repeatedly undo the pair whose neighbourhood union is smallest."""
    return _greedy(g, lambda W, X, Y: -Y, seed, "minimize_y", incremental)


# -- restarted NK ---------------------------------------------------------


def _default_grid() -> list[Params]:
    vals = [k / 5 for k in range(1, 5)]
    return [Params(a, b) for a in vals for b in vals]


@dataclass
class NkConfig:
    initial_grid: list[Params] = field(default_factory=_default_grid)
    refinement_base: int = 5
    extra_rounds: int = 0
    max_rounds: int = 50

    def __post_init__(self):
        if self.refinement_base < 2:
            raise ValueError("refinement_base must be >= 2")
        if not self.initial_grid:
            raise ValueError("initial grid is empty")
        for p in self.initial_grid:
            if p.q_m is None or not p.is_interior():
                raise ValueError(f"grid point {p} must lie strictly inside (0, 1)^2")


def _refined_grid(center: tuple[float, float], spacing: float) -> list[Params]:
    offsets = (-1.5, -0.5, 0.5, 1.5)
    axes = []
    for c in center:
        pts = [c + o * spacing for o in offsets]
        axes.append([p for p in pts if 0.0 < p < 1.0])
    return [Params(a, b) for a in axes[0] for b in axes[1]]


def nk_grid_search(g: Graph, config: NkConfig | None = None, seed=None,
                   tag: str | None = None) -> SearchResult:
    """NK restarted from successively finer 4x4 grids of initial values.

    Each new grid has ``1/base`` the spacing of the last and is centred on
    the best estimate so far; the search ends once a grid fails to strictly
    improve the best log-likelihood, plus ``extra_rounds`` further grids.
    """
    config = config or NkConfig()
    tag = tag or ("nk" if config.extra_rounds == 0 else f"nk_plus_{config.extra_rounds}")
    if len(g) <= 1:
        r = _trivial(g, tag)
        return SearchResult(r, [r])
    rng = np.random.default_rng(seed)
    grid = list(config.initial_grid)
    spacing = 1.0 / config.refinement_base
    center_m = 0.5
    best = None
    visited = []
    stopped = False
    extra = config.extra_rounds
    for _ in range(config.max_rounds):
        round_best = None
        for p in grid:
            r = nk_greedy(g, p, rng, tag=tag)
            visited.append(r)
            if round_best is None or r.log_likelihood_at_mle > round_best.log_likelihood_at_mle:
                round_best = r
        improved = best is None or round_best.log_likelihood_at_mle > best.log_likelihood_at_mle + LL_TOL
        if improved:
            best = round_best
        if stopped:
            extra -= 1
        elif not improved:
            stopped = True
        if stopped and extra <= 0:
            break
        q_m, q_c = best.q_hat
        # a missing q_m keeps the previous centre on that axis
        center_m = center_m if q_m is None else q_m
        spacing /= config.refinement_base
        grid = _refined_grid((center_m, q_c), spacing)
    return SearchResult(best, visited)


def minimize_y_then_nk(g: Graph, seed=None, max_rounds: int = 50) -> SearchResult:
    """Seed NK with minimise-Y estimates and feed estimates back until no gain."""
    tag = "minimize_y_then_nk"
    rng = np.random.default_rng(seed)
    first = minimize_y(g, rng)
    best = first
    visited = [first]
    if len(g) <= 1:
        return SearchResult(best, visited)
    for _ in range(max_rounds):
        q_m, q_c = best.q_hat
        r = nk_greedy(g, Params(q_m, q_c), rng, tag=tag)
        visited.append(r)
        if r.log_likelihood_at_mle > best.log_likelihood_at_mle + LL_TOL:
            best = r
        else:
            break
    return SearchResult(best, visited)


def random_sequences(g: Graph, count: int = 1, seed=None) -> list[DeconstructionResult]:
    """``count`` independent deconstructions, each step a uniformly random pair."""
    if count < 1:
        raise ValueError("count must be at least 1")
    rng = np.random.default_rng(seed)
    tag = "random_1" if count == 1 else f"random_{count}"
    out = []
    for _ in range(count):
        work = g.copy()
        alive = work.nodes()
        pairs = []
        w = x = y = 0
        while len(alive) > 1:
            a, b = rng.choice(len(alive), size=2, replace=False)
            new, anchor = alive[b], alive[a]
            s, _ = reverse_step(work, new, anchor)
            w, x, y = w + s.w, x + s.x, y + s.y
            pairs.append((new, anchor))
            alive[b] = alive[-1]
            alive.pop()
        theta = Theta.from_removals(pairs, alive[0]) if alive else Theta((), ())
        out.append(_result(theta, SufficientStats(w, x, y, max(len(g), 1)), tag))
    return out


# -- exhaustive enumeration ---------------------------------------------------


class ExhaustiveCapError(ValueError):
    pass


def _dfs_sequences(g: Graph, on_leaf: Callable) -> None:
    """Depth-first walk over all unordered pair sequences with in-place undo.

    Nodes are bit positions; ``masks[k]`` is the neighbour bitmask of ``k``.
    ``on_leaf(w, x, y, path)`` receives totals and the (new, anchor) path in
    position space.  Within a pair the higher position is removed.
    """
    ids = g.nodes()
    pos = {u: i for i, u in enumerate(ids)}
    masks = [0] * len(ids)
    for u in ids:
        for v in g.adj[u]:
            masks[pos[u]] |= 1 << pos[v]
    path: list[tuple[int, int]] = []

    def rec(alive: list[int], w: int, x: int, y: int) -> None:
        if len(alive) <= 1:
            on_leaf(w, x, y, path)
            return
        for a in range(len(alive) - 1):
            u = alive[a]
            for b in range(a + 1, len(alive)):
                v = alive[b]
                bu, bv = 1 << u, 1 << v
                mu, mv = masks[u], masks[v]
                wi = 1 if mu & bv else 0
                mu2 = mu & ~bv
                mv2 = mv & ~bu
                xi = (mu2 & mv2).bit_count()
                yi = (mu2 | mv2).bit_count()
                touched = []
                k_bits = mv2
                while k_bits:
                    low = k_bits & -k_bits
                    k = low.bit_length() - 1
                    touched.append((k, masks[k]))
                    masks[k] = (masks[k] & ~bv) | bu
                    k_bits ^= low
                masks[u] = mu2 | mv2
                masks[v] = 0
                path.append((v, u))
                rec(alive[:b] + alive[b + 1:], w + wi, x + xi, y + yi)
                path.pop()
                for k, old in touched:
                    masks[k] = old
                masks[u] = mu
                masks[v] = mv

    rec(list(range(len(ids))), 0, 0, 0)


def exhaustive(g: Graph, cap: int = DEFAULT_EXHAUSTIVE_CAP) -> list[DeconstructionResult]:
    """Every distinct pair sequence of ``g`` with its statistics."""
    n = len(g)
    if n > cap:
        raise ExhaustiveCapError(f"exhaustive search refused: {n} nodes exceeds cap of {cap}")
    if n <= 1:
        return [_trivial(g, "exhaustive")]
    ids = g.nodes()
    out = []

    def leaf(w, x, y, path):
        pairs = [(ids[v], ids[u]) for v, u in path]
        survivor = ids[path[-1][1]]
        stats = SufficientStats(w, x, y, n)
        out.append(_result(Theta.from_removals(pairs, survivor), stats, "exhaustive"))

    _dfs_sequences(g, leaf)
    return out


def enumerate_stats(g: Graph) -> list[SufficientStats]:
    """Sufficient statistics of every pair sequence, without building thetas."""
    n = len(g)
    if n <= 1:
        return [SufficientStats(0, 0, 0, max(n, 1))]
    out = []
    _dfs_sequences(g, lambda w, x, y, _p: out.append(SufficientStats(w, x, y, n)))
    return out


def automorphism_count(g: Graph) -> int:
    """Brute-force count of adjacency-preserving node permutations."""
    from itertools import permutations

    ids = g.nodes()
    n = len(ids)
    pos = {u: i for i, u in enumerate(ids)}
    nbr = [frozenset(pos[v] for v in g.adj[u]) for u in ids]
    deg = [len(s) for s in nbr]
    count = 0
    for perm in permutations(range(n)):
        if any(deg[i] != deg[perm[i]] for i in range(n)):
            continue
        if all(frozenset(perm[j] for j in nbr[i]) == nbr[perm[i]] for i in range(n)):
            count += 1
    return count


def class_probability(g: Graph, params: Params) -> float:
    """Probability that a DMC run grows a graph isomorphic to ``g``.

    Summing over labelled histories, each reverse step carries an anchor
    choice ``1/(i-1)`` and a fair coin per modified neighbour, and each
    unordered pair sequence stands for ``2^(n-1)`` labelled ones; dividing by
    the automorphism count converts labelled to unlabelled graphs::

        P = 2^(n-1) / (|Aut g| (n-1)!) * sum_seq 2^-(Y-X) L(q_m, q_c, seq)
    """
    n = len(g)
    if n <= 1:
        return 1.0
    total = 0.0
    for s in enumerate_stats(g):
        ll = log_likelihood(s, params)
        if ll > -math.inf:
            total += math.exp(ll - s.modified * math.log(2.0))
    return total * 2.0 ** (n - 1) / (automorphism_count(g) * math.factorial(n - 1))


def class_mle(g: Graph, grid: int = 21, max_sweeps: int = 200) -> tuple[float | None, float | None]:
    """Numerically maximise :func:`class_probability` over ``[0, 1]^2``.

    The probability is a polynomial in each coordinate, so each coordinate
    step maximises a 1-D polynomial exactly (stationary points plus the
    endpoints).  A coarse grid picks the start.  ``q_m`` is ``None`` when the
    probability does not depend on it.
    """
    if len(g) <= 1:
        return None, None
    n = len(g)
    stats = enumerate_stats(g)
    mod = np.array([s.modified for s in stats])
    w = np.array([s.w for s in stats])
    x = np.array([s.x for s in stats])
    P = np.polynomial.Polynomial

    def prob(q_m, q_c):
        terms = ((q_m / 2.0) ** mod * (1.0 - q_m) ** x
                 * q_c ** w * (1.0 - q_c) ** (n - 1 - w))
        return float(terms.sum())

    def best_on_poly(poly, current):
        roots = poly.deriv().roots() if poly.degree() > 0 else []
        cand = [0.0, 1.0, current] + [float(r.real) for r in roots
                                       if abs(r.imag) < 1e-9 and 0.0 <= r.real <= 1.0]
        return max(cand, key=lambda t: (poly(t), -abs(t - current)))

    def argmax_c(q_m):
        poly = P([0.0])
        for k in np.unique(w):
            coef = float(((q_m / 2.0) ** mod * (1.0 - q_m) ** x)[w == k].sum())
            poly = poly + coef * P([0.0, 1.0]) ** int(k) * P([1.0, -1.0]) ** int(n - 1 - k)
        return best_on_poly(poly, q_c)

    def argmax_m(q_c):
        poly = P([0.0])
        for a, b in set(zip(mod.tolist(), x.tolist())):
            sel = (mod == a) & (x == b)
            coef = float((q_c ** w[sel] * (1.0 - q_c) ** (n - 1 - w[sel])).sum())
            poly = poly + coef * P([0.0, 0.5]) ** a * P([1.0, -1.0]) ** b
        return best_on_poly(poly, q_m)

    depends_on_m = bool(mod.any() or x.any())
    axis = np.linspace(0.0, 1.0, grid)
    ms = axis if depends_on_m else [0.5]
    _, q_m, q_c = max((prob(a, b), float(a), float(b)) for a in ms for b in axis)
    for _ in range(max_sweeps):
        old = (q_m, q_c)
        q_c = argmax_c(q_m)
        if depends_on_m:
            q_m = argmax_m(q_c)
        if max(abs(q_m - old[0]), abs(q_c - old[1])) < 1e-15:
            break
    return (q_m if depends_on_m else None), q_c
