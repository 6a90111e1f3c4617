"""Synthetic interaction list shaped like a large yeast-two-hybrid screen."""
import numpy as np

HURI_NODES = 8272
HURI_EDGES = 52068
HURI_SELF_LOOPS = 480


def huri_shaped_rows(seed: int = 0, gamma: float = 2.5) -> list[str]:
    """Tab-separated rows: a Chung-Lu power-law graph plus self-loop rows.

    Produces exactly ``HURI_EDGES`` distinct unordered pairs and
    ``HURI_SELF_LOOPS`` self-loop rows, shuffled together.
    """
    rng = np.random.default_rng(seed)
    weights = (np.arange(HURI_NODES) + 10.0) ** (-1.0 / (gamma - 1.0))
    weights /= weights.sum()
    labels = [f"ENSG{i:011d}" for i in rng.permutation(HURI_NODES)]
    edges: set[tuple[int, int]] = set()
    while len(edges) < HURI_EDGES:
        k = 2 * (HURI_EDGES - len(edges))
        a = rng.choice(HURI_NODES, size=k, p=weights)
        b = rng.choice(HURI_NODES, size=k, p=weights)
        for u, v in zip(a.tolist(), b.tolist()):
            if u != v and len(edges) < HURI_EDGES:
                edges.add((min(u, v), max(u, v)))
    rows = [f"{labels[u]}\t{labels[v]}" for u, v in sorted(edges)]
    for u in rng.choice(HURI_NODES, size=HURI_SELF_LOOPS, replace=False).tolist():
        rows.append(f"{labels[u]}\t{labels[u]}")
    order = rng.permutation(len(rows))
    return [rows[i] for i in order]
