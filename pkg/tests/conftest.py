import numpy as np
import pytest

from dmcmle.graph import Graph


def graph_from_rows(rows: str) -> Graph:
    """Graph from a slash-separated adjacency string such as ``"01/10"``."""
    return Graph.from_adjacency([[int(c) for c in r] for r in rows.split("/")])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
