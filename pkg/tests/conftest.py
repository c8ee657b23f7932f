"""Shared fixtures and random-graph helpers for the test suite."""

import numpy as np
import pytest

from topocf.graph import BipartiteGraph


def make_graph(edges, num_users=None, num_items=None):
    """Build a BipartiteGraph from integer (user, item) pairs."""
    edges = np.asarray(sorted(set(map(tuple, edges))), dtype=np.int64)
    nu = num_users if num_users is not None else int(edges[:, 0].max()) + 1
    ni = num_items if num_items is not None else int(edges[:, 1].max()) + 1
    return BipartiteGraph.from_edge_array(
        edges, [f"u{j}" for j in range(nu)], [f"i{j}" for j in range(ni)])


def random_bipartite(rng, max_users=10, max_items=10, p=0.3):
    """Random dense-ish bipartite graph with at least one edge."""
    while True:
        nu = int(rng.integers(1, max_users + 1))
        ni = int(rng.integers(1, max_items + 1))
        mask = rng.random((nu, ni)) < p
        if mask.any():
            us, its = np.nonzero(mask)
            return make_graph(list(zip(us, its)), nu, ni)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def small_graph():
    """Hand-checkable graph: 4 users, 5 items, 8 interactions.

        u0: i0 i1 i2     u1: i1 i2     u2: i3     u3: i3 i4
    """
    return make_graph([(0, 0), (0, 1), (0, 2), (1, 1), (1, 2),
                       (2, 3), (3, 3), (3, 4)])


@pytest.fixture
def k22_graph():
    """Complete bipartite K_{2,2}."""
    return make_graph([(0, 0), (0, 1), (1, 0), (1, 1)])
