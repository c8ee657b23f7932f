"""Train/validation/test edge splits with the 80/20 then 90/10 protocol."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..sampling import round_half_up


class SplitError(Exception):
    pass


@dataclass
class Split:
    graph: object
    train_edges: np.ndarray
    valid_edges: np.ndarray
    test_edges: np.ndarray
    train_user_sets: list = field(default_factory=list)
    valid_user_sets: list = field(default_factory=list)
    test_user_sets: list = field(default_factory=list)
    test_users: np.ndarray = None
    valid_users: np.ndarray = None
    excluded_users: int = 0
    excluded_items: int = 0

    def __post_init__(self):
        U = self.graph.num_users
        self.train_user_sets = [set() for _ in range(U)]
        self.valid_user_sets = [set() for _ in range(U)]
        self.test_user_sets = [set() for _ in range(U)]
        for u, i in self.train_edges:
            self.train_user_sets[u].add(int(i))
        for u, i in self.valid_edges:
            self.valid_user_sets[u].add(int(i))
        for u, i in self.test_edges:
            self.test_user_sets[u].add(int(i))
        has_train = np.array([len(s) > 0 for s in self.train_user_sets])
        has_valid = np.array([len(s) > 0 for s in self.valid_user_sets])
        has_test = np.array([len(s) > 0 for s in self.test_user_sets])
        self.test_users = np.flatnonzero(has_train & has_test)
        self.valid_users = np.flatnonzero(has_train & has_valid)
        # users/items with no train edge cannot be learned; recorded, and
        # such users are excluded from evaluation
        self.excluded_users = int((~has_train & (has_test | has_valid)).sum())
        train_items = np.zeros(self.graph.num_items, dtype=bool)
        if len(self.train_edges):
            train_items[self.train_edges[:, 1]] = True
        self.excluded_items = int((~train_items).sum())

    @property
    def train_user_degrees(self):
        deg = np.zeros(self.graph.num_users, dtype=np.int64)
        if len(self.train_edges):
            np.add.at(deg, self.train_edges[:, 0], 1)
        return deg

    @property
    def train_item_degrees(self):
        deg = np.zeros(self.graph.num_items, dtype=np.int64)
        if len(self.train_edges):
            np.add.at(deg, self.train_edges[:, 1], 1)
        return deg


def split_dataset(g, rng):
    """Uniform random edge split: 20% test, then 10% of the remainder as
    validation, rest train."""
    edges = g.edge_array()
    E = len(edges)
    if E < 10:
        raise SplitError(f"need at least 10 edges to split, got {E}")
    perm = rng.permutation(E)
    n_test = round_half_up(0.2 * E)
    test_idx = perm[:n_test]
    rest = perm[n_test:]
    n_valid = round_half_up(0.1 * len(rest))
    valid_idx = rest[:n_valid]
    train_idx = rest[n_valid:]
    if n_test == 0:
        raise SplitError("empty test set")
    return Split(graph=g,
                 train_edges=edges[np.sort(train_idx)],
                 valid_edges=edges[np.sort(valid_idx)],
                 test_edges=edges[np.sort(test_idx)])
