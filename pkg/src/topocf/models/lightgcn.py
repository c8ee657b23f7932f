"""Linear message-passing recommender without transforms or nonlinearities."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .base import PropagationTrainer, train_loop


def normalized_operator(edges, weights, num_users, num_items):
    """Symmetric operator over combined (users then items) node indices,
    with each edge weight divided by sqrt of both endpoints' weighted
    degrees. Zero-degree rows stay zero."""
    n = num_users + num_items
    rows = np.concatenate([edges[:, 0], num_users + edges[:, 1]])
    cols = np.concatenate([num_users + edges[:, 1], edges[:, 0]])
    data = np.concatenate([weights, weights]).astype(np.float64)
    deg = np.bincount(rows, weights=data, minlength=n)
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    vals = data * inv_sqrt[rows] * inv_sqrt[cols]
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


class LightGCNPropagator:
    """Mean of layer-0..L embeddings under the fixed normalized adjacency.

    The operator is symmetric, so the backward pass reuses it to route
    gradients on the final embeddings back to layer 0.
    """

    def __init__(self, split, cfg):
        edges = split.train_edges
        self.A = normalized_operator(edges, np.ones(len(edges)),
                                     split.graph.num_users,
                                     split.graph.num_items)
        self.layers = cfg.layers
        self.extras = {}

    def forward(self, E0):
        acc = E0.copy()
        X = E0
        for _ in range(self.layers):
            X = self.A @ X
            acc += X
        return acc / (self.layers + 1)

    def backward(self, G):
        B = G
        for _ in range(self.layers):
            B = G + self.A @ B
        return B / (self.layers + 1)


def train_lightgcn(split, cfg, rng):
    if cfg.kind != "lightgcn":
        raise ValueError(f"config kind {cfg.kind!r} is not lightgcn")
    rng = np.random.default_rng(rng)
    trainer = PropagationTrainer(split, cfg, rng, LightGCNPropagator(split, cfg))
    return train_loop(trainer, split, cfg)
