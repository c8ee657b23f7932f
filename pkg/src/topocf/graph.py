"""Bipartite user-item graph: ingestion, connected components, projections."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


DEFAULT_PROJECTION_EDGE_CAP = 50_000_000


class GraphError(Exception):
    """Raised when a graph cannot be built or processed."""


class ProjectionCapError(GraphError):
    """Raised when a projection would exceed the configured edge cap."""


@dataclass(frozen=True)
class BipartiteGraph:
    """Immutable user-item graph with dual adjacency lists.

    ``user_adj[u]`` is the strictly increasing array of item indices that
    user ``u`` interacted with; ``item_adj[i]`` is the symmetric view.
    ``user_ids`` / ``item_ids`` map compacted indices back to the original
    tokens.
    """

    user_adj: tuple
    item_adj: tuple
    user_ids: tuple
    item_ids: tuple

    @property
    def num_users(self):
        return len(self.user_adj)

    @property
    def num_items(self):
        return len(self.item_adj)

    @property
    def num_interactions(self):
        return int(sum(len(a) for a in self.user_adj))

    @property
    def user_degrees(self):
        return np.array([len(a) for a in self.user_adj], dtype=np.int64)

    @property
    def item_degrees(self):
        return np.array([len(a) for a in self.item_adj], dtype=np.int64)

    def edge_array(self):
        """All (user, item) edges as an (E, 2) array, sorted by (u, i)."""
        if self.num_interactions == 0:
            return np.empty((0, 2), dtype=np.int64)
        users = np.concatenate([np.full(len(a), u, dtype=np.int64)
                                for u, a in enumerate(self.user_adj)])
        items = np.concatenate([np.asarray(a, dtype=np.int64) for a in self.user_adj])
        return np.column_stack([users, items])

    def to_sparse(self):
        """Interaction matrix as a CSR of shape (num_users, num_items)."""
        edges = self.edge_array()
        data = np.ones(len(edges), dtype=np.float64)
        return sp.csr_matrix((data, (edges[:, 0], edges[:, 1])),
                             shape=(self.num_users, self.num_items))

    @classmethod
    def from_edge_array(cls, edges, user_ids, item_ids):
        """Build from a deduplicated (E, 2) index array and token maps."""
        edges = np.asarray(edges, dtype=np.int64)
        n_users, n_items = len(user_ids), len(item_ids)
        user_adj = [[] for _ in range(n_users)]
        item_adj = [[] for _ in range(n_items)]
        order = np.lexsort((edges[:, 1], edges[:, 0]))
        for u, i in edges[order]:
            user_adj[u].append(i)
        order = np.lexsort((edges[:, 0], edges[:, 1]))
        for u, i in edges[order]:
            item_adj[i].append(u)
        return cls(
            user_adj=tuple(np.array(a, dtype=np.int64) for a in user_adj),
            item_adj=tuple(np.array(a, dtype=np.int64) for a in item_adj),
            user_ids=tuple(user_ids),
            item_ids=tuple(item_ids),
        )


@dataclass(frozen=True)
class ProjectedGraph:
    """Same-partition co-occurrence graph.

    Edges are stored off-diagonal only (v < w) with co-occurrence counts as
    weights; ``degrees`` counts distinct co-neighbors per node (binarized,
    self-loop-free structure).
    """

    partition: str
    n: int
    v: np.ndarray
    w: np.ndarray
    weight: np.ndarray
    degrees: np.ndarray

    @property
    def num_edges(self):
        return len(self.v)


def ingest_and_build(source):
    """Parse an iterable of interaction lines into a BipartiteGraph.

    Each non-comment line carries ``user_id<TAB>item_id`` (any whitespace
    works, extra columns are ignored). Duplicate pairs collapse to a single
    implicit-feedback edge.
    """
    user_index = {}
    item_index = {}
    pairs = set()
    seen_any = False
    for lineno, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = stripped.split()
        if len(fields) < 2:
            raise GraphError(f"malformed interaction at line {lineno}: {stripped!r}")
        user_tok, item_tok = fields[0], fields[1]
        seen_any = True
        u = user_index.setdefault(user_tok, len(user_index))
        i = item_index.setdefault(item_tok, len(item_index))
        pairs.add((u, i))
    if not seen_any:
        raise GraphError("no interactions")
    edges = np.array(sorted(pairs), dtype=np.int64)
    user_ids = sorted(user_index, key=user_index.get)
    item_ids = sorted(item_index, key=item_index.get)
    return BipartiteGraph.from_edge_array(edges, user_ids, item_ids)


def load_graph(path):
    """Read an interaction file from disk and build the graph."""
    with open(path, "r", encoding="utf-8") as fh:
        return ingest_and_build(fh)


def dump_edges(g, path):
    """Write the compacted edge list as CSV rows ``u,i``."""
    edges = g.edge_array()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("u,i\n")
        for u, i in edges:
            fh.write(f"{u},{i}\n")


def write_interactions(g, path):
    """Write edges as token pairs, re-readable by :func:`load_graph`."""
    edges = g.edge_array()
    with open(path, "w", encoding="utf-8") as fh:
        for u, i in edges:
            fh.write(f"{g.user_ids[u]}\t{g.item_ids[i]}\n")


def largest_connected_component(g):
    """Restrict the graph to its largest connected component.

    Components are compared by node count, then edge count, then lowest
    minimum combined node index (users first, then items), so the result
    is deterministic even under ties. Indices are re-compacted while
    preserving the original relative order.
    """
    if g.num_interactions < 1:
        raise GraphError("graph has no edges")
    n_users = g.num_users
    total = n_users + g.num_items
    comp = np.full(total, -1, dtype=np.int64)
    n_comp = 0
    for start in range(total):
        if comp[start] >= 0:
            continue
        comp[start] = n_comp
        queue = deque([start])
        while queue:
            node = queue.popleft()
            if node < n_users:
                neighbors = g.user_adj[node] + n_users
            else:
                neighbors = g.item_adj[node - n_users]
            for nb in neighbors:
                if comp[nb] < 0:
                    comp[nb] = n_comp
                    queue.append(nb)
        n_comp += 1

    node_counts = np.bincount(comp, minlength=n_comp)
    edges = g.edge_array()
    edge_counts = np.bincount(comp[edges[:, 0]], minlength=n_comp)
    min_index = np.full(n_comp, total, dtype=np.int64)
    for node in range(total - 1, -1, -1):
        min_index[comp[node]] = node
    best = max(range(n_comp),
               key=lambda c: (node_counts[c], edge_counts[c], -min_index[c]))

    keep_edges = edges[comp[edges[:, 0]] == best]
    kept_users = np.unique(keep_edges[:, 0])
    kept_items = np.unique(keep_edges[:, 1])
    user_map = {int(u): k for k, u in enumerate(kept_users)}
    item_map = {int(i): k for k, i in enumerate(kept_items)}
    new_edges = np.column_stack([
        [user_map[int(u)] for u in keep_edges[:, 0]],
        [item_map[int(i)] for i in keep_edges[:, 1]],
    ])
    return BipartiteGraph.from_edge_array(
        new_edges,
        [g.user_ids[int(u)] for u in kept_users],
        [g.item_ids[int(i)] for i in kept_items],
    )


def project(g, partition, edge_cap=DEFAULT_PROJECTION_EDGE_CAP):
    """Project the bipartite graph onto one partition.

    Weights are exact co-occurrence counts (off-diagonal entries of
    R.R^T or R^T.R); degrees count distinct co-neighbors. A wedge-count
    guard aborts before materializing a projection whose edge count could
    exceed ``edge_cap``.
    """
    if partition not in ("user", "item"):
        raise ValueError(f"unknown partition {partition!r}")
    R = g.to_sparse()
    if partition == "user":
        opp_deg = g.item_degrees
        opp_ids = g.item_ids
    else:
        R = R.T.tocsr()
        opp_deg = g.user_degrees
        opp_ids = g.user_ids

    if len(opp_deg):
        wedges = int((opp_deg * (opp_deg - 1) // 2).sum())
        if wedges > edge_cap:
            hub = int(np.argmax(opp_deg))
            raise ProjectionCapError(
                f"projection on {partition!r} side needs up to {wedges} edges, "
                f"over the cap {edge_cap}; hub node {opp_ids[hub]!r} has "
                f"degree {int(opp_deg[hub])}")

    P = (R @ R.T).tocoo()
    mask = P.row < P.col
    v = P.row[mask].astype(np.int64)
    w = P.col[mask].astype(np.int64)
    wt = P.data[mask]
    order = np.lexsort((w, v))
    v, w, wt = v[order], w[order], wt[order]
    degrees = np.zeros(R.shape[0], dtype=np.int64)
    np.add.at(degrees, v, 1)
    np.add.at(degrees, w, 1)
    return ProjectedGraph(partition=partition, n=R.shape[0], v=v, w=w,
                          weight=wt, degrees=degrees)
