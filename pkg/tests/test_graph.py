"""Graph ingestion, connected components, and co-occurrence projections."""

import numpy as np
import pytest

from topocf.graph import (GraphError, ProjectionCapError, ingest_and_build,
                          largest_connected_component, project)

from conftest import make_graph, random_bipartite


# ---------------------------------------------------------------------------
# ingestion

def test_ingest_basic_counts():
    g = ingest_and_build(["a\tx", "a\ty", "b\tx"])
    assert g.num_users == 2
    assert g.num_items == 2
    assert g.num_interactions == 3
    assert g.user_ids == ("a", "b")
    assert g.item_ids == ("x", "y")


def test_ingest_deduplicates_and_skips_comments():
    lines = ["# comment", "", "a x", "a x", "a x extra-column", "b y"]
    g = ingest_and_build(lines)
    assert g.num_interactions == 2


def test_ingest_any_whitespace():
    g = ingest_and_build(["a\t x", "b     y"])
    assert g.num_interactions == 2


def test_ingest_empty_is_error():
    with pytest.raises(GraphError, match="no interactions"):
        ingest_and_build(["# only a comment", ""])


def test_ingest_malformed_line_reports_number():
    with pytest.raises(GraphError, match="line 3"):
        ingest_and_build(["a x", "b y", "lonely"])


def test_degree_sums_match_edge_count(rng):
    for _ in range(25):
        g = random_bipartite(rng)
        assert int(g.user_degrees.sum()) == g.num_interactions
        assert int(g.item_degrees.sum()) == g.num_interactions


def test_adjacency_symmetry_and_sortedness(rng):
    for _ in range(25):
        g = random_bipartite(rng)
        for u, adj in enumerate(g.user_adj):
            assert np.all(np.diff(adj) > 0)
            for i in adj:
                assert u in g.item_adj[i]
        for i, adj in enumerate(g.item_adj):
            assert np.all(np.diff(adj) > 0)
            for u in adj:
                assert i in g.user_adj[u]


def test_edge_array_sorted_and_consistent(small_graph):
    edges = small_graph.edge_array()
    assert len(edges) == small_graph.num_interactions
    as_tuples = list(map(tuple, edges))
    assert as_tuples == sorted(as_tuples)


def test_to_sparse_round_trip(small_graph):
    R = small_graph.to_sparse()
    assert R.shape == (4, 5)
    assert R.nnz == 8
    us, its = R.nonzero()
    assert sorted(zip(us, its)) == list(map(tuple, small_graph.edge_array()))


# ---------------------------------------------------------------------------
# largest connected component

def _components_by_union_find(g):
    """Independent oracle: union-find over the same node numbering."""
    total = g.num_users + g.num_items
    parent = list(range(total))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, i in g.edge_array():
        ra, rb = find(int(u)), find(g.num_users + int(i))
        if ra != rb:
            parent[ra] = rb
    groups = {}
    for node in range(total):
        groups.setdefault(find(node), []).append(node)
    return list(groups.values())


def test_lcc_matches_union_find_oracle(rng):
    for _ in range(50):
        g = random_bipartite(rng, p=0.08)
        comps = _components_by_union_find(g)
        # compare against components that contain at least one edge
        sizes = []
        for nodes in comps:
            node_set = set(nodes)
            edge_count = sum(1 for u, i in g.edge_array()
                             if int(u) in node_set)
            if edge_count:
                sizes.append((len(nodes), edge_count))
        expected_nodes, expected_edges = max(sizes)
        lcc = largest_connected_component(g)
        assert lcc.num_users + lcc.num_items == expected_nodes
        assert lcc.num_interactions == expected_edges


def test_lcc_keeps_original_tokens():
    g = make_graph([(0, 0), (1, 1), (2, 1)])
    lcc = largest_connected_component(g)
    assert lcc.num_users == 2
    assert lcc.user_ids == ("u1", "u2")
    assert lcc.item_ids == ("i1",)


def test_lcc_tie_breaks_on_edge_count():
    # two components with 4 nodes each; the right one has 4 edges, left 3
    g = make_graph([(0, 0), (0, 1), (1, 1),
                    (2, 2), (2, 3), (3, 2), (3, 3)])
    lcc = largest_connected_component(g)
    assert lcc.num_interactions == 4
    assert lcc.user_ids == ("u2", "u3")


def test_lcc_tie_breaks_on_lowest_index():
    # two identical 2-node/1-edge components: keep the one containing u0
    g = make_graph([(0, 0), (1, 1)])
    lcc = largest_connected_component(g)
    assert lcc.user_ids == ("u0",)
    assert lcc.item_ids == ("i0",)


def test_lcc_of_two_component_fixture(small_graph):
    # small_graph splits into {u0,u1 / i0,i1,i2} (5 edges) and
    # {u2,u3 / i3,i4} (3 edges); the first wins on node count
    lcc = largest_connected_component(small_graph)
    assert lcc.num_users == 2
    assert lcc.num_items == 3
    assert lcc.num_interactions == 5
    assert lcc.user_ids == ("u0", "u1")


# ---------------------------------------------------------------------------
# projection

def _project_bruteforce(g, partition):
    """All-pairs co-occurrence counts via explicit neighbor sets."""
    if partition == "user":
        adj = [set(map(int, a)) for a in g.user_adj]
    else:
        adj = [set(map(int, a)) for a in g.item_adj]
    weights = {}
    for v in range(len(adj)):
        for w in range(v + 1, len(adj)):
            shared = len(adj[v] & adj[w])
            if shared:
                weights[(v, w)] = shared
    return weights


@pytest.mark.parametrize("partition", ["user", "item"])
def test_projection_matches_bruteforce(rng, partition):
    for _ in range(40):
        g = random_bipartite(rng)
        expected = _project_bruteforce(g, partition)
        proj = project(g, partition)
        got = {(int(v), int(w)): int(wt)
               for v, w, wt in zip(proj.v, proj.w, proj.weight)}
        assert got == expected


def test_projection_degrees_count_distinct_coneighbors(rng):
    for _ in range(20):
        g = random_bipartite(rng)
        proj = project(g, "user")
        expected = np.zeros(g.num_users, dtype=int)
        for (v, w) in _project_bruteforce(g, "user"):
            expected[v] += 1
            expected[w] += 1
        assert np.array_equal(proj.degrees, expected)


def test_projection_k22(k22_graph):
    proj = project(k22_graph, "user")
    assert proj.num_edges == 1
    assert int(proj.weight[0]) == 2  # two shared items
    assert list(proj.degrees) == [1, 1]


def test_projection_cap_names_hub():
    # star: one item shared by 6 users -> 15 wedges
    g = make_graph([(u, 0) for u in range(6)])
    with pytest.raises(ProjectionCapError, match="'i0'"):
        project(g, "user", edge_cap=10)
    proj = project(g, "user", edge_cap=15)
    assert proj.num_edges == 15


def test_projection_relabeling_invariance(rng):
    """Permuting item labels must not change the user projection."""
    g = random_bipartite(rng, max_users=8, max_items=8, p=0.4)
    perm = rng.permutation(g.num_items)
    edges = g.edge_array().copy()
    edges[:, 1] = perm[edges[:, 1]]
    g2 = make_graph(list(map(tuple, edges)), g.num_users, g.num_items)
    p1, p2 = project(g, "user"), project(g2, "user")
    assert np.array_equal(p1.v, p2.v)
    assert np.array_equal(p1.w, p2.w)
    assert np.array_equal(p1.weight, p2.weight)
