"""The eleven graph characteristics against independent oracles."""

import math

import numpy as np
import pytest

from topocf.characteristics import (SHORTHAND_NAMES, assortativity_from_mixing,
                                    average_clustering_coefficient,
                                    average_degree, classical_characteristics,
                                    classical_from_counts, compute_vector,
                                    degree_assortativity,
                                    degree_distribution_fit,
                                    degree_mixing_table, gini, pearson_matrix,
                                    read_characteristics_csv,
                                    write_characteristics_csv)
from topocf.graph import project
from topocf.synthetic import heavy_tailed_graph

from conftest import make_graph, random_bipartite


# ---------------------------------------------------------------------------
# Gini coefficient

def _gini_pairwise(values):
    """O(n^2) oracle: sum of absolute pairwise differences."""
    x = np.asarray(values, dtype=float)
    n = len(x)
    total = sum(abs(a - b) for a in x for b in x)
    return total / (2 * n * n * x.mean())


def test_gini_known_value():
    assert gini([1, 2, 3, 4]) == pytest.approx(0.25, abs=1e-12)


def test_gini_uniform_is_zero():
    assert gini([5, 5, 5, 5]) == pytest.approx(0.0, abs=1e-12)


def test_gini_concentration_limit():
    # one node holding everything approaches (n-1)/n
    values = [0.0] * 9 + [100.0]
    assert gini(values) == pytest.approx(0.9, abs=1e-12)


def test_gini_matches_pairwise_oracle(rng):
    for _ in range(50):
        x = rng.integers(1, 50, size=int(rng.integers(2, 40)))
        assert gini(x) == pytest.approx(_gini_pairwise(x), abs=1e-9)


def test_gini_rejects_degenerate_input():
    with pytest.raises(ValueError):
        gini([])
    with pytest.raises(ValueError):
        gini([0, 0])


# ---------------------------------------------------------------------------
# classical characteristics

def test_classical_from_counts_values():
    out = classical_from_counts(100, 50, 1000)
    assert out["shape"] == pytest.approx(2.0)
    assert out["density"] == pytest.approx(0.2)
    assert out["space_size"] == pytest.approx(math.sqrt(0.1 * 0.05))
    assert out["density_log"] == pytest.approx(math.log10(0.2))


def test_classical_counts_vs_adjacency(rng):
    for _ in range(10):
        g = random_bipartite(rng)
        out = classical_characteristics(g)
        # recompute the counts from the adjacency lists themselves
        U = len(g.user_adj)
        I = len(g.item_adj)
        E = sum(len(a) for a in g.user_adj)
        again = classical_from_counts(U, I, E)
        for key in ("space_size_log", "shape_log", "density_log"):
            assert out[key] == pytest.approx(again[key], abs=1e-12)


def test_average_degree(small_graph):
    raw_u, log_u = average_degree(small_graph, "user")
    raw_i, log_i = average_degree(small_graph, "item")
    assert raw_u == pytest.approx(8 / 4)
    assert raw_i == pytest.approx(8 / 5)
    assert log_u == pytest.approx(math.log10(2.0))
    assert log_i == pytest.approx(math.log10(1.6))


# ---------------------------------------------------------------------------
# clustering coefficient

def _clustering_bruteforce(g, partition):
    """All-pairs Jaccard oracle over explicit neighbor sets."""
    adj = ([set(map(int, a)) for a in g.user_adj] if partition == "user"
           else [set(map(int, a)) for a in g.item_adj])
    n = len(adj)
    values = []
    for v in range(n):
        neighbors2 = [w for w in range(n)
                      if w != v and adj[v] & adj[w]]
        if not neighbors2:
            values.append(0.0)
            continue
        jac = [len(adj[v] & adj[w]) / len(adj[v] | adj[w])
               for w in neighbors2]
        values.append(sum(jac) / len(jac))
    return sum(values) / n


@pytest.mark.parametrize("partition", ["user", "item"])
def test_clustering_matches_jaccard_oracle(rng, partition):
    for _ in range(40):
        g = random_bipartite(rng)
        raw, _ = average_clustering_coefficient(g, partition)
        assert raw == pytest.approx(_clustering_bruteforce(g, partition),
                                    abs=1e-9)


def test_clustering_k22_is_one(k22_graph):
    raw, log10_value = average_clustering_coefficient(k22_graph, "user")
    assert raw == pytest.approx(1.0)
    assert log10_value == pytest.approx(0.0)


def test_clustering_three_user_path():
    # u0-i0, u1-i0, u1-i1, u2-i1: every Jaccard overlap is 1/2
    g = make_graph([(0, 0), (1, 0), (1, 1), (2, 1)])
    raw, log10_value = average_clustering_coefficient(g, "user")
    assert raw == pytest.approx(0.5)
    assert log10_value == pytest.approx(math.log10(0.5))


def test_clustering_disconnected_projection_is_nan_log():
    # two users with disjoint items: no co-occurrence at all
    g = make_graph([(0, 0), (1, 1)])
    raw, log10_value = average_clustering_coefficient(g, "user")
    assert raw == 0.0
    assert math.isnan(log10_value)


# ---------------------------------------------------------------------------
# assortativity

def _assortativity_pearson_oracle(proj):
    """Independent two-pass Pearson over the symmetric endpoint pairs."""
    deg = proj.degrees.astype(float)
    x = np.concatenate([deg[proj.v], deg[proj.w]])
    y = np.concatenate([deg[proj.w], deg[proj.v]])
    if x.std() == 0:
        return math.nan
    return float(np.corrcoef(x, y)[0, 1])


def test_assortativity_matches_pearson_oracle(rng):
    checked = 0
    for _ in range(200):
        g = random_bipartite(rng)
        proj = project(g, "user")
        if proj.num_edges == 0:
            continue
        got = degree_assortativity(proj)
        expected = _assortativity_pearson_oracle(proj)
        if math.isnan(expected):
            assert math.isnan(got)
        else:
            assert got == pytest.approx(expected, abs=1e-9)
            checked += 1
    assert checked >= 50


def test_assortativity_matches_mixing_matrix_route(rng):
    checked = 0
    for _ in range(200):
        g = random_bipartite(rng)
        proj = project(g, "item")
        if proj.num_edges == 0:
            continue
        got = degree_assortativity(proj)
        via_mixing = assortativity_from_mixing(degree_mixing_table(proj))
        if math.isnan(got):
            assert math.isnan(via_mixing)
        else:
            assert got == pytest.approx(via_mixing, abs=1e-9)
            checked += 1
    assert checked >= 50


def test_assortativity_path_is_minus_one():
    # user projection is a 3-node path: perfectly disassortative
    g = make_graph([(0, 0), (1, 0), (1, 1), (2, 1)])
    proj = project(g, "user")
    assert degree_assortativity(proj) == pytest.approx(-1.0)


def test_assortativity_regular_projection_is_nan(k22_graph):
    proj = project(k22_graph, "user")
    assert math.isnan(degree_assortativity(proj))


# ---------------------------------------------------------------------------
# full vector and downstream helpers

def test_compute_vector_field_order():
    g = heavy_tailed_graph(num_users=60, num_items=40, num_interactions=500,
                           seed=0)
    vec = compute_vector(g)
    row = vec.as_row()
    assert len(row) == len(SHORTHAND_NAMES) == 11
    assert row[0] == vec.space_size_log
    assert row[4] == vec.gini_item
    assert row[10] == vec.assort_item


def test_compute_vector_undefined_fields():
    # star graph: every co-occurring user has identical degree
    g = make_graph([(u, 0) for u in range(5)])
    vec = compute_vector(g)
    undefined = vec.undefined_fields()
    assert "Assort-U" in undefined
    assert "Gini-U" not in undefined


def test_pearson_matrix_against_two_pass_oracle(rng):
    g = heavy_tailed_graph(num_users=120, num_items=80, num_interactions=900,
                           seed=1)
    from topocf.sampling import generate_samples

    vectors = [compute_vector(s.graph)
               for s in generate_samples(g, 12, master_seed=0)]
    matrix = pearson_matrix(vectors)
    rows = np.array([v.as_row() for v in vectors])
    rows = rows[np.isfinite(rows).all(axis=1)]
    for a in range(11):
        for b in range(11):
            xa, xb = rows[:, a], rows[:, b]
            expected = (((xa - xa.mean()) * (xb - xb.mean())).sum()
                        / math.sqrt(((xa - xa.mean()) ** 2).sum()
                                    * ((xb - xb.mean()) ** 2).sum()))
            assert matrix[a, b] == pytest.approx(expected, abs=1e-9)
    assert np.allclose(np.diag(matrix), 1.0)
    assert np.allclose(matrix, matrix.T)


def test_pearson_matrix_needs_enough_rows():
    g = heavy_tailed_graph(num_users=60, num_items=40, num_interactions=400,
                           seed=2)
    vec = compute_vector(g)
    with pytest.raises(ValueError, match="at least 3"):
        pearson_matrix([vec, vec])


def test_degree_distribution_fit_prefers_power_law_on_heavy_tail():
    g = heavy_tailed_graph(num_users=400, num_items=300,
                           num_interactions=4000, seed=3)
    fit = degree_distribution_fit(g, "item")
    assert fit.power_law_slope < 0
    assert fit.power_law_residual < fit.exponential_residual
    assert fit.probabilities.sum() == pytest.approx(1.0)


def test_degree_distribution_fit_needs_three_degrees(k22_graph):
    with pytest.raises(ValueError, match="3 distinct"):
        degree_distribution_fit(k22_graph)


def test_characteristics_csv_round_trip(tmp_path):
    g = heavy_tailed_graph(num_users=60, num_items=40, num_interactions=400,
                           seed=4)
    vec = compute_vector(g)
    star = compute_vector(make_graph([(u, 0) for u in range(5)]))
    path = tmp_path / "chars.csv"
    write_characteristics_csv([(0, vec), (1, star)], path)
    header = path.read_text().splitlines()[0]
    assert header == "sample_id," + ",".join(SHORTHAND_NAMES)
    rows = read_characteristics_csv(path)
    assert [sid for sid, _ in rows] == [0, 1]
    np.testing.assert_array_equal(rows[0][1], np.array(vec.as_row()))
    # NaN round-trips as NaN
    assert math.isnan(rows[1][1][SHORTHAND_NAMES.index("Assort-U")])
