"""Classical and topological characteristics of a bipartite user-item graph.

Eleven metrics per graph: space size, shape, density, user/item Gini,
user/item average degree, user/item average clustering coefficient, and
user/item degree assortativity on the projected graphs. Six of them are
reported on a log10 scale; undefined values (e.g. assortativity of a
regular projection) are carried as NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import DEFAULT_PROJECTION_EDGE_CAP, project


SHORTHAND_NAMES = (
    "SpaceSize_log",
    "Shape_log",
    "Density_log",
    "Gini-U",
    "Gini-I",
    "AvgDegree-U_log",
    "AvgDegree-I_log",
    "AvgClustC-U_log",
    "AvgClustC-I_log",
    "Assort-U",
    "Assort-I",
)

CSV_HEADER = "sample_id," + ",".join(SHORTHAND_NAMES)


@dataclass(frozen=True)
class CharacteristicVector:
    """The eleven metric values for one graph, raw and log10-rescaled."""

    space_size_log: float
    shape_log: float
    density_log: float
    gini_user: float
    gini_item: float
    avg_degree_user_log: float
    avg_degree_item_log: float
    avg_clustc_user_log: float
    avg_clustc_item_log: float
    assort_user: float
    assort_item: float
    # raw (pre-log10) companions for the six rescaled fields
    space_size: float
    shape: float
    density: float
    avg_degree_user: float
    avg_degree_item: float
    avg_clustc_user: float
    avg_clustc_item: float

    def as_row(self):
        """Values in Table-shorthand order (matches SHORTHAND_NAMES)."""
        return [
            self.space_size_log, self.shape_log, self.density_log,
            self.gini_user, self.gini_item,
            self.avg_degree_user_log, self.avg_degree_item_log,
            self.avg_clustc_user_log, self.avg_clustc_item_log,
            self.assort_user, self.assort_item,
        ]

    def undefined_fields(self):
        return [name for name, value in zip(SHORTHAND_NAMES, self.as_row())
                if not math.isfinite(value)]


@dataclass(frozen=True)
class DegreeMixingTable:
    """Joint degree-degree fractions over directed edge endpoints.

    ``e[h, k]`` is the fraction of directed edges whose endpoints have
    degrees ``degrees[h]`` and ``degrees[k]``; ``q`` is the marginal and
    ``std_q`` its standard deviation.
    """

    degrees: np.ndarray
    e: np.ndarray
    q: np.ndarray
    std_q: float


def gini(values):
    """Concentration of a degree sequence via the pairwise-difference form,
    computed with the sort-based O(n log n) identity."""
    x = np.sort(np.asarray(values, dtype=np.float64))
    n = len(x)
    total = x.sum()
    if n < 1 or total == 0:
        raise ValueError("gini needs a nonempty sequence with positive sum")
    ranks = 2 * np.arange(n) - n + 1
    return float((ranks * x).sum() / (n * total))


def classical_from_counts(num_users, num_items, num_interactions):
    """Space size, shape, and density (raw and log10) from counts alone.

    Space size counts users and items in thousands before the square root,
    so that log10 values land in the low single digits.
    """
    U, I, E = num_users, num_items, num_interactions
    if U < 1 or I < 1 or E < 1:
        raise ValueError("graph must have at least one user, item and edge")
    space_size = math.sqrt((U / 1000.0) * (I / 1000.0))
    shape = U / I
    density = E / (U * I)
    return {
        "space_size": space_size,
        "space_size_log": math.log10(space_size),
        "shape": shape,
        "shape_log": math.log10(shape),
        "density": density,
        "density_log": math.log10(density),
    }


def classical_characteristics(g):
    """Space size, shape, density (log10) and both Gini coefficients."""
    out = classical_from_counts(g.num_users, g.num_items, g.num_interactions)
    out["gini_user"] = gini(g.user_degrees)
    out["gini_item"] = gini(g.item_degrees)
    return out


def average_degree(g, partition):
    """Mean first-order neighborhood size over one partition (raw, log10)."""
    degrees = g.user_degrees if partition == "user" else g.item_degrees
    if len(degrees) == 0:
        raise ValueError(f"empty {partition} partition")
    raw = float(degrees.mean())
    return raw, math.log10(raw)


def average_clustering_coefficient(g, partition, proj=None):
    """Mean pairwise-Jaccard clustering coefficient over one partition.

    Per node v, its second-order neighbors are the same-partition nodes
    sharing at least one direct neighbor; the node value is the mean
    Jaccard overlap with them, 0 if it has no second-order neighbors.
    Returns (raw mean, log10 or NaN when the mean is zero).
    """
    if proj is None:
        proj = project(g, partition)
    bipartite_deg = g.user_degrees if partition == "user" else g.item_degrees
    if proj.n == 0:
        raise ValueError(f"empty {partition} partition")
    if proj.num_edges == 0:
        return 0.0, math.nan
    union = bipartite_deg[proj.v] + bipartite_deg[proj.w] - proj.weight
    jaccard = proj.weight / union
    sums = np.zeros(proj.n)
    np.add.at(sums, proj.v, jaccard)
    np.add.at(sums, proj.w, jaccard)
    per_node = np.where(proj.degrees > 0,
                        sums / np.maximum(proj.degrees, 1), 0.0)
    raw = float(per_node.mean())
    return raw, (math.log10(raw) if raw > 0 else math.nan)


def degree_assortativity(proj):
    """Pearson correlation of endpoint degrees over the symmetric edge
    list of the binarized, self-loop-free projection.

    Returns NaN when the endpoint degrees have zero variance (regular
    projection), which callers record and exclude downstream.
    """
    if proj.num_edges < 1:
        raise ValueError("projection has no edges")
    deg = proj.degrees.astype(np.float64)
    x = np.concatenate([deg[proj.v], deg[proj.w]])
    y = np.concatenate([deg[proj.w], deg[proj.v]])
    xc = x - x.mean()
    yc = y - y.mean()
    var = (xc * xc).sum()
    if var == 0:
        return math.nan
    return float((xc * yc).sum() / var)


def degree_mixing_table(proj):
    """Degree-mixing fractions of a projection's symmetric edge list."""
    if proj.num_edges < 1:
        raise ValueError("projection has no edges")
    deg = proj.degrees
    degrees = np.unique(np.concatenate([deg[proj.v], deg[proj.w]]))
    index = {int(d): k for k, d in enumerate(degrees)}
    D = len(degrees)
    e = np.zeros((D, D))
    for a, b in ((proj.v, proj.w), (proj.w, proj.v)):
        for dv, dw in zip(deg[a], deg[b]):
            e[index[int(dv)], index[int(dw)]] += 1.0
    e /= e.sum()
    q = e.sum(axis=1)
    mean_q = float((degrees * q).sum())
    var_q = float((degrees.astype(np.float64) ** 2 * q).sum() - mean_q ** 2)
    return DegreeMixingTable(degrees=degrees.astype(np.float64), e=e, q=q,
                             std_q=math.sqrt(max(var_q, 0.0)))


def assortativity_from_mixing(table):
    """Evaluate assortativity from the degree-mixing form."""
    if table.std_q == 0:
        return math.nan
    d = table.degrees
    outer = np.outer(d, d)
    return float((outer * (table.e - np.outer(table.q, table.q))).sum()
                 / table.std_q ** 2)


def compute_vector(g, edge_cap=DEFAULT_PROJECTION_EDGE_CAP):
    """All eleven characteristics of one graph.

    The user and item projections are built once and reused for both the
    clustering coefficients and the assortativities.
    """
    classical = classical_characteristics(g)
    proj_u = project(g, "user", edge_cap=edge_cap)
    proj_i = project(g, "item", edge_cap=edge_cap)
    avg_deg_u, avg_deg_u_log = average_degree(g, "user")
    avg_deg_i, avg_deg_i_log = average_degree(g, "item")
    clust_u, clust_u_log = average_clustering_coefficient(g, "user", proj=proj_u)
    clust_i, clust_i_log = average_clustering_coefficient(g, "item", proj=proj_i)
    assort_u = degree_assortativity(proj_u) if proj_u.num_edges else math.nan
    assort_i = degree_assortativity(proj_i) if proj_i.num_edges else math.nan
    return CharacteristicVector(
        space_size_log=classical["space_size_log"],
        shape_log=classical["shape_log"],
        density_log=classical["density_log"],
        gini_user=classical["gini_user"],
        gini_item=classical["gini_item"],
        avg_degree_user_log=avg_deg_u_log,
        avg_degree_item_log=avg_deg_i_log,
        avg_clustc_user_log=clust_u_log,
        avg_clustc_item_log=clust_i_log,
        assort_user=assort_u,
        assort_item=assort_i,
        space_size=classical["space_size"],
        shape=classical["shape"],
        density=classical["density"],
        avg_degree_user=avg_deg_u,
        avg_degree_item=avg_deg_i,
        avg_clustc_user=clust_u,
        avg_clustc_item=clust_i,
    )


def pearson_matrix(vectors):
    """Pairwise Pearson correlations of the eleven characteristics.

    Rows containing undefined (NaN) fields are dropped first; a remaining
    zero-variance column is an error naming the characteristic.
    """
    rows = np.array([v.as_row() for v in vectors], dtype=np.float64)
    rows = rows[np.isfinite(rows).all(axis=1)]
    if len(rows) < 3:
        raise ValueError("need at least 3 fully defined characteristic vectors")
    stds = rows.std(axis=0)
    for name, s in zip(SHORTHAND_NAMES, stds):
        if s == 0:
            raise ValueError(f"characteristic {name!r} has zero variance")
    return np.corrcoef(rows, rowvar=False)


@dataclass(frozen=True)
class DegreeDistributionFit:
    """Empirical degree histogram with power-law and exponential OLS fits
    of log-probability (natural log) against log-degree and degree."""

    degrees: np.ndarray
    probabilities: np.ndarray
    power_law_slope: float
    power_law_intercept: float
    power_law_residual: float
    exponential_slope: float
    exponential_intercept: float
    exponential_residual: float


def degree_distribution_fit(g, partition="all"):
    """Fit the empirical degree distribution of one side (or all nodes)."""
    if partition == "user":
        deg = g.user_degrees
    elif partition == "item":
        deg = g.item_degrees
    elif partition == "all":
        deg = np.concatenate([g.user_degrees, g.item_degrees])
    else:
        raise ValueError(f"unknown partition {partition!r}")
    values, counts = np.unique(deg[deg > 0], return_counts=True)
    if len(values) < 3:
        raise ValueError("degree distribution needs >= 3 distinct degrees")
    probs = counts / counts.sum()
    logp = np.log(probs)
    pl_slope, pl_icpt = np.polyfit(np.log(values.astype(float)), logp, 1)
    pl_res = float(((np.polyval([pl_slope, pl_icpt],
                                np.log(values.astype(float))) - logp) ** 2).sum())
    ex_slope, ex_icpt = np.polyfit(values.astype(float), logp, 1)
    ex_res = float(((np.polyval([ex_slope, ex_icpt],
                                values.astype(float)) - logp) ** 2).sum())
    return DegreeDistributionFit(
        degrees=values, probabilities=probs,
        power_law_slope=float(pl_slope), power_law_intercept=float(pl_icpt),
        power_law_residual=pl_res,
        exponential_slope=float(ex_slope), exponential_intercept=float(ex_icpt),
        exponential_residual=ex_res,
    )


def write_degree_distribution(fit, path):
    with open(path, "w", encoding="utf-8") as fh:
        for d, p in zip(fit.degrees, fit.probabilities):
            fh.write(f"{int(d)}\t{p!r}\n")


def write_characteristics_csv(rows, path):
    """Write ``(sample_id, CharacteristicVector)`` pairs with the exact
    Table-shorthand header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(CSV_HEADER + "\n")
        for sample_id, vec in rows:
            fields = ",".join(repr(v) for v in vec.as_row())
            fh.write(f"{sample_id},{fields}\n")


def read_characteristics_csv(path):
    """Read rows back as (sample_id, values-in-shorthand-order)."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected characteristics header: {header!r}")
        for line in fh:
            parts = line.strip().split(",")
            rows.append((int(parts[0]),
                         np.array([float(x) for x in parts[1:]])))
    return rows


def write_correlation_csv(matrix, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("," + ",".join(SHORTHAND_NAMES) + "\n")
        for name, row in zip(SHORTHAND_NAMES, matrix):
            fh.write(name + "," + ",".join(repr(v) for v in row) + "\n")
