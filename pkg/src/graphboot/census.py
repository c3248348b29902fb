"""Exact induced-subgraph census and motif densities.

Counting strategy by pattern size:

* p = 2, 3 — closed forms from the degree sequence and the triangle count.
* p = 4 — full eleven-class census: non-induced (spanning subgraph) counts
  of every 4-vertex class are computed from matrix quantities, then
  converted to induced counts by inverting the spanning-subgraph overlap
  matrix.  This covers disconnected classes, which subset enumeration of a
  large graph could never afford.
* p = 5..8, connected patterns — ESU-style enumeration of connected
  p-subsets classified by canonical key.
* anything else — brute-force subset enumeration, only when the number of
  subsets is small enough to be sane.

The density normalisation follows the ordered-tuple estimator: the count of
ordered p-tuples of distinct vertices inducing the pattern equals the
subset count times p!, and the density divides by C(n,p) * p! * N(R).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError
from .graphs import Graph, Motif, labeled_copy_count

__all__ = [
    "DensityReport",
    "count_induced_copies",
    "motif_density",
    "census_3",
    "census_4",
    "brute_force_census",
    "triangle_count",
]

_BRUTE_FORCE_SUBSET_LIMIT = 500_000


def triangle_count(graph: Graph) -> int:
    """Number of triangles, via one float32 matrix product."""
    a = graph.adjacency.astype(np.float32)
    return int(round(float(((a @ a) * a).sum()) / 6.0))


# ---------------------------------------------------------------------------
# Closed forms on 3 vertices
# ---------------------------------------------------------------------------

def census_3(graph: Graph) -> dict[bytes, int]:
    """Induced counts of all four 3-vertex classes, keyed by canonical key."""
    cached = graph._census_cache.get("census3")
    if cached is not None:
        return cached
    n = graph.node_count
    d = graph.degrees
    m = graph.edge_count
    tri = triangle_count(graph)
    wedges_total = int((d * (d - 1) // 2).sum())  # 2-paths, incl. those in triangles
    ind_wedge = wedges_total - 3 * tri
    # 3-sets holding exactly one edge: edge picks times third vertex, minus
    # the 3-sets with 2 or 3 edges counted with their inner-edge multiplicity
    one_edge = m * (n - 2) - 2 * ind_wedge - 3 * tri
    empty = math.comb(n, 3) - tri - ind_wedge - one_edge
    keys = {
        "tri": Motif(3, [(0, 1), (1, 2), (0, 2)]).canonical_key,
        "wedge": Motif(3, [(0, 1), (1, 2)]).canonical_key,
        "one": Motif(3, [(0, 1)]).canonical_key,
        "empty": Motif(3, []).canonical_key,
    }
    result = {
        keys["tri"]: tri,
        keys["wedge"]: ind_wedge,
        keys["one"]: one_edge,
        keys["empty"]: empty,
    }
    graph._census_cache["census3"] = result
    return result


# ---------------------------------------------------------------------------
# Full census on 4 vertices
# ---------------------------------------------------------------------------

def _four_vertex_classes() -> list[Motif]:
    """All eleven isomorphism classes on 4 vertices, sorted by edge count."""
    reps = []
    seen = set()
    for bits in range(64):
        edges = [
            pair
            for idx, pair in enumerate(itertools.combinations(range(4), 2))
            if (bits >> idx) & 1
        ]
        mot = Motif(4, edges)
        if mot.canonical_key not in seen:
            seen.add(mot.canonical_key)
            reps.append(mot)
    reps.sort(key=lambda mo: (mo.edge_count, mo.canonical_key))
    return reps


@lru_cache(maxsize=1)
def _spanning_overlap_matrix() -> tuple[tuple[Motif, ...], np.ndarray]:
    """Matrix c[h, t] = number of spanning subgraphs of class t isomorphic to h.

    Relates non-induced counts s(h) to induced counts i(t) through
    s(h) = sum_t c[h, t] * i(t); the matrix is unitriangular when classes
    are ordered by edge count, so integer back-substitution is exact.
    """
    classes = _four_vertex_classes()
    index = {mot.canonical_key: i for i, mot in enumerate(classes)}
    c = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for t_idx, t in enumerate(classes):
        t_edges = sorted(t.edges)
        for r in range(len(t_edges) + 1):
            for subset in itertools.combinations(t_edges, r):
                h_idx = index[Motif(4, subset).canonical_key]
                c[h_idx, t_idx] += 1
    return tuple(classes), c


def census_4(graph: Graph) -> dict[bytes, int]:
    """Induced counts of all eleven 4-vertex classes.

    Spanning-subgraph counts come from matrix quantities (degrees, codegrees,
    per-vertex triangle counts) plus a bit-row scan for the 4-clique; induced
    counts follow by back-substitution.  Cached on the graph.
    """
    cached = graph._census_cache.get("census4")
    if cached is not None:
        return cached
    n = graph.node_count
    if n < 4:
        classes, _ = _spanning_overlap_matrix()
        result = {mot.canonical_key: 0 for mot in classes}
        graph._census_cache["census4"] = result
        return result

    a = graph.adjacency.astype(np.float32)
    d = graph.degrees.astype(np.int64)
    m = graph.edge_count
    a2 = a @ a
    codeg = np.rint(a2).astype(np.int64)
    tri_per_vertex = np.rint((a2 * a).sum(axis=1)).astype(np.int64) // 2
    tri = int(tri_per_vertex.sum()) // 3
    adj = graph.adjacency

    p2_total = int((d * (d - 1) // 2).sum())
    iu = np.triu_indices(n, 1)
    codeg_u = codeg[iu]
    adj_u = adj[iu]

    span = {}
    span["e0"] = math.comb(n, 4)
    span["e1"] = m * math.comb(n - 2, 2)
    span["matching"] = math.comb(m, 2) - p2_total
    span["wedge_plus"] = p2_total * (n - 3)
    span["tri_plus"] = tri * (n - 3)
    span["star"] = int((d * (d - 1) * (d - 2) // 6).sum())
    du, dv = d[iu[0]], d[iu[1]]
    span["path4"] = int(((du - 1) * (dv - 1))[adj_u].sum()) - 3 * tri
    span["cycle4"] = int((codeg_u * (codeg_u - 1) // 2).sum()) // 2
    span["paw"] = int((tri_per_vertex * (d - 2)).sum())
    span["diamond"] = int((codeg_u[adj_u] * (codeg_u[adj_u] - 1) // 2).sum())

    # 4-cliques: for each edge, ordered vertex pairs adjacent inside the
    # common neighborhood; each clique is seen twice per each of its 6 edges
    rows = graph.bit_rows()
    k4_twelve = 0
    eu, ev = np.nonzero(np.triu(adj, 1))
    for u, v in zip(eu.tolist(), ev.tolist()):
        common = rows[u] & rows[v]
        c = common
        while c:
            w = (c & -c).bit_length() - 1
            k4_twelve += (rows[w] & common).bit_count()
            c &= c - 1
    span["k4"] = k4_twelve // 12

    classes, overlap = _spanning_overlap_matrix()
    # map spanning-count labels to class indices via edge structure
    label_for = {}
    for idx, mot in enumerate(classes):
        e = mot.edge_count
        if e == 0:
            label_for["e0"] = idx
        elif e == 1:
            label_for["e1"] = idx
        elif e == 2:
            degs = sorted(sum(1 for a_, b_ in mot.edges if v in (a_, b_)) for v in range(4))
            label_for["matching" if degs == [1, 1, 1, 1] else "wedge_plus"] = idx
        elif e == 3:
            degs = sorted(sum(1 for a_, b_ in mot.edges if v in (a_, b_)) for v in range(4))
            if degs == [0, 2, 2, 2]:
                label_for["tri_plus"] = idx
            elif degs == [1, 1, 1, 3]:
                label_for["star"] = idx
            else:
                label_for["path4"] = idx
        elif e == 4:
            degs = sorted(sum(1 for a_, b_ in mot.edges if v in (a_, b_)) for v in range(4))
            label_for["cycle4" if degs == [2, 2, 2, 2] else "paw"] = idx
        elif e == 5:
            label_for["diamond"] = idx
        else:
            label_for["k4"] = idx

    s_vec = np.zeros(len(classes), dtype=np.int64)
    for label, idx in label_for.items():
        s_vec[idx] = span[label]

    # back-substitute from the densest class down; overlap is unitriangular
    counts = np.zeros(len(classes), dtype=np.int64)
    for h_idx in range(len(classes) - 1, -1, -1):
        extra = int(overlap[h_idx, h_idx + 1 :] @ counts[h_idx + 1 :])
        counts[h_idx] = s_vec[h_idx] - extra
    result = {mot.canonical_key: int(counts[i]) for i, mot in enumerate(classes)}
    graph._census_cache["census4"] = result
    return result


# ---------------------------------------------------------------------------
# ESU enumeration and brute force
# ---------------------------------------------------------------------------

def _classify_subsets_esu(graph: Graph, p: int) -> dict[bytes, int]:
    """Counts of connected induced p-subgraph classes via recursive extension."""
    n = graph.node_count
    rows = graph.bit_rows()
    counts: dict[bytes, int] = {}
    adj = graph.adjacency

    def key_of(nodes: tuple[int, ...]) -> bytes:
        sub = adj[np.ix_(nodes, nodes)]
        edges = [(i, j) for i in range(p) for j in range(i + 1, p) if sub[i, j]]
        return Motif(p, edges).canonical_key

    def extend(sub: tuple[int, ...], extension: int, root: int) -> None:
        if len(sub) == p:
            k = key_of(sub)
            counts[k] = counts.get(k, 0) + 1
            return
        ext = extension
        while ext:
            w = (ext & -ext).bit_length() - 1
            ext &= ext - 1
            # new extension: current minus w, plus exclusive neighbors of w above root
            excl = rows[w] & ~((1 << (root + 1)) - 1)
            for v in sub:
                excl &= ~rows[v]
            excl &= ~(1 << w)
            new_ext = (ext | excl) & ~(1 << w)
            for v in sub:
                new_ext &= ~(1 << v)
            extend(sub + (w,), new_ext, root)

    for v in range(n):
        ext = rows[v] & ~((1 << (v + 1)) - 1)
        extend((v,), ext, v)
    return counts


def brute_force_census(graph: Graph, p: int) -> dict[bytes, int]:
    """Induced class counts by enumerating every p-subset (oracle-grade)."""
    n = graph.node_count
    total = math.comb(n, p)
    if total > _BRUTE_FORCE_SUBSET_LIMIT:
        raise InvalidParameterError(
            f"brute-force census over {total} subsets refused; use the closed forms"
        )
    adj = graph.adjacency
    counts: dict[bytes, int] = {}
    for nodes in itertools.combinations(range(n), p):
        sub = adj[np.ix_(nodes, nodes)]
        edges = [(i, j) for i in range(p) for j in range(i + 1, p) if sub[i, j]]
        k = Motif(p, edges).canonical_key
        counts[k] = counts.get(k, 0) + 1
    return counts


def count_induced_copies(graph: Graph, motif: Motif) -> int:
    """Number of vertex subsets whose induced subgraph is isomorphic to the motif."""
    p = motif.vertex_count
    n = graph.node_count
    if p > n:
        raise InvalidParameterError(f"motif on {p} vertices larger than graph on {n}")
    if p == 2:
        return graph.edge_count if motif.edge_count == 1 else math.comb(n, 2) - graph.edge_count
    if p == 3:
        return census_3(graph).get(motif.canonical_key, 0)
    if p == 4:
        return census_4(graph).get(motif.canonical_key, 0)
    if motif.is_connected():
        cached = graph._census_cache.get(("esu", p))
        if cached is None:
            cached = _classify_subsets_esu(graph, p)
            graph._census_cache[("esu", p)] = cached
        return cached.get(motif.canonical_key, 0)
    return brute_force_census(graph, p).get(motif.canonical_key, 0)


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityReport:
    """Raw and normalized motif densities of one graph.

    raw_density is the probability that a uniformly random p-subset induces
    the motif's class, divided by N(R); normalized_density divides further
    by edge_density^{edge_count} and is None for an empty graph.
    """

    motif: Motif
    raw_density: float
    normalized_density: float | None
    edge_density: float
    ordered_match_count: int

    @property
    def subset_count(self) -> int:
        return self.ordered_match_count // math.factorial(self.motif.vertex_count)


def motif_density(graph: Graph, motif: Motif) -> DensityReport:
    """Induced density of the motif with the ordered-tuple normalisation."""
    p = motif.vertex_count
    n = graph.node_count
    subsets = count_induced_copies(graph, motif)
    ordered = subsets * math.factorial(p)
    denom = math.comb(n, p) * math.factorial(p) * labeled_copy_count(motif)
    raw = ordered / denom
    rho = graph.edge_density
    normalized = raw / rho**motif.edge_count if rho > 0 else None
    return DensityReport(
        motif=motif,
        raw_density=raw,
        normalized_density=normalized,
        edge_density=rho,
        ordered_match_count=ordered,
    )
