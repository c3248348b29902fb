"""Merged-copy sets, merge-collision sets, exact expected densities, and the
second-moment calculus for motif densities.

Two catalogs drive everything:

* The merged-copy catalog of a motif R lists, for each k in p..2p, the
  isomorphism classes W on k vertices that can carry two covering copies of
  R, with the coefficient D(W) = number of ordered pairs of ordered
  p-tuples covering 1..k whose induced subgraphs are both isomorphic to R.
  The second moment of the motif density is then

      E[P_R^2] * (C(n,p) p! N(R))^2
          = sum_k C(n,k) * sum_W N(W) * D(W) * P_W

  with P_W the pattern probability under the generating link function.
  The constant is certified against a brute-force enumeration oracle
  rather than trusted from any derivation.

* The merge-collision catalog of a motif S lists quotients of S under
  partitions of V(S) into independent cells.  Under the empirical (step
  function) link, latent draws that collide on a node merge motif
  vertices; a partition contributes exactly when, between every two cells,
  the motif pairs are uniformly edges or uniformly non-edges (otherwise
  the {0,1} pattern product is identically zero).  Entries carry that
  exactness flag, and the exact expected density reads

      P_S(empirical) = sum_j (n)_j / n^p * sum_{W exact} mult(W) * P_W(G_n)

  with (n)_j the falling factorial and P_W(G_n) the observed induced
  density.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .census import motif_density
from .errors import InvalidParameterError, UnsupportedMethodError
from .estimators import HistogramModel
from .graphs import Graph, Motif, labeled_copy_count
from .graphons import GraphonSpec, true_motif_probability

__all__ = [
    "MergedCopyEntry",
    "MergedCopyCatalog",
    "MergeCollisionEntry",
    "MergeCollisionCatalog",
    "merged_copy_catalog",
    "merge_collision_catalog",
    "TrueGraphonProvider",
    "EmpiricalProvider",
    "HistogramProvider",
    "expected_motif_density",
    "density_second_moment",
    "variance_sigma2",
    "brute_force_moments",
    "catalog_to_json",
    "collision_catalog_to_json",
]

_EXACT_ASSIGNMENT_LIMIT = 20_000_000
_MIXTURE_LIMIT = 300_000


# ---------------------------------------------------------------------------
# Merged copy catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MergedCopyEntry:
    motif: Motif
    coefficient: int  # D(W): ordered covering tuple pairs with both copies induced


@dataclass(frozen=True)
class MergedCopyCatalog:
    base_motif: Motif
    entries: dict[int, tuple[MergedCopyEntry, ...]]

    def all_entries(self):
        for k in sorted(self.entries):
            for entry in self.entries[k]:
                yield k, entry


def _labeled_copies(motif: Motif, support: tuple[int, ...]) -> list[frozenset]:
    """Distinct labeled edge sets of copies of the motif on the given vertices."""
    seen = set()
    for perm in itertools.permutations(support):
        edges = frozenset(
            (perm[u], perm[v]) if perm[u] < perm[v] else (perm[v], perm[u])
            for u, v in motif.edges
        )
        seen.add(edges)
    return sorted(seen, key=sorted)


def _covering_coefficient(rep: Motif, base: Motif) -> int:
    """D(W): ordered pairs of ordered p-tuples covering V(W), both inducing base."""
    k = rep.vertex_count
    p = base.vertex_count
    adj = rep.adjacency()
    base_key = base.canonical_key
    good_subsets = []
    for sub in itertools.combinations(range(k), p):
        block = adj[np.ix_(sub, sub)]
        edges = [(i, j) for i in range(p) for j in range(i + 1, p) if block[i, j]]
        if Motif(p, edges).canonical_key == base_key:
            good_subsets.append(frozenset(sub))
    full = frozenset(range(k))
    pairs = sum(
        1 for s1 in good_subsets for s2 in good_subsets if s1 | s2 == full
    )
    return pairs * math.factorial(p) ** 2


_merged_cache: dict[bytes, MergedCopyCatalog] = {}


def merged_copy_catalog(motif: Motif) -> MergedCopyCatalog:
    """Enumerate merged-copy classes and coefficients for a motif on p <= 4 nodes.

    Candidates on k vertices are built as two placed copies of the motif
    whose supports cover 1..k, together with every subset of the dyads
    between the exclusive parts of the two supports; membership and the
    coefficient are then recomputed from scratch on each isomorphism-class
    representative, so the generation pattern only has to be exhaustive,
    never clever.
    """
    p = motif.vertex_count
    if p > 4:
        raise InvalidParameterError("merged-copy catalogs support motifs on p <= 4 vertices")
    cached = _merged_cache.get(motif.canonical_key)
    if cached is not None:
        return cached

    entries: dict[int, tuple[MergedCopyEntry, ...]] = {}
    for k in range(p, 2 * p + 1):
        s1 = tuple(range(p))
        s2 = tuple(range(k - p, k))
        excl1 = [v for v in s1 if v not in s2]
        excl2 = [v for v in s2 if v not in s1]
        cross = [(a, b) for a in excl1 for b in excl2]
        copies1 = _labeled_copies(motif, s1)
        copies2 = _labeled_copies(motif, s2)
        if k == 2 * p:
            # disjoint supports: fixing both placements loses no classes,
            # since support-preserving relabelings act on candidates
            copies1 = copies1[:1]
            copies2 = copies2[:1]
        seen_labeled: set[frozenset] = set()
        for c1 in copies1:
            for c2 in copies2:
                base_edges = c1 | c2
                for bits in range(1 << len(cross)):
                    extra = frozenset(
                        cross[i] for i in range(len(cross)) if (bits >> i) & 1
                    )
                    seen_labeled.add(base_edges | extra)
        by_class: dict[bytes, Motif] = {}
        for edge_set in seen_labeled:
            mot = Motif(k, edge_set)
            if mot.canonical_key not in by_class:
                by_class[mot.canonical_key] = mot.canonical_form()
        bucket = []
        for key in sorted(by_class):
            rep = by_class[key]
            d = _covering_coefficient(rep, motif)
            if d > 0:
                bucket.append(MergedCopyEntry(rep, d))
        entries[k] = tuple(bucket)
    catalog = MergedCopyCatalog(motif, entries)
    _merged_cache[motif.canonical_key] = catalog
    return catalog


# ---------------------------------------------------------------------------
# Merge collision catalog
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MergeCollisionEntry:
    motif: Motif | None  # None encodes the single-vertex quotient
    multiplicity: int
    exact: bool  # True when every cross-cell pair block is uniform


@dataclass(frozen=True)
class MergeCollisionCatalog:
    base_motif: Motif
    entries: dict[int, tuple[MergeCollisionEntry, ...]]

    def independent_partition_count(self) -> int:
        return sum(e.multiplicity for bucket in self.entries.values() for e in bucket)


def _set_partitions(items: list[int]):
    """All set partitions, by recursive placement into existing or new cells."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in _set_partitions(rest):
        for idx in range(len(sub)):
            yield sub[:idx] + [sub[idx] + [first]] + sub[idx + 1 :]
        yield [[first]] + sub


_collision_cache: dict[bytes, MergeCollisionCatalog] = {}


def merge_collision_catalog(motif: Motif) -> MergeCollisionCatalog:
    """Quotients of the motif under partitions into independent cells.

    Cells containing an edge are discarded outright (a collision on an edge
    would require a self-loop, which has probability zero).  Heterogeneous
    partitions, where some cell pair carries both edges and non-edges, stay
    in the catalog for counting purposes but are flagged exact=False: their
    pattern terms vanish identically.
    """
    q = motif.vertex_count
    if q > 6:
        raise InvalidParameterError("merge-collision catalogs support motifs on q <= 6 vertices")
    cached = _collision_cache.get(motif.canonical_key)
    if cached is not None:
        return cached
    adj = motif.adjacency()
    grouped: dict[tuple[int, bytes | None, bool], int] = {}
    reps: dict[tuple[int, bytes | None, bool], Motif | None] = {}
    for cells in _set_partitions(list(range(q))):
        if any(
            adj[u, v] for cell in cells for u, v in itertools.combinations(cell, 2)
        ):
            continue
        j = len(cells)
        exact = True
        quotient_edges = []
        for a, b in itertools.combinations(range(j), 2):
            vals = {bool(adj[u, v]) for u in cells[a] for v in cells[b]}
            if vals == {True, False}:
                exact = False
            if True in vals:
                quotient_edges.append((a, b))
        if j == 1:
            key = (1, None, exact)
            reps.setdefault(key, None)
        else:
            mot = Motif(j, quotient_edges).canonical_form()
            key = (j, mot.canonical_key, exact)
            reps.setdefault(key, mot)
        grouped[key] = grouped.get(key, 0) + 1
    entries: dict[int, list[MergeCollisionEntry]] = {}
    for key in sorted(grouped, key=lambda t: (t[0], t[1] or b"", t[2])):
        j, _, exact = key
        entries.setdefault(j, []).append(
            MergeCollisionEntry(reps[key], grouped[key], exact)
        )
    catalog = MergeCollisionCatalog(
        motif, {j: tuple(v) for j, v in entries.items()}
    )
    _collision_cache[motif.canonical_key] = catalog
    return catalog


# ---------------------------------------------------------------------------
# Link providers
# ---------------------------------------------------------------------------

def _pattern_sum_over_blocks(level_probs: np.ndarray, weights: np.ndarray, motif: Motif) -> float:
    """Sum over block assignments of the edge/non-edge product.

    ``level_probs[a, b]`` is the link value between levels a and b and
    ``weights[a]`` the probability of each level; levels are independent
    across the motif's vertices.
    """
    r = level_probs.shape[0]
    p = motif.vertex_count
    if r**p > _EXACT_ASSIGNMENT_LIMIT:
        raise UnsupportedMethodError(
            f"exact assignment sum with r={r}, p={p} is too large; use monte-carlo"
        )
    assign = np.array(
        np.unravel_index(np.arange(r**p), (r,) * p)
    )  # (p, r^p)
    total = np.ones(r**p)
    for i in range(p):
        for j in range(i + 1, p):
            h = level_probs[assign[i], assign[j]]
            total *= h if (i, j) in motif.edges else (1.0 - h)
    weight = np.ones(r**p)
    for i in range(p):
        weight *= weights[assign[i]]
    return float((total * weight).sum())


def _mc_pattern_mean(
    link_matrix_lookup, motif: Motif, mc_samples: int, seed: int, index_sampler
) -> tuple[float, float]:
    """Monte-carlo mean of the pattern product for step-function links."""
    p = motif.vertex_count
    gen = rngmod.stream(seed, "expected-density-mc")
    batch = 200_000
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < mc_samples:
        b = min(batch, mc_samples - done)
        idx = index_sampler(gen, b, p)
        vals = np.ones(b)
        for i in range(p):
            for j in range(i + 1, p):
                h = link_matrix_lookup(idx[:, i], idx[:, j])
                vals *= h if (i, j) in motif.edges else (1.0 - h)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += b
    mean = total / mc_samples
    var = max(total_sq / mc_samples - mean * mean, 0.0)
    return mean, math.sqrt(var / mc_samples)


@dataclass(frozen=True)
class TrueGraphonProvider:
    """Pattern probabilities under the generating link function itself."""

    spec: GraphonSpec
    rho: float

    def edge_density(self) -> float:
        return self.rho  # the shape integrates to one

    def motif_probability(
        self, motif: Motif, method: str = "exact", mc_samples: int = 1_000_000, seed: int = 0
    ) -> tuple[float, float]:
        if method == "exact":
            return true_motif_probability(self.spec, self.rho, motif, "closed-form")
        return true_motif_probability(
            self.spec, self.rho, motif, "monte-carlo", mc_samples=mc_samples, seed=seed
        )

    def independent_edge_mixture(self, n: int):
        if self.spec.kind != "constant":
            raise UnsupportedMethodError(
                "per-pair edge probabilities after integrating the latents are only "
                "available for the constant kind"
            )
        yield 1.0, np.full((n, n), self.rho)

    def describe(self) -> str:
        return f"true-graphon({self.spec.kind}, rho={self.rho})"


@dataclass(frozen=True)
class EmpiricalProvider:
    """Pattern probabilities under the step function built from a graph."""

    graph: Graph

    def edge_density(self) -> float:
        n = self.graph.node_count
        return self.graph.edge_density * (n - 1) / n

    def motif_probability(
        self, motif: Motif, method: str = "exact", mc_samples: int = 1_000_000, seed: int = 0
    ) -> tuple[float, float]:
        p = motif.vertex_count
        n = self.graph.node_count
        if method == "exact":
            if p > 6:
                raise UnsupportedMethodError(
                    "exact empirical densities are limited to motifs on p <= 6 vertices"
                )
            catalog = merge_collision_catalog(motif)
            total = 0.0
            for j, bucket in catalog.entries.items():
                falling = math.perm(n, j) if j <= n else 0
                if falling == 0:
                    continue
                weight = falling / n**p
                for entry in bucket:
                    if not entry.exact:
                        continue  # pattern product vanishes identically
                    if entry.motif is None:
                        dens = 1.0
                    else:
                        dens = motif_density(self.graph, entry.motif).raw_density
                    total += weight * entry.multiplicity * dens
            return total, 0.0
        adj = self.graph.adjacency.astype(float)

        def lookup(ii, jj):
            vals = adj[ii, jj]
            return np.where(ii == jj, 0.0, vals)

        def sampler(gen, b, p_):
            return gen.integers(0, n, size=(b, p_))

        return _mc_pattern_mean(lookup, motif, mc_samples, seed, sampler)

    def independent_edge_mixture(self, n: int):
        src = self.graph.node_count
        if src**n > _MIXTURE_LIMIT:
            raise UnsupportedMethodError("empirical mixture too large for the oracle")
        adj = self.graph.adjacency.astype(float)
        weight = 1.0 / src**n
        for assign in itertools.product(range(src), repeat=n):
            idx = np.array(assign)
            pi = adj[np.ix_(idx, idx)].copy()
            same = idx[:, None] == idx[None, :]
            pi[same] = 0.0
            yield weight, pi

    def describe(self) -> str:
        return f"empirical(n={self.graph.node_count})"


@dataclass(frozen=True)
class HistogramProvider:
    """Pattern probabilities under a fitted balanced histogram."""

    model: HistogramModel

    def edge_density(self) -> float:
        return float(self.model.block_probs.mean())

    def motif_probability(
        self, motif: Motif, method: str = "exact", mc_samples: int = 1_000_000, seed: int = 0
    ) -> tuple[float, float]:
        q = self.model.block_probs
        r = self.model.bin_count
        if method == "exact":
            weights = np.full(r, 1.0 / r)
            return _pattern_sum_over_blocks(q, weights, motif), 0.0

        def lookup(ii, jj):
            return q[ii, jj]

        def sampler(gen, b, p_):
            return gen.integers(0, r, size=(b, p_))

        return _mc_pattern_mean(lookup, motif, mc_samples, seed, sampler)

    def independent_edge_mixture(self, n: int):
        r = self.model.bin_count
        if r**n > _MIXTURE_LIMIT:
            raise UnsupportedMethodError("histogram mixture too large for the oracle")
        q = self.model.block_probs
        weight = 1.0 / r**n
        for assign in itertools.product(range(r), repeat=n):
            idx = np.array(assign)
            yield weight, q[np.ix_(idx, idx)]

    def describe(self) -> str:
        return f"histogram(r={self.model.bin_count}, n={self.model.node_count})"


LinkProvider = TrueGraphonProvider | EmpiricalProvider | HistogramProvider


def expected_motif_density(
    provider: LinkProvider,
    motif: Motif,
    method: str = "exact",
    mc_samples: int = 1_000_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Expected motif density of a fresh graph drawn from the provider.

    Exact where the provider supports it (std error 0), otherwise a
    monte-carlo average over latent draws with its standard error.
    """
    if method not in ("exact", "monte-carlo"):
        raise UnsupportedMethodError(f"unknown method {method!r}")
    return provider.motif_probability(motif, method, mc_samples=mc_samples, seed=seed)


# ---------------------------------------------------------------------------
# Variance of the scaled motif density
# ---------------------------------------------------------------------------

def density_second_moment(
    provider: LinkProvider,
    motif: Motif,
    n: int,
    method: str = "exact",
    mc_samples: int = 1_000_000,
    seed: int = 0,
) -> float:
    """E[P_R(G_n)^2] for an n-node graph from the provider (merged-copy sum)."""
    p = motif.vertex_count
    if n < p:
        raise InvalidParameterError("need n >= motif size")
    catalog = merged_copy_catalog(motif)
    nr = labeled_copy_count(motif)
    denom = (math.comb(n, p) * math.factorial(p) * nr) ** 2
    second_raw = 0.0
    for k, entry in catalog.all_entries():
        weight = math.comb(n, k)
        if weight == 0:
            continue
        pw, _ = provider.motif_probability(
            entry.motif, method, mc_samples=mc_samples, seed=seed
        )
        second_raw += weight * labeled_copy_count(entry.motif) * entry.coefficient * pw
    return second_raw / denom


def variance_sigma2(
    provider: LinkProvider,
    motif: Motif,
    n: int,
    method: str = "exact",
    mc_samples: int = 1_000_000,
    seed: int = 0,
) -> float:
    """Variance of sqrt(n)/rho^{|E|} * P_R over n-node graphs from the provider.

    The second moment runs over the merged-copy catalog; the edge-density
    normalisation uses the provider's own density.
    """
    e2 = density_second_moment(provider, motif, n, method, mc_samples, seed)
    mean, _ = provider.motif_probability(motif, method, mc_samples=mc_samples, seed=seed)
    variance = e2 - mean * mean
    rho = provider.edge_density()
    return n * variance / rho ** (2 * motif.edge_count)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

def brute_force_moments(
    provider: LinkProvider, motif: Motif, n: int
) -> tuple[float, float]:
    """Exact (E[P_R], E[P_R^2]) by enumerating every labeled graph on n nodes.

    The provider must admit an exact independent-edge mixture: a finite set
    of weighted per-pair probability matrices whose mixture is the law of
    the n-node graph.  Everything here is independent of the merged-copy
    machinery, which is the point.
    """
    if n > 5:
        raise InvalidParameterError("the oracle enumerates 2^C(n,2) graphs; n <= 5 only")
    if motif.vertex_count > n:
        raise InvalidParameterError("motif larger than the oracle graph size")
    pairs = list(itertools.combinations(range(n), 2))
    n_pairs = len(pairs)
    n_graphs = 1 << n_pairs
    bits = np.zeros((n_graphs, n_pairs), dtype=bool)
    for idx in range(n_pairs):
        bits[:, idx] = (np.arange(n_graphs) >> idx) & 1
    densities = np.empty(n_graphs)
    for gidx in range(n_graphs):
        adj = np.zeros((n, n), dtype=bool)
        for idx, (u, v) in enumerate(pairs):
            if bits[gidx, idx]:
                adj[u, v] = adj[v, u] = True
        densities[gidx] = motif_density(Graph(adj), motif).raw_density
    mean = 0.0
    second = 0.0
    for weight, pi in provider.independent_edge_mixture(n):
        edge_p = np.array([pi[u, v] for u, v in pairs])
        probs = np.prod(np.where(bits, edge_p, 1.0 - edge_p), axis=1)
        mean += weight * float(probs @ densities)
        second += weight * float(probs @ (densities * densities))
    return mean, second


# ---------------------------------------------------------------------------
# JSON export
# ---------------------------------------------------------------------------

def catalog_to_json(catalog: MergedCopyCatalog) -> dict:
    return {
        "base": {
            "vertices": catalog.base_motif.vertex_count,
            "edges": catalog.base_motif.edge_list,
            "name": catalog.base_motif.name,
        },
        "entries": [
            {
                "k": k,
                "vertices": entry.motif.vertex_count,
                "edges": entry.motif.edge_list,
                "coefficient": entry.coefficient,
                "labeled_copies": labeled_copy_count(entry.motif),
            }
            for k, entry in catalog.all_entries()
        ],
    }


def collision_catalog_to_json(catalog: MergeCollisionCatalog) -> dict:
    return {
        "base": {
            "vertices": catalog.base_motif.vertex_count,
            "edges": catalog.base_motif.edge_list,
            "name": catalog.base_motif.name,
        },
        "entries": [
            {
                "j": j,
                "vertices": entry.motif.vertex_count if entry.motif else 1,
                "edges": entry.motif.edge_list if entry.motif else [],
                "multiplicity": entry.multiplicity,
                "exact": entry.exact,
            }
            for j in sorted(catalog.entries)
            for entry in catalog.entries[j]
        ],
    }
