"""Graphs, motifs, isomorphism machinery, and edge-list I/O.

A :class:`Graph` is an observed (or simulated) simple undirected graph,
stored as a symmetric boolean adjacency matrix with a zero diagonal.  A
:class:`Motif` is a small pattern graph on 2..8 vertices; motifs carry a
canonical key so that isomorphism reduces to byte-string equality.

Canonical form: the minimum, over all vertex orderings, of the adjacency
bitstring read column by column (the bits of vertex m against vertices
0..m-1, for m = 1..p-1).  Minimising over every ordering makes the key an
exact isomorphism invariant; a branch-and-bound search finds the minimum
without visiting all p! orderings, and the brute-force definition is kept
(``_min_bitstring_naive``) as an oracle for tests.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import GraphFormatError, InvalidParameterError

__all__ = [
    "Graph",
    "Motif",
    "canonical_label",
    "labeled_copy_count",
    "automorphism_count",
    "load_graph",
    "save_graph",
    "parse_motif_literal",
    "single_edge",
    "two_star",
    "triangle",
    "path_motif",
    "cycle_motif",
    "complete_motif",
    "star_motif",
    "empty_motif",
]

MAX_MOTIF_VERTICES = 8


# ---------------------------------------------------------------------------
# Canonical labeling
# ---------------------------------------------------------------------------

def _neighbor_masks(p: int, edges: Iterable[tuple[int, int]]) -> list[int]:
    masks = [0] * p
    for u, v in edges:
        masks[u] |= 1 << v
        masks[v] |= 1 << u
    return masks


def _min_bitstring(p: int, masks: Sequence[int]) -> tuple[int, ...]:
    """Minimum column-chunk tuple over all vertex orderings (branch and bound).

    Chunk m holds the adjacency bits of the m-th placed vertex against the
    already-placed vertices, most recently placed in the lowest position, so
    integer comparison of chunks equals left-to-right bitstring comparison.
    Prefix pruning: a partial ordering whose chunks already exceed the best
    known prefix cannot produce the minimum.
    """
    best: tuple[int, ...] | None = None
    chunks: list[int] = []

    def extend(chosen: list[int], chosen_mask: int) -> None:
        nonlocal best
        level = len(chosen)
        if level == p:
            cand = tuple(chunks)
            if best is None or cand < best:
                best = cand
            return
        options = []
        for v in range(p):
            if (chosen_mask >> v) & 1:
                continue
            c = 0
            mv = masks[v]
            for idx, u in enumerate(chosen):
                if (mv >> u) & 1:
                    c |= 1 << (level - 1 - idx)
            options.append((c, v))
        options.sort()
        for c, v in options:
            chunks.append(c)
            if best is None or tuple(chunks) <= best[: level + 1]:
                chosen.append(v)
                extend(chosen, chosen_mask | (1 << v))
                chosen.pop()
            chunks.pop()

    extend([], 0)
    assert best is not None
    return best


def _min_bitstring_naive(p: int, masks: Sequence[int]) -> tuple[int, ...]:
    """Reference implementation: exhaustive minimum over all p! orderings."""
    best = None
    for perm in itertools.permutations(range(p)):
        chunks = []
        for level in range(1, p):
            v = perm[level]
            c = 0
            for idx in range(level):
                if (masks[v] >> perm[idx]) & 1:
                    c |= 1 << (level - 1 - idx)
            chunks.append(c)
        cand = tuple([0] + chunks)
        if best is None or cand < best:
            best = cand
    return best if best is not None else (0,)


def _chunks_to_key(p: int, chunks: tuple[int, ...]) -> bytes:
    bits = []
    for level in range(1, p):
        c = chunks[level]
        for pos in range(level - 1, -1, -1):
            bits.append((c >> pos) & 1)
    packed = bytearray([p])
    for start in range(0, len(bits), 8):
        byte = 0
        for b in bits[start : start + 8]:
            byte = (byte << 1) | b
        packed.append(byte)
    return bytes(packed)


def _chunks_to_edges(chunks: tuple[int, ...]) -> frozenset[tuple[int, int]]:
    edges = set()
    for level in range(1, len(chunks)):
        c = chunks[level]
        for idx in range(level):
            if (c >> (level - 1 - idx)) & 1:
                edges.add((idx, level))
    return frozenset(edges)


# ---------------------------------------------------------------------------
# Motif
# ---------------------------------------------------------------------------

class Motif:
    """Pattern graph on 2..8 vertices; isomorphism class keyed by bytes.

    Connectivity is deliberately not required: merged-copy patterns are
    disconnected, and census bookkeeping uses edgeless classes too.
    """

    __slots__ = ("vertex_count", "edges", "name", "canonical_key")

    def __init__(
        self,
        vertex_count: int,
        edges: Iterable[tuple[int, int]],
        name: str | None = None,
    ):
        if not (2 <= vertex_count <= MAX_MOTIF_VERTICES):
            raise InvalidParameterError(
                f"motif must have 2..{MAX_MOTIF_VERTICES} vertices, got {vertex_count}"
            )
        norm = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise InvalidParameterError(f"self-loop ({u},{v}) not allowed in a motif")
            if not (0 <= u < vertex_count and 0 <= v < vertex_count):
                raise InvalidParameterError(f"edge ({u},{v}) out of range for p={vertex_count}")
            pair = (u, v) if u < v else (v, u)
            if pair in norm:
                raise InvalidParameterError(f"duplicate edge {pair}")
            norm.add(pair)
        self.vertex_count = vertex_count
        self.edges = frozenset(norm)
        self.name = name
        chunks = _min_bitstring(vertex_count, _neighbor_masks(vertex_count, norm))
        self.canonical_key = _chunks_to_key(vertex_count, chunks)

    def __repr__(self):
        label = self.name or "motif"
        return f"Motif({label}, p={self.vertex_count}, edges={sorted(self.edges)})"

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    @property
    def edge_list(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def neighbor_masks(self) -> list[int]:
        return _neighbor_masks(self.vertex_count, self.edges)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.vertex_count, self.vertex_count), dtype=bool)
        for u, v in self.edges:
            a[u, v] = a[v, u] = True
        return a

    def relabeled(self, perm: Sequence[int]) -> "Motif":
        """Image of this motif under the vertex permutation ``perm``."""
        return Motif(self.vertex_count, [(perm[u], perm[v]) for u, v in self.edges], self.name)

    def canonical_form(self) -> "Motif":
        """Representative of the isomorphism class in canonical vertex order."""
        chunks = _min_bitstring(self.vertex_count, self.neighbor_masks())
        return Motif(self.vertex_count, _chunks_to_edges(chunks), self.name)

    def is_connected(self) -> bool:
        masks = self.neighbor_masks()
        seen = 1
        frontier = [0]
        while frontier:
            v = frontier.pop()
            m = masks[v] & ~seen
            while m:
                u = (m & -m).bit_length() - 1
                seen |= 1 << u
                frontier.append(u)
                m &= m - 1
        return seen == (1 << self.vertex_count) - 1

    @property
    def key_string(self) -> str:
        """Readable identifier: given name, or canonical edge list."""
        if self.name:
            return self.name
        canon = self.canonical_form()
        body = ",".join(f"{u}-{v}" for u, v in canon.edge_list)
        return f"{self.vertex_count}:{body}" if body else f"{self.vertex_count}:empty"

    def __hash__(self):
        return hash((self.vertex_count, self.edges))

    def __eq__(self, other):
        if not isinstance(other, Motif):
            return NotImplemented
        return self.vertex_count == other.vertex_count and self.edges == other.edges


def canonical_label(motif: Motif) -> bytes:
    """Canonical key of the isomorphism class; equal keys iff isomorphic."""
    return motif.canonical_key


@lru_cache(maxsize=4096)
def _automorphism_count_cached(vertex_count: int, edges: frozenset) -> int:
    eset = set(edges)
    count = 0
    for perm in itertools.permutations(range(vertex_count)):
        if all(
            ((perm[u], perm[v]) if perm[u] < perm[v] else (perm[v], perm[u])) in eset
            for u, v in eset
        ):
            count += 1
    return count


def automorphism_count(motif: Motif) -> int:
    """|Aut(R)| by explicit enumeration of all vertex permutations."""
    return _automorphism_count_cached(motif.vertex_count, motif.edges)


def labeled_copy_count(motif: Motif) -> int:
    """Number of labeled graphs on 1..p isomorphic to the motif: p!/|Aut|."""
    p = motif.vertex_count
    return math.factorial(p) // automorphism_count(motif)


# ---------------------------------------------------------------------------
# Graph
# ---------------------------------------------------------------------------

class Graph:
    """Simple undirected graph as an immutable boolean adjacency matrix."""

    __slots__ = ("_adj", "_bit_rows", "_degrees", "_census_cache")

    def __init__(self, adjacency: np.ndarray):
        adj = np.asarray(adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise InvalidParameterError("adjacency must be a square matrix")
        if adj.shape[0] < 1:
            raise InvalidParameterError("graph needs at least one node")
        if np.any(np.diagonal(adj)):
            raise InvalidParameterError("adjacency diagonal must be zero (simple graph)")
        if not np.array_equal(adj, adj.T):
            raise InvalidParameterError("adjacency must be symmetric")
        adj = adj.copy()
        adj.setflags(write=False)
        self._adj = adj
        self._bit_rows: list[int] | None = None
        self._degrees: np.ndarray | None = None
        self._census_cache: dict = {}

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        adj = np.zeros((node_count, node_count), dtype=bool)
        for u, v in edges:
            if u == v:
                raise InvalidParameterError(f"self-loop ({u},{v})")
            if not (0 <= u < node_count and 0 <= v < node_count):
                raise InvalidParameterError(f"edge ({u},{v}) out of range")
            if adj[u, v]:
                raise InvalidParameterError(f"duplicate edge ({u},{v})")
            adj[u, v] = adj[v, u] = True
        return cls(adj)

    @property
    def node_count(self) -> int:
        return self._adj.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        return self._adj

    @property
    def degrees(self) -> np.ndarray:
        if self._degrees is None:
            self._degrees = self._adj.sum(axis=1).astype(np.int64)
        return self._degrees

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2

    @property
    def edge_density(self) -> float:
        """Observed dyad density: edges over node pairs."""
        n = self.node_count
        if n < 2:
            return 0.0
        return self.edge_count / math.comb(n, 2)

    def bit_rows(self) -> list[int]:
        """Adjacency rows packed as python ints (bit v of row u = edge u,v)."""
        if self._bit_rows is None:
            rows = []
            # pack each boolean row little-endian into one integer
            for u in range(self.node_count):
                row = np.packbits(self._adj[u], bitorder="little").tobytes()
                rows.append(int.from_bytes(row, "little"))
            self._bit_rows = rows
        return self._bit_rows

    def edge_list(self) -> list[tuple[int, int]]:
        iu, iv = np.nonzero(np.triu(self._adj, 1))
        return list(zip(iu.tolist(), iv.tolist()))

    def induced(self, nodes: Sequence[int]) -> "Graph":
        idx = np.asarray(nodes, dtype=np.intp)
        return Graph(self._adj[np.ix_(idx, idx)])

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return np.array_equal(self._adj, other._adj)

    def __repr__(self):
        return f"Graph(n={self.node_count}, edges={self.edge_count})"


# ---------------------------------------------------------------------------
# Edge-list file format
# ---------------------------------------------------------------------------

def save_graph(graph: Graph, path) -> None:
    """Write the edge-list format: header ``n <count>`` then one edge per line."""
    with open(path, "w", encoding="utf8") as fh:
        fh.write(f"n {graph.node_count}\n")
        for u, v in graph.edge_list():
            fh.write(f"{u} {v}\n")


def load_graph(path) -> Graph:
    """Read the edge-list format written by :func:`save_graph`.

    Rejects malformed lines, self-loops, duplicate edges, and out-of-range
    node indices, naming the offending line number.
    """
    with open(path, "r", encoding="utf8") as fh:
        lines = fh.readlines()
    if not lines:
        raise GraphFormatError("empty graph file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != "n":
        raise GraphFormatError("line 1: expected header 'n <node_count>'")
    try:
        n = int(head[1])
    except ValueError:
        raise GraphFormatError("line 1: node count is not an integer") from None
    if n < 1:
        raise GraphFormatError("line 1: node count must be positive")
    adj = np.zeros((n, n), dtype=bool)
    for lineno, line in enumerate(lines[1:], start=2):
        stripped = line.strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v'")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError(f"line {lineno}: node ids must be integers") from None
        if not (0 <= u < n and 0 <= v < n):
            raise GraphFormatError(f"line {lineno}: node id out of range 0..{n - 1}")
        if u == v:
            raise GraphFormatError(f"line {lineno}: self-loop {u} {v}")
        if adj[u, v]:
            raise GraphFormatError(f"line {lineno}: duplicate edge {u} {v}")
        adj[u, v] = adj[v, u] = True
    return Graph(adj)


# ---------------------------------------------------------------------------
# Motif literals and the standard catalog
# ---------------------------------------------------------------------------

def parse_motif_literal(text: str, name: str | None = None) -> Motif:
    """Parse ``"<p>; u-v,u-v,..."`` (e.g. ``"3; 0-1,1-2"`` for the 2-star)."""
    parts = text.split(";")
    if len(parts) != 2:
        raise InvalidParameterError(f"motif literal needs one ';': {text!r}")
    try:
        p = int(parts[0].strip())
    except ValueError:
        raise InvalidParameterError(f"bad vertex count in motif literal {text!r}") from None
    body = parts[1].strip()
    edges = []
    if body:
        for token in body.split(","):
            ends = token.strip().split("-")
            if len(ends) != 2:
                raise InvalidParameterError(f"bad edge token {token!r} in {text!r}")
            edges.append((int(ends[0]), int(ends[1])))
    return Motif(p, edges, name=name)


def single_edge() -> Motif:
    return Motif(2, [(0, 1)], name="k2")


def two_star() -> Motif:
    """Path on three vertices (the wedge)."""
    return Motif(3, [(0, 1), (1, 2)], name="2star")


def triangle() -> Motif:
    return Motif(3, [(0, 1), (1, 2), (0, 2)], name="k3")


def path_motif(p: int) -> Motif:
    return Motif(p, [(i, i + 1) for i in range(p - 1)], name=f"path{p}")


def cycle_motif(p: int) -> Motif:
    edges = [(i, (i + 1) % p) for i in range(p)]
    return Motif(p, edges, name=f"cycle{p}")


def complete_motif(p: int) -> Motif:
    return Motif(p, list(itertools.combinations(range(p), 2)), name=f"k{p}")


def star_motif(p: int) -> Motif:
    return Motif(p, [(0, i) for i in range(1, p)], name=f"star{p}")


def empty_motif(p: int) -> Motif:
    return Motif(p, [], name=f"empty{p}")
