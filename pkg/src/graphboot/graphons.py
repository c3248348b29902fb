"""Graphon specifications, sparsity schedules, and exchangeable graph sampling.

A link function is the product of a sparsity factor and a shape ``w`` on the
unit square with unit integral.  Three shapes are supported:

* ``constant`` — w = 1 (the Erdos-Renyi case; degenerate for bootstrap
  theory but the closed-form workhorse for oracles),
* ``additive`` — w(u, v) = u + v (Lipschitz with constant 1, not a.e. 1),
* ``block`` — piecewise constant on a k x k grid of equal cells, rescaled
  to integrate to one.

Edges of a sampled graph are independent Bernoulli draws given the latent
uniforms; the latents are returned so estimator-error diagnostics can see
the true link values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from . import rng as rngmod
from .errors import InvalidParameterError, UnsupportedMethodError
from .graphs import Graph, Motif

__all__ = [
    "GraphonSpec",
    "SparsitySchedule",
    "LatentSample",
    "link_probability",
    "sample_graph",
    "true_motif_probability",
]


@dataclass(frozen=True)
class GraphonSpec:
    """Shape w of the link function; integrates to 1 over the unit square."""

    kind: Literal["constant", "additive", "block"]
    block_probs: tuple[tuple[float, ...], ...] | None = None
    _block_matrix: np.ndarray | None = field(
        init=False, default=None, repr=False, compare=False
    )

    def __post_init__(self):
        if self.kind not in ("constant", "additive", "block"):
            raise InvalidParameterError(f"unknown graphon kind {self.kind!r}")
        if self.kind == "block":
            if self.block_probs is None:
                raise InvalidParameterError("block graphon needs block_probs")
            mat = np.asarray(self.block_probs, dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise InvalidParameterError("block_probs must be square")
            if not np.allclose(mat, mat.T):
                raise InvalidParameterError("block_probs must be symmetric")
            if np.any(mat < 0):
                raise InvalidParameterError("block_probs must be nonnegative")
            mean = mat.mean()
            if mean <= 0:
                raise InvalidParameterError("block_probs must have positive mass")
            scaled = mat / mean  # uniform cells: the integral is the entry mean
            scaled.setflags(write=False)
            object.__setattr__(self, "_block_matrix", scaled)
        elif self.block_probs is not None:
            raise InvalidParameterError(f"block_probs only valid for kind='block'")

    @property
    def cells(self) -> np.ndarray:
        if self.kind != "block":
            raise InvalidParameterError("cells only defined for block graphons")
        return self._block_matrix

    @property
    def sup_w(self) -> float:
        if self.kind == "constant":
            return 1.0
        if self.kind == "additive":
            return 2.0
        return float(self._block_matrix.max())

    @property
    def lipschitz_constant(self) -> float | None:
        """Lipschitz constant of w, or None for the piecewise-constant kind."""
        if self.kind == "constant":
            return 0.0
        if self.kind == "additive":
            return 1.0
        return None

    def w(self, u, v):
        """Evaluate w pointwise; accepts scalars or broadcastable arrays."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        if self.kind == "constant":
            shape = np.broadcast_shapes(u.shape, v.shape)
            return np.ones(shape) if shape else 1.0
        if self.kind == "additive":
            return u + v
        k = self._block_matrix.shape[0]
        iu = np.minimum((u * k).astype(int), k - 1)
        iv = np.minimum((v * k).astype(int), k - 1)
        return self._block_matrix[iu, iv]

    def integral(self) -> float:
        """Exact integral of w over the unit square (should be 1)."""
        if self.kind == "constant":
            return 1.0
        if self.kind == "additive":
            return 1.0  # two marginals each integrating to 1/2
        return float(self._block_matrix.mean())


@dataclass(frozen=True)
class SparsitySchedule:
    """Edge-density factor: constant c, or power decay c * n^(-alpha)."""

    kind: Literal["constant", "power"]
    c: float
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "power"):
            raise InvalidParameterError(f"unknown schedule kind {self.kind!r}")
        if self.c <= 0:
            raise InvalidParameterError("schedule constant c must be positive")
        if self.kind == "power" and not (0 <= self.alpha < 1):
            raise InvalidParameterError("power schedule needs alpha in [0, 1)")

    def rho(self, n: int) -> float:
        if self.kind == "constant":
            return self.c
        return self.c * n ** (-self.alpha)


@dataclass(frozen=True)
class LatentSample:
    """The latent uniforms behind one sampled graph."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __len__(self):
        return len(self.values)


def _check_rho(spec: GraphonSpec, rho: float) -> None:
    if rho <= 0:
        raise InvalidParameterError("sparsity factor must be positive")
    if rho * spec.sup_w > 1 + 1e-12:
        raise InvalidParameterError(
            f"rho*sup(w) = {rho * spec.sup_w:.6g} exceeds 1; not a probability"
        )


def link_probability(spec: GraphonSpec, rho: float, u: float, v: float):
    """Edge probability rho * w(u, v); symmetric in (u, v)."""
    _check_rho(spec, rho)
    return rho * spec.w(u, v)


def sample_graph(
    spec: GraphonSpec, schedule: SparsitySchedule, n: int, seed: int
) -> tuple[Graph, LatentSample]:
    """Draw one exchangeable graph: latent uniforms, then independent dyads.

    Deterministic in (spec, schedule, n, seed).
    """
    if n < 2:
        raise InvalidParameterError("need n >= 2")
    rho = schedule.rho(n)
    _check_rho(spec, rho)
    gen = rngmod.stream(seed, "graph-sample")
    eps = gen.random(n)
    iu = np.triu_indices(n, 1)
    probs = rho * np.asarray(spec.w(eps[iu[0]], eps[iu[1]]), dtype=float)
    draws = gen.random(len(iu[0]))
    adj = np.zeros((n, n), dtype=bool)
    adj[iu] = draws < probs
    adj |= adj.T
    return Graph(adj), LatentSample(eps)


def _pattern_value(link_values: np.ndarray, motif: Motif, pair_index: dict) -> np.ndarray:
    """Product over motif edges of h and non-edges of (1-h); vectorized over rows."""
    total = np.ones(link_values.shape[0])
    p = motif.vertex_count
    edges = motif.edges
    for i in range(p):
        for j in range(i + 1, p):
            h = link_values[:, pair_index[(i, j)]]
            total *= h if (i, j) in edges else (1.0 - h)
    return total


def true_motif_probability(
    spec: GraphonSpec,
    rho: float,
    motif: Motif,
    method: str = "closed-form",
    mc_samples: int = 1_000_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Probability that p fresh nodes instantiate the motif exactly.

    Returns (value, std_error).  ``closed-form`` integrates exactly and is
    available for the constant and block kinds (finite sums over cells);
    ``monte-carlo`` averages the edge/non-edge product over latent draws.
    """
    _check_rho(spec, rho)
    p = motif.vertex_count
    pairs = [(i, j) for i in range(p) for j in range(i + 1, p)]
    if method == "closed-form":
        if spec.kind == "constant":
            e = motif.edge_count
            return rho**e * (1 - rho) ** (len(pairs) - e), 0.0
        if spec.kind == "block":
            cells = spec.cells
            k = cells.shape[0]
            total = 0.0
            for assign in np.ndindex(*([k] * p)):
                term = 1.0
                for i, j in pairs:
                    h = rho * cells[assign[i], assign[j]]
                    term *= h if (i, j) in motif.edges else (1.0 - h)
                total += term
            return total / k**p, 0.0
        raise UnsupportedMethodError(
            f"closed-form unavailable for the {spec.kind!r} kind; use monte-carlo"
        )
    if method == "monte-carlo":
        gen = rngmod.stream(seed, "true-motif-mc")
        pair_index = {pair: idx for idx, pair in enumerate(pairs)}
        batch = 200_000
        total = 0.0
        total_sq = 0.0
        done = 0
        while done < mc_samples:
            b = min(batch, mc_samples - done)
            u = gen.random((b, p))
            links = rho * np.asarray(
                spec.w(u[:, [i for i, _ in pairs]], u[:, [j for _, j in pairs]]),
                dtype=float,
            )
            vals = _pattern_value(links, motif, pair_index)
            total += float(vals.sum())
            total_sq += float((vals * vals).sum())
            done += b
        mean = total / mc_samples
        var = max(total_sq / mc_samples - mean * mean, 0.0)
        return mean, math.sqrt(var / mc_samples)
    raise UnsupportedMethodError(f"unknown method {method!r}")
