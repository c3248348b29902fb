"""Bootstrap replicate generation, scaled statistics, and distribution metrics.

Both procedures first turn the observed graph into a link-function estimate
and then simulate fresh graphs from it:

* empirical-graphon — resample m vertices with replacement and copy the
  observed adjacencies; repeated vertices are never adjacent to their own
  copies (the observed graph has no loops).
* histogram — draw n fresh latent uniforms and connect dyads independently
  with the fitted block probabilities.

Replicate statistics are centered at the exact conditional expectation of
the replicate density (computable in closed form for both estimators) and
scaled by sqrt(m) over the estimator's edge density to the motif's edge
count, mirroring the statistic whose sampling distribution the bootstrap
is meant to reproduce.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import rng as rngmod
from .census import motif_density
from .combinatorics import (
    EmpiricalProvider,
    HistogramProvider,
    LinkProvider,
    expected_motif_density,
)
from .errors import InvalidParameterError, UnsupportedMethodError
from .estimators import HistogramModel, fit_histogram, select_bin_count
from .graphs import Graph, Motif
from .graphons import GraphonSpec, SparsitySchedule, sample_graph, true_motif_probability

__all__ = [
    "BootstrapPlan",
    "MotifBootstrap",
    "BootstrapResult",
    "empirical_bootstrap_replicate",
    "histogram_bootstrap_replicate",
    "run_bootstrap",
    "percentile_interval",
    "normalized_truth_interval",
    "ks_two_sample",
    "ks_to_normal",
    "true_center",
    "sampling_distribution_truth",
    "sampling_distribution_truth_multi",
]


# ---------------------------------------------------------------------------
# Replicate generators
# ---------------------------------------------------------------------------

def empirical_bootstrap_replicate(graph: Graph, m: int, seed: int) -> Graph:
    """Resample m vertices with replacement; adjacency copied from the source.

    A repeated vertex pair reads the source diagonal, which is zero, so
    copies of one vertex are never linked.
    """
    if m < 2:
        raise InvalidParameterError("bootstrap graph needs m >= 2")
    gen = rngmod.stream(seed, "empirical-replicate")
    v = gen.integers(0, graph.node_count, size=m)
    adj = graph.adjacency[np.ix_(v, v)].copy()
    np.fill_diagonal(adj, False)
    return Graph(adj)


def histogram_bootstrap_replicate(model: HistogramModel, n: int, seed: int) -> Graph:
    """Fresh latent uniforms pushed through the fitted block step function."""
    if n != model.node_count:
        raise InvalidParameterError("histogram replicates keep the fitted graph size")
    gen = rngmod.stream(seed, "histogram-replicate")
    eps = gen.random(n)
    nodes = np.minimum(np.ceil(n * eps).astype(int), n) - 1
    blocks = model.assignment[nodes]
    probs = model.block_probs[np.ix_(blocks, blocks)]
    iu = np.triu_indices(n, 1)
    adj = np.zeros((n, n), dtype=bool)
    adj[iu] = gen.random(len(iu[0])) < probs[iu]
    adj |= adj.T
    return Graph(adj)


# ---------------------------------------------------------------------------
# Plans and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BootstrapPlan:
    """What to bootstrap: method, motifs, replicate count, sizes, seeds."""

    method: str  # "empirical-graphon" | "histogram"
    motifs: tuple[Motif, ...]
    replicates: int = 2000
    m: int | None = None  # bootstrap graph size; None = n
    center_method: str = "exact"  # "exact" | "monte-carlo"
    center_mc_samples: int = 1_000_000
    levels: tuple[float, ...] = (0.9, 0.95)
    seed: int = 0
    bin_count: int | None = None  # histogram only; None = select_bin_count
    restarts: int = 8
    max_sweeps: int = 50

    def __post_init__(self):
        if self.method not in ("empirical-graphon", "histogram"):
            raise InvalidParameterError(f"unknown bootstrap method {self.method!r}")
        if self.replicates < 1:
            raise InvalidParameterError("need at least one replicate")
        if not self.motifs:
            raise InvalidParameterError("plan needs at least one motif")
        object.__setattr__(self, "motifs", tuple(self.motifs))
        object.__setattr__(self, "levels", tuple(self.levels))


@dataclass(frozen=True)
class MotifBootstrap:
    """Replicate statistics for one motif."""

    motif: Motif
    raw: np.ndarray
    center: float
    scale: float
    scaled: np.ndarray
    intervals: dict[float, tuple[float, float]]
    center_is_exact: bool

    @property
    def key(self) -> str:
        return self.motif.key_string


@dataclass(frozen=True)
class BootstrapResult:
    method: str
    node_count: int
    m: int
    rho_bar: float
    per_motif: tuple[MotifBootstrap, ...]
    seed: int
    histogram_model: HistogramModel | None = None
    warnings: tuple[str, ...] = ()

    def motif_result(self, motif: Motif) -> MotifBootstrap:
        for mb in self.per_motif:
            if mb.motif.canonical_key == motif.canonical_key:
                return mb
        raise KeyError(f"motif {motif.key_string} not in result")

    def to_json_dict(self) -> dict:
        payload = {
            "method": self.method,
            "node_count": self.node_count,
            "m": self.m,
            "rho_bar": self.rho_bar,
            "seed": self.seed,
            "warnings": list(self.warnings),
            "motifs": [
                {
                    "key": mb.key,
                    "vertices": mb.motif.vertex_count,
                    "edges": mb.motif.edge_list,
                    "center": mb.center,
                    "scale": mb.scale,
                    "center_is_exact": mb.center_is_exact,
                    "intervals": {
                        str(level): list(bounds)
                        for level, bounds in sorted(mb.intervals.items())
                    },
                }
                for mb in self.per_motif
            ],
        }
        if self.histogram_model is not None:
            payload["histogram"] = {
                "bin_count": self.histogram_model.bin_count,
                "loss": self.histogram_model.loss,
                "block_probs": self.histogram_model.block_probs.tolist(),
            }
        return payload

    def write_replicates_csv(self, path) -> None:
        with open(path, "w", encoding="utf8") as fh:
            fh.write("motif_key,replicate_index,raw,scaled\n")
            for mb in self.per_motif:
                for k in range(len(mb.raw)):
                    fh.write(
                        f"{mb.key},{k},{float(mb.raw[k])!r},{float(mb.scaled[k])!r}\n"
                    )


def _fit_for_plan(graph: Graph, plan: BootstrapPlan) -> tuple[LinkProvider, HistogramModel | None]:
    if plan.method == "empirical-graphon":
        return EmpiricalProvider(graph), None
    r = plan.bin_count
    if r is None:
        r = select_bin_count(graph.node_count, graph.edge_density)
    model = fit_histogram(
        graph,
        r,
        restarts=plan.restarts,
        max_sweeps=plan.max_sweeps,
        seed=rngmod.tag_value("histogram-fit") ^ plan.seed,
    )
    return HistogramProvider(model), model


def run_bootstrap(graph: Graph, plan: BootstrapPlan) -> BootstrapResult:
    """Fit once, generate replicates with per-replicate derived seeds, assemble.

    Replicate k depends only on (plan.seed, k), so results are identical
    regardless of execution order or parallel scheduling.
    """
    n = graph.node_count
    collected_warnings: list[str] = []
    if plan.method == "empirical-graphon":
        m = plan.m if plan.m is not None else n
        if m < n:
            raise InvalidParameterError("empirical-graphon bootstrap requires m >= n")
    else:
        m = plan.m if plan.m is not None else n
        if m != n:
            raise InvalidParameterError("histogram bootstrap fixes m = n")

    provider, model = _fit_for_plan(graph, plan)
    rho_bar = provider.edge_density()
    rho_hat = graph.edge_density

    if plan.method == "empirical-graphon" and rho_hat > 0:
        worst_edges = max(mot.edge_count for mot in plan.motifs)
        threshold = rho_hat ** (-4 * worst_edges)
        if m < threshold:
            msg = (
                f"replicate size m={m} below the rate guide "
                f"rho_hat^(-4*edges) = {threshold:.3g}; variance of dense-motif "
                "statistics may be inflated"
            )
            warnings.warn(msg)
            collected_warnings.append(msg)

    centers = []
    for mot in plan.motifs:
        if plan.center_method == "exact":
            try:
                value, _ = expected_motif_density(provider, mot, "exact")
                centers.append((value, True))
                continue
            except UnsupportedMethodError:
                collected_warnings.append(
                    f"exact center unavailable for {mot.key_string}; monte-carlo fallback"
                )
        value, _ = expected_motif_density(
            provider,
            mot,
            "monte-carlo",
            mc_samples=plan.center_mc_samples,
            seed=plan.seed ^ rngmod.tag_value("center-mc"),
        )
        centers.append((value, False))

    raws = [np.empty(plan.replicates) for _ in plan.motifs]
    for k in range(plan.replicates):
        rep_seed = rngmod.stream(plan.seed, "replicate-seed", k).integers(0, 2**63 - 1)
        if plan.method == "empirical-graphon":
            gstar = empirical_bootstrap_replicate(graph, m, int(rep_seed))
        else:
            gstar = histogram_bootstrap_replicate(model, n, int(rep_seed))
        for mi, mot in enumerate(plan.motifs):
            raws[mi][k] = motif_density(gstar, mot).raw_density

    per_motif = []
    for mi, mot in enumerate(plan.motifs):
        center, is_exact = centers[mi]
        scale = math.sqrt(m) / rho_bar**mot.edge_count
        raw = raws[mi]
        scaled = scale * (raw - center)
        intervals = {
            level: percentile_interval(raw, level) for level in plan.levels
        }
        per_motif.append(
            MotifBootstrap(mot, raw, center, scale, scaled, intervals, is_exact)
        )
    return BootstrapResult(
        method=plan.method,
        node_count=n,
        m=m,
        rho_bar=rho_bar,
        per_motif=tuple(per_motif),
        seed=plan.seed,
        histogram_model=model,
        warnings=tuple(collected_warnings),
    )


# ---------------------------------------------------------------------------
# Intervals and distribution distances
# ---------------------------------------------------------------------------

def percentile_interval(samples: Sequence[float], level: float) -> tuple[float, float]:
    """Nearest-rank percentile interval: the (a/2, 1-a/2) order statistics."""
    x = np.sort(np.asarray(samples, dtype=float))
    if len(x) < 10:
        raise InvalidParameterError("percentile interval needs at least 10 samples")
    if not (0.0 < level < 1.0):
        raise InvalidParameterError("level must lie strictly between 0 and 1")
    alpha = 1.0 - level
    lo_rank = math.ceil((alpha / 2) * len(x))
    hi_rank = math.ceil((1 - alpha / 2) * len(x))
    lo_rank = min(max(lo_rank, 1), len(x))
    hi_rank = min(max(hi_rank, 1), len(x))
    return float(x[lo_rank - 1]), float(x[hi_rank - 1])


def normalized_truth_interval(
    mb: MotifBootstrap, observed_normalized: float, n: int, level: float
) -> tuple[float, float]:
    """Interval for the normalized motif probability of the generating graphon.

    Maps the scaled replicate quantiles through the approximation
    sqrt(n) * (normalized observed - normalized truth) ~ scaled sample,
    i.e. a basic (shifted-percentile) bootstrap on the normalized scale.
    """
    t_lo, t_hi = percentile_interval(mb.scaled, level)
    root = math.sqrt(n)
    return observed_normalized - t_hi / root, observed_normalized - t_lo / root


def ks_two_sample(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Exact sup distance between the two empirical CDFs."""
    x = np.sort(np.asarray(xs, dtype=float))
    y = np.sort(np.asarray(ys, dtype=float))
    if len(x) == 0 or len(y) == 0:
        raise InvalidParameterError("ks_two_sample needs nonempty samples")
    grid = np.concatenate([x, y])
    fx = np.searchsorted(x, grid, side="right") / len(x)
    fy = np.searchsorted(y, grid, side="right") / len(y)
    return float(np.abs(fx - fy).max())


def _normal_cdf(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))


def ks_to_normal(xs: Sequence[float]) -> float:
    """Exact sup distance to the normal with the sample's mean and variance."""
    x = np.sort(np.asarray(xs, dtype=float))
    if len(x) == 0:
        raise InvalidParameterError("ks_to_normal needs a nonempty sample")
    mu = float(x.mean())
    sd = float(x.std())
    if sd == 0:
        return 1.0
    z = (x - mu) / sd
    cdf = _normal_cdf(z)
    upper = np.arange(1, len(x) + 1) / len(x)
    lower = np.arange(0, len(x)) / len(x)
    return float(np.maximum(np.abs(upper - cdf), np.abs(lower - cdf)).max())


# ---------------------------------------------------------------------------
# The target sampling distribution
# ---------------------------------------------------------------------------

def true_center(
    spec: GraphonSpec,
    rho: float,
    motif: Motif,
    seed: int = 0,
    tol: float = 1e-4,
    max_samples: int = 64_000_000,
) -> tuple[float, float]:
    """Motif probability under the generating link, to absolute error tol.

    Closed form where available; otherwise monte-carlo with the sample size
    grown until the standard error is within tolerance.
    """
    try:
        return true_motif_probability(spec, rho, motif, "closed-form")
    except UnsupportedMethodError:
        pass
    samples = 1_000_000
    while True:
        value, err = true_motif_probability(
            spec, rho, motif, "monte-carlo", mc_samples=samples, seed=seed
        )
        if err <= tol or samples >= max_samples:
            if err > tol:
                raise InvalidParameterError(
                    f"monte-carlo center std error {err:.2e} above tol {tol:.2e}"
                )
            return value, err
        samples *= 4


def sampling_distribution_truth_multi(
    spec: GraphonSpec,
    schedule: SparsitySchedule,
    n: int,
    motifs: Sequence[Motif],
    draws: int,
    seed: int,
) -> dict[str, np.ndarray]:
    """Scaled, centered motif statistics across independent graphs.

    One shared stream of graphs serves every motif; each graph is scored as
    sqrt(n) * (P_R(G) - P_R(h)) / rho_hat(G)^{edges}.
    """
    rho = schedule.rho(n)
    centers = {
        mot.key_string: true_center(spec, rho, mot, seed=rngmod.tag_value("tc") ^ seed)[0]
        for mot in motifs
    }
    out = {mot.key_string: np.empty(draws) for mot in motifs}
    root = math.sqrt(n)
    for l in range(draws):
        g_seed = rngmod.stream(seed, "truth-graph", l).integers(0, 2**63 - 1)
        graph, _ = sample_graph(spec, schedule, n, int(g_seed))
        rho_hat = graph.edge_density
        for mot in motifs:
            stat = motif_density(graph, mot).raw_density
            out[mot.key_string][l] = root * (stat - centers[mot.key_string]) / rho_hat**mot.edge_count
    return out


def sampling_distribution_truth(
    spec: GraphonSpec,
    schedule: SparsitySchedule,
    n: int,
    motif: Motif,
    draws: int,
    seed: int,
) -> np.ndarray:
    """Single-motif view of :func:`sampling_distribution_truth_multi`."""
    return sampling_distribution_truth_multi(spec, schedule, n, [motif], draws, seed)[
        motif.key_string
    ]
