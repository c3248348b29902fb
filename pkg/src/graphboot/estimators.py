"""Link-function estimators: the empirical graphon and the balanced histogram.

The histogram fit minimises the least-squares block objective over balanced
assignments of n nodes to r classes (n divisible by r, n/r nodes per class).
The global argmin is intractable, so the fit runs a swap-based local search:
from a random balanced start, exchange node pairs across classes whenever the
exchange strictly lowers the loss, with the block probabilities re-optimised
(block means) after every accepted swap.  Several random restarts are taken
and the best local optimum returned.

Diagonal convention: the structural zeros A_ii are excluded from both the
loss and the block means, since they carry no Bernoulli information and
would bias the within-block means downward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import BinCountError, InvalidParameterError
from .graphs import Graph
from .graphons import GraphonSpec, LatentSample

__all__ = [
    "EmpiricalGraphon",
    "HistogramModel",
    "select_bin_count",
    "fit_histogram",
    "empirical_link",
    "estimator_error",
]


# ---------------------------------------------------------------------------
# Empirical graphon
# ---------------------------------------------------------------------------

def _node_index(n: int, u: float) -> int:
    """ceil(n*u) as a 0-based node index, for u in (0, 1]."""
    idx = math.ceil(n * u)
    return min(max(idx, 1), n) - 1


@dataclass(frozen=True)
class EmpiricalGraphon:
    """The adjacency matrix read as a {0,1} step function on the unit square."""

    source: Graph

    def link(self, u: float, v: float) -> int:
        return empirical_link(self.source, u, v)


def empirical_link(graph: Graph, u: float, v: float) -> int:
    """Step-function value A[ceil(nu), ceil(nv)]; zero on the diagonal cells."""
    n = graph.node_count
    i, j = _node_index(n, u), _node_index(n, v)
    if i == j:
        return 0
    return int(graph.adjacency[i, j])


# ---------------------------------------------------------------------------
# Bin-count rule
# ---------------------------------------------------------------------------

def select_bin_count(n: int, edge_density: float) -> int:
    """Bin count r = sqrt(n * density / log n), snapped to a divisor of n.

    The raw value is clamped to [2, n/2] and rounded to the nearest divisor
    of n in that range, ties toward the smaller divisor, so classes stay
    exactly balanced.
    """
    if n < 4:
        raise BinCountError("need n >= 4 to form at least two balanced bins")
    if not (0 < edge_density <= 1):
        raise InvalidParameterError("edge_density must lie in (0, 1]")
    divisors = [d for d in range(2, n // 2 + 1) if n % d == 0]
    if not divisors:
        raise BinCountError(
            f"n={n} has no divisor in [2, n/2]; truncate the graph to a divisible size"
        )
    raw = math.sqrt(n * edge_density / math.log(n))
    clamped = min(max(raw, 2.0), n / 2)
    return min(divisors, key=lambda d: (abs(d - clamped), d))


# ---------------------------------------------------------------------------
# Histogram model
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HistogramModel:
    """Balanced-block least-squares fit: assignment z, block matrix Q, loss.

    ``assignment`` holds a 0-based class label per node; every class has
    exactly n/r members.  ``block_probs[a, b]`` is the mean adjacency over
    ordered cross pairs (off-diagonal for a == b).
    """

    bin_count: int
    assignment: np.ndarray
    block_probs: np.ndarray
    loss: float
    node_count: int = field(default=0)

    def __post_init__(self):
        z = np.asarray(self.assignment, dtype=np.int64)
        q = np.asarray(self.block_probs, dtype=float)
        object.__setattr__(self, "assignment", z)
        object.__setattr__(self, "block_probs", q)
        object.__setattr__(self, "node_count", len(z))
        r = self.bin_count
        if q.shape != (r, r):
            raise InvalidParameterError("block_probs shape must be (r, r)")
        counts = np.bincount(z, minlength=r)
        if len(z) % r != 0 or not np.all(counts == len(z) // r):
            raise InvalidParameterError("assignment must be exactly balanced")
        z.setflags(write=False)
        q.setflags(write=False)

    def link(self, u: float, v: float) -> float:
        n = self.node_count
        i, j = _node_index(n, u), _node_index(n, v)
        return float(self.block_probs[self.assignment[i], self.assignment[j]])

    def theta_matrix(self) -> np.ndarray:
        """Fitted link values for every ordered node pair (diagonal included)."""
        z = self.assignment
        return self.block_probs[np.ix_(z, z)]


def _block_sums(adj: np.ndarray, z: np.ndarray, r: int) -> np.ndarray:
    """S[a, b] = number of ordered adjacent pairs (i, j), i in a, j in b, i != j."""
    one_hot = np.zeros((len(z), r))
    one_hot[np.arange(len(z)), z] = 1.0
    s = one_hot.T @ adj.astype(float) @ one_hot
    return np.rint(s).astype(np.int64)


def _loss_from_sums(s: np.ndarray, g: int, r: int, two_m: int) -> float:
    n_ab = np.full((r, r), float(g * g))
    np.fill_diagonal(n_ab, float(g * (g - 1)))
    return float(two_m - (s.astype(float) ** 2 / n_ab).sum())


def _exact_loss(adj: np.ndarray, z: np.ndarray, q: np.ndarray) -> float:
    """Direct evaluation of the block least-squares objective (test oracle)."""
    theta = q[np.ix_(z, z)]
    diff = adj.astype(float) - theta
    np.fill_diagonal(diff, 0.0)
    return float((diff * diff).sum())


class _SwapState:
    """Incremental state for the balanced swap search.

    Maintains S (ordered block pair adjacency sums), K (node-to-block edge
    counts), and the objective F = sum S^2 / N being maximised (equivalent
    to minimising the loss, which equals 2m - F).
    """

    def __init__(self, graph: Graph, z: np.ndarray, r: int):
        self.adj = graph.adjacency
        self.n = graph.node_count
        self.r = r
        self.g = self.n // r
        self.z = z.copy()
        self.K = np.zeros((self.n, r), dtype=np.int64)
        one_hot = np.zeros((self.n, r))
        one_hot[np.arange(self.n), z] = 1.0
        self.K = np.rint(self.adj.astype(float) @ one_hot).astype(np.int64)
        self.S = _block_sums(self.adj, z, r)
        self.two_m = int(self.adj.sum())
        n_ab = np.full((r, r), float(self.g * self.g))
        np.fill_diagonal(n_ab, float(self.g * (self.g - 1)))
        self.inv_n = 1.0 / n_ab

    def objective(self) -> float:
        return float((self.S.astype(float) ** 2 * self.inv_n).sum())

    def loss(self) -> float:
        return self.two_m - self.objective()

    def swap_gain(self, u: int, v: int) -> float:
        """Objective change if u and v exchange blocks (u in a, v in b, a != b)."""
        a, b = self.z[u], self.z[v]
        S, K = self.S, self.K
        auv = int(self.adj[u, v])
        d = K[v].astype(float) - K[u].astype(float)
        inv_g2 = self.inv_n[0, 1] if self.r > 1 else 0.0
        gain = 0.0
        for c in range(self.r):
            if c == a or c == b:
                continue
            dc = d[c]
            gain += ((S[a, c] + dc) ** 2 - S[a, c] ** 2) * 2 * inv_g2
            gain += ((S[b, c] - dc) ** 2 - S[b, c] ** 2) * 2 * inv_g2
        s_ab_new = S[a, b] + (K[u, a] - K[u, b]) + (K[v, b] - K[v, a]) + 2 * auv
        gain += (s_ab_new**2 - S[a, b] ** 2) * 2 * inv_g2
        s_aa_new = S[a, a] - 2 * K[u, a] + 2 * (K[v, a] - auv)
        s_bb_new = S[b, b] - 2 * K[v, b] + 2 * (K[u, b] - auv)
        inv_diag = self.inv_n[0, 0]
        gain += (s_aa_new**2 - S[a, a] ** 2) * inv_diag
        gain += (s_bb_new**2 - S[b, b] ** 2) * inv_diag
        return float(gain)

    def apply_swap(self, u: int, v: int) -> None:
        a, b = int(self.z[u]), int(self.z[v])
        S, K = self.S, self.K
        auv = int(self.adj[u, v])
        d = K[v] - K[u]
        for c in range(self.r):
            if c == a or c == b:
                continue
            S[a, c] += d[c]
            S[c, a] += d[c]
            S[b, c] -= d[c]
            S[c, b] -= d[c]
        s_ab_new = S[a, b] + (K[u, a] - K[u, b]) + (K[v, b] - K[v, a]) + 2 * auv
        S[a, b] = S[b, a] = s_ab_new
        S[a, a] = S[a, a] - 2 * K[u, a] + 2 * (K[v, a] - auv)
        S[b, b] = S[b, b] - 2 * K[v, b] + 2 * (K[u, b] - auv)
        # node-to-block counts for the neighbors of u and v
        nbr_u = np.nonzero(self.adj[u])[0]
        nbr_v = np.nonzero(self.adj[v])[0]
        K[nbr_u, a] -= 1
        K[nbr_u, b] += 1
        K[nbr_v, b] -= 1
        K[nbr_v, a] += 1
        self.z[u], self.z[v] = b, a

    def batched_gains(self, a: int, b: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Gains for every (u in a, v in b) pair at the current state."""
        ua = np.nonzero(self.z == a)[0]
        vb = np.nonzero(self.z == b)[0]
        Ka = self.K[ua].astype(float)  # (g, r)
        Kb = self.K[vb].astype(float)
        S = self.S.astype(float)
        inv_g2 = self.inv_n[0, 1] if self.r > 1 else 0.0
        inv_diag = self.inv_n[0, 0]
        auv = self.adj[np.ix_(ua, vb)].astype(float)
        # cross blocks c not in {a, b}
        d = Kb[None, :, :] - Ka[:, None, :]  # (g, g, r)
        mask = np.ones(self.r, dtype=bool)
        mask[[a, b]] = False
        dm = d[:, :, mask]
        s_a = S[a, mask]
        s_b = S[b, mask]
        gain = (2 * inv_g2) * (
            (2 * dm * (s_a - s_b)[None, None, :] + 2 * dm * dm).sum(axis=2)
        )
        s_ab_new = (
            S[a, b]
            + (Ka[:, a] - Ka[:, b])[:, None]
            + (Kb[:, b] - Kb[:, a])[None, :]
            + 2 * auv
        )
        gain += (s_ab_new**2 - S[a, b] ** 2) * 2 * inv_g2
        s_aa_new = S[a, a] - 2 * Ka[:, a][:, None] + 2 * (Kb[:, a][None, :] - auv)
        s_bb_new = S[b, b] - 2 * Kb[:, b][None, :] + 2 * (Ka[:, b][:, None] - auv)
        gain += (s_aa_new**2 - S[a, a] ** 2) * inv_diag
        gain += (s_bb_new**2 - S[b, b] ** 2) * inv_diag
        return gain, ua, vb


_GAIN_TOL = 1e-9


def _local_search(graph: Graph, z0: np.ndarray, r: int, max_sweeps: int) -> _SwapState:
    """Balanced swap descent: batch-scan gains, recheck, accept improving swaps."""
    state = _SwapState(graph, z0, r)
    if r == 1:
        return state
    for _ in range(max_sweeps):
        candidates = []
        for a in range(r):
            for b in range(a + 1, r):
                gains, ua, vb = state.batched_gains(a, b)
                ii, jj = np.nonzero(gains > _GAIN_TOL)
                for i, j in zip(ii.tolist(), jj.tolist()):
                    candidates.append((float(gains[i, j]), int(ua[i]), int(vb[j])))
        if not candidates:
            break
        candidates.sort(key=lambda t: (-t[0], t[1], t[2]))
        accepted = 0
        for _, u, v in candidates:
            if state.z[u] == state.z[v]:
                continue
            # gains computed from the sweep-start state go stale after accepts
            if state.swap_gain(u, v) > _GAIN_TOL:
                state.apply_swap(u, v)
                accepted += 1
        if accepted == 0:
            break
    return state


def _block_means(adj: np.ndarray, z: np.ndarray, r: int) -> np.ndarray:
    g = len(z) // r
    s = _block_sums(adj, z, r)
    n_ab = np.full((r, r), float(g * g))
    np.fill_diagonal(n_ab, float(g * (g - 1)))
    if g == 1:
        # single-node blocks have no within-block pairs
        n_ab[np.diag_indices(r)] = 1.0
    return s / n_ab


def fit_histogram(
    graph: Graph,
    r: int,
    restarts: int = 8,
    max_sweeps: int = 50,
    seed: int = 0,
    fixed_assignment: np.ndarray | None = None,
) -> HistogramModel:
    """Fit the balanced histogram with swap local search over random restarts.

    ``fixed_assignment`` bypasses the search entirely: the block probabilities
    are set to the block means of that assignment.  This is a heuristic for
    the least-squares argmin; global optimality is not guaranteed.
    """
    n = graph.node_count
    if r < 1:
        raise InvalidParameterError("bin count must be >= 1")
    if n % r != 0:
        raise InvalidParameterError(f"bin count {r} does not divide n={n}")
    adj = graph.adjacency
    if fixed_assignment is not None:
        z = np.asarray(fixed_assignment, dtype=np.int64)
        if len(z) != n or z.min() < 0 or z.max() >= r:
            raise InvalidParameterError("fixed assignment labels must lie in 0..r-1")
        q = _block_means(adj, z, r)
        return HistogramModel(r, z, q, _exact_loss(adj, z, q))
    best: HistogramModel | None = None
    g = n // r
    for restart in range(max(restarts, 1)):
        gen = rngmod.stream(seed, "histogram-restart", restart)
        z0 = np.repeat(np.arange(r, dtype=np.int64), g)
        gen.shuffle(z0)
        state = _local_search(graph, z0, r, max_sweeps)
        q = _block_means(adj, state.z, r)
        loss = _exact_loss(adj, state.z, q)
        if best is None or loss < best.loss:
            best = HistogramModel(r, state.z, q, loss)
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# Estimation-quality diagnostics
# ---------------------------------------------------------------------------

def estimator_error(
    model: HistogramModel,
    spec: GraphonSpec,
    rho: float,
    latent: LatentSample,
) -> tuple[float, float]:
    """(MSE, max deviation) between fitted and true link values.

    Both run over all ordered node pairs including the diagonal, where the
    true value is h(eps_i, eps_i) and the fitted value the within-block
    probability.
    """
    eps = latent.values
    n = len(eps)
    if model.node_count != n:
        raise InvalidParameterError("latent sample length must match the fitted graph")
    theta = rho * np.asarray(spec.w(eps[:, None], eps[None, :]), dtype=float)
    theta_hat = model.theta_matrix()
    diff = theta_hat - theta
    mse = float((diff * diff).mean())
    max_dev = float(np.abs(diff).max())
    return mse, max_dev
