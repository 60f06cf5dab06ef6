"""Synthetic latent-graph topologies and ground-truth edge sets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IndivisibleK, NonPositiveDefinite
from .model import PD_TOL, LatentModel, make_rng

SUPPORT_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class AdjacencyMatrix:
    w: np.ndarray
    edge_count: int = field(init=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=float)
        if w.ndim != 2 or w.shape[0] != w.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(w, w.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(w) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if not np.all((w == 0) | (w == 1)):
            raise ValueError("adjacency must be 0/1")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "edge_count", int(w.sum()) // 2)

    @property
    def K(self) -> int:
        return self.w.shape[0]

    def edges(self) -> set[tuple[int, int]]:
        t, k = np.nonzero(np.triu(self.w, 1))
        return set(zip(t.tolist(), k.tolist()))

    def degrees(self) -> np.ndarray:
        return self.w.sum(axis=1).astype(int)


@dataclass(frozen=True)
class GroundTruthEdges:
    latent_edges: frozenset
    average_edges: frozenset

    def for_kind(self, graph_kind: str) -> frozenset:
        return self.latent_edges if graph_kind == "latent" else self.average_edges


def gen_scale_free(K: int, rng_seed: int) -> AdjacencyMatrix:
    """Preferential attachment grown from a 2-node chain.

    Node t (t >= 2, 0-based) attaches one edge to an earlier node i with
    probability deg(i) / sum(deg). The result is a tree with K - 1 edges.
    """
    if K < 2:
        raise ValueError("K must be at least 2")
    rng = make_rng(rng_seed)
    w = np.zeros((K, K))
    w[0, 1] = w[1, 0] = 1
    deg = np.zeros(K)
    deg[:2] = 1
    for t in range(2, K):
        p = deg[:t] / deg[:t].sum()
        # single uniform against the cumulative distribution
        i = int(np.searchsorted(np.cumsum(p), rng.random() * p.sum(), side="right"))
        i = min(i, t - 1)
        w[t, i] = w[i, t] = 1
        deg[t] += 1
        deg[i] += 1
    return AdjacencyMatrix(w)


def gen_hub(K: int, group_size: int) -> AdjacencyMatrix:
    """Contiguous blocks of ``group_size`` nodes; the first node of each block is its hub."""
    if group_size < 2:
        raise ValueError("group_size must be at least 2")
    if K % group_size:
        raise IndivisibleK(f"K={K} is not divisible by group size {group_size}")
    w = np.zeros((K, K))
    for start in range(0, K, group_size):
        w[start, start + 1 : start + group_size] = 1
        w[start + 1 : start + group_size, start] = 1
    return AdjacencyMatrix(w)


def gen_band(K: int, bandwidth: int) -> AdjacencyMatrix:
    if not 1 <= bandwidth < K:
        raise ValueError("need 1 <= bandwidth < K")
    idx = np.arange(K)
    gap = np.abs(idx[:, None] - idx[None, :])
    return AdjacencyMatrix(((gap > 0) & (gap <= bandwidth)).astype(float))


def generate(topology: str, K: int, rng_seed: int = 0) -> AdjacencyMatrix:
    if topology == "scalefree":
        return gen_scale_free(K, rng_seed)
    if topology == "hub":
        if K % 5 == 0:
            return gen_hub(K, 5)
        return gen_hub(K, 6)
    if topology == "band3":
        return gen_band(K, 3)
    raise ValueError(f"unknown topology {topology!r}")


def precision_from_adjacency(w, c: float) -> np.ndarray:
    """Theta* = c W + (|lambda_min(W)| + 0.2) I, checked positive definite."""
    if c <= 0:
        raise ValueError("signal strength c must be positive")
    W = w.w if isinstance(w, AdjacencyMatrix) else np.asarray(w, dtype=float)
    K = W.shape[0]
    theta = c * W + (abs(np.linalg.eigvalsh(W)[0]) + 0.2) * np.eye(K)
    lmin = np.linalg.eigvalsh(theta)[0]
    if lmin <= PD_TOL:
        raise NonPositiveDefinite(f"lambda_min(theta) = {lmin:.3e} for c={c}")
    return theta


def _support(M, tol) -> frozenset:
    t, k = np.nonzero(np.triu(np.abs(M) > tol, 1))
    return frozenset(zip(t.tolist(), k.tolist()))


def ground_truth(model: LatentModel) -> GroundTruthEdges:
    return GroundTruthEdges(
        latent_edges=_support(model.theta_star, 0.0),
        average_edges=_support(model.omega_star, SUPPORT_TOL),
    )
