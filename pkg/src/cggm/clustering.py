"""Variable clustering through the studentized covariance-difference metric.

The metric is

    V(a, b) = max_{c, d not in {a, b}} |(S_ac - S_ad) - (S_bc - S_bd)|
                                       / sqrt(S_cc + S_dd - 2 S_cd)

with 0/0 = 0. At population level V(a, b) vanishes exactly when a and b
load on the same latent coordinate, which is what the greedy thresholding
in :func:`cod_cluster` exploits. The linking rule is a reconstruction: the
original COD description is not restated here, only its threshold scale.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import DimensionTooSmall
from .model import Partition, _as_array

DEGENERATE = 1e-12


@dataclass(frozen=True, eq=False)
class CodMetric:
    v: np.ndarray

    @property
    def d(self) -> int:
        return self.v.shape[0]


@dataclass(frozen=True, eq=False)
class GammaTilde:
    diag: np.ndarray
    neighbors: np.ndarray  # d x 2, columns b1(a), b2(a)


def sample_covariance(x) -> np.ndarray:
    """Uncentered second-moment matrix n^-1 sum_i X_i X_i^T."""
    x = _as_array(x)
    if x.shape[0] < 2:
        raise ValueError("need at least 2 observations")
    return x.T @ x / x.shape[0]


def _inverse_scale(sigma):
    """1 / sqrt(S_cc + S_dd - 2 S_cd), zero where the scale is degenerate."""
    diag = np.diag(sigma)
    var = diag[:, None] + diag[None, :] - 2 * sigma
    inv = np.zeros_like(var)
    ok = var > DEGENERATE
    inv[ok] = 1.0 / np.sqrt(var[ok])
    return inv, ok


def cod_metric(sigma_hat, block: int = 16) -> CodMetric:
    """All pairwise V(a, b), evaluated a pivot row and a block of partners at a time.

    Memory is O(block * d^2) rather than O(d^4). Probe pairs (c, d) whose
    scale is degenerate contribute 0 when their numerator is also
    degenerate and are skipped otherwise.
    """
    S = np.asarray(sigma_hat, dtype=float)
    d = S.shape[0]
    if S.shape != (d, d):
        raise ValueError("sigma_hat must be square")
    if d < 4:
        raise DimensionTooSmall("the metric needs d >= 4")
    inv, ok = _inverse_scale(S)
    V = np.zeros((d, d))
    for a in range(d - 1):
        for start in range(a + 1, d, block):
            bs = np.arange(start, min(start + block, d))
            D = S[a][None, :] - S[bs]  # (B, d)
            num = np.abs(D[:, :, None] - D[:, None, :])  # (B, d, d)
            ratio = num * inv
            # degenerate scale with a non-degenerate numerator is skipped; it
            # contributes 0 either way since ratio >= 0 and the max is >= 0
            ratio[:, ~ok] = 0.0
            ratio[:, a, :] = 0.0
            ratio[:, :, a] = 0.0
            local = np.arange(bs.size)
            ratio[local, bs, :] = 0.0
            ratio[local, :, bs] = 0.0
            V[a, bs] = ratio.reshape(bs.size, -1).max(axis=1)
    V = V + V.T
    return CodMetric(V)


def estimate_gamma_tilde(sigma_hat, v: CodMetric | None = None) -> GammaTilde:
    """Pre-clustering noise-variance estimate from the two V-nearest partners of each variable."""
    S = np.asarray(sigma_hat, dtype=float)
    d = S.shape[0]
    if d < 3:
        raise DimensionTooSmall("need d >= 3")
    if v is None:
        v = cod_metric(S)
    V = v.v.copy()
    np.fill_diagonal(V, np.inf)
    b1 = np.argmin(V, axis=1)
    V[np.arange(d), b1] = np.inf
    b2 = np.argmin(V, axis=1)
    a = np.arange(d)
    diag = S[a, a] + S[b1, b2] - S[a, b1] - S[a, b2]
    return GammaTilde(diag=diag, neighbors=np.column_stack([b1, b2]))


def default_threshold(sigma_hat, n: int, alpha0: float = 2.0) -> float:
    """alpha0 * median probe scale * sqrt(log(max(d, n)) / n)."""
    S = np.asarray(sigma_hat, dtype=float)
    d = S.shape[0]
    diag = np.diag(S)
    var = diag[:, None] + diag[None, :] - 2 * S
    iu = np.triu_indices(d, 1)
    scale = np.median(np.sqrt(np.clip(var[iu], 0, None)))
    return float(alpha0 * scale * np.sqrt(np.log(max(d, n)) / n))


def cod_cluster(v: CodMetric, alpha: float) -> Partition:
    """Greedy thresholding: pivot on the lowest unassigned index, absorb every
    unassigned b with V(pivot, b) <= alpha, repeat."""
    if alpha < 0:
        raise ValueError("threshold must be nonnegative")
    d = v.d
    labels = np.full(d, -1)
    k = 0
    for a in range(d):
        if labels[a] >= 0:
            continue
        free = labels < 0
        grab = free & (v.v[a] <= alpha)
        grab[a] = True
        labels[grab] = k
        k += 1
    return Partition(labels)


def cluster(x, alpha: float | None = None, alpha0: float = 2.0) -> Partition:
    """Sample covariance -> metric -> greedy partition, with the default threshold unless given."""
    S = sample_covariance(x)
    if alpha is None:
        alpha = default_threshold(S, _as_array(x).shape[0], alpha0)
    return cod_cluster(cod_metric(S), alpha)


def pecok(*args, **kwargs):
    """SDP relaxation of K-means; not provided, use :func:`cod_cluster`."""
    raise NotImplementedError("the PECOK SDP route is not implemented; use cod_cluster")


def _overlap(est: Partition, ref: Partition) -> np.ndarray:
    O = np.zeros((est.K, ref.K), dtype=np.int64)
    np.add.at(O, (est.labels, ref.labels), 1)
    return O


@dataclass(frozen=True, eq=False)
class Alignment:
    mapping: np.ndarray  # estimated label -> reference label
    labels: np.ndarray  # relabelled assignment, raw (not canonicalised)
    overlap: int
    exact_match: bool


def align_partition(estimated: Partition, reference: Partition) -> Alignment:
    """Relabel ``estimated`` to maximise total label agreement with ``reference``.

    The assignment is solved exactly (Hungarian method) for every K.
    Estimated clusters left unmatched get labels from ``reference.K`` upward.
    """
    if estimated.d != reference.d:
        raise ValueError("partitions cover different numbers of variables")
    O = _overlap(estimated, reference)
    rows, cols = linear_sum_assignment(O, maximize=True)
    mapping = np.full(estimated.K, -1)
    mapping[rows] = cols
    extra = reference.K
    for r in range(estimated.K):
        if mapping[r] < 0:
            mapping[r] = extra
            extra += 1
    return Alignment(
        mapping=mapping,
        labels=mapping[estimated.labels],
        overlap=int(O[rows, cols].sum()),
        exact_match=estimated == reference,
    )
