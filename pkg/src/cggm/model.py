"""Latent G-block model X = AZ + E and its population matrices.

Cluster labels are 0-based throughout. ``A`` is never materialised; a
partition is stored as a label vector and all products with ``A`` are done
by indexing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CholeskyFailure, NonPositiveDefinite, SingletonCluster

PD_TOL = 1e-8


def make_rng(seed: int) -> np.random.Generator:
    """Seeded generator on the Philox4x64 counter-based bit generator."""
    return np.random.Generator(np.random.Philox(int(seed)))


def _canonical(labels) -> np.ndarray:
    labels = np.asarray(labels)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    # relabel by order of first occurrence
    order = np.argsort(first)
    rank = np.empty_like(order)
    rank[order] = np.arange(order.size)
    return rank[inverse.ravel()].astype(np.int64)


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of d variables to K disjoint non-empty clusters.

    Labels are canonicalised by first occurrence, so two partitions that
    group variables identically compare equal whatever labels they were
    built from.

    Singleton clusters are representable (data-driven clustering can emit
    them); operations that need ``min_size >= 2`` check it themselves via
    :meth:`require_min_size`.
    """

    labels: np.ndarray
    K: int = field(init=False)
    sizes: np.ndarray = field(init=False)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 1 or labels.size == 0:
            raise ValueError("labels must be a non-empty 1-d sequence")
        canon = _canonical(labels)
        canon.setflags(write=False)
        object.__setattr__(self, "labels", canon)
        sizes = np.bincount(canon)
        sizes.setflags(write=False)
        object.__setattr__(self, "K", int(sizes.size))
        object.__setattr__(self, "sizes", sizes)

    @classmethod
    def from_sizes(cls, sizes) -> "Partition":
        return cls(np.repeat(np.arange(len(sizes)), sizes))

    @classmethod
    def round_robin(cls, d: int, K: int) -> "Partition":
        """Variable j goes to cluster j mod K; sizes differ by at most one."""
        if K > d:
            raise ValueError("K must not exceed d")
        return cls(np.arange(d) % K)

    @property
    def d(self) -> int:
        return int(self.labels.size)

    @property
    def min_size(self) -> int:
        return int(self.sizes.min())

    def members(self, k: int) -> np.ndarray:
        return np.flatnonzero(self.labels == k)

    def groups(self) -> list[np.ndarray]:
        return [self.members(k) for k in range(self.K)]

    def require_min_size(self, m: int = 2) -> None:
        if self.min_size < m:
            raise SingletonCluster(
                f"smallest cluster has {self.min_size} variable(s); need at least {m}"
            )

    def membership(self) -> np.ndarray:
        """The d x K 0/1 matrix A."""
        A = np.zeros((self.d, self.K))
        A[np.arange(self.d), self.labels] = 1.0
        return A

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.d == other.d and bool(np.array_equal(self.labels, other.labels))

    def __hash__(self):
        return hash(self.labels.tobytes())

    def __repr__(self):
        return f"Partition(d={self.d}, K={self.K}, sizes={self.sizes.tolist()})"


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class LatentModel:
    partition: Partition
    theta_star: np.ndarray
    gamma_star: np.ndarray
    c_star: np.ndarray
    sigma_star: np.ndarray
    s_star: np.ndarray
    omega_star: np.ndarray

    @property
    def K(self) -> int:
        return self.partition.K

    @property
    def d(self) -> int:
        return self.partition.d

    @property
    def gamma_bar(self) -> np.ndarray:
        """Per-cluster noise contribution to S*: sum of gamma over G_k / |G_k|^2."""
        p = self.partition
        return np.bincount(p.labels, weights=self.gamma_star, minlength=p.K) / p.sizes**2

    def w_star(self, t: int, graph_kind: str = "latent") -> np.ndarray:
        """Population nuisance projection (M_{-t,-t})^{-1} M_{-t,t}."""
        M = self.c_star if graph_kind == "latent" else self.s_star
        rest = np.delete(np.arange(self.K), t)
        return np.linalg.solve(M[np.ix_(rest, rest)], M[rest, t])


def build_model(partition: Partition, theta_star, gamma_star) -> LatentModel:
    theta = np.asarray(theta_star, dtype=float)
    gamma = np.asarray(gamma_star, dtype=float)
    K = partition.K
    if theta.shape != (K, K):
        raise ValueError(f"theta_star must be {K}x{K}, got {theta.shape}")
    if gamma.shape != (partition.d,):
        raise ValueError(f"gamma_star must have length {partition.d}")
    if not np.allclose(theta, theta.T, rtol=0, atol=1e-12):
        raise ValueError("theta_star must be symmetric")
    partition.require_min_size(2)
    if np.any(~np.isfinite(gamma)) or np.any(gamma <= 0):
        raise ValueError("gamma_star entries must be positive")
    lmin = np.linalg.eigvalsh(theta)[0]
    if lmin <= PD_TOL:
        raise NonPositiveDefinite(f"lambda_min(theta_star) = {lmin:.3e}")

    theta = (theta + theta.T) / 2
    c_star = np.linalg.inv(theta)
    c_star = (c_star + c_star.T) / 2
    labels = partition.labels
    sigma = c_star[np.ix_(labels, labels)] + np.diag(gamma)
    gbar = np.bincount(labels, weights=gamma, minlength=K) / partition.sizes**2
    s_star = c_star + np.diag(gbar)
    omega = np.linalg.inv(s_star)
    omega = (omega + omega.T) / 2
    return LatentModel(
        partition=partition,
        theta_star=_frozen(theta),
        gamma_star=_frozen(gamma),
        c_star=_frozen(c_star),
        sigma_star=_frozen(sigma),
        s_star=_frozen(s_star),
        omega_star=_frozen(omega),
    )


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    data: np.ndarray

    def __post_init__(self):
        x = np.array(self.data, dtype=float)
        if x.ndim != 2:
            raise ValueError("data must be a 2-d array")
        if x.shape[0] < 2:
            raise ValueError("need at least 2 observations")
        if not np.all(np.isfinite(x)):
            raise ValueError("data contains non-finite entries")
        x.setflags(write=False)
        object.__setattr__(self, "data", x)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def _as_array(x) -> np.ndarray:
    return x.data if isinstance(x, SampleMatrix) else np.asarray(x, dtype=float)


def sample(model: LatentModel, n: int, rng_seed: int) -> SampleMatrix:
    """Draw n i.i.d. rows of X = AZ + E, Z ~ N(0, C*), E ~ N(0, diag(gamma*))."""
    if n < 2:
        raise ValueError("n must be at least 2")
    try:
        L = np.linalg.cholesky(model.c_star)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailure("C* is not numerically positive definite") from exc
    if np.any(model.gamma_star <= 0):
        raise ValueError("gamma_star entries must be positive")
    rng = make_rng(rng_seed)
    z = rng.standard_normal((n, model.K)) @ L.T
    e = rng.standard_normal((n, model.d)) * np.sqrt(model.gamma_star)
    return SampleMatrix(z[:, model.partition.labels] + e)


def cluster_averages(x, partition: Partition) -> np.ndarray:
    """n x K matrix whose column k is the row-wise mean over G_k."""
    x = _as_array(x)
    if x.shape[1] != partition.d:
        raise ValueError(f"x has {x.shape[1]} columns, partition covers {partition.d}")
    A = partition.membership()
    return x @ (A / partition.sizes)
