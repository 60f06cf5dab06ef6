"""Plug-in second-moment estimators for the two graphs.

All moments are uncentered, matching the mean-zero model. The latent
estimate differs from the averages estimate only on the diagonal: the
within-cluster sum of X_a^2 is replaced by the leave-one-out average of the
cross products, which removes the noise variance from each diagonal block.
Estimated noise variances can be negative in finite samples and are kept
as-is; clipping them would bias C-hat.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .clustering import sample_covariance
from .model import Partition, _as_array, cluster_averages


@dataclass(frozen=True, eq=False)
class AveragesCovariance:
    s_hat: np.ndarray


@dataclass(frozen=True, eq=False)
class LatentCovariance:
    c_hat: np.ndarray
    gamma_hat: np.ndarray


def _check(x, g: Partition) -> np.ndarray:
    x = _as_array(x)
    if x.ndim != 2 or x.shape[1] != g.d:
        raise ValueError(f"x must have {g.d} columns")
    return x


def averages_covariance(x, g_hat: Partition) -> AveragesCovariance:
    x = _check(x, g_hat)
    xbar = cluster_averages(x, g_hat)
    return AveragesCovariance(xbar.T @ xbar / x.shape[0])


def _gamma_from_sigma(sigma: np.ndarray, g: Partition) -> np.ndarray:
    g.require_min_size(2)
    A = g.membership()
    # sum_{j in G_k(i)} Sigma_ij, then drop the j = i term
    block_row = (sigma @ A)[np.arange(g.d), g.labels]
    diag = np.diag(sigma)
    return diag - (block_row - diag) / (g.sizes[g.labels] - 1)


def gamma_hat(x, g_hat: Partition) -> np.ndarray:
    x = _check(x, g_hat)
    return _gamma_from_sigma(sample_covariance(x), g_hat)


def latent_from_sigma(sigma, g: Partition) -> LatentCovariance:
    """C-hat = B^-1 A^T (Sigma - Gamma) A B^-1 with B = A^T A."""
    sigma = np.asarray(sigma, dtype=float)
    gam = _gamma_from_sigma(sigma, g)
    A = g.membership() / g.sizes
    c = A.T @ (sigma - np.diag(gam)) @ A
    return LatentCovariance(c_hat=(c + c.T) / 2, gamma_hat=gam)


def latent_covariance(x, g_hat: Partition) -> LatentCovariance:
    x = _check(x, g_hat)
    return latent_from_sigma(sample_covariance(x), g_hat)


def per_sample_latent(xi, g: Partition) -> np.ndarray:
    """Single-observation version of C-hat, built from the outer product x_i x_i^T."""
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (g.d,):
        raise ValueError(f"row must have length {g.d}")
    return latent_from_sigma(np.outer(xi, xi), g).c_hat


def per_sample_latent_batch(x, g: Partition) -> np.ndarray:
    """Stack of per-row latent matrices, shape (n, K, K), without forming d x d outer products."""
    x = _check(x, g)
    g.require_min_size(2)
    sizes = g.sizes.astype(float)
    sums = x @ g.membership()  # (n, K) within-cluster sums
    sq = (x**2) @ g.membership()  # (n, K) within-cluster sums of squares
    out = sums[:, :, None] * sums[:, None, :] / np.outer(sizes, sizes)
    # diagonal: mean over ordered pairs a != b inside the cluster
    diag = (sums**2 - sq) / (sizes * (sizes - 1))
    idx = np.arange(g.K)
    out[:, idx, idx] = diag
    return out
