"""One-step (pseudo-score) inference for single precision-matrix entries.

For a K x K second-moment estimate M (S-hat for the cluster-average graph,
C-hat for the latent graph) and an edge (t, k):

* beta_k  = argmin ||beta||_1  s.t. ||M beta - e_k||_inf <= lam        (initial column)
* w_t     = argmin ||w||_1     s.t. ||M_{t,-t} - w^T M_{-t,-t}||_inf <= lam'
* v_t     = (1 at t, -w_t elsewhere)
* h       = v_t^T (M beta_k - e_k)
* tilde   = beta_k[t] - h * beta_t[t]
* std     = sqrt(beta_k[t]^2 + beta_t[t] * beta_k[k])
* W       = sqrt(n) * tilde / std

No symmetrisation of the initial estimate is done; the (t, k) entry is read
from column k and the diagonals from their own columns.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .covariance import averages_covariance, latent_covariance
from .errors import Infeasible, NonPositiveVariance, NotConverged
from .model import Partition, _as_array
from .simplex import solve_l1_box

log = logging.getLogger(__name__)

GRAPH_KINDS = ("latent", "average")


@dataclass(frozen=True, eq=False)
class ClimeColumn:
    k: int
    beta: np.ndarray
    lam: float
    residual_inf_norm: float


@dataclass(frozen=True, eq=False)
class NuisanceProjection:
    t: int
    w: np.ndarray
    v: np.ndarray
    lambda_prime: float


@dataclass(frozen=True)
class EdgeInference:
    t: int
    k: int
    estimate: float
    std: float
    stat: float
    graph_kind: str
    excluded: bool = False


def default_lambda(K: int, n: int, const: float = 2.0) -> float:
    return const * math.sqrt(math.log(max(K, n)) / n)


def clime_column(m_hat, k: int, lam: float) -> ClimeColumn:
    M = np.asarray(m_hat, dtype=float)
    e = np.zeros(M.shape[0])
    e[k] = 1.0
    sol = solve_l1_box(M, e, lam)
    return ClimeColumn(k=k, beta=sol.beta, lam=lam, residual_inf_norm=sol.residual_inf_norm)


def nuisance_projection(m_hat, t: int, lambda_prime: float) -> NuisanceProjection:
    M = np.asarray(m_hat, dtype=float)
    K = M.shape[0]
    rest = np.delete(np.arange(K), t)
    # row-vector constraint M_{t,-t} - w^T M_{-t,-t} written as A w - b
    sol = solve_l1_box(M[np.ix_(rest, rest)].T, M[t, rest], lambda_prime)
    v = np.empty(K)
    v[t] = 1.0
    v[rest] = -sol.beta
    return NuisanceProjection(t=t, w=sol.beta, v=v, lambda_prime=lambda_prime)


def pseudo_score(m_hat, beta_k, v_t, k: int) -> float:
    M = np.asarray(m_hat, dtype=float)
    r = M @ beta_k
    r[k] -= 1.0
    return float(v_t @ r)


def one_step_edge(m_hat, col_k, col_t, proj: NuisanceProjection, t: int, k: int) -> float:
    """Newton step of the initial entry along the pseudo-score.

    ``col_k`` and ``col_t`` are the initial columns k and t (ClimeColumn or
    plain arrays); ``col_t`` supplies the diagonal entry used as the inverse
    partial information.
    """
    bk = getattr(col_k, "beta", col_k)
    bt = getattr(col_t, "beta", col_t)
    h = pseudo_score(m_hat, bk, proj.v, k)
    return float(bk[t] - h * bt[t])


def edge_std(beta_tk: float, beta_tt: float, beta_kk: float) -> float:
    var = beta_tk**2 + beta_tt * beta_kk
    if not var > 0:
        raise NonPositiveVariance(f"variance estimate {var:.3e} is not positive")
    return math.sqrt(var)


def second_moment(x, g_hat: Partition, graph_kind: str) -> np.ndarray:
    if graph_kind == "average":
        return averages_covariance(x, g_hat).s_hat
    if graph_kind == "latent":
        return latent_covariance(x, g_hat).c_hat
    raise ValueError(f"graph_kind must be one of {GRAPH_KINDS}")


def _per_index(value, K):
    return np.broadcast_to(np.asarray(value, dtype=float), (K,))


def infer_from_moment(m_hat, n: int, graph_kind: str, lam, lambda_prime) -> list[EdgeInference]:
    """All t < k edge inferences from a given second-moment estimate.

    ``lam`` and ``lambda_prime`` may be scalars or length-K arrays (per-column
    tuning). Columns and projections are solved once per index.
    """
    M = np.asarray(m_hat, dtype=float)
    K = M.shape[0]
    lams = _per_index(lam, K)
    lps = _per_index(lambda_prime, K)
    cols, projs = [], []
    for i in range(K):
        try:
            cols.append(clime_column(M, i, lams[i]))
        except (Infeasible, NotConverged) as exc:
            log.warning("initial column %d failed: %s", i, exc)
            cols.append(None)
        try:
            projs.append(nuisance_projection(M, i, lps[i]))
        except (Infeasible, NotConverged) as exc:
            log.warning("projection %d failed: %s", i, exc)
            projs.append(None)
    out = []
    for t in range(K - 1):
        for k in range(t + 1, K):
            if cols[k] is None or cols[t] is None or projs[t] is None:
                out.append(EdgeInference(t, k, math.nan, math.nan, math.nan, graph_kind, excluded=True))
                continue
            est = one_step_edge(M, cols[k], cols[t], projs[t], t, k)
            try:
                std = edge_std(cols[k].beta[t], cols[t].beta[t], cols[k].beta[k])
            except NonPositiveVariance as exc:
                warnings.warn(f"edge ({t}, {k}) excluded: {exc}", RuntimeWarning, stacklevel=2)
                out.append(EdgeInference(t, k, est, math.nan, math.nan, graph_kind, excluded=True))
                continue
            out.append(EdgeInference(t, k, est, std, math.sqrt(n) * est / std, graph_kind))
    return out


def infer_graph(x, g_hat: Partition, graph_kind: str, lam=None, lambda_prime=None) -> list[EdgeInference]:
    x = _as_array(x)
    n = x.shape[0]
    if graph_kind == "latent":
        g_hat.require_min_size(2)
    if lam is None:
        lam = default_lambda(g_hat.K, n)
    if lambda_prime is None:
        lambda_prime = lam
    M = second_moment(x, g_hat, graph_kind)
    return infer_from_moment(M, n, graph_kind, lam, lambda_prime)


def stats_array(edges: list[EdgeInference]) -> np.ndarray:
    return np.array([e.stat for e in edges], dtype=float)
