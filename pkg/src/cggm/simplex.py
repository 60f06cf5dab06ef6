"""Dense dual simplex for min ||beta||_1 s.t. ||A beta - b||_inf <= lam.

Splitting beta = p - q with p, q >= 0 gives the inequality-form LP

    min  1^T p + 1^T q
    s.t.  A p - A q <= b + lam
         -A p + A q <= lam - b

All costs are positive, so the all-slack basis is dual feasible from the
start and the dual simplex needs no phase 1: it only has to drive the
(possibly negative) right-hand sides nonnegative. Problems here are K x K
with K in the tens, so a dense tableau is the simplest robust choice.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, NotConverged

PIVOT_TOL = 1e-11
FEAS_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class L1Solution:
    beta: np.ndarray
    objective: float
    residual_inf_norm: float
    iterations: int


def _tableau(A, b, lam):
    r, c = A.shape
    G = np.vstack([np.hstack([A, -A]), np.hstack([-A, A])])
    h = np.concatenate([b + lam, lam - b])
    T = np.zeros((2 * r, 2 * c + 2 * r + 1))
    T[:, : 2 * c] = G
    T[:, 2 * c : 2 * c + 2 * r] = np.eye(2 * r)
    T[:, -1] = h
    cost = np.concatenate([np.ones(2 * c), np.zeros(2 * r)])
    return T, cost, G, h


def solve_l1_box(A, b, lam: float, max_iter: int | None = None) -> L1Solution:
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if lam < 0:
        raise ValueError("lam must be nonnegative")
    rows, cols = A.shape
    if b.shape != (rows,):
        raise ValueError("b has the wrong length")
    T, cost, G, h = _tableau(A, b, lam)
    m, ntot = T.shape[0], T.shape[1] - 1
    basis = np.arange(2 * cols, 2 * cols + m)
    reduced = cost.copy()
    if max_iter is None:
        max_iter = 50 * (m + ntot)
    bland = False
    stall = 0
    last_obj = -np.inf
    it = 0
    for it in range(1, max_iter + 1):
        rhs = T[:, -1]
        neg = np.flatnonzero(rhs < -FEAS_TOL)
        if neg.size == 0:
            break
        # leaving row: most infeasible, or lowest basic index under Bland
        r = neg[np.argmin(basis[neg])] if bland else neg[np.argmin(rhs[neg])]
        row = T[r, :ntot]
        cand = np.flatnonzero(row < -PIVOT_TOL)
        if cand.size == 0:
            raise Infeasible("no beta satisfies the residual constraint at this lam")
        ratios = reduced[cand] / -row[cand]
        best = ratios.min()
        ties = cand[ratios <= best + 1e-12]
        j = ties[0] if bland else ties[np.argmax(-row[ties])]
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        reduced = reduced - reduced[j] * T[r, :ntot]
        reduced[j] = 0.0
        basis[r] = j
        obj = float(cost[basis] @ T[:, -1])
        if obj <= last_obj + 1e-14:
            stall += 1
            if stall > 2 * m:
                bland = True
        else:
            stall = 0
        last_obj = obj
    else:
        raise NotConverged(
            f"dual simplex hit {max_iter} iterations",
            iterations=max_iter,
            max_violation=float(-T[:, -1].min()),
        )

    # recompute the basic solution from the original data to shed tableau drift
    full = np.hstack([G, np.eye(m)])
    try:
        xb = np.linalg.solve(full[:, basis], h)
    except np.linalg.LinAlgError:
        xb = T[:, -1]
    x = np.zeros(ntot)
    x[basis] = np.clip(xb, 0.0, None)
    beta = x[:cols] - x[cols : 2 * cols]
    resid = float(np.max(np.abs(A @ beta - b))) if rows else 0.0
    return L1Solution(
        beta=beta,
        objective=float(np.abs(beta).sum()),
        residual_inf_norm=resid,
        iterations=it,
    )
