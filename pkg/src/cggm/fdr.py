"""Graph-wise selection under FDR control and its empirical scoring.

The cutoff is the smallest tau > 0 with tau >= Phi^-1(1 - alpha R_tau / (2 N |H|)),
R_tau being the number of |W| at or above tau. R_tau only moves at the
order statistics, so with |W|_(1) >= |W|_(2) >= ... the rule reduces to the
largest r with |W|_(r) >= Phi^-1(1 - alpha r / (2 N |H|)); the top r are
rejected and tau is that quantile. N is the harmonic number of |H|
(Benjamini-Yekutieli) or 1 (Benjamini-Hochberg). Excluded (NaN) statistics
count in |H| and are never rejected.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DomainError

METHODS = ("BY", "BH")


@dataclass(frozen=True)
class FdrReport:
    alpha: float
    cutoff: float
    selected: frozenset
    n_rejections: int
    method: str
    n_hypotheses: int
    empirical_fdr: float | None = None
    empirical_power: float | None = None


def phi_inv(p):
    """Standard normal quantile."""
    arr = np.asarray(p, dtype=float)
    if np.any(~((arr > 0) & (arr < 1))):
        raise DomainError("probability must lie strictly inside (0, 1)")
    out = ndtri(arr)
    return float(out) if out.ndim == 0 else out


def harmonic(n: int) -> float:
    return float(np.sum(1.0 / np.arange(1, n + 1))) if n > 0 else 0.0


def _edges_and_stats(stats):
    """Accept EdgeInference records or a mapping {(t, k): W}."""
    if isinstance(stats, dict):
        keys = list(stats)
        w = np.array([stats[e] for e in keys], dtype=float)
        return keys, w
    keys = [(e.t, e.k) for e in stats]
    w = np.array([e.stat for e in stats], dtype=float)
    return keys, w


def _cutoff(stats, alpha: float, method: str, n_hypotheses: int | None = None) -> FdrReport:
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    method = method.upper()
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    keys, w = _edges_and_stats(stats)
    H = len(keys) if n_hypotheses is None else int(n_hypotheses)
    if H < len(keys):
        raise ValueError("n_hypotheses smaller than the number of statistics")
    if H == 0:
        return FdrReport(alpha, float("inf"), frozenset(), 0, method, 0)
    norm = harmonic(H) if method == "BY" else 1.0
    mag = np.abs(w)
    mag[np.isnan(mag)] = -np.inf
    order = np.argsort(-mag, kind="stable")
    ranked = mag[order]
    r = np.arange(1, ranked.size + 1)
    quant = ndtri(1 - alpha * r / (2 * norm * H))
    ok = np.flatnonzero(ranked >= quant)
    if ok.size == 0:
        return FdrReport(alpha, float(ndtri(1 - alpha / (2 * norm * H))), frozenset(), 0, method, H)
    top = int(ok[-1]) + 1
    tau = float(quant[top - 1])
    chosen = frozenset(keys[i] for i in order[:top])
    return FdrReport(alpha, tau, chosen, top, method, H)


def by_cutoff(stats, alpha: float, n_hypotheses: int | None = None) -> FdrReport:
    return _cutoff(stats, alpha, "BY", n_hypotheses)


def bh_cutoff(stats, alpha: float, n_hypotheses: int | None = None) -> FdrReport:
    return _cutoff(stats, alpha, "BH", n_hypotheses)


def select(stats, alpha: float, method: str = "BY", n_hypotheses: int | None = None) -> FdrReport:
    return _cutoff(stats, alpha, method, n_hypotheses)


def score(report: FdrReport, truth, graph_kind: str | None = None) -> FdrReport:
    """Attach empirical FDR and power.

    ``truth`` is either a GroundTruthEdges (then ``graph_kind`` picks the
    set) or a plain set of true edges.
    """
    true_edges = truth.for_kind(graph_kind) if hasattr(truth, "for_kind") else frozenset(truth)
    sel = report.selected
    false = len(sel - true_edges)
    fdr = false / max(len(sel), 1)
    power = len(sel & true_edges) / len(true_edges) if true_edges else 0.0
    return FdrReport(
        report.alpha,
        report.cutoff,
        report.selected,
        report.n_rejections,
        report.method,
        report.n_hypotheses,
        empirical_fdr=fdr,
        empirical_power=power,
    )
