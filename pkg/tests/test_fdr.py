import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from cggm.errors import DomainError
from cggm.fdr import bh_cutoff, by_cutoff, harmonic, phi_inv, score, select
from cggm.graphs import GroundTruthEdges
from cggm.inference import EdgeInference

from oracles import fdr_oracle


def as_dict(values):
    return {(0, i + 1): float(v) for i, v in enumerate(values)}


def continuum_oracle(values, alpha, method):
    """Smallest tau among candidate points satisfying tau >= q(R_tau), R counted with >=."""
    w = np.abs(np.asarray(values, dtype=float))
    H = len(w)
    N = harmonic(H) if method == "BY" else 1.0
    q = lambda r: norm.isf(alpha * r / (2 * N * H))
    cands = sorted(set(w.tolist()) | {q(r) for r in range(1, H + 1)})
    for tau in cands:
        R = int(np.sum(w >= tau))
        if R >= 1 and tau >= q(R):
            return R
    return 0


stat_lists = st.lists(st.floats(-8, 8, allow_nan=False), min_size=1, max_size=50)


class TestHarmonic:
    def test_three(self):
        assert harmonic(3) == pytest.approx(11 / 6)

    def test_zero(self):
        assert harmonic(0) == 0.0


class TestCutoff:
    def test_zero_stats(self):
        assert by_cutoff(as_dict([0, 0, 0]), 0.1).n_rejections == 0

    def test_three_statistics(self):
        stats = as_dict([10, 9, 0.5])
        for fn, method in ((by_cutoff, "BY"), (bh_cutoff, "BH")):
            rep = fn(stats, 0.2)
            assert rep.selected == {(0, 1), (0, 2)}
            assert rep.n_rejections == fdr_oracle([10, 9, 0.5], 0.2, method)[0] == 2

    def test_single_hypothesis(self):
        assert by_cutoff(as_dict([3.0]), 0.05).n_rejections == 1
        assert by_cutoff(as_dict([1.95]), 0.05).n_rejections == 0
        assert by_cutoff(as_dict([3.0]), 0.05).cutoff == pytest.approx(1.959964, abs=1e-6)

    @given(stat_lists, st.sampled_from([0.05, 0.1, 0.2, 0.5]), st.sampled_from(["BY", "BH"]))
    def test_matches_exhaustive(self, values, alpha, method):
        rep = select(as_dict(values), alpha, method)
        r, cutoff = fdr_oracle(values, alpha, method)
        assert rep.n_rejections == r
        assert rep.cutoff == pytest.approx(cutoff, rel=1e-12)
        assert rep.n_rejections == continuum_oracle(values, alpha, method)
        if r:
            w = np.abs(values)
            assert rep.selected == {(0, i + 1) for i in range(len(w)) if w[i] >= np.sort(w)[::-1][r - 1]}

    @given(stat_lists, st.sampled_from([0.05, 0.1, 0.2]))
    def test_bh_superset(self, values, alpha):
        stats = as_dict(values)
        assert by_cutoff(stats, alpha).selected <= bh_cutoff(stats, alpha).selected

    @given(stat_lists, st.floats(0.01, 0.4), st.floats(0.01, 0.4), st.sampled_from(["BY", "BH"]))
    def test_monotone_in_alpha(self, values, a1, a2, method):
        lo, hi = sorted((a1, a2))
        stats = as_dict(values)
        assert select(stats, lo, method).selected <= select(stats, hi, method).selected

    def test_ties_together(self):
        stats = as_dict([4.0, 4.0, 4.0, -4.0, 0.1])
        rep = by_cutoff(stats, 0.1)
        assert rep.n_rejections == 4

    def test_nan_counts_but_never_rejected(self):
        stats = as_dict([12.0, math.nan, 11.0])
        rep = by_cutoff(stats, 0.1)
        assert rep.n_hypotheses == 3
        assert (0, 2) not in rep.selected
        assert rep.selected == {(0, 1), (0, 3)}
        # the NaN inflates |H| exactly as a third finite statistic would
        assert rep.cutoff == by_cutoff(as_dict([12.0, 0.0, 11.0]), 0.1).cutoff

    def test_extra_hypotheses(self):
        a = by_cutoff(as_dict([3.5]), 0.1, n_hypotheses=10)
        b = by_cutoff(as_dict([3.5] + [0.0] * 9), 0.1)
        assert a.cutoff == b.cutoff
        assert a.n_rejections == b.n_rejections

    def test_edge_records(self):
        edges = [EdgeInference(0, 1, 0.5, 1.0, 9.0, "latent"), EdgeInference(0, 2, 0.0, 1.0, 0.2, "latent")]
        assert by_cutoff(edges, 0.1).selected == {(0, 1)}

    def test_bad_inputs(self):
        with pytest.raises(ValueError):
            by_cutoff(as_dict([1.0]), 0.0)
        with pytest.raises(ValueError):
            select(as_dict([1.0]), 0.1, "holm")
        with pytest.raises(ValueError):
            by_cutoff(as_dict([1.0, 2.0]), 0.1, n_hypotheses=1)


class TestPhiInv:
    def test_examples(self):
        assert phi_inv(0.5) == 0.0
        assert phi_inv(0.975) == pytest.approx(1.959964, abs=1e-6)

    def test_against_mpmath(self):
        mpmath.mp.dps = 40
        for p in (1e-12, 1e-6, 0.01, 0.3, 0.7, 0.99, 1 - 1e-9):
            ref = float(mpmath.sqrt(2) * mpmath.erfinv(2 * mpmath.mpf(p) - 1))
            assert phi_inv(p) == pytest.approx(ref, rel=1e-13, abs=1e-15)

    def test_round_trip(self):
        p = np.linspace(0.0005, 0.9995, 1000)
        np.testing.assert_allclose(norm.cdf(phi_inv(p)), p, atol=1e-10, rtol=0)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            phi_inv(p)


class TestScore:
    def test_perfect(self):
        rep = score(by_cutoff({(0, 1): 9.0, (0, 2): 0.0}, 0.1), {(0, 1)})
        assert (rep.empirical_fdr, rep.empirical_power) == (0.0, 1.0)

    def test_empty_selection(self):
        rep = score(by_cutoff({(0, 1): 0.0}, 0.1), {(0, 1)})
        assert (rep.empirical_fdr, rep.empirical_power) == (0.0, 0.0)

    def test_counting(self):
        stats = {(0, 1): 20.0, (0, 2): 20.0, (0, 3): 0.0, (1, 2): 0.0, (1, 3): 0.0}
        truth = {(0, 1), (0, 3), (1, 2), (1, 3)}
        rep = score(by_cutoff(stats, 0.1), truth)
        assert rep.empirical_fdr == 0.5
        assert rep.empirical_power == 0.25

    def test_graph_kind(self):
        gt = GroundTruthEdges(latent_edges=frozenset({(0, 1)}), average_edges=frozenset({(0, 2)}))
        rep = by_cutoff({(0, 1): 9.0, (0, 2): 0.0}, 0.1)
        assert score(rep, gt, "latent").empirical_power == 1.0
        assert score(rep, gt, "average").empirical_fdr == 1.0
