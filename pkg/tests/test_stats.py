import itertools

import numpy as np
import pytest
from scipy.stats import rankdata

from faultcast.stats import (
    anderson_darling_normality,
    bonferroni,
    pairwise_matrix,
    wilcoxon_signed_rank,
)


def brute_force_wilcoxon(x, y):
    """Two-sided p by literal enumeration of all 2^n sign patterns."""
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    d = d[d != 0]
    n = d.size
    ranks = rankdata(np.abs(d))
    w_obs = ranks[d > 0].sum()
    total = ranks.sum()
    low = high = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for s, r in zip(signs, ranks) if s)
        if w <= w_obs + 1e-9:
            low += 1
        if w >= w_obs - 1e-9:
            high += 1
    p = 2 * min(low, high) / 2**n
    return w_obs, min(1.0, p)


class TestWilcoxon:
    def test_n5_all_positive(self):
        # all five differences positive, distinct: W+ = 15,
        # one-sided tail P(W >= 15) = 1/32, two-sided p = 2/32 = 0.0625
        res = wilcoxon_signed_rank([5, 4, 3, 2, 1], [0, 0, 0, 0, 0])
        assert res.statistic == 15.0
        assert res.pvalue == pytest.approx(0.0625, abs=1e-12)
        assert res.exact and res.n_effective == 5

    def test_identical_vectors_degenerate(self):
        res = wilcoxon_signed_rank([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert res.pvalue == 1.0
        assert res.degenerate

    def test_symmetry_in_argument_order(self):
        rng = np.random.default_rng(0)
        x = rng.random(12)
        y = rng.random(12)
        assert (
            wilcoxon_signed_rank(x, y).pvalue
            == wilcoxon_signed_rank(y, x).pvalue
        )

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(42)
        for _ in range(60):
            n = int(rng.integers(3, 11))
            x = np.round(rng.normal(size=n), 1)
            y = np.round(rng.normal(size=n), 1)
            if np.all(x == y):
                continue
            res = wilcoxon_signed_rank(x, y, mode="exact")
            w, p = brute_force_wilcoxon(x, y)
            assert res.statistic == pytest.approx(w)
            assert res.pvalue == pytest.approx(p, abs=1e-12)

    def test_exact_vs_approx_close_at_n25(self):
        rng = np.random.default_rng(7)
        x = rng.normal(size=25)
        y = rng.normal(size=25) + 0.3
        exact = wilcoxon_signed_rank(x, y, mode="exact").pvalue
        approx = wilcoxon_signed_rank(x, y, mode="approx").pvalue
        assert abs(exact - approx) < 0.02

    def test_auto_switches_to_approx_above_limit(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=40)
        y = rng.normal(size=40)
        assert not wilcoxon_signed_rank(x, y).exact
        assert wilcoxon_signed_rank(x[:10], y[:10]).exact

    def test_matches_scipy(self):
        from scipy.stats import wilcoxon as scipy_wilcoxon

        rng = np.random.default_rng(11)
        for n, mode in [(8, "exact"), (50, "approx")]:
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            ours = wilcoxon_signed_rank(x, y, mode=mode)
            method = "exact" if mode == "exact" else "approx"
            ref = scipy_wilcoxon(x, y, method=method, correction=True)
            assert ours.pvalue == pytest.approx(ref.pvalue, abs=1e-9)

    def test_pratt_keeps_zero_ranks(self):
        x = np.array([1.0, 2.0, 3.0, 4.0])
        y = np.array([1.0, 0.0, 0.0, 0.0])
        wilcox = wilcoxon_signed_rank(x, y, zero_method="wilcox")
        pratt = wilcoxon_signed_rank(x, y, zero_method="pratt")
        assert wilcox.n_effective == pratt.n_effective == 3
        assert pratt.statistic > wilcox.statistic  # zero consumed rank 1

    def test_input_validation(self):
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([], [])
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1, 2], [1])
        with pytest.raises(ValueError):
            wilcoxon_signed_rank([1, 2], [0, 0], zero_method="bogus")


class TestBonferroni:
    def test_21_comparisons(self):
        assert f"{bonferroni(0.05, 21):.4f}" == "0.0024"

    def test_single_comparison_identity(self):
        assert bonferroni(0.05, 1) == 0.05

    def test_rejects_zero_comparisons(self):
        with pytest.raises(ValueError):
            bonferroni(0.05, 0)


class TestAndersonDarling:
    def test_normal_sample_accepted(self):
        x = np.random.default_rng(0).normal(size=200)
        stat, reject = anderson_darling_normality(x)
        assert not reject
        assert stat < 0.752

    def test_bimodal_rejected(self):
        rng = np.random.default_rng(1)
        x = np.concatenate(
            [rng.normal(-5, 0.3, 15), rng.normal(5, 0.3, 15)]
        )
        _, reject = anderson_darling_normality(x)
        assert reject

    def test_affine_invariance(self):
        x = np.random.default_rng(2).normal(size=30)
        stat, _ = anderson_darling_normality(x)
        shifted, _ = anderson_darling_normality(7.5 * x - 3.0)
        assert stat == pytest.approx(shifted, abs=1e-10)

    def test_matches_scipy(self):
        from scipy.stats import anderson

        x = np.random.default_rng(4).normal(size=30)
        stat, _ = anderson_darling_normality(x)
        ref = anderson(x, dist="norm").statistic
        # scipy reports unadjusted A^2
        n = len(x)
        assert stat == pytest.approx(
            ref * (1 + 0.75 / n + 2.25 / n**2), abs=1e-8
        )

    def test_small_sample_rejected_input(self):
        with pytest.raises(ValueError):
            anderson_darling_normality(np.ones(5))
        with pytest.raises(ValueError):
            anderson_darling_normality(np.full(30, 2.0))


class TestPairwiseMatrix:
    def _table(self):
        rng = np.random.default_rng(5)
        base = rng.random(30)
        return {
            "hydra": base + 0.2,
            "rocket": base + rng.normal(0, 0.01, 30),
            "ridge-tabular": base - 0.3,
        }

    def test_shape_and_symmetry(self):
        result = pairwise_matrix(self._table())
        assert result.pvalues.shape == (3, 3)
        np.testing.assert_array_equal(result.pvalues, result.pvalues.T)
        np.testing.assert_array_equal(np.diag(result.pvalues), np.ones(3))

    def test_corrected_level(self):
        result = pairwise_matrix(self._table(), alpha=0.05)
        assert result.alpha_corrected == pytest.approx(0.05 / 3)

    def test_clear_separation_flagged(self):
        result = pairwise_matrix(self._table())
        i = result.methods.index("hydra")
        j = result.methods.index("ridge-tabular")
        assert result.significant[i, j]
        assert not result.significant[i, i]

    def test_rows_cover_all_pairs(self):
        rows = pairwise_matrix(self._table()).to_rows()
        assert len(rows) == 3
        assert all(len(r) == 4 for r in rows)

    def test_format_text_small_p_rendering(self):
        text = pairwise_matrix(self._table()).format_text()
        assert "< 0.001" in text
        assert "hydra" in text and "rocket" in text

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            pairwise_matrix({"a": [1.0, 2.0], "b": [1.0]})
