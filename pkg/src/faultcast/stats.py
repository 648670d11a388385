"""Nonparametric method comparison.

Pairwise Wilcoxon signed-rank tests (exact by sign-pattern enumeration for
small effective n, normal approximation with tie correction otherwise),
Bonferroni correction, and an Anderson-Darling normality check with
estimated parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import norm, rankdata

EXACT_LIMIT = 25
AD_CRITICAL_5PCT = 0.752  # estimated-parameter normality case


@dataclass
class WilcoxonResult:
    statistic: float  # W+, sum of ranks of positive differences
    pvalue: float
    n_effective: int
    exact: bool
    degenerate: bool = False


def _exact_pvalue(doubled_ranks, w_doubled):
    """Two-sided p by full enumeration of sign assignments.

    Equivalent to iterating all 2^n patterns: a polynomial-product count of
    attainable W+ values over all sign choices (ranks doubled so mid-ranks
    stay integral).
    """
    total = int(sum(doubled_ranks))
    counts = np.zeros(total + 1, dtype=np.float64)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: counts.size - r]
        counts = counts + shifted
    n_patterns = counts.sum()
    p_low = counts[: w_doubled + 1].sum() / n_patterns
    p_high = counts[w_doubled:].sum() / n_patterns
    return min(1.0, 2 * min(p_low, p_high))


def wilcoxon_signed_rank(
    x, y, mode: str = "auto", zero_method: str = "wilcox"
) -> WilcoxonResult:
    """Paired two-sided Wilcoxon signed-rank test.

    Zero differences are discarded by default (``zero_method="wilcox"``);
    ``"pratt"`` keeps them for ranking and drops them from the statistic.
    ``mode`` is "auto" (exact up to n=25), "exact" or "approx".
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and paired")
    if x.size == 0:
        raise ValueError("empty samples")
    d = x - y
    if np.all(d == 0):
        return WilcoxonResult(
            statistic=0.0, pvalue=1.0, n_effective=0, exact=True,
            degenerate=True,
        )

    if zero_method == "wilcox":
        d = d[d != 0]
        ranks = rankdata(np.abs(d))
    elif zero_method == "pratt":
        ranks = rankdata(np.abs(d))
        ranks = ranks[d != 0]
        d = d[d != 0]
    else:
        raise ValueError(f"bad zero_method {zero_method!r}")

    n = d.size
    w_plus = float(ranks[d > 0].sum())

    exact = mode == "exact" or (mode == "auto" and n <= EXACT_LIMIT)
    if exact:
        doubled = np.round(2 * ranks).astype(np.int64)
        w_doubled = int(round(2 * w_plus))
        p = _exact_pvalue(doubled, w_doubled)
    else:
        mean = n * (n + 1) / 4
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24 - np.sum(
            tie_counts**3 - tie_counts
        ) / 48
        if var <= 0:
            return WilcoxonResult(
                statistic=w_plus, pvalue=1.0, n_effective=n, exact=False,
                degenerate=True,
            )
        # continuity correction toward the mean
        delta = abs(w_plus - mean) - 0.5
        z = max(delta, 0.0) / math.sqrt(var)
        p = min(1.0, 2 * norm.sf(z))
    return WilcoxonResult(
        statistic=w_plus, pvalue=float(p), n_effective=n, exact=exact
    )


def bonferroni(alpha: float, m_comparisons: int) -> float:
    if m_comparisons < 1:
        raise ValueError("m_comparisons must be >= 1")
    return alpha / m_comparisons


def anderson_darling_normality(x):
    """A-D normality statistic with estimated mean/std.

    Returns ``(a2_star, reject)`` where ``reject`` is the 5% decision with
    the small-sample adjusted statistic against the 0.752 critical value.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size < 8:
        raise ValueError("need a 1-d sample with n >= 8")
    n = x.size
    std = x.std(ddof=1)
    if std == 0:
        raise ValueError("zero sample variance")
    z = np.sort((x - x.mean()) / std)
    cdf = norm.cdf(z)
    eps = np.finfo(np.float64).tiny
    cdf = np.clip(cdf, eps, 1 - eps)
    i = np.arange(1, n + 1)
    a2 = -n - np.mean((2 * i - 1) * (np.log(cdf) + np.log(1 - cdf[::-1])))
    a2_star = a2 * (1 + 0.75 / n + 2.25 / n**2)
    return float(a2_star), bool(a2_star > AD_CRITICAL_5PCT)


@dataclass
class PairwiseTestMatrix:
    methods: list
    pvalues: np.ndarray  # symmetric, diagonal 1.0
    alpha: float
    alpha_corrected: float

    @property
    def significant(self) -> np.ndarray:
        mask = self.pvalues < self.alpha_corrected
        np.fill_diagonal(mask, False)
        return mask

    def to_rows(self):
        rows = []
        for i, j in combinations(range(len(self.methods)), 2):
            rows.append(
                (
                    self.methods[i],
                    self.methods[j],
                    self.pvalues[i, j],
                    bool(self.significant[i, j]),
                )
            )
        return rows

    def format_text(self) -> str:
        names = self.methods
        width = max(len(n) for n in names) + 2
        lines = [
            f"alpha* = {self.alpha}/{len(self.to_rows())} "
            f"= {self.alpha_corrected:.4f}"
        ]
        header = " " * width + "".join(f"{n:>{width}}" for n in names)
        lines.append(header)
        for i, name in enumerate(names):
            cells = []
            for j in range(len(names)):
                if j < i:
                    cells.append(" " * width)
                else:
                    p = self.pvalues[i, j]
                    text = "< 0.001" if p < 0.001 else f"{p:.3f}"
                    cells.append(f"{text:>{width}}")
            lines.append(f"{name:<{width}}" + "".join(cells))
        return "\n".join(lines)


def pairwise_matrix(metric_table, alpha=0.05, mode="auto") -> PairwiseTestMatrix:
    """Wilcoxon p-values for every method pair.

    ``metric_table`` maps method name to its per-execution metric vector;
    vectors must be paired (same executions, same order and length).
    """
    methods = list(metric_table)
    lengths = {len(np.asarray(metric_table[m])) for m in methods}
    if len(lengths) != 1:
        raise ValueError("methods must have the same number of executions")
    m = len(methods)
    pvalues = np.ones((m, m))
    for i, j in combinations(range(m), 2):
        result = wilcoxon_signed_rank(
            np.asarray(metric_table[methods[i]], dtype=np.float64),
            np.asarray(metric_table[methods[j]], dtype=np.float64),
            mode=mode,
        )
        pvalues[i, j] = pvalues[j, i] = result.pvalue
    n_pairs = m * (m - 1) // 2
    return PairwiseTestMatrix(
        methods=methods,
        pvalues=pvalues,
        alpha=alpha,
        alpha_corrected=bonferroni(alpha, max(1, n_pairs)),
    )
