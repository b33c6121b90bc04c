"""Summary statistics and the rank test labeling the mode comparisons.

The two-sample Kruskal-Wallis statistic is computed on pooled midranks with
the standard tie correction; its null distribution is chi-square with one
degree of freedom, whose survival function Q(1/2, H/2) reduces exactly to
erfc(sqrt(H/2)).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ContractError

SIGNIFICANCE_LEVEL = 0.05


class Verdict(enum.Enum):
    MULTITASK_BETTER = "+*"
    CLASSICAL_BETTER = "-*"
    NO_DIFFERENCE = "="

    @property
    def symbol(self) -> str:
        return self.value


def _midranks(pooled: np.ndarray) -> tuple[np.ndarray, float]:
    """Average ranks (1-based) of pooled values plus the tie term sum(t^3 - t)."""
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(pooled.size, dtype=np.float64)
    tie_term = 0.0
    i = 0
    while i < pooled.size:
        j = i
        while j + 1 < pooled.size and pooled[order[j + 1]] == pooled[order[i]]:
            j += 1
        avg = 0.5 * (i + j) + 1.0
        ranks[order[i:j + 1]] = avg
        t = j - i + 1
        tie_term += t ** 3 - t
        i = j + 1
    return ranks, tie_term


def chi2_sf_1df(x: float) -> float:
    """Survival function of chi-square with 1 dof: Q(1/2, x/2) = erfc(sqrt(x/2))."""
    if x < 0:
        raise ContractError("chi-square statistic must be nonnegative")
    return math.erfc(math.sqrt(0.5 * x))


def kruskal_wallis(a, b) -> tuple[float, float]:
    """Two-sample Kruskal-Wallis H (tie-corrected) and its chi-square p-value."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise ContractError("each sample needs at least 2 values")
    pooled = np.concatenate([a, b])
    n_total = pooled.size
    ranks, tie_term = _midranks(pooled)
    ra = float(ranks[: a.size].sum())
    rb = float(ranks[a.size:].sum())
    h = (12.0 / (n_total * (n_total + 1))) * (ra ** 2 / a.size + rb ** 2 / b.size) \
        - 3.0 * (n_total + 1)
    correction = 1.0 - tie_term / (n_total ** 3 - n_total)
    if correction <= 0.0:
        # every pooled value identical: no evidence of difference
        return 0.0, 1.0
    h /= correction
    h = max(h, 0.0)
    return h, chi2_sf_1df(h)


@dataclass(frozen=True)
class ComparisonResult:
    mean_c: float
    std_c: float
    mean_m: float
    std_m: float
    H: float
    p: float
    verdict: Verdict


def compare(samples_c, samples_m) -> ComparisonResult:
    """Label a classical-vs-multitasking comparison.

    Means come with sample standard deviations (n-1 denominator).  The
    verdict is significant at p <= 0.05 with its direction taken from the
    mean ranks (the test is rank-based, so the mean values stay descriptive).
    """
    c = np.asarray(samples_c, dtype=np.float64)
    m = np.asarray(samples_m, dtype=np.float64)
    h, p = kruskal_wallis(c, m)
    ranks, _ = _midranks(np.concatenate([c, m]))
    rank_c = float(ranks[: c.size].mean())
    rank_m = float(ranks[c.size:].mean())
    if p <= SIGNIFICANCE_LEVEL and rank_m > rank_c:
        verdict = Verdict.MULTITASK_BETTER
    elif p <= SIGNIFICANCE_LEVEL and rank_c > rank_m:
        verdict = Verdict.CLASSICAL_BETTER
    else:
        verdict = Verdict.NO_DIFFERENCE
    return ComparisonResult(
        mean_c=float(c.mean()),
        std_c=float(c.std(ddof=1)) if c.size > 1 else 0.0,
        mean_m=float(m.mean()),
        std_m=float(m.std(ddof=1)) if m.size > 1 else 0.0,
        H=h,
        p=p,
        verdict=verdict,
    )
