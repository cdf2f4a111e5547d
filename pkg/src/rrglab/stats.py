"""Goodness-of-fit tests, interval estimates and empirical TV used by every experiment."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np
from scipy import stats as _st

from .errors import SparseCells


@dataclass(frozen=True)
class GofReport:
    statistic: float
    dof: int
    p_value: float
    trials: int

    def to_dict(self) -> dict:
        return asdict(self)


def chi2_sf(x: float, dof: int) -> float:
    return float(_st.chi2.sf(x, dof))


def chi2_sf_reference(x: float, dof: int) -> float:
    """Upper tail of chi-square by the regularized incomplete gamma Q(dof/2, x/2),
    series below a+1 and Lentz continued fraction above (Numerical Recipes 6.2)."""
    a, z = dof / 2.0, x / 2.0
    if z <= 0:
        return 1.0
    gln = math.lgamma(a)
    if z < a + 1:
        ap, s, delta = a, 1.0 / a, 1.0 / a
        for _ in range(10_000):
            ap += 1
            delta *= z / ap
            s += delta
            if abs(delta) < abs(s) * 1e-16:
                break
        return 1.0 - s * math.exp(-z + a * math.log(z) - gln)
    tiny = 1e-300
    b = z + 1 - a
    c = 1 / tiny
    d = 1 / b
    h = d
    for i in range(1, 10_000):
        an = -i * (i - a)
        b += 2
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1 / d
        delta = d * c
        h *= delta
        if abs(delta - 1) < 1e-16:
            break
    return math.exp(-z + a * math.log(z) - gln) * h


def chi_square(counts: Sequence[int], probs: Sequence[float], min_expected: float = 5.0) -> GofReport:
    """Pearson goodness of fit against fully specified cell probabilities."""
    counts = np.asarray(counts, dtype=float)
    probs = np.asarray(probs, dtype=float)
    total = counts.sum()
    expected = total * probs / probs.sum()
    if len(counts) < 2:
        raise SparseCells("need at least two cells")
    if expected.min() < min_expected:
        raise SparseCells(f"smallest expected count {expected.min():.3g} < {min_expected}")
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = len(counts) - 1
    return GofReport(stat, dof, chi2_sf(stat, dof), int(total))


def chi_square_uniform(counts: Sequence[int]) -> GofReport:
    counts = list(counts)
    if sum(counts) < 5 * len(counts):
        raise SparseCells(f"{sum(counts)} trials for {len(counts)} cells; need >= 5 per cell")
    return chi_square(counts, [1.0] * len(counts))


def chi_square_law(hist: Mapping[Hashable, int], law: Mapping[Hashable, float | Fraction],
                   min_expected: float = 5.0) -> GofReport:
    """Goodness of fit of a histogram against an exact law on the same outcomes.

    Outcomes of the law missing from the histogram count as zero; observations
    outside the law's support make the p-value 0.
    """
    outside = sum(c for x, c in hist.items() if x not in law)
    keys = sorted(law, key=repr)
    counts = [hist.get(k, 0) for k in keys]
    probs = [float(law[k]) for k in keys]
    if outside:
        total = sum(counts) + outside
        return GofReport(math.inf, len(keys), 0.0, total)
    return chi_square(counts, probs, min_expected)


def _binned_poisson(hist: Mapping[int, int], lam: float, trials: int, floor: float = 5.0):
    kmax = max(max(hist, default=0), int(lam + 10 * math.sqrt(lam) + 10))
    pmf = [float(_st.poisson.pmf(k, lam)) for k in range(kmax + 1)]
    pmf[-1] += float(_st.poisson.sf(kmax, lam))
    obs = [hist.get(k, 0) for k in range(kmax)] + [sum(c for k, c in hist.items() if k >= kmax)]
    cells = [[o, p * trials] for o, p in zip(obs, pmf)]
    while len(cells) > 1 and cells[-1][1] < floor:
        o, e = cells.pop()
        cells[-1][0] += o
        cells[-1][1] += e
    while len(cells) > 1 and cells[0][1] < floor:
        o, e = cells.pop(0)
        cells[0][0] += o
        cells[0][1] += e
    return cells


def poisson_fit(hist: Mapping[int, int], lam: float) -> GofReport:
    """Chi-square of a count histogram against Poisson(lam); lam is fixed, never fitted."""
    trials = sum(hist.values())
    cells = _binned_poisson(hist, lam, trials)
    if len(cells) < 2:
        raise SparseCells("fewer than two bins with expected count >= 5")
    stat = sum((o - e) ** 2 / e for o, e in cells)
    dof = len(cells) - 1
    return GofReport(float(stat), dof, chi2_sf(stat, dof), trials)


def chi_square_independence(table: Sequence[Sequence[int]]) -> GofReport:
    """Pearson independence test on a contingency table; empty rows/columns dropped."""
    t = np.asarray(table, dtype=float)
    t = t[t.sum(axis=1) > 0][:, t.sum(axis=0) > 0]
    r, c = t.shape
    if r < 2 or c < 2:
        raise SparseCells("independence test needs at least a 2x2 table")
    total = t.sum()
    expected = np.outer(t.sum(axis=1), t.sum(axis=0)) / total
    if expected.min() < 5:
        raise SparseCells(f"smallest expected count {expected.min():.3g} < 5")
    stat = float(((t - expected) ** 2 / expected).sum())
    dof = (r - 1) * (c - 1)
    return GofReport(stat, dof, chi2_sf(stat, dof), int(total))


def wilson_interval(successes: int, trials: int, z: float = 3.0) -> tuple[float, float]:
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return (max(0.0, centre - half), min(1.0, centre + half))


def binomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / trials)


@dataclass(frozen=True)
class EmpiricalTV:
    value: float
    bias_bound: float
    support: int
    trials: tuple[int, int]


def empirical_tv(hist_p: Mapping[Hashable, int], hist_q: Mapping[Hashable, int]) -> EmpiricalTV:
    """Half L1 distance between two normalized histograms.

    The plug-in estimate is biased upward; ``bias_bound`` is
    0.5 * sum_x sqrt(p(1-p)/N_p + q(1-q)/N_q), which bounds E|p_hat - q_hat| per cell
    when the true laws coincide.
    """
    np_, nq = sum(hist_p.values()), sum(hist_q.values())
    if np_ == 0 or nq == 0:
        raise ValueError("histograms must be nonempty")
    keys = set(hist_p) | set(hist_q)
    tv = 0.0
    bias = 0.0
    for k in keys:
        p = hist_p.get(k, 0) / np_
        q = hist_q.get(k, 0) / nq
        tv += abs(p - q)
        bias += math.sqrt(p * (1 - p) / np_ + q * (1 - q) / nq)
    return EmpiricalTV(tv / 2, bias / 2, len(keys), (np_, nq))


def empirical_tv_to_law(hist: Mapping[Hashable, int], law: Mapping[Hashable, float | Fraction]) -> EmpiricalTV:
    """Empirical TV of a histogram against an exact law, with the sampling bias
    0.5 * sum_x sqrt(p(1-p)/N) reported alongside."""
    total = sum(hist.values())
    if total == 0:
        raise ValueError("histogram must be nonempty")
    keys = set(hist) | set(law)
    tv = 0.0
    bias = 0.0
    for k in keys:
        p = float(law.get(k, 0))
        tv += abs(hist.get(k, 0) / total - p)
        bias += math.sqrt(p * (1 - p) / total)
    return EmpiricalTV(tv / 2, bias / 2, len(keys), (total, 0))


def jackknife(blocks: Sequence, statistic: Callable[[Sequence], float]) -> tuple[float, float]:
    """Delete-one-block jackknife: (full-sample statistic, standard error)."""
    g = len(blocks)
    full = statistic(blocks)
    if g < 2:
        return full, math.nan
    leave = np.array([statistic(blocks[:i] + blocks[i + 1:]) for i in range(g)])
    se = math.sqrt((g - 1) / g * float(((leave - leave.mean()) ** 2).sum()))
    return full, se


def ks_uniform(pvalues: Sequence[float]) -> float:
    """Kolmogorov-Smirnov distance of a sample from Uniform(0,1)."""
    return float(_st.kstest(np.asarray(pvalues), "uniform").statistic)


def histogram(items) -> Counter:
    return Counter(items)


BONFERRONI_NOTE = ("p-value floor 1e-3 is applied per test without multiplicity "
                   "correction; with m tests the family-wise false-alarm rate is at most m * 1e-3")
