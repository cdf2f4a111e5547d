"""Acceptance and calibration suites.

Each acceptance criterion is a function of a master seed returning a
``CriterionResult``; ``run_acceptance`` runs them in order (or a subset) and
the CLI and the test-suite print one line per criterion.
"""

from __future__ import annotations

import math
import time
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .counting import conditional_edge_probability, count_one_factorisations_ordered, mckay_count
from .coupling import (asp_batch_codes, bar_mu, bar_nu, conditional_independence_test,
                       exact_eta, extension_tv_classes, inclusion_pipeline, maximal_coupling,
                       planted_instance, random_rational_pair, strassen_coupling, two_class_example,
                       zeta_coupling, ZetaSampler)
from .errors import RRGError
from .estimators import (TRIANGLES, concentration_experiment, factorial_moment_check,
                         sample_statistics, triangle_reference)
from .graph import DegreeSequence, Graph
from .oracle import (compose, count_regular, count_regular_by_classes, enumerate_regular,
                     exact_distribution, exact_edge_probability, exact_tv, mu, nu_distribution, oplus)
from .samplers import OverlaySpec, SeededStream, code_of, overlay_trials, sample_matching
from .stats import (chi_square_uniform, empirical_tv_to_law, jackknife, ks_uniform,
                    poisson_fit, wilson_interval)


@dataclass
class CriterionResult:
    index: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.index:2d} {self.name:<13s} ({self.seconds:.1f}s) {self.summary()}"

    def summary(self) -> str:
        failed = [k for k, v in self.details.get("checks", {}).items() if not v]
        return "all checks hold" if not failed else "failed: " + ", ".join(failed)

    def to_dict(self) -> dict:
        # wall time is left out so reports stay bit-identical across runs
        return {"index": self.index, "name": self.name, "passed": self.passed, "details": self.details}


def _result(index: int, name: str, checks: dict, **values) -> CriterionResult:
    return CriterionResult(index, name, all(checks.values()), {"checks": checks, **values})


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------

def overlay_criterion(seed: int, workers: int = 1, n: int = 1000, trials: int = 10_000) -> CriterionResult:
    gen = SeededStream(seed, 1).generator()
    spec = OverlaySpec([sample_matching(n, gen), sample_matching(n, gen)])
    reps = overlay_trials(spec, trials, seed, workers=workers)
    freq = sum(1 for r in reps if r == 0) / trials
    target = math.exp(-spec.D / 2)
    fit = poisson_fit(Counter(reps), spec.D / 2)
    checks = {"disjoint_frequency": abs(freq - target) <= 0.02, "poisson_fit": fit.p_value > 1e-3}
    return _result(1, "overlay", checks, disjoint_frequency=freq, target=target, poisson=fit.to_dict())


def maximal_criterion(seed: int, workers: int = 1, pairs: int = 500, instances: int = 10,
                      draws: int = 1_000_000) -> CriterionResult:
    gen = SeededStream(seed, 2).generator()
    exact_ok = 0
    for _ in range(pairs):
        p, q = random_rational_pair(gen)
        tab = maximal_coupling(p, q)
        exact_ok += tab.diagonal_mass() == 1 - sum(abs(p.get(x, 0) - q.get(x, 0)) for x in set(p) | set(q)) / 2
    pvals = []
    while len(pvals) < instances:
        p, q = random_rational_pair(gen)
        tab = maximal_coupling(p, q)
        try:
            pvals.append(conditional_independence_test(tab, draws, gen).p_value)
        except RRGError:
            continue  # residual supports too small for a 2x2 table
    checks = {"diagonal_exact": exact_ok == pairs, "independence": all(pv > 1e-3 for pv in pvals)}
    return _result(2, "maximal", checks, exact_pairs=exact_ok, p_values=pvals)


def strassen_criterion(seed: int, workers: int = 1, instances: int = 200) -> CriterionResult:
    gen = SeededStream(seed, 3).generator()
    limit = 2 * 0.1 + 0.1 / 0.9
    worst = 0.0
    ok = 0
    for _ in range(instances):
        h = planted_instance(gen, 0.1, 0.1)
        try:
            res = strassen_coupling(h, 0.1, 0.1)
        except RRGError:
            continue
        worst = max(worst, float(res.violation))
        ok += float(res.violation) <= limit + 1e-12
    # marginals are verified exactly (Fractions) when the table is built
    checks = {"violation_bounded": ok == instances}
    return _result(3, "strassen", checks, worst_violation=worst, limit=limit, instances_ok=ok)


def mckay_criterion(seed: int, workers: int = 1) -> CriterionResult:
    rel = []
    for n in range(2, 21, 2):
        est = mckay_count(Graph.empty(n), DegreeSequence([1] * n), strict=False)
        dfact = math.prod(range(n - 1, 0, -2))
        rel.append(abs(est.leading_term / dfact - 1))
    errs = {}
    for n in (8, 10, 12):
        est = mckay_count(Graph.empty(n), DegreeSequence.regular(n, 3), strict=False)
        errs[n] = abs(est.log_estimate - math.log(count_regular(n, 3)))
    e = [errs[n] for n in (8, 10, 12)]
    checks = {"degenerate_exact": max(rel) <= 1e-9, "log_error_nonincreasing": e[0] >= e[1] >= e[2]}
    return _result(4, "mckay", checks, max_relative_error=max(rel), log_errors=errs)


def edgeprob_criterion(seed: int, workers: int = 1, d: int = 3) -> CriterionResult:
    empty = {}
    for n in (8, 20, 100):
        est = conditional_edge_probability(n, d, Graph.empty(n), 0, 1).value
        empty[n] = {"estimate": est, "exact": d / (n - 1), "gap_times_n2": abs(est - d / (n - 1)) * n * n}
    h = Graph.from_edges(10, [(0, 1)])
    one = {}
    for u, v in ((0, 2), (2, 3)):
        ex = exact_edge_probability(10, d, h, u, v)
        est = conditional_edge_probability(10, d, h, u, v).value
        one[f"{u}-{v}"] = {"estimate": est, "exact": float(ex), "gap": abs(est - float(ex))}
    checks = {"empty_h_order_n2": all(r["gap_times_n2"] <= d * d for r in empty.values()),
              "one_edge_within_0.02": all(r["gap"] <= 0.02 for r in one.values())}
    return _result(5, "edgeprob", checks, empty_h=empty, one_edge=one)


def _mean(bs):
    return float(np.concatenate(bs).mean())


def _var(bs):
    return float(np.concatenate(bs).var(ddof=1))


def triangles_criterion(seed: int, workers: int = 1, n: int = 24, d: int = 3,
                        trials: int = 100_000) -> CriterionResult:
    blocks = [b[:, 0] for b in sample_statistics(n, d, TRIANGLES, trials, seed, workers=workers)]
    ref = triangle_reference(d)
    m, m_se = jackknife(blocks, _mean)
    v, v_se = jackknife(blocks, _var)
    fm = factorial_moment_check(n, d, 2, trials, seed, workers=workers)
    checks = {"mean_within_3se": abs(m - ref) <= 3 * m_se, "variance_within_3se": abs(v - ref) <= 3 * v_se,
              "second_moment": fm.checks["within_3se_plus_unit"]}
    return _result(6, "triangles", checks, mean=m, mean_se=m_se, variance=v, variance_se=v_se,
                   reference=ref, second_moment=fm.estimates["moment"], second_moment_se=fm.stderr["moment"],
                   second_moment_prediction=fm.references["prediction"])


def oracle_criterion(seed: int, workers: int = 1) -> CriterionResult:
    dual = {}
    for n in range(2, 11):
        for d in range(1, 4):
            if d <= n - 1 and (d * n) % 2 == 0:
                dual[f"{n},{d}"] = count_regular(n, d) == count_regular_by_classes(n, d)
    m1 = exact_distribution(mu(1), 6)
    left = oplus(oplus(m1, m1).distribution, m1).distribution
    right = oplus(m1, oplus(m1, m1).distribution).distribution
    nu3 = nu_distribution(6, 3)
    weights = {g: count_one_factorisations_ordered(g, 3) for g in enumerate_regular(6, 3)}
    tot = sum(weights.values())
    prop = all(nu3.masses.get(g, 0) == Fraction(w, tot) for g, w in weights.items())
    checks = {"dual_enumerators": all(dual.values()), "oplus_associative": left.masses == right.masses,
              "nu3_proportional_to_1f": prop}
    return _result(7, "oracle", checks, cells=len(dual))


def extension_criterion(seed: int, workers: int = 1) -> CriterionResult:
    tv8, _ = extension_tv_classes(8, 2)
    tv10, _ = extension_tv_classes(10, 2)
    again, _ = extension_tv_classes(10, 2)
    tv10_3, _ = extension_tv_classes(10, 3)
    checks = {"byte_stable": str(tv10) == str(again), "nonincreasing_in_d": tv10_3 <= tv10}
    return _result(8, "extension", checks, tv_n8_d2=str(tv8), tv_n10_d2=str(tv10), tv_n10_d3=str(tv10_3),
                   floats=[float(tv8), float(tv10), float(tv10_3)])


def asp_criterion(seed: int, workers: int = 1, trials: int = 1_000_000) -> CriterionResult:
    tvs = {}
    for n in (6, 8):
        tvs[n] = exact_tv(exact_eta(n, 1, 2), nu_distribution(n, 2))
    eta = exact_eta(8, 1, 2)
    law = {code_of(g): m for g, m in eta.items()}
    gen = SeededStream(seed, 9).generator()
    codes = asp_batch_codes(8, 1, 2, trials, gen)
    hist = Counter(codes.tolist())
    emp = empirical_tv_to_law(hist, law)
    checks = {"exact_tv_decreasing": tvs[8] < tvs[6], "exact_tv_below_0.05": tvs[8] < Fraction(1, 20),
              "empirical_within_0.02": emp.value <= 0.02}
    # eta_{2,1} and nu_2 coincide at every even n, so the strict decrease cannot
    # hold; the weak form is reported next to it
    return _result(9, "asp", checks, exact_tv={k: str(v) for k, v in tvs.items()},
                   exact_tv_nonincreasing=tvs[8] <= tvs[6], empirical_tv=emp.value,
                   plugin_bias_scale=emp.bias_bound, cells=emp.support)


def zeta_criterion(seed: int, workers: int = 1, n: int = 8, d: int = 3, epsilon: float = 0.05,
                   trials: int = 100_000) -> CriterionResult:
    k2, trace2 = two_class_example()
    zs = [s.Z for s in trace2[1:]]
    two_ok = k2 == 3 and zs[0] == Fraction(2, 5) and zs[1] == Fraction(1, 2)
    bn = bar_nu(n, d)
    k, trace = zeta_coupling(bar_mu(n, d), bn, epsilon)
    products = [s.product for s in trace]
    sampler = ZetaSampler(trace, bn)
    gen = SeededStream(seed, 10).generator()
    misses = sum(1 for _ in range(trials) if sampler.sample(gen)[2] is None)
    prod = float(products[-1])
    sigma = math.sqrt(prod * (1 - prod) / trials)
    rate = misses / trials
    checks = {"two_class_trace": two_ok,
              "products_strictly_decreasing": all(b < a for a, b in zip(products, products[1:])),
              "miss_rate_within_3sigma": abs(rate - prod) <= 3 * sigma}
    return _result(10, "zeta", checks, k=k, Z=[float(s.Z) for s in trace[1:]], product=prod,
                   miss_rate=rate, sigma=sigma)


def inclusion_criterion(seed: int, workers: int = 1, trials: int = 10_000) -> CriterionResult:
    rep = inclusion_pipeline(8, 3, 5, trials, seed, workers=workers)
    checks = dict(rep.checks)
    return _result(11, "inclusion", checks, rate=rep.estimates["inclusion_rate"],
                   sigma=rep.stderr["inclusion_rate"], tv=float(rep.references["tv_composition"]),
                   g1_chi2=rep.estimates["g1_class_chi2"])


def concentration_criterion(seed: int, workers: int = 1, n: int = 24, trials: int = 10_000) -> CriterionResult:
    rv = {}
    ratio = None
    for d in (3, 4, 5):
        rep = concentration_experiment(n, d, trials, seed, workers=workers)
        rv[d] = rep.estimates["relative_variance"]
        if d == 3:
            ratio = rep.estimates["ratio_to_prediction"]
    checks = {"factor_4_at_d3": 0.25 <= ratio <= 4, "strictly_decreasing": rv[3] > rv[4] > rv[5]}
    return _result(12, "concentration", checks, relative_variance=rv, ratio_d3=ratio,
                   prediction_d3=1 / (6 * 27))


CRITERIA: list[tuple[str, Callable[..., CriterionResult]]] = [
    ("overlay", overlay_criterion),
    ("maximal", maximal_criterion),
    ("strassen", strassen_criterion),
    ("mckay", mckay_criterion),
    ("edgeprob", edgeprob_criterion),
    ("triangles", triangles_criterion),
    ("oracle", oracle_criterion),
    ("extension", extension_criterion),
    ("asp", asp_criterion),
    ("zeta", zeta_criterion),
    ("inclusion", inclusion_criterion),
    ("concentration", concentration_criterion),
]


def criterion_names() -> list[str]:
    return [name for name, _ in CRITERIA]


def run_criterion(name: str, seed: int = 20240601, workers: int = 1) -> CriterionResult:
    fn = dict(CRITERIA)[name]
    t0 = time.perf_counter()
    res = fn(seed, workers)
    res.seconds = time.perf_counter() - t0
    return res


def run_acceptance(only: list[str] | None = None, seed: int = 20240601, workers: int = 1,
                   echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    names = criterion_names()
    if only:
        unknown = [o for o in only if o not in names]
        if unknown:
            raise ValueError(f"unknown criteria {unknown}; choose from {names}")
        names = [n for n in names if n in only]
    out = []
    for name in names:
        res = run_criterion(name, seed, workers)
        if echo:
            echo(res.line())
        out.append(res)
    return out


# ---------------------------------------------------------------------------
# Calibration of the statistical tests under their null hypotheses
# ---------------------------------------------------------------------------

def run_calibration(seed: int = 1, reps: int = 10_000, poisson_reps: int = 1000) -> dict:
    """Null behaviour of the tests: chi-square p-values of uniform multinomial
    draws (KS distance to Uniform(0,1)), the share of Poisson(0.5) histograms
    of 10^4 samples passing at 1e-3, and the coverage of the 3-sigma Wilson interval."""
    gen = SeededStream(seed, 99).generator()
    chi = [chi_square_uniform(c.tolist()).p_value for c in gen.multinomial(2000, [0.1] * 10, size=reps)]
    poi = [poisson_fit(Counter(gen.poisson(0.5, 10_000).tolist()), 0.5).p_value for _ in range(poisson_reps)]
    ks_chi = ks_uniform(chi)
    pass_rate = sum(p > 1e-3 for p in poi) / poisson_reps
    ks = gen.binomial(1000, 0.3, size=reps)
    cover = sum(lo <= 0.3 <= hi for lo, hi in (wilson_interval(int(k), 1000) for k in ks)) / reps
    return {"reps": reps, "ks_chi_square": ks_chi, "poisson_pass_rate": pass_rate, "wilson_coverage": cover,
            "checks": {"chi_square_calibrated": ks_chi < 0.02, "poisson_pass_99": pass_rate >= 0.99,
                       "wilson_covers": cover >= 0.99}}
