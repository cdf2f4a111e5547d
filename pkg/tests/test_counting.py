import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rrglab.counting import (conditional_edge_probability, count_one_factorisations_ordered,
                             count_perfect_matchings, count_perfect_matchings_deletion, count_triangles,
                             mckay_count, perfect_matchings)
from rrglab.errors import CapExceeded, DegreeExceeded, EdgeAlreadyPresent, HypothesisViolated
from rrglab.graph import DegreeSequence, Graph, relabel
from rrglab.oracle import count_regular, enumerate_regular, exact_edge_probability, regular_classes

from conftest import C, K, graphs


def petersen():
    outer = [(i, (i + 1) % 5) for i in range(5)]
    spokes = [(i, i + 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    return Graph.from_edges(10, outer + spokes + inner)


def brute_pm(g):
    # try every set of n/2 edges
    n = g.n
    if n % 2:
        return 0
    return sum(1 for es in itertools.combinations(g.edges(), n // 2)
               if len({v for e in es for v in e}) == n)


def test_pm_small_values():
    assert count_perfect_matchings(K(4)) == 3
    assert count_perfect_matchings(K(6)) == 15
    assert count_perfect_matchings(K(5)) == 0
    assert count_perfect_matchings(petersen()) == count_perfect_matchings_deletion(petersen()) == 6


@given(graphs(max_n=8))
def test_pm_counters_agree_random(g):
    a = count_perfect_matchings(g)
    assert a == count_perfect_matchings_deletion(g) == len(perfect_matchings(g)) == brute_pm(g)


def test_pm_counters_agree_cubic_n10():
    # every class of G_3(10) plus a few random relabelings of each
    rng = np.random.default_rng(3)
    for c in regular_classes(10, 3):
        for _ in range(3):
            g = relabel(c.rep, rng.permutation(10).tolist())
            assert count_perfect_matchings(g) == count_perfect_matchings_deletion(g)


def test_pm_cap():
    with pytest.raises(CapExceeded):
        count_perfect_matchings(Graph.cycle(30))


def test_triangles():
    assert count_triangles(K(4)) == 4
    assert count_triangles(C(6)) == 0
    assert count_triangles(K(5)) == 10


@given(graphs(max_n=9))
def test_triangles_brute(g):
    want = sum(1 for a, b, c in itertools.combinations(range(g.n), 3)
               if g.has_edge(a, b) and g.has_edge(b, c) and g.has_edge(a, c))
    assert count_triangles(g) == want


def test_one_factorisation_examples():
    assert count_one_factorisations_ordered(K(4), 3) == 6
    assert count_one_factorisations_ordered(C(6), 2) == 2
    assert count_one_factorisations_ordered(C(5), 2) == 0


def _ordered_1f_pairs(g):
    # ordered (M1, M2) disjoint with g - M1 - M2 a perfect matching
    pms = perfect_matchings(g)
    out = 0
    for a in pms:
        for b in pms:
            if a.is_disjoint(b):
                rest = g.difference(a).difference(b)
                out += rest.is_regular(1)
    return out


def test_one_factorisations_all_cubic_n8():
    for g in enumerate_regular(8, 3):
        assert count_one_factorisations_ordered(g, 3) == _ordered_1f_pairs(g)


def test_mckay_degenerate_cases():
    est = mckay_count(Graph.empty(6), DegreeSequence((1,) * 6), strict=False)
    assert est.leading_term_exact == 15 and est.lam == 0 and est.mu == 0
    assert est.leading_term_exact == count_perfect_matchings(K(6))
    for n in range(2, 21, 2):
        e = mckay_count(Graph.empty(n), DegreeSequence((1,) * n), strict=False)
        assert e.leading_term_exact == math.prod(range(n - 1, 0, -2))


def test_mckay_one_pm_excluded():
    x = Graph.from_edges(4, [(0, 1), (2, 3)])
    est = mckay_count(x, DegreeSequence((1,) * 4), strict=False)
    assert est.leading_term == pytest.approx(3)
    assert est.mu == pytest.approx(0.5)
    assert est.estimate == pytest.approx(3 * math.exp(-0.5))
    # exact count: two PMs of K_4 avoid x
    assert count_perfect_matchings(x.complement()) == 2


def test_mckay_hypothesis_enforced():
    with pytest.raises(HypothesisViolated):
        mckay_count(Graph.empty(8), DegreeSequence.regular(8, 3))


def test_mckay_regular_lambda_and_trend():
    errs = []
    for n in (8, 10, 12):
        est = mckay_count(Graph.empty(n), DegreeSequence.regular(n, 3), strict=False)
        assert est.lam == pytest.approx(1.0)
        assert est.delta_hat >= 2 and est.e_g == 1.5 * n
        errs.append(abs(est.log_estimate - math.log(count_regular(n, 3))))
    assert errs[0] >= errs[1] >= errs[2]


def test_edge_probability_empty_h():
    for n in (8, 20, 100):
        est = conditional_edge_probability(n, 3, Graph.empty(n), 0, 1)
        assert est.phi == -3
        assert est.value == pytest.approx(3 / n * (1 + 1 / n))
        assert abs(est.value - 3 / (n - 1)) <= 9 / n ** 2
    assert conditional_edge_probability(8, 3, Graph.empty(8), 0, 1).value == pytest.approx(0.421875)


def test_edge_probability_one_edge_vs_oracle():
    h = Graph.from_edges(10, [(0, 1)])
    for u, v in ((2, 3), (0, 2)):
        est = conditional_edge_probability(10, 3, h, u, v).value
        assert abs(est - float(exact_edge_probability(10, 3, h, u, v))) < 0.02


def test_edge_probability_errors():
    h = Graph.from_edges(6, [(0, 1)])
    with pytest.raises(EdgeAlreadyPresent):
        conditional_edge_probability(6, 3, h, 0, 1)
    with pytest.raises(DegreeExceeded):
        conditional_edge_probability(6, 1, Graph.from_edges(6, [(0, 1), (0, 2)]), 3, 4)
