import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rrglab.coupling import (BipartiteInstance, InvariantCoupler, TupleFlowCoupling, ZetaSampler,
                             asp_batch_codes, asp_sample, complete_couple, complete_couple_model,
                             conditional_independence_test, exact_eta, extension_graph,
                             extension_tv_classes, first_marginal_gof, incompatible_probability,
                             inclusion_pipeline, matching_extension_coupling, maximal_coupling,
                             planted_instance, random_rational_pair, strassen_coupling, two_class_example,
                             zeta_coupling, zeta_experiment)
from rrglab.errors import InfeasibleFlow, PreconditionError
from rrglab.graph import Graph, canonical_key
from rrglab.oracle import (bar_mu, bar_nu, compose, enumerate_regular, exact_distribution, exact_tv, mu, nu,
                           nu_distribution, regular_classes)
from rrglab.samplers import SeededStream
from rrglab.stats import chi_square, chi_square_law

from conftest import K


def _tv(p, q):
    return sum(abs(p.get(x, 0) - q.get(x, 0)) for x in set(p) | set(q)) / 2


# ---------------------------------------------------------------------------
# maximal coupling
# ---------------------------------------------------------------------------

def test_maximal_identity():
    p = {0: Fraction(1, 3), 1: Fraction(2, 3)}
    t = maximal_coupling(p, p)
    assert t.diagonal_mass() == 1 and len(t.joint) == 2


def test_maximal_two_point():
    p = {0: Fraction(1, 3), 1: Fraction(2, 3)}
    q = {0: Fraction(2, 3), 1: Fraction(1, 3)}
    t = maximal_coupling(p, q)
    assert t.diagonal_mass() == Fraction(2, 3)
    assert t.joint[(1, 0)] == Fraction(1, 3)


def test_maximal_exact_pairs():
    gen = SeededStream(1).generator()
    for _ in range(500):
        p, q = random_rational_pair(gen)
        t = maximal_coupling(p, q)
        assert 1 - t.diagonal_mass() == _tv(p, q)


@given(st.lists(st.integers(0, 9), min_size=2, max_size=6), st.lists(st.integers(0, 9), min_size=2, max_size=6))
def test_maximal_marginals_property(a, b):
    if not sum(a) or not sum(b):
        return
    p = {i: Fraction(x, sum(a)) for i, x in enumerate(a) if x}
    q = {i: Fraction(x, sum(b)) for i, x in enumerate(b) if x}
    t = maximal_coupling(p, q)  # marginals are checked on construction
    assert t.mass_where(lambda x, y: x != y) == _tv(p, q)


def test_maximal_conditional_independence():
    p = {i: Fraction(w, 15) for i, w in enumerate((5, 4, 3, 2, 1))}
    q = {i: Fraction(w, 15) for i, w in enumerate((1, 2, 3, 4, 5))}
    rep = conditional_independence_test(maximal_coupling(p, q), 1_000_000, SeededStream(2).generator())
    assert rep.p_value > 1e-3


# ---------------------------------------------------------------------------
# bipartite flow coupling
# ---------------------------------------------------------------------------

def test_strassen_complete_bipartite():
    h = BipartiteInstance(3, 5, [(i, j) for i in range(3) for j in range(5)])
    r = strassen_coupling(h)
    assert r.violation == 0 and r.flow == 1


def test_strassen_perfect_matching():
    h = BipartiteInstance(6, 6, [(i, (i + 2) % 6) for i in range(6)])
    r = strassen_coupling(h)
    assert r.violation == 0 and r.delta == 0 and r.epsilon == 0
    assert all(b == (a + 2) % 6 for a, b in r.table.joint)


def test_strassen_planted_within_bound():
    gen = SeededStream(3).generator()
    for _ in range(50):
        h = planted_instance(gen)
        r = strassen_coupling(h, 0.1, 0.1)
        assert r.bound == pytest.approx(0.2 + 0.1 / 0.9)
        assert float(r.violation) <= r.bound


def test_strassen_hypotheses_checked():
    h = BipartiteInstance(4, 4, [(0, 0), (0, 1), (1, 0), (1, 1)])
    with pytest.raises(InfeasibleFlow):
        strassen_coupling(h, 0.1, 0.1)
    with pytest.raises(PreconditionError):
        BipartiteInstance(2, 2, [(0, 5)])


# ---------------------------------------------------------------------------
# matching extension
# ---------------------------------------------------------------------------

def test_extension_n4_is_exact():
    tv, _ = extension_tv_classes(4, 2)
    assert tv == 0


def test_extension_n8_frozen_and_flow():
    rep = matching_extension_coupling(8, 2)
    assert rep.estimates["tv"] == Fraction(2720, 38157)
    assert all(rep.checks.values())
    h = extension_graph(8, 2)
    assert h.flow() == 1 - rep.estimates["oracle_tv"]


def test_extension_flow_matches_generic_solver():
    h = extension_graph(6, 1)
    assert strassen_coupling(h.instance(), 1.0, 0.0).flow == h.flow()


def test_extension_nonincreasing_in_d():
    tvs = [extension_tv_classes(10, d)[0] for d in (2, 3)]
    assert tvs[0] >= tvs[1]
    assert float(tvs[1]) == pytest.approx(0.02684, abs=1e-5)


# ---------------------------------------------------------------------------
# alternative sampling procedure
# ---------------------------------------------------------------------------

def test_asp_k4_union_is_complete():
    gen = SeededStream(4).generator()
    for _ in range(20):
        assert asp_sample(4, 1, 3, gen).graph == K(4)


def test_asp_draw_is_disjoint_union():
    gen = SeededStream(5).generator()
    d = asp_sample(8, 1, 3, gen)
    assert d.graph.is_regular(3)
    assert all(a.is_disjoint(b) for i, a in enumerate(d.representatives) for b in d.representatives[i + 1:])


def test_exact_eta_equals_nu_for_matchings():
    # matchings form a single class, so eta_{k,1} is nu_k itself
    assert exact_tv(exact_eta(6, 1, 2), nu_distribution(6, 2)) == 0
    assert exact_tv(exact_eta(8, 1, 2), exact_distribution(nu(2), 8)) == 0


def test_asp_batch_law_n6():
    eta = exact_eta(6, 1, 3)
    from rrglab.samplers import code_of
    law = {code_of(g): float(p) for g, p in eta.masses.items()}
    codes = asp_batch_codes(6, 1, 3, 200_000, SeededStream(6).generator())
    assert chi_square_law(Counter(codes.tolist()), law).p_value > 1e-3


# ---------------------------------------------------------------------------
# zeta recursion
# ---------------------------------------------------------------------------

def test_zeta_equal_laws():
    p = {0: Fraction(1, 4), 1: Fraction(3, 4)}
    k, trace = zeta_coupling(p, p, Fraction(1, 10))
    assert k == 1 and trace[1].Z == 0


def _zeta_floats(p, q, eps):
    # plain float recursion, written separately from the library
    z = list(p)
    zs = []
    prod = 1.0
    while prod > eps:
        s = sum(z)
        r = [x / s for x in z]
        z = [a - min(a, b) for a, b in zip(r, q)]
        zs.append(sum(z))
        prod *= zs[-1]
    return zs


def test_zeta_two_class_example():
    k, trace = two_class_example()
    assert [s.Z for s in trace[1:3]] == [Fraction(2, 5), Fraction(1, 2)]
    assert k == 3
    ref = _zeta_floats([0.9, 0.1], [0.5, 0.5], 0.1)
    assert len(ref) == k
    assert [float(s.Z) for s in trace[1:]] == pytest.approx(ref)


def test_zeta_trace_n8():
    k, trace = zeta_coupling(bar_mu(8, 3), bar_nu(8, 3), 0.15)
    assert trace[1].Z == Fraction(18672, 86821)
    assert trace[2].Z == Fraction(109, 157)
    assert k == 2
    k, trace = zeta_coupling(bar_mu(8, 3), bar_nu(8, 3), 0.05)
    assert k == 5 and float(trace[-1].product) == pytest.approx(0.04997, abs=1e-5)


@given(st.lists(st.integers(1, 9), min_size=2, max_size=5), st.lists(st.integers(1, 9), min_size=2, max_size=5))
def test_zeta_invariants(a, b):
    m = min(len(a), len(b))
    p = {i: Fraction(x, sum(a[:m])) for i, x in enumerate(a[:m])}
    q = {i: Fraction(x, sum(b[:m])) for i, x in enumerate(b[:m])}
    k, trace = zeta_coupling(p, q, Fraction(1, 10))
    for s in trace:
        assert all(v >= 0 for v in s.zeta.values()) and 0 <= s.Z <= 1
    assert trace[-1].product <= Fraction(1, 10)


def test_zeta_sampler_miss_rate():
    rep = zeta_experiment(8, 3, 0.05, 20_000, 8)
    assert rep.checks["miss_rate_within_3sigma"] and rep.checks["products_strictly_decreasing"]


def test_zeta_sampler_first_marginal():
    k, trace = two_class_example()
    s = ZetaSampler(trace, {0: Fraction(1, 2), 1: Fraction(1, 2)})
    gen = SeededStream(9).generator()
    xs = Counter(s.sample(gen)[0] for _ in range(20_000))
    assert chi_square(list(xs.values()), [0.9, 0.1][: len(xs)]).p_value > 1e-3


# ---------------------------------------------------------------------------
# complete coupling and inclusion
# ---------------------------------------------------------------------------

def test_complete_couple_k4_always_hits():
    gen = SeededStream(10).generator()
    assert all(complete_couple(4, 3, 0.3, gen).hit for _ in range(50))


def test_incompatible_probability_n8():
    assert incompatible_probability(bar_nu(8, 3), 2) == Fraction(7977, 24649)


def test_tuple_flow_hit_probability_bounds():
    t = TupleFlowCoupling(bar_mu(8, 3), bar_nu(8, 3), 2)
    assert t.compatible_probability == 1 - Fraction(7977, 24649)
    assert 0 < t.hit_probability <= 1


def test_complete_couple_rate_n8():
    model = complete_couple_model(8, 3, 0.3)
    gen = SeededStream(11).generator()
    hits = [complete_couple(8, 3, 0.3, gen, model).hit for _ in range(10_000)]
    rate = float(np.mean(hits))
    assert rate >= 0.7 - 3 * math.sqrt(0.21 / 10_000)


@pytest.mark.slow
def test_complete_couple_g_marginal_uniform():
    model = complete_couple_model(8, 3, 0.3)
    gen = SeededStream(12).generator()
    gof = first_marginal_gof(8, 3, (complete_couple(8, 3, 0.3, gen, model).G for _ in range(100_000)))
    assert gof.p_value > 1e-3


def test_invariant_coupler_identity_and_marginal():
    cls = regular_classes(6, 2)
    each = {c.key: Fraction(1, sum(x.size for x in cls)) for c in cls}
    cp = InvariantCoupler(cls, each, each)
    g = enumerate_regular(6, 2)[0]
    assert cp.tv == 0 and cp.couple(g, SeededStream(0).generator()) is g
    # push the union of two matchings to uniform
    p = exact_distribution(compose(mu(1), mu(1)), 6)
    p_each = {canonical_key(g): m for g, m in p.masses.items()}
    cp = InvariantCoupler(cls, p_each, each)
    assert cp.tv == exact_tv(p, exact_distribution(mu(2), 6))
    gen = SeededStream(13).generator()
    gs = list(p.masses)
    w = np.array([float(m) for m in p.masses.values()])
    out = [cp.couple(gs[i], gen) for i in gen.choice(len(gs), size=20_000, p=w / w.sum())]
    assert first_marginal_gof(6, 2, out).p_value > 1e-3


def test_inclusion_trivial_cases():
    assert inclusion_pipeline(8, 3, 3, 10, 1).estimates["inclusion_rate"] == 1.0
    rep = inclusion_pipeline(4, 2, 3, 200, 1)
    assert rep.estimates["inclusion_rate"] == 1.0


def test_inclusion_matching_into_cubic():
    rep = inclusion_pipeline(8, 1, 3, 4000, 14)
    assert rep.references["tv_composition"] == Fraction(18672, 86821)
    assert rep.checks["rate_vs_exact_tv"] and rep.checks["g1_uniform"]
    assert rep.estimates["inclusion_rate"] >= 1 - float(rep.references["tv_forced_union"]) \
        - 3 * rep.stderr["inclusion_rate"]


def test_inclusion_reproducible():
    a = inclusion_pipeline(8, 1, 3, 500, 15).to_dict()
    b = inclusion_pipeline(8, 1, 3, 500, 15, workers=2).to_dict()
    assert a == b


@pytest.mark.slow
def test_inclusion_n8_d3_d5():
    rep = inclusion_pipeline(8, 3, 5, 10_000, 16)
    assert all(rep.checks.values())
    assert rep.estimates["inclusion_rate"] >= 0.99
