import math
from collections import Counter

import numpy as np
import pytest

from rrglab.counting import count_one_factorisations_ordered
from rrglab.errors import CapExceeded, OddN, ParityViolation, PreconditionError, RejectionBudgetExceeded
from rrglab.graph import Graph, canonical_key
from rrglab.oracle import (class_distribution, compose, enumerate_regular, exact_distribution, mu, nu)
from rrglab.samplers import (OverlaySpec, SeededStream, batch_matchings, batch_nu, batch_oplus,
                             batch_regular, code_degrees_ok, code_of, graph_of, overlay, overlay_trials,
                             run_blocks, sample_matching, sample_nu, sample_oplus, sample_regular)
from rrglab.stats import chi_square_law, empirical_tv_to_law, poisson_fit

from conftest import C, K


def test_seeded_stream_deterministic():
    a = SeededStream(7, 3).generator().random(5)
    b = SeededStream(7, 3).generator().random(5)
    c = SeededStream(7, 4).generator().random(5)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def _draw_block(gen, count):
    return gen.integers(0, 1000, size=count).tolist()


def test_run_blocks_independent_of_workers():
    one = run_blocks(_draw_block, 11, 5000, block_size=700, workers=1)
    two = run_blocks(_draw_block, 11, 5000, block_size=700, workers=2)
    assert one == two and sum(len(b) for b in one) == 5000


def test_sample_regular_small():
    gen = SeededStream(1).generator()
    for _ in range(20):
        assert sample_regular(4, 3, gen) == K(4)
    for _ in range(50):
        g = sample_regular(10, 3, gen)
        g.validate()
        assert g.is_regular(3)


def test_sample_regular_errors():
    with pytest.raises(ParityViolation):
        sample_regular(7, 3, 0)
    with pytest.raises(CapExceeded):
        sample_regular(20, 9, 0)
    with pytest.raises(RejectionBudgetExceeded):
        sample_regular(12, 9 - 1, 0, budget=1)


def test_sample_regular_uniform_n6():
    # 10^4 draws of the scalar sampler, 10^6 of the vectorized one
    graphs = enumerate_regular(6, 3)
    law = {g: 1 / len(graphs) for g in graphs}
    gen = SeededStream(2).generator()
    hist = Counter(sample_regular(6, 3, gen) for _ in range(10_000))
    assert chi_square_law(hist, law).p_value > 1e-3
    codes = batch_regular(6, 3, 1_000_000, gen)
    assert code_degrees_ok(codes, 6, 3)
    law_c = {code_of(g): p for g, p in law.items()}
    rep = chi_square_law(Counter(codes.tolist()), law_c)
    assert rep.dof == 69 and rep.p_value > 1e-3


def test_sample_matching():
    gen = SeededStream(3).generator()
    assert sample_matching(2, gen) == Graph.from_edges(2, [(0, 1)])
    hist = Counter(sample_matching(4, gen) for _ in range(100_000))
    assert len(hist) == 3
    sigma = math.sqrt((1 / 3) * (2 / 3) / 100_000)
    assert all(abs(c / 100_000 - 1 / 3) <= 3 * sigma for c in hist.values())
    g = sample_matching(50, gen)
    assert g.m == 25 and g.is_regular(1)
    with pytest.raises(OddN):
        sample_matching(5, gen)


def test_sample_oplus_four_cycles():
    gen = SeededStream(4).generator()
    hist = Counter(sample_oplus([mu(1), mu(1)], 4, gen).graph for _ in range(3000))
    assert len(hist) == 3
    assert all(canonical_key(g) == canonical_key(C(4)) for g in hist)
    assert chi_square_law(hist, {g: 1 / 3 for g in hist}).p_value > 1e-3


def test_sample_oplus_components():
    gen = SeededStream(5).generator()
    draw = sample_oplus([mu(2), nu(2)], 10, gen)
    assert draw.graph.is_regular(4) and draw.attempts >= 1
    assert sum(c.m for c in draw.components) == draw.graph.m


@pytest.mark.slow
def test_oplus_acceptance_rate_n1000():
    # the first joint draw of two uniform matchings is disjoint w.p. ~ e^{-1/2}
    gen = SeededStream(6).generator()
    first = [sample_oplus([mu(1), mu(1)], 1000, gen).attempts == 1 for _ in range(10_000)]
    assert abs(np.mean(first) - math.exp(-0.5)) <= 0.02


@pytest.mark.slow
def test_batch_oplus_class_law_n8():
    # mu_3 + mu_1 against the oracle, aggregated by isomorphism class
    exact = class_distribution(exact_distribution(compose(mu(3), mu(1)), 8))
    gen = SeededStream(7).generator()
    codes, comps, draws = batch_oplus([mu(3), mu(1)], 8, 200_000, gen)
    assert code_degrees_ok(codes, 8, 4) and draws >= len(codes)
    keys = {}
    hist = Counter()
    for c, k in Counter(codes.tolist()).items():
        keys[c] = canonical_key(graph_of(c, 8))
        hist[keys[c]] += k
    law = exact.as_map()
    assert empirical_tv_to_law(hist, law).value < 0.02
    assert chi_square_law(hist, law).p_value > 1e-3


def test_sample_nu():
    gen = SeededStream(8).generator()
    g, ms = sample_nu(4, 3, gen)
    assert g == K(4) and len(ms) == 3
    g, ms = sample_nu(8, 3, gen)
    assert all(a.is_disjoint(b) for i, a in enumerate(ms) for b in ms[i + 1:])
    u = ms[0]
    for m in ms[1:]:
        u = Graph(8, tuple(a | b for a, b in zip(u.rows, m.rows)))
    assert u == g


def test_batch_nu_law_n6():
    graphs = enumerate_regular(6, 3)
    w = {code_of(g): count_one_factorisations_ordered(g, 3) for g in graphs}
    tot = sum(w.values())
    law = {c: x / tot for c, x in w.items() if x}
    gen = SeededStream(9).generator()
    codes = batch_nu(6, 3, 1_000_000, gen)
    assert chi_square_law(Counter(codes.tolist()), law).p_value > 1e-3


def test_batch_matchings_are_matchings():
    gen = SeededStream(10).generator()
    codes = batch_matchings(8, 500, gen)
    assert code_degrees_ok(codes, 8, 1)
    assert graph_of(code_of(C(8)), 8) == C(8)


def test_overlay_single_skeleton():
    spec = OverlaySpec([C(10)])
    assert overlay(spec, 0) == (True, 0)


def test_overlay_validation():
    with pytest.raises(PreconditionError):
        OverlaySpec([C(6), C(8)])
    with pytest.raises(PreconditionError):
        OverlaySpec([Graph.from_edges(4, [(0, 1)])])


def test_overlay_two_matchings_poisson():
    gen = SeededStream(11).generator()
    spec = OverlaySpec([sample_matching(1000, gen), sample_matching(1000, gen)])
    assert spec.D == 1
    reps = overlay_trials(spec, 10_000, 11)
    assert abs(sum(r == 0 for r in reps) / 10_000 - math.exp(-0.5)) <= 0.02
    assert poisson_fit(Counter(reps), 0.5).p_value > 1e-3


def test_overlay_three_cycles_poisson():
    spec = OverlaySpec([C(600), C(600), C(600)])
    assert spec.D == 12
    reps = overlay_trials(spec, 10_000, 12)
    p = sum(r == 0 for r in reps) / 10_000
    assert abs(p - math.exp(-6)) <= 3 * math.sqrt(math.exp(-6) / 10_000) + 1e-3
    assert poisson_fit(Counter(reps), 6.0).p_value > 1e-3


def test_overlay_reproducible():
    spec = OverlaySpec([C(100), C(100)])
    assert overlay_trials(spec, 300, 5) == overlay_trials(spec, 300, 5, workers=2)
