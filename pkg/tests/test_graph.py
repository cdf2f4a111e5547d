import itertools
import math

import networkx as nx
import pytest
from hypothesis import given, strategies as st

from rrglab.errors import NotAPermutation, SharedEdge
from rrglab.graph import (DegreeSequence, Graph, automorphism_count, brute_force_key, canonical_form,
                          canonical_key, is_isomorphic_brute, relabel, union_all, union_disjoint)
from rrglab.oracle import enumerate_regular, regular_classes

from conftest import C, K, graph_and_perm, graphs


def E(n, *pairs):
    return Graph.from_edges(n, [(u - 1, v - 1) for u, v in pairs])


def to_nx(g):
    h = nx.Graph()
    h.add_nodes_from(range(g.n))
    h.add_edges_from(g.edges())
    return h


def test_union_of_two_pms_is_four_cycle():
    u = union_disjoint(E(4, (1, 2), (3, 4)), E(4, (1, 3), (2, 4)))
    assert u.degrees() == [2, 2, 2, 2]
    assert canonical_key(u) == canonical_key(C(4))


def test_union_with_empty_is_identity():
    assert union_disjoint(Graph.empty(4), K(4)) == K(4)


def test_union_shared_edge_raises():
    with pytest.raises(SharedEdge):
        union_disjoint(E(4, (1, 2), (3, 4)), E(4, (1, 2), (3, 4)))


@given(graphs(max_n=7), st.data())
def test_union_commutative_and_associative(g, data):
    free = g.complement()
    pool = free.edges()
    picks = data.draw(st.lists(st.integers(0, 2), min_size=len(pool), max_size=len(pool)))
    a = Graph.from_edges(g.n, [e for e, p in zip(pool, picks) if p == 1])
    b = Graph.from_edges(g.n, [e for e, p in zip(pool, picks) if p == 2])
    assert union_disjoint(a, b) == union_disjoint(b, a)
    assert union_disjoint(union_disjoint(g, a), b) == union_disjoint(g, union_disjoint(a, b))
    assert union_all([g, a, b]).m == g.m + a.m + b.m


def test_graph_invariants():
    g = K(5)
    g.validate()
    assert g.m * 2 == sum(g.degrees())


def test_text_round_trip():
    g = E(5, (1, 2), (2, 5), (3, 4))
    assert g.to_text() == "5 3\n1 2\n2 5\n3 4\n"
    assert Graph.from_text(g.to_text()) == g


def test_text_rejects_bad_header():
    with pytest.raises(ValueError):
        Graph.from_text("4 2\n1 2\n")


def test_relabel_examples():
    g = E(4, (1, 2), (3, 4))
    assert relabel(g, [0, 1, 2, 3]) == g
    assert relabel(g, [1, 2, 3, 0]) == E(4, (2, 3), (1, 4))
    with pytest.raises(NotAPermutation):
        relabel(g, [0, 0, 1, 2])


@given(graph_and_perm(max_n=8))
def test_relabel_inverse(gp):
    g, sigma = gp
    inv = [0] * g.n
    for i, s in enumerate(sigma):
        inv[s] = i
    assert relabel(relabel(g, sigma), inv) == g


@given(graph_and_perm(max_n=12))
def test_canonical_key_relabel_invariant(gp):
    g, sigma = gp
    assert canonical_key(relabel(g, sigma)) == canonical_key(g)


@given(graphs(max_n=6), graphs(max_n=6))
def test_key_equal_iff_isomorphic_small(g, h):
    if g.n != h.n or g.m != h.m:
        return
    assert (canonical_key(g) == canonical_key(h)) == is_isomorphic_brute(g, h)
    assert (brute_force_key(g) == brute_force_key(h)) == is_isomorphic_brute(g, h)


def test_canonical_key_examples():
    assert canonical_key(E(4, (1, 2), (2, 3), (3, 4), (1, 4))) == canonical_key(E(4, (1, 3), (3, 2), (2, 4), (1, 4)))
    assert canonical_key(K(4)) != canonical_key(E(4, (1, 2), (1, 3), (1, 4), (2, 3)))


@given(graphs(max_n=8))
def test_automorphism_count_matches_networkx(g):
    gm = nx.algorithms.isomorphism.GraphMatcher(to_nx(g), to_nx(g))
    assert automorphism_count(g) == sum(1 for _ in gm.isomorphisms_iter())


def test_canonical_form_rep_is_isomorphic():
    g = C(7)
    key, rep, aut = canonical_form(g)
    assert canonical_key(rep) == key and aut == 14


def test_cubic_classes_on_eight_vertices():
    # Six classes, checked independently: representatives are pairwise
    # non-isomorphic under networkx, orbit sizes n!/|Aut| sum to the labeled
    # count, and a sample of labeled graphs each matches exactly one class.
    classes = regular_classes(8, 3)
    assert len(classes) == 6
    reps = [to_nx(c.rep) for c in classes]
    for a, b in itertools.combinations(reps, 2):
        assert not nx.is_isomorphic(a, b)
    labeled = enumerate_regular(8, 3)
    assert sum(math.factorial(8) // c.aut for c in classes) == len(labeled) == 19355
    by_key = {c.key: i for i, c in enumerate(classes)}
    for g in labeled[::97]:
        hits = [i for i, r in enumerate(reps) if nx.is_isomorphic(to_nx(g), r)]
        assert hits == [by_key[canonical_key(g)]]


def test_degree_sequence_parity():
    assert DegreeSequence.regular(4, 3).n == 4
    with pytest.raises(ValueError):
        DegreeSequence((1, 1, 1))
