"""Exact ground truth at small n.

Labeled d-regular graphs are enumerated by backtracking; an independent
class-level enumerator walks isomorphism classes through double-edge swaps and
recovers labeled counts as sum n!/|Aut|.  Measures are stored with exact
rational masses so equalities of measures can be asserted exactly.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from .config import CAPS
from .counting import count_one_factorisations_ordered, count_perfect_matchings
from .errors import CapExceeded, EmptySupport, ParityViolation, PreconditionError
from .graph import CanonicalKey, Graph, _bits, _relabel_trusted, canonical_form, canonical_key


# ---------------------------------------------------------------------------
# Enumerator 1: backtracking over vertices in label order
# ---------------------------------------------------------------------------

def _check_nd(n: int, d: int) -> None:
    if not 1 <= d <= n - 1:
        raise PreconditionError(f"need 1 <= d <= n-1, got n={n}, d={d}")
    if (n * d) % 2:
        raise ParityViolation(f"dn = {d * n} is odd")


def iter_subgraphs(host: Graph, degrees: Sequence[int]) -> Iterator[Graph]:
    """Spanning subgraphs of ``host`` with the given degree sequence, in
    lexicographic edge-list order.  Vertex i picks its remaining neighbours
    among later vertices; earlier vertices are already settled."""
    n = host.n
    rem = list(degrees)
    if len(rem) != n or sum(rem) % 2:
        return
    allowed = host.rows
    rows = [0] * n

    def rec(i: int) -> Iterator[Graph]:
        while i < n and rem[i] == 0:
            i += 1
        if i == n:
            yield Graph(n, tuple(rows))
            return
        need = rem[i]
        cands = [j for j in _bits(allowed[i] >> (i + 1) << (i + 1)) if rem[j] > 0]
        if len(cands) < need:
            return
        for combo in itertools.combinations(cands, need):
            for j in combo:
                rem[j] -= 1
                rows[i] |= 1 << j
                rows[j] |= 1 << i
            rem[i] = 0
            yield from rec(i + 1)
            rem[i] = need
            for j in combo:
                rem[j] += 1
                rows[i] &= ~(1 << j)
                rows[j] &= ~(1 << i)

    yield from rec(0)


def count_subgraphs(host: Graph, degrees: Sequence[int]) -> int:
    """Number of graphs iter_subgraphs would yield.  The recursion state after
    vertex i is (i, remaining degrees of later vertices), so it memoizes."""
    n = host.n
    if len(degrees) != n or sum(degrees) % 2:
        return 0
    allowed = host.rows

    @lru_cache(maxsize=None)
    def rec(i: int, rem: tuple[int, ...]) -> int:
        # rem holds remaining degrees of vertices i..n-1
        while i < n and rem[0] == 0:
            i += 1
            rem = rem[1:]
        if i == n:
            return 1
        need = rem[0]
        cands = [j for j in _bits(allowed[i] >> (i + 1) << (i + 1)) if rem[j - i] > 0]
        if len(cands) < need:
            return 0
        total = 0
        for combo in itertools.combinations(cands, need):
            nxt = list(rem[1:])
            for j in combo:
                nxt[j - i - 1] -= 1
            total += rec(i + 1, tuple(nxt))
        return total

    return rec(0, tuple(degrees))


def count_regular(n: int, d: int) -> int:
    """|G_d(n)| via the memoized backtracking recursion."""
    _check_nd(n, d)
    return count_subgraphs(Graph.complete(n), [d] * n)


def enumerate_regular(n: int, d: int) -> list[Graph]:
    """Every d-regular labeled simple graph on [n] once, in lexicographic edge-list order."""
    _check_nd(n, d)
    if n > CAPS.oracle_n:
        raise CapExceeded(f"oracle enumeration capped at n={CAPS.oracle_n}, got {n}")
    total = count_regular(n, d)
    if total > CAPS.listing_limit:
        raise CapExceeded(f"|G_{d}({n})| = {total} exceeds listing limit {CAPS.listing_limit}")
    return _enumerate_cached(n, d)


@lru_cache(maxsize=32)
def _enumerate_cached(n: int, d: int) -> list[Graph]:
    return list(iter_subgraphs(Graph.complete(n), [d] * n))


# ---------------------------------------------------------------------------
# Enumerator 2: isomorphism classes by switch closure
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularClass:
    key: CanonicalKey
    rep: Graph
    aut: int

    @property
    def size(self) -> int:
        return math.factorial(self.rep.n) // self.aut


def _seed_regular(n: int, d: int) -> Graph:
    # Circulant on offsets 1..d//2, plus the antipodal matching when d is odd.
    edges = set()
    for v in range(n):
        for s in range(1, d // 2 + 1):
            u, w = v, (v + s) % n
            edges.add((min(u, w), max(u, w)))
        if d % 2:
            u, w = v, (v + n // 2) % n
            edges.add((min(u, w), max(u, w)))
    return Graph.from_edges(n, sorted(edges))


def _switches(g: Graph) -> Iterator[Graph]:
    edges = g.edges()
    rows = g.rows
    for (a, b), (c, d) in itertools.combinations(edges, 2):
        if len({a, b, c, d}) < 4:
            continue
        for (p, q), (r, s) in (((a, c), (b, d)), ((a, d), (b, c))):
            if rows[p] >> q & 1 or rows[r] >> s & 1:
                continue
            new = list(rows)
            new[a] &= ~(1 << b); new[b] &= ~(1 << a)
            new[c] &= ~(1 << d); new[d] &= ~(1 << c)
            new[p] |= 1 << q; new[q] |= 1 << p
            new[r] |= 1 << s; new[s] |= 1 << r
            yield Graph(g.n, tuple(new))


@lru_cache(maxsize=64)
def regular_classes(n: int, d: int) -> tuple[RegularClass, ...]:
    """All isomorphism classes of d-regular graphs on n vertices, sorted by key.

    The double-edge-swap graph on labeled graphs with a fixed degree sequence
    is connected, so a breadth-first closure from any seed reaches every class.
    """
    _check_nd(n, d)
    if n > CAPS.oracle_n:
        raise CapExceeded(f"class enumeration capped at n={CAPS.oracle_n}, got {n}")
    # Work on the sparser side; complements share automorphism groups.
    flip = d > (n - 1) / 2
    seed = _seed_regular(n, n - 1 - d if flip else d)
    key, rep, aut = canonical_form(seed)
    found = {key: RegularClass(key, rep, aut)}
    frontier = [rep]
    while frontier:
        nxt = []
        for g in frontier:
            for h in _switches(g):
                k, r, a = canonical_form(h)
                if k not in found:
                    found[k] = RegularClass(k, r, a)
                    nxt.append(r)
        frontier = nxt
    classes = found.values()
    if flip:
        out = []
        for c in classes:
            comp = c.rep.complement()
            out.append(RegularClass(canonical_key(comp), comp, c.aut))
        classes = out
    return tuple(sorted(classes, key=lambda c: c.key))


def count_regular_by_classes(n: int, d: int) -> int:
    return sum(c.size for c in regular_classes(n, d))


def orbit(g: Graph) -> set[Graph]:
    """All labeled copies of g (n! relabelings, deduplicated)."""
    return {_relabel_trusted(g, perm) for perm in itertools.permutations(range(g.n))}


def enumerate_regular_by_classes(n: int, d: int) -> list[Graph]:
    """Labeled listing via orbits of class representatives; for n <= 9."""
    if n > 9:
        raise CapExceeded("orbit expansion needs n! relabelings; capped at n=9")
    out: set[Graph] = set()
    for c in regular_classes(n, d):
        out |= orbit(c.rep)
    return sorted(out, key=Graph.sort_key)


# ---------------------------------------------------------------------------
# Distributions
# ---------------------------------------------------------------------------

@dataclass
class Distribution:
    """Exact finite measure on labeled graphs with a common vertex count."""

    n: int
    masses: dict[Graph, Fraction]

    @classmethod
    def from_weights(cls, n: int, weights: Mapping[Graph, int | Fraction]) -> "Distribution":
        total = sum(weights.values())
        if total == 0:
            raise EmptySupport("all weights are zero")
        return cls(n, {g: Fraction(w) / total for g, w in weights.items() if w})

    @classmethod
    def uniform(cls, n: int, graphs: Iterable[Graph]) -> "Distribution":
        graphs = list(graphs)
        if not graphs:
            raise EmptySupport("no graphs")
        p = Fraction(1, len(graphs))
        return cls(n, {g: p for g in graphs})

    @property
    def total(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def __getitem__(self, g: Graph) -> Fraction:
        return self.masses.get(g, Fraction(0))

    def __len__(self) -> int:
        return len(self.masses)

    def items(self) -> list[tuple[Graph, Fraction]]:
        return sorted(self.masses.items(), key=lambda kv: kv[0].sort_key())

    def support(self) -> list[Graph]:
        return [g for g, _ in self.items()]

    def degree(self) -> int | None:
        """Common degree of the support if every graph is regular of one degree."""
        degs = {tuple(set(g.degrees())) for g in self.masses}
        if len(degs) == 1:
            (t,) = degs
            if len(t) == 1:
                return t[0]
        return None

    def to_json(self) -> str:
        rows = [{"graph": g.edge_string(), "mass_num": m.numerator, "mass_den": m.denominator}
                for g, m in self.items()]
        return json.dumps(rows, separators=(",", ":"))

    @classmethod
    def from_json(cls, n: int, text: str) -> "Distribution":
        masses = {}
        for row in json.loads(text):
            edges = []
            for tok in row["graph"].split():
                a, b = tok.split("-")
                edges.append((int(a) - 1, int(b) - 1))
            masses[Graph.from_edges(n, edges)] = Fraction(row["mass_num"], row["mass_den"])
        return cls(n, masses)

    def map_float(self) -> dict[Graph, float]:
        return {g: float(m) for g, m in self.masses.items()}


def exact_tv(p: Distribution, q: Distribution) -> Fraction:
    """Half the L1 distance over the union of supports."""
    if p.n != q.n:
        raise PreconditionError(f"vertex counts differ: {p.n} vs {q.n}")
    keys = set(p.masses) | set(q.masses)
    return sum((abs(p[g] - q[g]) for g in keys), Fraction(0)) / 2


def tv_of_maps(p: Mapping, q: Mapping) -> Fraction:
    keys = set(p) | set(q)
    return sum((abs(Fraction(p.get(k, 0)) - Fraction(q.get(k, 0))) for k in keys), Fraction(0)) / 2


def beta_weight(g: Graph, tau: Distribution) -> Fraction:
    """Total tau-mass of graphs edge-disjoint from g."""
    if g.n != tau.n:
        raise PreconditionError(f"vertex counts differ: {g.n} vs {tau.n}")
    return sum((m for h, m in tau.masses.items() if g.is_disjoint(h)), Fraction(0))


# ---------------------------------------------------------------------------
# The edge-disjoint composition
# ---------------------------------------------------------------------------

@dataclass
class OplusResult:
    distribution: Distribution
    # P(independent draws are edge-disjoint): the normalizing constant of the composition
    disjoint_probability: Fraction


def oplus(p: Distribution, q: Distribution) -> OplusResult:
    """Law of the union of independent draws from p and q conditioned on being
    edge-disjoint.  When the second factor has a regular support, partners are
    found by enumerating its degree inside the complement of the first."""
    if p.n != q.n:
        raise PreconditionError(f"vertex counts differ: {p.n} vs {q.n}")
    n = p.n
    # Iterate over the smaller support, enumerate inside the complement.
    first, second = (p, q) if len(p) <= len(q) else (q, p)
    d2 = second.degree()
    acc: dict[Graph, Fraction] = defaultdict(Fraction)
    if d2 is not None:
        for g1, m1 in first.masses.items():
            for g2 in iter_subgraphs(g1.complement(), [d2] * n):
                m2 = second.masses.get(g2)
                if m2:
                    acc[Graph(n, tuple(a | b for a, b in zip(g1.rows, g2.rows)))] += m1 * m2
    else:
        for g1, m1 in first.masses.items():
            for g2, m2 in second.masses.items():
                if g1.is_disjoint(g2):
                    acc[Graph(n, tuple(a | b for a, b in zip(g1.rows, g2.rows)))] += m1 * m2
    z = sum(acc.values(), Fraction(0))
    if z == 0:
        raise EmptySupport("no edge-disjoint pair has positive mass")
    return OplusResult(Distribution(n, {g: m / z for g, m in acc.items()}), z)


# ---------------------------------------------------------------------------
# Measure expressions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Atom:
    kind: str  # "mu" or "nu"
    d: int

    def __str__(self) -> str:
        return f"{self.kind}{self.d}"

    def degree(self) -> int:
        return self.d


@dataclass(frozen=True)
class Oplus:
    parts: tuple

    def __str__(self) -> str:
        return "(" + " + ".join(str(p) for p in self.parts) + ")"

    def degree(self) -> int:
        return sum(p.degree() for p in self.parts)


def mu(d: int) -> Atom:
    return Atom("mu", d)


def nu(d: int) -> Atom:
    return Atom("nu", d)


def compose(*parts) -> Oplus:
    return Oplus(tuple(parts))


_TOKEN = re.compile(r"\s*(mu|nu)_?(\d+)|\s*([()+])")


def parse_measure(text: str):
    """Parse e.g. ``"mu2 + mu1"``, ``"(mu1+mu1)+mu1"`` or ``"mu_3 + nu_2"``."""
    tokens = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise PreconditionError(f"cannot parse measure at '{text[pos:]}'")
        tokens.append(m.group(3) or (m.group(1), int(m.group(2))))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    it = iter(tokens + [None])
    cur = [next(it)]

    def advance():
        cur[0] = next(it)

    def expr():
        parts = [term()]
        while cur[0] == "+":
            advance()
            parts.append(term())
        return parts[0] if len(parts) == 1 else Oplus(tuple(parts))

    def term():
        tok = cur[0]
        if tok == "(":
            advance()
            e = expr()
            if cur[0] != ")":
                raise PreconditionError("unbalanced parentheses")
            advance()
            return e
        if isinstance(tok, tuple):
            advance()
            return Atom(tok[0], tok[1])
        raise PreconditionError(f"unexpected token {tok!r}")

    out = expr()
    if cur[0] is not None:
        raise PreconditionError(f"trailing input in measure '{text}'")
    return out


def exact_distribution(expr, n: int) -> Distribution:
    """Exact law of a measure expression over labeled graphs on [n]."""
    if expr.degree() > n - 1:
        raise EmptySupport(f"total degree {expr.degree()} exceeds n-1 = {n - 1}")
    if expr.degree() > CAPS.oracle_degree_sum and n > 8:
        raise CapExceeded(f"degree sum {expr.degree()} above oracle cap {CAPS.oracle_degree_sum}")
    return _exact_cached(expr, n)


@lru_cache(maxsize=64)
def _exact_cached(expr, n: int) -> Distribution:
    if isinstance(expr, Atom):
        if expr.kind == "mu":
            return Distribution.uniform(n, enumerate_regular(n, expr.d))
        return nu_distribution(n, expr.d)
    dist = _exact_cached(expr.parts[0], n)
    for part in expr.parts[1:]:
        dist = oplus(dist, _exact_cached(part, n)).distribution
    return dist


def nu_distribution(n: int, d: int) -> Distribution:
    """Law on G_d(n) proportional to the number of 1-factorisations."""
    if n % 2:
        raise ParityViolation("1-factorisations need even n")
    weights = {g: count_one_factorisations_ordered(g, d) for g in enumerate_regular(n, d)}
    return Distribution.from_weights(n, weights)


def disjointness_probability(p: Distribution, q: Distribution) -> Fraction:
    return oplus(p, q).disjoint_probability


# ---------------------------------------------------------------------------
# Isomorphism-class aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClassEntry:
    key: CanonicalKey
    rep: Graph
    size: int
    mass: Fraction


@dataclass
class ClassDistribution:
    n: int
    entries: list[ClassEntry]

    def mass(self, key: CanonicalKey) -> Fraction:
        for e in self.entries:
            if e.key == key:
                return e.mass
        return Fraction(0)

    def as_map(self) -> dict[CanonicalKey, Fraction]:
        return {e.key: e.mass for e in self.entries}

    @property
    def total(self) -> Fraction:
        return sum((e.mass for e in self.entries), Fraction(0))


def class_keys(graphs: Iterable[Graph]) -> dict[Graph, CanonicalKey]:
    """Canonical key for each graph.  For n <= 8 whole orbits are labeled at
    once, which is much cheaper than one search per graph."""
    graphs = list(graphs)
    out: dict[Graph, CanonicalKey] = {}
    if not graphs:
        return out
    n = graphs[0].n
    if n <= 8:
        todo = set(graphs)
        for g in graphs:
            if g in out:
                continue
            key, rep, _ = canonical_form(g)
            for h in orbit(rep):
                if h in todo:
                    out[h] = key
        return out
    for g in graphs:
        out[g] = canonical_key(g)
    return out


def class_distribution(p: Distribution) -> ClassDistribution:
    """Aggregate masses by isomorphism class; class size is n!/|Aut|."""
    keys = class_keys(p.masses)
    mass: dict[CanonicalKey, Fraction] = defaultdict(Fraction)
    reps: dict[CanonicalKey, Graph] = {}
    for g, m in p.masses.items():
        k = keys[g]
        mass[k] += m
        reps.setdefault(k, g)
    entries = []
    for k in sorted(mass):
        _, rep, aut = canonical_form(reps[k])
        entries.append(ClassEntry(k, rep, math.factorial(p.n) // aut, mass[k]))
    return ClassDistribution(p.n, entries)


def class_law_regular(n: int, d: int, weight: Callable[[Graph], int] | None = None) -> ClassDistribution:
    """Class law of the measure on G_d(n) with per-graph weight ``weight``
    (class invariant).  None gives the uniform measure.  Works from class
    representatives, so it reaches n where labeled listing is infeasible."""
    classes = regular_classes(n, d)
    w = [c.size * (1 if weight is None else weight(c.rep)) for c in classes]
    total = sum(w)
    if total == 0:
        raise EmptySupport("all class weights are zero")
    return ClassDistribution(n, [ClassEntry(c.key, c.rep, c.size, Fraction(wi, total))
                                 for c, wi in zip(classes, w) if wi])


def bar_mu(n: int, d: int) -> ClassDistribution:
    return class_law_regular(n, d)


def bar_nu(n: int, d: int) -> ClassDistribution:
    return class_law_regular(n, d, lambda g: count_one_factorisations_ordered(g, d))


# ---------------------------------------------------------------------------
# Exact quantities derived from the enumerators
# ---------------------------------------------------------------------------

def exact_edge_probability(n: int, d: int, h: Graph, u: int, v: int) -> Fraction:
    """P(uv in G | h subset of G) for G uniform on G_d(n), by exact counting."""
    _check_nd(n, d)
    if h.has_edge(u, v):
        raise PreconditionError("uv already in h")
    degs = h.degrees()
    host = h.complement()
    base = count_subgraphs(host, [d - x for x in degs])
    if base == 0:
        raise EmptySupport("no d-regular graph contains h")
    hv = Graph(n, tuple(r | (1 << v if i == u else 0) | (1 << u if i == v else 0)
                        for i, r in enumerate(h.rows)))
    degs2 = hv.degrees()
    if max(degs2) > d:
        return Fraction(0)
    top = count_subgraphs(hv.complement(), [d - x for x in degs2])
    return Fraction(top, base)


def matching_extension_tv_classes(n: int, d: int) -> Fraction:
    """TV(mu_d + mu_1, mu_{d+1}) from class representatives.

    The composed law puts mass on a (d+1)-regular G proportional to its number
    of perfect matchings, which is a class invariant.
    """
    classes = regular_classes(n, d + 1)
    sizes = [c.size for c in classes]
    pms = [count_perfect_matchings(c.rep) for c in classes]
    total_pm = sum(s * y for s, y in zip(sizes, pms))
    total = sum(sizes)
    return sum((s * abs(Fraction(y, total_pm) - Fraction(1, total)) for s, y in zip(sizes, pms)),
               Fraction(0)) / 2


def beta_ratio_classes(n: int, d1: int, d_tau: int = 1) -> Fraction:
    """max beta / min beta over G_{d1}(n) with tau = mu_{d_tau}.

    beta(G) = |{H in G_{d_tau}(n) : H edge-disjoint from G}| / |G_{d_tau}(n)|,
    a class invariant, so only representatives are needed.
    """
    vals = []
    for c in regular_classes(n, d1):
        host = c.rep.complement()
        if d_tau == 1:
            vals.append(count_perfect_matchings(host))
        else:
            vals.append(count_subgraphs(host, [d_tau] * n))
    if min(vals) == 0:
        raise EmptySupport("some graph has zero beta-weight")
    return Fraction(max(vals), min(vals))
