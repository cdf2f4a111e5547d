"""Exact counters and closed-form evaluators on single graphs."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import reverse_cuthill_mckee

from .config import CAPS, DEFAULTS
from .errors import (CapExceeded, DegreeExceeded, EdgeAlreadyPresent, HypothesisViolated,
                     NotRegular, PreconditionError)
from .graph import DegreeSequence, Graph, _bits


# ---------------------------------------------------------------------------
# Perfect matchings
# ---------------------------------------------------------------------------

def _bandwidth_order(g: Graph) -> list[int]:
    edges = g.edges()
    if not edges:
        return list(range(g.n))
    rows = [u for u, v in edges] + [v for u, v in edges]
    cols = [v for u, v in edges] + [u for u, v in edges]
    mat = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(g.n, g.n))
    return [int(v) for v in reverse_cuthill_mckee(mat, symmetric_mode=True)]


def count_perfect_matchings(g: Graph) -> int:
    """Number of perfect matchings, by a frontier DP over vertices in
    bandwidth-reducing order: the state is the set of already-covered later
    vertices and the least uncovered vertex is always matched next."""
    n = g.n
    if n % 2:
        return 0
    if n > CAPS.pm_exact_n:
        raise CapExceeded(f"exact PM counting capped at n={CAPS.pm_exact_n}, got {n}")
    order = _bandwidth_order(g)
    pos = [0] * n
    for i, v in enumerate(order):
        pos[v] = i
    nbr = [0] * n
    for v in range(n):
        m = 0
        for w in _bits(g.rows[v]):
            m |= 1 << pos[w]
        nbr[pos[v]] = m
    states = {0: 1}
    for i in range(n):
        bit = 1 << i
        later = nbr[i] >> (i + 1) << (i + 1)
        nxt: dict[int, int] = {}
        for mask, cnt in states.items():
            if mask & bit:
                key = mask ^ bit
                nxt[key] = nxt.get(key, 0) + cnt
                continue
            free = later & ~mask
            while free:
                low = free & -free
                key = mask | low
                nxt[key] = nxt.get(key, 0) + cnt
                free ^= low
        states = nxt
        if not states:
            return 0
    return states.get(0, 0)


def count_perfect_matchings_deletion(g: Graph) -> int:
    """Independent counter: PM(G) = PM(G - e) + PM(G - u - v) on an edge e = uv
    at a minimum-degree vertex.  Exponential; for cross-checks at n <= 16."""
    if g.n % 2:
        return 0

    @lru_cache(maxsize=None)
    def rec(alive: int, rows: tuple[int, ...]) -> int:
        if alive == 0:
            return 1
        best, best_deg = -1, None
        for v in _bits(alive):
            deg = (rows[v] & alive).bit_count()
            if deg == 0:
                return 0
            if best_deg is None or deg < best_deg:
                best, best_deg = v, deg
        u = best
        w = next(_bits(rows[u] & alive))
        without = list(rows)
        without[u] &= ~(1 << w)
        without[w] &= ~(1 << u)
        return rec(alive, tuple(without)) + rec(alive & ~(1 << u) & ~(1 << w), rows)

    return rec((1 << g.n) - 1, g.rows)


def perfect_matchings(g: Graph) -> list[Graph]:
    """All perfect matchings of g, each as a Graph."""
    n = g.n
    if n % 2:
        return []
    out: list[Graph] = []
    rows = g.rows

    def rec(alive: int, chosen: list[tuple[int, int]]) -> None:
        if alive == 0:
            out.append(Graph.from_edges(n, chosen))
            return
        u = (alive & -alive).bit_length() - 1
        for w in _bits(rows[u] & alive):
            chosen.append((u, w))
            rec(alive & ~(1 << u) & ~(1 << w), chosen)
            chosen.pop()

    rec((1 << n) - 1, [])
    return out


# ---------------------------------------------------------------------------
# Triangles and 1-factorisations
# ---------------------------------------------------------------------------

def count_triangles(g: Graph) -> int:
    total = 0
    rows = g.rows
    for u in range(g.n):
        higher = rows[u] >> (u + 1) << (u + 1)
        for v in _bits(higher):
            total += (rows[u] & rows[v] & (~0 << (v + 1))).bit_count()
    return total


def count_one_factorisations_ordered(g: Graph, d: int) -> int:
    """Ordered sequences of d pairwise edge-disjoint perfect matchings with union g."""
    if not g.is_regular(d):
        raise NotRegular(f"graph is not {d}-regular")
    if g.n % 2:
        return 0
    if g.n > CAPS.one_factor_n:
        raise CapExceeded(f"1-factorisation counting capped at n={CAPS.one_factor_n}")
    return _ordered_1f(g.n, g.rows, d)


@lru_cache(maxsize=200_000)
def _ordered_1f(n: int, rows: tuple[int, ...], d: int) -> int:
    if d == 0:
        return 1
    if d == 1:
        return 1
    if d == 2:
        return _two_factor_orderings(n, rows)
    total = 0
    for m in perfect_matchings(Graph(n, rows)):
        rest = tuple(a & ~b for a, b in zip(rows, m.rows))
        total += _ordered_1f(n, rest, d - 1)
    return total


def _two_factor_orderings(n: int, rows: tuple[int, ...]) -> int:
    # A 2-regular graph splits into two matchings iff every cycle is even;
    # each cycle then has two alternating colourings.
    seen = 0
    cycles = 0
    for s in range(n):
        if seen >> s & 1:
            continue
        length = 0
        prev, cur = -1, s
        while True:
            seen |= 1 << cur
            length += 1
            nxt = [w for w in _bits(rows[cur]) if w != prev]
            if not nxt:
                return 0
            prev, cur = cur, nxt[0]
            if cur == s:
                break
        if length % 2:
            return 0
        cycles += 1
    return 2 ** cycles


# ---------------------------------------------------------------------------
# Enumeration formula for graphs with a given degree sequence avoiding X
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MckayEstimate:
    log_leading_term: float
    leading_term: float
    leading_term_exact: Fraction | None
    lam: float
    mu: float
    delta_hat: float
    e_g: float
    error_exponent_scale: float
    hypothesis_ok: bool
    epsilon: float

    @property
    def log_estimate(self) -> float:
        """log of leading_term * exp(-lam - lam^2 - mu); the O(.) term is omitted."""
        return self.log_leading_term - self.lam - self.lam ** 2 - self.mu

    @property
    def estimate(self) -> float:
        return math.exp(self.log_estimate)

    def bracket(self, c: float = 1.0) -> tuple[float, float]:
        """Interval for the true count if the O(.) constant were c."""
        w = c * self.error_exponent_scale
        return (math.exp(self.log_estimate - w), math.exp(self.log_estimate + w))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["leading_term_exact"] = str(self.leading_term_exact) if self.leading_term_exact is not None else None
        d["log_estimate"] = self.log_estimate
        return d


_EXACT_FACTORIAL_LIMIT = 20_000


def mckay_count(x: Graph, g: DegreeSequence, epsilon: float | None = None,
                strict: bool = True) -> MckayEstimate:
    """Leading term and corrections of the count of graphs with degree sequence g
    that are edge-disjoint from x.

    With ``strict`` the hypothesis Delta-hat <= epsilon * sum(g) is enforced.
    """
    eps = DEFAULTS.mckay_epsilon if epsilon is None else epsilon
    if not 0 < eps < 2 / 3:
        raise PreconditionError(f"epsilon must lie in (0, 2/3), got {eps}")
    degs = g.degrees
    n = len(degs)
    if x.n != n:
        raise PreconditionError(f"X has {x.n} vertices, degree sequence has {n}")
    if any(not 0 <= gi <= n - 1 for gi in degs):
        raise PreconditionError("degrees must lie in [0, n-1]")
    total = sum(degs)
    if total == 0:
        raise PreconditionError("degree sequence must have positive sum")
    e = total // 2
    lam = sum(gi * (gi - 1) for gi in degs) / (4 * e)
    mu = sum(degs[i] * degs[j] for i, j in x.edges()) / (2 * e)
    gmax = max(degs)
    xmax = max(x.degrees()) if x.n else 0
    delta_hat = 2 + gmax * (1.5 * gmax + xmax + 1)
    ok = delta_hat <= eps * total
    if strict and not ok:
        raise HypothesisViolated(delta_hat, eps * total)
    exact = None
    if e <= _EXACT_FACTORIAL_LIMIT:
        den = math.factorial(e) * 2 ** e
        for gi in degs:
            den *= math.factorial(gi)
        num = math.factorial(2 * e)
        exact = Fraction(num, den)
        log_lead = math.log(exact.numerator) - math.log(exact.denominator)
    else:
        log_lead = (math.lgamma(2 * e + 1) - math.lgamma(e + 1) - e * math.log(2)
                    - sum(math.lgamma(gi + 1) for gi in degs))
    try:
        lead = math.exp(log_lead)
    except OverflowError:
        lead = math.inf
    return MckayEstimate(log_lead, lead, exact, lam, mu, delta_hat, float(e),
                         delta_hat ** 2 / e, ok, eps)


# ---------------------------------------------------------------------------
# Conditional edge probability in G(n, d) given an exposed subgraph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EdgeProbEstimate:
    value: float
    phi: float
    base: float
    uncertainty_scale: float

    def to_dict(self) -> dict:
        return asdict(self)


def conditional_edge_probability(n: int, d: int, h: Graph, u: int, v: int) -> EdgeProbEstimate:
    """P(uv in G(n,d) | h subset of G) without its (1 + O(.)) factor, which is
    returned separately as ``uncertainty_scale``.  Vertices are 0-based."""
    if h.n != n:
        raise PreconditionError(f"h has {h.n} vertices, expected {n}")
    if u == v:
        raise PreconditionError("u and v must differ")
    if h.has_edge(u, v):
        raise EdgeAlreadyPresent(f"edge {u + 1}-{v + 1} already in h")
    degs = h.degrees()
    if max(degs) > d:
        raise DegreeExceeded(f"h has maximum degree {max(degs)} > d = {d}")
    m = h.m
    if m > CAPS.edge_prob_fraction * d * n:
        raise PreconditionError(f"|E(h)| = {m} exceeds {CAPS.edge_prob_fraction} * dn")
    du, dv = degs[u], degs[v]
    phi = (du * dv
           + sum(degs[x] for x in h.neighbors(u))
           + sum(degs[y] for y in h.neighbors(v))
           - d - 2 * m - (d - 1) * (du + dv))
    dn = d * n
    base = (d - du) * (d - dv) / dn
    value = max(0.0, base * (1 - phi / dn))
    scale = m / n ** 2 + m ** 2 / (d ** 2 * n ** 2) + d ** 2 / n ** 2
    return EdgeProbEstimate(value, float(phi), base, scale)
