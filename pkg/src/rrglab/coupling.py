"""Constructive couplings: maximal coupling, the bipartite flow coupling, the
matching-extension coupling, the alternative sampling procedure (ASP), the
zeta recursion, and the monotone inclusion pipelines.

Exact constructions use Fractions.  Sampling from a coupling orders outcomes
by their serialization and inverts the cumulative distribution, so draws are
bit-reproducible for a given stream.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .config import CAPS
from .counting import count_one_factorisations_ordered, count_perfect_matchings
from .errors import (CapExceeded, EmptySupport, InfeasibleFlow, NonTermination, PreconditionError,
                     RejectionBudgetExceeded)
from .graph import CanonicalKey, Graph, _relabel_trusted, canonical_key
from .oracle import (ClassDistribution, ClassEntry, Distribution, bar_mu, bar_nu, class_keys,
                     compose, enumerate_regular, exact_distribution, exact_tv, iter_subgraphs, mu, nu,
                     regular_classes)
from .report import ExperimentReport
from .samplers import (SeededStream, as_generator, code_of, pair_index_table, run_blocks,
                       sample_nu, sample_regular)
from .stats import GofReport, chi_square, chi_square_independence, wilson_interval


def _order(x):
    return x.sort_key() if hasattr(x, "sort_key") else x


def _as_map(p) -> dict:
    if isinstance(p, Distribution):
        return dict(p.masses)
    if isinstance(p, ClassDistribution):
        return p.as_map()
    return dict(p)


def _exact(x) -> bool:
    return isinstance(x, (Fraction, int))


# ---------------------------------------------------------------------------
# Coupling tables
# ---------------------------------------------------------------------------

@dataclass
class CouplingTable:
    """Joint law on pairs with its two marginals, checked on construction."""

    joint: dict
    left: dict
    right: dict

    def __post_init__(self):
        row: dict = defaultdict(int)
        col: dict = defaultdict(int)
        for (a, b), m in self.joint.items():
            if m < 0:
                raise PreconditionError("negative mass in coupling")
            row[a] += m
            col[b] += m
        for got, want, side in ((row, self.left, "left"), (col, self.right, "right")):
            for k in set(got) | set(want):
                g, w = got.get(k, 0), want.get(k, 0)
                if _exact(g) and _exact(w):
                    if g != w:
                        raise PreconditionError(f"{side} marginal mismatch at {k!r}: {g} vs {w}")
                elif abs(float(g) - float(w)) > 1e-12:
                    raise PreconditionError(f"{side} marginal mismatch at {k!r}: {g} vs {w}")

    def diagonal_mass(self):
        return sum((m for (a, b), m in self.joint.items() if a == b), Fraction(0))

    def mass_where(self, pred: Callable[[Hashable, Hashable], bool]):
        return sum((m for (a, b), m in self.joint.items() if pred(a, b)), Fraction(0))

    def sampler(self) -> "PairSampler":
        return PairSampler(self)


class PairSampler:
    """Inverse-CDF sampling of pairs ordered by (left, right) serialization."""

    def __init__(self, table: CouplingTable):
        items = sorted(((k, m) for k, m in table.joint.items() if m > 0),
                       key=lambda km: (_order(km[0][0]), _order(km[0][1])))
        self.pairs = [k for k, _ in items]
        cdf = np.cumsum([float(m) for _, m in items])
        self.cdf = cdf / cdf[-1]

    def sample_indices(self, gen: np.random.Generator, count: int) -> np.ndarray:
        idx = np.searchsorted(self.cdf, gen.random(count), side="right")
        return np.minimum(idx, len(self.pairs) - 1)

    def sample(self, gen: np.random.Generator, count: int) -> list:
        return [self.pairs[i] for i in self.sample_indices(gen, count)]


def maximal_coupling(p, q) -> CouplingTable:
    """Diagonal min(p, q); off the diagonal the product of the normalized
    residuals p - min and q - min, so X and Y are independent given X != Y."""
    pm, qm = _as_map(p), _as_map(q)
    joint: dict = {}
    rp, rq = {}, {}
    for x in set(pm) | set(qm):
        a, b = pm.get(x, 0), qm.get(x, 0)
        m = min(a, b)
        if m > 0:
            joint[(x, x)] = m
        if a - m > 0:
            rp[x] = a - m
        if b - m > 0:
            rq[x] = b - m
    tv = sum(rp.values(), Fraction(0) if all(_exact(v) for v in rp.values()) else 0.0)
    if tv > 0:
        for x, a in rp.items():
            for y, b in rq.items():
                joint[(x, y)] = a * b / tv
    return CouplingTable(joint, pm, qm)


def random_rational_pair(gen: np.random.Generator, points: int = 5,
                         max_weight: int = 20) -> tuple[dict, dict]:
    """Two random rational distributions on {0, .., points-1}; some masses may be 0."""
    out = []
    for _ in range(2):
        w = gen.integers(0, max_weight + 1, size=points)
        if w.sum() == 0:
            w[gen.integers(points)] = 1
        tot = int(w.sum())
        out.append({i: Fraction(int(w[i]), tot) for i in range(points) if w[i]})
    return out[0], out[1]


def conditional_independence_test(table: CouplingTable, draws: int, gen: np.random.Generator) -> GofReport:
    """Chi-square independence of (X, Y) restricted to X != Y, from draws of the table."""
    sampler = table.sampler()
    idx = sampler.sample_indices(gen, draws)
    rows = sorted({a for a, b in table.joint if a != b}, key=_order)
    cols = sorted({b for a, b in table.joint if a != b}, key=_order)
    ri = {a: i for i, a in enumerate(rows)}
    ci = {b: j for j, b in enumerate(cols)}
    counts = np.bincount(idx, minlength=len(sampler.pairs))
    tab = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for k, c in enumerate(counts):
        a, b = sampler.pairs[k]
        if a != b:
            tab[ri[a], ci[b]] += c
    return chi_square_independence(tab)


# ---------------------------------------------------------------------------
# Bipartite flow coupling
# ---------------------------------------------------------------------------

@dataclass
class BipartiteInstance:
    n_s: int
    n_t: int
    edges: list  # (i, j) with 0 <= i < n_s, 0 <= j < n_t

    def __post_init__(self):
        self.edges = sorted(set((int(i), int(j)) for i, j in self.edges))
        if not self.edges:
            raise PreconditionError("bipartite graph has no edges")
        for i, j in self.edges:
            if not (0 <= i < self.n_s and 0 <= j < self.n_t):
                raise PreconditionError(f"edge {(i, j)} out of range")

    def degrees(self) -> tuple[list[int], list[int]]:
        ds, dt = [0] * self.n_s, [0] * self.n_t
        for i, j in self.edges:
            ds[i] += 1
            dt[j] += 1
        return ds, dt


def strassen_delta(h: BipartiteInstance, epsilon: float) -> float:
    """Least delta making the hypotheses hold for this epsilon."""
    ds, dt = h.degrees()
    e = len(h.edges)
    low_s = sum(1 for x in ds if x < (1 - epsilon) * e / h.n_s)
    low_t = sum(1 for x in dt if x < (1 - epsilon) * e / h.n_t)
    return max(low_s / h.n_s, low_t / h.n_t)


def strassen_bound(delta: float, epsilon: float) -> float:
    return 2 * delta + epsilon / (1 - epsilon)


def strassen_parameters(h: BipartiteInstance) -> tuple[float, float, float]:
    """(delta, epsilon, bound) minimizing 2 delta + epsilon/(1-epsilon) over the
    epsilons at which some vertex crosses the degree threshold."""
    ds, dt = h.degrees()
    e = len(h.edges)
    cands = {0.0}
    for x in ds:
        cands.add(max(0.0, 1 - x * h.n_s / e))
    for x in dt:
        cands.add(max(0.0, 1 - x * h.n_t / e))
    best = None
    for eps in sorted(cands):
        if eps >= 1:
            continue
        dlt = strassen_delta(h, eps)
        b = strassen_bound(dlt, eps)
        if best is None or b < best[2]:
            best = (dlt, eps, b)
    return best


@dataclass
class StrassenResult:
    table: CouplingTable
    bound: float
    violation: Fraction
    delta: float
    epsilon: float
    flow: Fraction


def strassen_coupling(h: BipartiteInstance, delta: float | None = None,
                      epsilon: float | None = None) -> StrassenResult:
    """Coupling of uniform X on S and uniform Z on T maximizing P(XZ in E(h)).

    A maximum flow with capacities L/|S| and L/|T| (L = lcm) gives the
    on-edge mass exactly; the leftover mass is coupled as a product.  With
    (delta, epsilon) supplied the hypotheses are checked first.
    """
    if epsilon is None:
        delta, epsilon, bound = strassen_parameters(h)
    else:
        if not 0 <= epsilon < 1:
            raise PreconditionError("epsilon must lie in [0, 1)")
        need = strassen_delta(h, epsilon)
        if delta is None:
            delta = need
        elif need > delta + 1e-12:
            raise InfeasibleFlow(f"hypotheses fail: {need:.4f} of a side is below the degree threshold")
        bound = strassen_bound(delta, epsilon)
    L = h.n_s * h.n_t // math.gcd(h.n_s, h.n_t)
    net = nx.DiGraph()
    for i in range(h.n_s):
        net.add_edge("src", ("s", i), capacity=L // h.n_s)
    for j in range(h.n_t):
        net.add_edge(("t", j), "snk", capacity=L // h.n_t)
    for i, j in h.edges:
        net.add_edge(("s", i), ("t", j), capacity=L)
    value, flow = nx.maximum_flow(net, "src", "snk")
    joint: dict = defaultdict(Fraction)
    out_s = [0] * h.n_s
    in_t = [0] * h.n_t
    for i, j in h.edges:
        f = flow[("s", i)][("t", j)]
        if f:
            joint[(i, j)] += Fraction(f, L)
            out_s[i] += f
            in_t[j] += f
    rest = Fraction(L - value, L)
    if rest > 0:
        rs = [Fraction(L // h.n_s - out_s[i], L) for i in range(h.n_s)]
        rt = [Fraction(L // h.n_t - in_t[j], L) for j in range(h.n_t)]
        for i in range(h.n_s):
            if rs[i]:
                for j in range(h.n_t):
                    if rt[j]:
                        joint[(i, j)] += rs[i] * rt[j] / rest
    left = {i: Fraction(1, h.n_s) for i in range(h.n_s)}
    right = {j: Fraction(1, h.n_t) for j in range(h.n_t)}
    table = CouplingTable(dict(joint), left, right)
    edge_set = set(h.edges)
    violation = table.mass_where(lambda a, b: (a, b) not in edge_set)
    if float(violation) > bound + 1e-12:
        raise InfeasibleFlow(f"violation {float(violation):.4f} exceeds bound {bound:.4f}")
    return StrassenResult(table, bound, violation, delta, epsilon, Fraction(value, L))


def planted_instance(gen: np.random.Generator, delta: float = 0.1, epsilon: float = 0.1,
                     size: tuple[int, int] = (20, 60), degree: tuple[int, int] = (4, 10),
                     max_tries: int = 1000) -> BipartiteInstance:
    """Random near-biregular bipartite graph with a planted floor(delta N) low
    vertices on each side, redrawn until the (delta, epsilon) hypotheses hold."""
    for _ in range(max_tries):
        ns = int(gen.integers(size[0], size[1] + 1))
        nt = ns
        r = int(gen.integers(degree[0], degree[1] + 1))
        low = int(math.floor(delta * ns))
        ds = np.full(ns, r)
        dt = np.full(nt, r)
        ds[gen.choice(ns, size=low, replace=False)] = gen.integers(0, max(1, r // 3) + 1, size=low)
        dt[gen.choice(nt, size=low, replace=False)] = gen.integers(0, max(1, r // 3) + 1, size=low)
        diff = int(ds.sum() - dt.sum())
        # balance stubs on non-planted vertices of the lighter side
        side = dt if diff > 0 else ds
        high = np.flatnonzero(side == r)
        for k in range(abs(diff)):
            side[high[k % len(high)]] += 1
        a = np.repeat(np.arange(ns), ds)
        b = gen.permutation(np.repeat(np.arange(nt), dt))
        if len(a) == 0:
            continue
        h = BipartiteInstance(ns, nt, list(zip(a.tolist(), b.tolist())))
        if strassen_delta(h, epsilon) <= delta:
            return h
    raise RejectionBudgetExceeded(max_tries, "planted_instance")


# ---------------------------------------------------------------------------
# Invariant maximal couplings on regular graphs
# ---------------------------------------------------------------------------

class InvariantCoupler:
    """Maximal coupling between two relabeling-invariant laws on G_d(n), given
    per-class masses of a single labeled graph.  A draw G from p is kept with
    probability min(p, q)(G)/p(G); otherwise a class is drawn from the
    residual of q and a uniform member of it returned."""

    def __init__(self, classes: Sequence, p_each: Mapping, q_each: Mapping):
        self.classes = list(classes)
        self.p_each = dict(p_each)
        self.q_each = dict(q_each)
        self.keep = {}
        resid = []
        for c in self.classes:
            p, q = self.p_each.get(c.key, Fraction(0)), self.q_each.get(c.key, Fraction(0))
            self.keep[c.key] = float(min(p, q) / p) if p > 0 else 0.0
            resid.append(c.size * max(q - p, Fraction(0)))
        self.tv = sum(resid, Fraction(0))
        tot = float(self.tv)
        self.resid_cdf = np.cumsum([float(r) / tot for r in resid]) if tot > 0 else None

    def couple(self, g: Graph, gen: np.random.Generator, key: CanonicalKey | None = None) -> Graph:
        if self.tv == 0:
            return g
        key = _cached_key(g) if key is None else key
        if gen.random() < self.keep.get(key, 0.0):
            return g
        if self.resid_cdf is None:
            return g
        i = min(int(np.searchsorted(self.resid_cdf, gen.random(), side="right")), len(self.classes) - 1)
        rep = self.classes[i].rep
        return _relabel_trusted(rep, [int(x) for x in gen.permutation(rep.n)])


def _per_graph(cd: ClassDistribution) -> dict:
    return {e.key: e.mass / e.size for e in cd.entries}


# ---------------------------------------------------------------------------
# Matching extension
# ---------------------------------------------------------------------------

@dataclass
class ExtensionHGraph:
    """The bipartite graph with S = {(G_d, G_{d+1}) : G_d subset G_{d+1}} and
    T = G_{d+1}(n); each S vertex is adjacent to its own G_{d+1}."""

    s_size: int
    t_degrees: list[int]

    def flow(self) -> Fraction:
        # Every S vertex has a single neighbour, so a maximum flow saturates
        # min(deg(t)/|S|, 1/|T|) at each t.
        t = len(self.t_degrees)
        return sum((min(Fraction(y, self.s_size), Fraction(1, t)) for y in self.t_degrees), Fraction(0))

    def instance(self) -> BipartiteInstance:
        edges = []
        i = 0
        for j, y in enumerate(self.t_degrees):
            for _ in range(y):
                edges.append((i, j))
                i += 1
        return BipartiteInstance(self.s_size, len(self.t_degrees), edges)


def extension_graph(n: int, d: int) -> ExtensionHGraph:
    """Explicit S and T over labeled graphs (listing needs |G_{d+1}(n)| small)."""
    degs = []
    s = 0
    for g in enumerate_regular(n, d + 1):
        y = 0
        for _ in iter_subgraphs(g, [d] * n):
            y += 1
        degs.append(y)
        s += y
    return ExtensionHGraph(s, degs)


def extension_tv_classes(n: int, d: int) -> tuple[Fraction, list]:
    """TV(mu_d + mu_1, mu_{d+1}) from class representatives: the composed law
    weighs a (d+1)-regular graph by its number of perfect matchings."""
    classes = regular_classes(n, d + 1)
    pms = [count_perfect_matchings(c.rep) for c in classes]
    total = sum(c.size for c in classes)
    total_pm = sum(c.size * y for c, y in zip(classes, pms))
    tv = sum((c.size * abs(Fraction(y, total_pm) - Fraction(1, total)) for c, y in zip(classes, pms)),
             Fraction(0)) / 2
    return tv, list(zip(classes, pms))


def _class_strassen(classes_pm) -> tuple[float, float, float]:
    """Strassen parameters of the extension graph from (class, Y) pairs:
    S-side degrees are all |E|/|S|, T-side degrees are Y."""
    total = sum(c.size for c, _ in classes_pm)
    mean_y = sum(c.size * y for c, y in classes_pm) / total
    best = None
    cands = {0.0} | {max(0.0, 1 - y / mean_y) for _, y in classes_pm}
    for eps in sorted(cands):
        if eps >= 1:
            continue
        low = sum(c.size for c, y in classes_pm if y < (1 - eps) * mean_y) / total
        b = strassen_bound(low, eps)
        if best is None or b < best[2]:
            best = (low, eps, b)
    return best


def matching_extension_coupling(n: int, d: int, trials: int = 0, seed: int | None = None) -> ExperimentReport:
    """Exact path (n <= 10): TV(mu_d + mu_1, mu_{d+1}) and the flow-coupling
    bound on the extension graph.  For n <= 8 the graph is built over labeled
    graphs and the flow value is checked against the oracle's exact TV.
    Monte Carlo path (n <= 28): TV estimated as E|Y/E[Y] - 1|/2 over G(n, d+1)."""
    params = {"n": n, "d": d}
    if n <= 10:
        tv, cpm = extension_tv_classes(n, d)
        delta, eps, bound = _class_strassen(cpm)
        est = {"tv": tv, "tv_float": float(tv)}
        checks = {"tv_below_one": tv < 1, "bound_dominates": float(tv) <= bound + 1e-12}
        if n <= 8:
            h = extension_graph(n, d)
            flow = h.flow()
            oracle_tv = exact_tv(exact_distribution(compose(mu(d), mu(1)), n), exact_distribution(mu(d + 1), n))
            est.update({"flow": flow, "oracle_tv": oracle_tv, "s_size": h.s_size, "t_size": len(h.t_degrees)})
            checks["flow_equals_one_minus_tv"] = flow == 1 - tv
            checks["oracle_agrees"] = oracle_tv == tv
        return ExperimentReport("matching_extension", params, seed, None, estimates=est,
                                references={"strassen_delta": delta, "strassen_epsilon": eps,
                                            "strassen_bound": bound, "d_pow_minus_1_1": (d + 0.0) ** -1.1},
                                checks=checks)
    if n > CAPS.pm_exact_n:
        raise CapExceeded(f"Monte Carlo path needs n <= {CAPS.pm_exact_n}")
    if not trials or seed is None:
        raise PreconditionError("Monte Carlo path needs trials and seed")
    from .estimators import PM, sample_statistics
    from .stats import jackknife
    blocks = [b[:, 1] for b in sample_statistics(n, d + 1, PM, trials, seed)]

    def tvhat(bs):
        y = np.concatenate(bs)
        return float(np.abs(y / y.mean() - 1).mean() / 2)

    val, se = jackknife(blocks, tvhat)
    y = np.concatenate(blocks)
    ybar = y.mean()
    eps = (d + 0.0) ** -1.1
    low = float((y < (1 - eps) * ybar).mean())
    return ExperimentReport("matching_extension", params, seed, trials,
                            estimates={"tv": val, "low_fraction": low},
                            stderr={"tv": se},
                            references={"strassen_bound_at_d_pow": strassen_bound(low, eps)})


# ---------------------------------------------------------------------------
# Alternative sampling procedure
# ---------------------------------------------------------------------------

def _class_cdf(cd: ClassDistribution) -> np.ndarray:
    c = np.cumsum([float(e.mass) for e in cd.entries])
    return c / c[-1]


def _draw_class(cd: ClassDistribution, cdf: np.ndarray, gen: np.random.Generator) -> ClassEntry:
    i = int(np.searchsorted(cdf, gen.random(), side="right"))
    return cd.entries[min(i, len(cd.entries) - 1)]


@dataclass
class ASPDraw:
    graph: Graph
    classes: list
    representatives: list
    attempts: int


@lru_cache(maxsize=1 << 16)
def _class_members_avoiding(g: Graph, rep: Graph) -> tuple[Graph, ...]:
    """Members of rep's isomorphism class that are edge-disjoint from g."""
    want = canonical_key(rep)
    deg = rep.degrees()[0]
    return tuple(h for h in iter_subgraphs(g.complement(), [deg] * g.n) if _cached_key(h) == want)


@lru_cache(maxsize=1 << 17)
def _cached_key(g: Graph) -> CanonicalKey:
    return canonical_key(g)


def _disjoint_reps(reps: Sequence[Graph], gen: np.random.Generator, fixed: dict | None = None,
                   budget: int | None = None) -> tuple[list[Graph], int]:
    """Uniform relabelings of the given class representatives, redrawn jointly
    until pairwise edge-disjoint; positions in ``fixed`` are held."""
    budget = budget or CAPS.rejection_budget
    fixed = fixed or {}
    n = reps[0].n
    if len(reps) == 2 and len(fixed) == 1 and n <= 10:
        # One free position: its conditional law is uniform over the members
        # of its class lying in the complement of the fixed graph.
        (a, g), b = next(iter(fixed.items())), 1 - next(iter(fixed))
        cands = _class_members_avoiding(g, reps[b])
        if not cands:
            raise EmptySupport("no disjoint representative exists for the free class")
        out = [None, None]
        out[a], out[b] = g, cands[int(gen.integers(len(cands)))]
        return out, 1
    for attempt in range(1, budget + 1):
        out = []
        acc = [0] * n
        ok = True
        for i, r in enumerate(reps):
            g = fixed[i] if i in fixed else _relabel_trusted(r, [int(x) for x in gen.permutation(n)])
            for v, row in enumerate(g.rows):
                if acc[v] & row:
                    ok = False
                    break
                acc[v] |= row
            if not ok:
                break
            out.append(g)
        if ok:
            return out, attempt
    raise RejectionBudgetExceeded(budget, "ASP representatives")


@lru_cache(maxsize=100_000)
def classes_compatible(reps: tuple, keys: tuple) -> bool:
    """Whether some edge-disjoint tuple has the given classes.  The first
    representative can be fixed by symmetry; the rest are searched inside the
    complement of what has been placed."""
    n = reps[0].n

    def rec(i: int, acc: Graph) -> bool:
        if i == len(reps):
            return True
        d = reps[i].degrees()[0]
        for g in iter_subgraphs(acc.complement(), [d] * n):
            if canonical_key(g) == keys[i] and rec(i + 1, Graph(n, tuple(a | b for a, b in zip(acc.rows, g.rows)))):
                return True
        return False

    return rec(1, reps[0])


def _draw_compatible(bar: ClassDistribution, cdf: np.ndarray, k: int, gen: np.random.Generator,
                     budget: int | None = None) -> list[ClassEntry]:
    budget = budget or CAPS.rejection_budget
    for _ in range(budget):
        entries = [_draw_class(bar, cdf, gen) for _ in range(k)]
        if classes_compatible(tuple(e.rep for e in entries), tuple(e.key for e in entries)):
            return entries
    raise RejectionBudgetExceeded(budget, "compatible ASP classes")


def asp_class_law(n: int, d: int) -> ClassDistribution:
    """bar-nu_d from the oracle's class representatives."""
    return bar_nu(n, d)


def asp_sample(n: int, d: int, k: int, rng, bar: ClassDistribution | None = None) -> ASPDraw:
    """Classes Y_1..Y_k i.i.d. from bar-nu_d, then uniform representatives
    conditioned pairwise edge-disjoint; the union has law eta_{k,d}.

    Without ``bar`` the class law is the oracle's exact bar-nu_d when (n, d) is
    within reach, and otherwise classes are drawn as canonical keys of nu_d samples.
    """
    if n % 2:
        raise PreconditionError("n must be even")
    if k * d > n - 1:
        raise PreconditionError(f"kd = {k * d} exceeds n - 1")
    gen = as_generator(rng)
    if bar is None and n <= 10:
        bar = asp_class_law(n, d)
    if bar is not None:
        cdf = _class_cdf(bar)
        entries = _draw_compatible(bar, cdf, k, gen)
        keys = [e.key for e in entries]
        reps = [e.rep for e in entries]
    else:
        reps = [sample_nu(n, d, gen)[0] for _ in range(k)]
        keys = [canonical_key(r) for r in reps]
    hs, attempts = _disjoint_reps(reps, gen)
    union = Graph(n, tuple(_or_rows(hs)))
    return ASPDraw(union, keys, hs, attempts)


def _or_rows(graphs: Sequence[Graph]) -> list[int]:
    rows = [0] * graphs[0].n
    for g in graphs:
        for v, r in enumerate(g.rows):
            rows[v] |= r
    return rows


def asp_batch_codes(n: int, d: int, k: int, count: int, gen: np.random.Generator,
                    bar: ClassDistribution | None = None) -> np.ndarray:
    """Vectorized ASP on uint64 edge codes (n <= 11).  Rows whose
    representatives collide are redrawn with their classes held fixed."""
    bar = bar or asp_class_law(n, d)
    idx_table = pair_index_table(n)
    probs = np.array([float(e.mass) for e in bar.entries])
    probs /= probs.sum()
    rep_edges = [np.array(e.rep.edges(), dtype=np.int64).reshape(-1, 2) for e in bar.entries]
    cls = gen.choice(len(bar.entries), size=(count, k), p=probs)
    out = np.zeros(count, dtype=np.uint64)
    todo = np.arange(count)
    while len(todo):
        acc = np.zeros(len(todo), dtype=np.uint64)
        ok = np.ones(len(todo), dtype=bool)
        for i in range(k):
            codes = np.zeros(len(todo), dtype=np.uint64)
            for c in np.unique(cls[todo, i]):
                rows = np.flatnonzero(cls[todo, i] == c)
                perms = gen.permuted(np.tile(np.arange(n), (len(rows), 1)), axis=1)
                lab = perms[:, rep_edges[c]]
                bits = idx_table[lab[..., 0], lab[..., 1]].astype(np.uint64)
                codes[rows] = np.bitwise_or.reduce(np.left_shift(np.uint64(1), bits), axis=1)
            ok &= (acc & codes) == 0
            acc |= codes
        out[todo[ok]] = acc[ok]
        todo = todo[~ok]
    return out


def exact_eta(n: int, d: int, k: int) -> Distribution:
    """Exact eta_{k,d}: for each class tuple, weight prod bar-nu(A_i) spread
    evenly over its edge-disjoint labeled tuples, then pushed to the union."""
    if k * d > n - 1:
        raise EmptySupport(f"kd = {k * d} exceeds n - 1")
    if n > 8:
        raise CapExceeded("exact eta enumerates labeled tuples; capped at n = 8")
    bar = bar_nu(n, d)
    keys = class_keys(enumerate_regular(n, d))
    mass = bar.as_map()
    per_union: dict = defaultdict(lambda: defaultdict(int))
    per_tuple: dict = defaultdict(int)

    def rec(i: int, acc: Graph, tup: tuple) -> None:
        if i == k:
            per_union[acc][tup] += 1
            per_tuple[tup] += 1
            return
        for g in iter_subgraphs(acc.complement(), [d] * n):
            key = keys[g]
            if key in mass:
                rec(i + 1, Graph(n, tuple(a | b for a, b in zip(acc.rows, g.rows))), tup + (key,))

    rec(0, Graph.empty(n), ())
    weights = {}
    for union, tups in per_union.items():
        w = Fraction(0)
        for tup, c in tups.items():
            w += math.prod((mass[t] for t in tup), start=Fraction(1)) * Fraction(c, per_tuple[tup])
        weights[union] = w
    return Distribution.from_weights(n, weights)


# ---------------------------------------------------------------------------
# Zeta recursion
# ---------------------------------------------------------------------------

@dataclass
class ZetaState:
    i: int
    zeta: dict
    Z: Fraction
    history: list

    @property
    def product(self) -> Fraction:
        return math.prod(self.history, start=Fraction(1))

    def to_dict(self) -> dict:
        return {"i": self.i, "Z": self.Z, "history": list(self.history), "product": self.product,
                "zeta": {k.hex() if isinstance(k, bytes) else str(k): v for k, v in self.zeta.items()}}


def zeta_coupling(bar_mu_law, bar_nu_law, epsilon, max_steps: int | None = None) -> tuple[int, list[ZetaState]]:
    """zeta_0 = bar-mu; zeta_i = zeta_{i-1}/Z_{i-1} - min(zeta_{i-1}/Z_{i-1}, bar-nu);
    Z_i = sum zeta_i.  Returns the least k with Z_1 ... Z_k <= epsilon and the
    trace zeta_0 .. zeta_k."""
    if not 0 < epsilon < 1:
        raise PreconditionError("epsilon must lie in (0, 1)")
    pm, qm = _as_map(bar_mu_law), _as_map(bar_nu_law)
    keys = sorted(set(pm) | set(qm), key=_order)
    zeta = {x: Fraction(pm.get(x, 0)) for x in keys}
    state = ZetaState(0, zeta, sum(zeta.values(), Fraction(0)), [])
    trace = [state]
    steps = max_steps or CAPS.zeta_max_steps
    eps = Fraction(epsilon) if not isinstance(epsilon, Fraction) else epsilon
    for i in range(1, steps + 1):
        prev = trace[-1]
        nz = {}
        for x in keys:
            r = prev.zeta[x] / prev.Z
            nz[x] = r - min(r, Fraction(qm.get(x, 0)))
        z = sum(nz.values(), Fraction(0))
        assert all(v >= 0 for v in nz.values()) and 0 <= z <= 1
        st = ZetaState(i, nz, z, prev.history + [z])
        trace.append(st)
        if st.product <= eps:
            return i, trace
    raise NonTermination(f"product of Z_i still {float(trace[-1].product):.4g} after {steps} steps")


class ZetaSampler:
    """Sequential coupling of X ~ bar-mu with Y_1, Y_2, .. i.i.d. bar-nu: while
    X is unmatched, Y_i is drawn from the maximal coupling of zeta_{i-1}/Z_{i-1}
    and bar-nu given X.  P(X not in {Y_1..Y_k}) = Z_1 ... Z_k."""

    def __init__(self, trace: Sequence[ZetaState], bar_nu_law):
        self.trace = list(trace)
        self.keys = sorted(self.trace[0].zeta, key=_order)
        q = _as_map(bar_nu_law)
        self.q = np.array([float(q.get(x, 0)) for x in self.keys])
        self.q_cdf = np.cumsum(self.q) / self.q.sum()
        self.mu_cdf = np.cumsum([float(self.trace[0].zeta[x]) for x in self.keys])
        self.mu_cdf /= self.mu_cdf[-1]
        self.steps = []
        for st in self.trace[:-1]:
            p = np.array([float(st.zeta[x] / st.Z) for x in self.keys])
            m = np.minimum(p, self.q)
            stay = np.divide(m, p, out=np.zeros_like(p), where=p > 0)
            resid = self.q - m
            tot = resid.sum()
            cdf = np.cumsum(resid) / tot if tot > 0 else None
            self.steps.append((stay, cdf))

    def _pick(self, cdf: np.ndarray, gen) -> int:
        return min(int(np.searchsorted(cdf, gen.random(), side="right")), len(self.keys) - 1)

    def sample(self, gen: np.random.Generator, k: int | None = None):
        """(X, [Y_1..Y_k], index of first match or None); indices into self.keys."""
        k = len(self.steps) if k is None else k
        if k > len(self.steps):
            raise PreconditionError(f"trace covers only {len(self.steps)} steps")
        x = self._pick(self.mu_cdf, gen)
        ys = []
        hit = None
        for i in range(k):
            if hit is None:
                stay, cdf = self.steps[i]
                if gen.random() < stay[x]:
                    ys.append(x)
                    hit = i
                else:
                    ys.append(self._pick(cdf, gen))
            else:
                ys.append(self._pick(self.q_cdf, gen))
        return x, ys, hit


def two_class_example() -> tuple[int, list[ZetaState]]:
    return zeta_coupling({0: Fraction(9, 10), 1: Fraction(1, 10)}, {0: Fraction(1, 2), 1: Fraction(1, 2)},
                         Fraction(1, 10))


def zeta_experiment(n: int, d: int, epsilon: float, trials: int, seed: int) -> ExperimentReport:
    bm, bn = bar_mu(n, d), bar_nu(n, d)
    k, trace = zeta_coupling(bm, bn, epsilon)
    sampler = ZetaSampler(trace, bn)
    gen = SeededStream(seed).generator()
    misses = sum(1 for _ in range(trials) if sampler.sample(gen)[2] is None)
    prod = float(trace[-1].product)
    sigma = math.sqrt(prod * (1 - prod) / trials)
    products = [float(s.product) for s in trace]
    return ExperimentReport(
        "zeta", {"n": n, "d": d, "epsilon": epsilon}, seed, trials,
        estimates={"k": k, "Z": [float(s.Z) for s in trace[1:]], "products": products[1:],
                   "miss_rate": misses / trials},
        stderr={"miss_rate": sigma},
        checks={"products_strictly_decreasing": all(b < a for a, b in zip(products, products[1:])),
                "miss_rate_within_3sigma": abs(misses / trials - prod) <= 3 * sigma})


# ---------------------------------------------------------------------------
# Complete coupling G subset G_oplus
# ---------------------------------------------------------------------------

class TupleFlowCoupling:
    """Coupling of X ~ bar-mu with a class tuple (Y_1..Y_k) drawn i.i.d. from
    bar-nu conditioned on admitting edge-disjoint representatives, maximizing
    P(X in {Y_1..Y_k}) by a maximum flow (exact, integer-scaled capacities)."""

    def __init__(self, bar_mu_law: ClassDistribution, bar_nu_law: ClassDistribution, k: int,
                 max_tuples: int = 100_000):
        import itertools
        nu_e = bar_nu_law.entries
        if len(nu_e) ** k > max_tuples:
            raise CapExceeded(f"{len(nu_e)}^{k} class tuples exceed {max_tuples}")
        self.keys = [e.key for e in bar_mu_law.entries]
        index = {key: i for i, key in enumerate(self.keys)}
        tuples, weights = [], []
        for tup in itertools.product(range(len(nu_e)), repeat=k):
            es = [nu_e[i] for i in tup]
            if classes_compatible(tuple(e.rep for e in es), tuple(e.key for e in es)):
                tuples.append(tuple(e.key for e in es))
                weights.append(math.prod((e.mass for e in es), start=Fraction(1)))
        if not tuples:
            raise EmptySupport("no class tuple admits edge-disjoint representatives")
        zc = sum(weights, Fraction(0))
        self.compatible_probability = zc
        self.tuples = tuples
        t_mass = [w / zc for w in weights]
        x_mass = [e.mass for e in bar_mu_law.entries]
        L = 1
        for m in x_mass + t_mass:
            L = L * m.denominator // math.gcd(L, m.denominator)
        net = nx.DiGraph()
        for i, m in enumerate(x_mass):
            net.add_edge("src", ("x", i), capacity=int(m * L))
        for j, (tup, m) in enumerate(zip(tuples, t_mass)):
            net.add_edge(("t", j), "snk", capacity=int(m * L))
            for key in set(tup):
                if key in index:
                    net.add_edge(("x", index[key]), ("t", j), capacity=int(L))
        value, flow = nx.maximum_flow(net, "src", "snk")
        self.hit_probability = Fraction(value, L)
        joint = defaultdict(Fraction)
        out_x = [0] * len(x_mass)
        in_t = [0] * len(tuples)
        for i in range(len(x_mass)):
            for node, f in flow.get(("x", i), {}).items():
                if f:
                    joint[(i, node[1])] += Fraction(f, L)
                    out_x[i] += f
                    in_t[node[1]] += f
        rest = 1 - self.hit_probability
        if rest > 0:
            rx = [x_mass[i] - Fraction(out_x[i], L) for i in range(len(x_mass))]
            rt = [t_mass[j] - Fraction(in_t[j], L) for j in range(len(tuples))]
            for i, a in enumerate(rx):
                if a:
                    for j, b in enumerate(rt):
                        if b:
                            joint[(i, j)] += a * b / rest
        self.table = CouplingTable(dict(joint), dict(enumerate(x_mass)), dict(enumerate(t_mass)))
        self._cond = []
        for i in range(len(x_mass)):
            js = sorted(j for (a, j) in self.table.joint if a == i)
            w = np.array([float(self.table.joint[(i, j)]) for j in js])
            self._cond.append((js, np.cumsum(w) / w.sum() if len(w) else None))
        self.x_cdf = np.cumsum([float(m) for m in x_mass])
        self.x_cdf /= self.x_cdf[-1]

    def sample(self, gen: np.random.Generator):
        """(X key, class-key tuple, index of X in the tuple or None)."""
        i = min(int(np.searchsorted(self.x_cdf, gen.random(), side="right")), len(self.keys) - 1)
        js, cdf = self._cond[i]
        j = js[min(int(np.searchsorted(cdf, gen.random(), side="right")), len(js) - 1)]
        tup = self.tuples[j]
        x = self.keys[i]
        hit = tup.index(x) if x in tup else None
        return x, tup, hit


class CompleteCoupleModel:
    """Precomputed pieces for coupling G ~ mu_d with G_oplus ~ nu_{kd}.

    k is the stopping index of the zeta recursion at epsilon/2, capped so that
    kd <= n - 1.  ``method`` picks how X is coupled with the class tuple:
    ``zeta`` runs the sequential maximal couplings (tuples without disjoint
    representatives force a redraw of the ASP side, counted as a miss);
    ``flow`` couples X with the compatible-conditioned tuple law by max flow.
    """

    def __init__(self, n: int, d: int, epsilon: float, method: str = "flow"):
        if method not in ("zeta", "flow"):
            raise PreconditionError(f"unknown method {method!r}")
        self.n, self.d, self.epsilon, self.method = n, d, epsilon, method
        self.bar_mu = bar_mu(n, d)
        self.bar_nu = bar_nu(n, d)
        k, trace = zeta_coupling(self.bar_mu, self.bar_nu, Fraction(epsilon) / 2)
        self.k_needed = k
        self.k_max = (n - 1) // d
        self.k = min(k, self.k_max)
        self.trace = trace[: self.k + 1]
        self.miss_bound = self.trace[-1].product
        self.sampler = ZetaSampler(self.trace, self.bar_nu)
        self.nu_cdf = _class_cdf(self.bar_nu)
        self.flow = TupleFlowCoupling(self.bar_mu, self.bar_nu, self.k) if method == "flow" else None
        self.reps = {e.key: e.rep for e in self.bar_mu.entries}
        self.reps.update({e.key: e.rep for e in self.bar_nu.entries})
        # eta_{k,d} against nu_{kd}, both relabeling-invariant
        kd = self.k * d
        eta = exact_eta(n, d, self.k)
        from .oracle import class_distribution
        eta_c = class_distribution(eta)
        nu_c = bar_nu(n, kd)
        self.eta_nu_tv = exact_tv(eta, exact_distribution(nu(kd), n)) if n <= 8 else None
        self.coupler = InvariantCoupler(regular_classes(n, kd), _per_graph(eta_c), _per_graph(nu_c))


@lru_cache(maxsize=16)
def complete_couple_model(n: int, d: int, epsilon: float, method: str = "flow") -> CompleteCoupleModel:
    return CompleteCoupleModel(n, d, epsilon, method)


@dataclass
class CompleteCoupleDraw:
    G: Graph
    G_oplus: Graph
    hit: bool
    k: int


def complete_couple(n: int, d: int, epsilon: float, rng, model: CompleteCoupleModel | None = None,
                    method: str = "flow") -> CompleteCoupleDraw:
    """Coupled (G, G_oplus) with G uniform on G_d(n) and G_oplus ~ nu_{kd}.

    G is a uniform member of the class X.  When X = Y_i the i-th ASP
    representative is set to G (its conditional law is uniform on the class)
    and the others are drawn uniformly in their classes conditioned
    edge-disjoint from each other and from G.  The ASP union is then maximally
    coupled with nu_{kd}.
    """
    if not 0 < epsilon < 1:
        raise PreconditionError("epsilon must lie in (0, 1)")
    gen = as_generator(rng)
    model = model or complete_couple_model(n, d, float(epsilon), method)
    if model.flow is not None:
        xkey, tup, hit = model.flow.sample(gen)
        reps = [model.reps[key] for key in tup]
    else:
        x, ys, hit = model.sampler.sample(gen, model.k)
        keys = model.sampler.keys
        xkey = keys[x]
        tup = tuple(keys[y] for y in ys)
        reps = [model.reps[key] for key in tup]
        if not classes_compatible(tuple(reps), tup):
            # No disjoint representatives exist for these classes: the ASP side
            # is redrawn from compatible classes, leaving G untouched.
            entries = _draw_compatible(model.bar_nu, model.nu_cdf, model.k, gen)
            reps = [e.rep for e in entries]
            hit = None
    G = _relabel_trusted(model.reps[xkey], [int(v) for v in gen.permutation(n)])
    fixed = {hit: G} if hit is not None else {}
    hs, _ = _disjoint_reps(reps, gen, fixed)
    union = Graph(n, tuple(_or_rows(hs)))
    g_oplus = model.coupler.couple(union, gen)
    return CompleteCoupleDraw(G, g_oplus, G.is_subgraph_of(g_oplus), model.k)


def incompatible_probability(bar: ClassDistribution, k: int) -> Fraction:
    """P(k i.i.d. classes from ``bar`` admit no edge-disjoint representatives)."""
    import itertools
    out = Fraction(0)
    for tup in itertools.product(bar.entries, repeat=k):
        if not classes_compatible(tuple(e.rep for e in tup), tuple(e.key for e in tup)):
            out += math.prod((e.mass for e in tup), start=Fraction(1))
    return out


# ---------------------------------------------------------------------------
# Inclusion pipelines
# ---------------------------------------------------------------------------

class DecompositionModel:
    """Exact laws behind the decomposition path: G1 ~ mu_{d1}, F ~ nu_{d2-d1}
    conditioned disjoint from G1, union coupled maximally with mu_{d2}.

    Also computes TV(mu_{d1} + nu_{d2-d1}, mu_{d2}) and the TV between the
    composition's first marginal and mu_{d1}.
    """

    def __init__(self, n: int, d1: int, d2: int):
        if not 1 <= d1 < d2 <= n - 1:
            raise PreconditionError("need 1 <= d1 < d2 <= n-1")
        if n % 2:
            raise PreconditionError("n must be even")
        if n > 10:
            raise CapExceeded("exact decomposition laws capped at n = 10")
        self.n, self.d1, self.d2 = n, d1, d2
        r = d2 - d1
        c1 = regular_classes(n, d1)
        cr = regular_classes(n, r)
        c2 = regular_classes(n, d2)
        self.c2 = c2
        n1 = sum(c.size for c in c1)
        n2 = sum(c.size for c in c2)
        zr = sum(c.size * count_one_factorisations_ordered(c.rep, r) for c in cr)

        def nu_r(g: Graph) -> Fraction:
            return Fraction(count_one_factorisations_ordered(g, r), zr)

        self.beta = {}
        for c in c1:
            self.beta[c.key] = sum((nu_r(h) for h in iter_subgraphs(c.rep.complement(), [r] * n)), Fraction(0))
        first = [c.size * self.beta[c.key] for c in c1]
        s1 = sum(first)
        self.tv_first_marginal = sum((abs(w / s1 - Fraction(c.size, n1)) for w, c in zip(first, c1)),
                                     Fraction(0)) / 2
        comp, forced = {}, {}
        key_cache: dict = {}
        for c in c2:
            a = b = Fraction(0)
            for g1 in iter_subgraphs(c.rep, [d1] * n):
                v = nu_r(c.rep.difference(g1))
                if not v:
                    continue
                k1 = key_cache.get(g1)
                if k1 is None:
                    k1 = key_cache[g1] = canonical_key(g1)
                a += v
                b += v / self.beta[k1]
            comp[c.key] = a
            forced[c.key] = b
        sc = sum(c.size * comp[c.key] for c in c2)
        sf = sum(c.size * forced[c.key] for c in c2)
        self.comp_each = {k: v / sc for k, v in comp.items()}
        self.forced_each = {k: v / sf for k, v in forced.items()}
        uni = {c.key: Fraction(1, n2) for c in c2}
        self.tv_composition = sum((c.size * abs(self.comp_each[c.key] - uni[c.key]) for c in c2),
                                  Fraction(0)) / 2
        self.tv_forced = sum((c.size * abs(self.forced_each[c.key] - uni[c.key]) for c in c2),
                             Fraction(0)) / 2
        self.coupler = InvariantCoupler(c2, self.forced_each, uni)


@lru_cache(maxsize=16)
def decomposition_model(n: int, d1: int, d2: int) -> DecompositionModel:
    return DecompositionModel(n, d1, d2)


def _draw_disjoint_nu(n: int, r: int, avoid: Graph, gen: np.random.Generator) -> Graph:
    budget = CAPS.rejection_budget
    for _ in range(budget):
        f, _ = sample_nu(n, r, gen)
        if f.is_disjoint(avoid):
            return f
    raise RejectionBudgetExceeded(budget, "nu part disjoint from G1")


def _pipeline_block(gen, count, n, d1, d2, case, epsilon):
    out = []
    if case == "decomposition":
        model = decomposition_model(n, d1, d2)
        for _ in range(count):
            g1 = sample_regular(n, d1, gen)
            f = _draw_disjoint_nu(n, d2 - d1, g1, gen)
            g2p = Graph(n, tuple(a | b for a, b in zip(g1.rows, f.rows)))
            g2 = model.coupler.couple(g2p, gen)
            out.append((g1, g2))
    else:
        cc = complete_couple_model(n, d1, float(epsilon))
        fin = blocks_model(n, d1, d2, float(epsilon))
        for _ in range(count):
            draw = complete_couple(n, d1, epsilon, gen, cc)
            rest = d2 - cc.k * d1
            g2p = draw.G_oplus
            if rest:
                f = _draw_disjoint_nu(n, rest, g2p, gen)
                g2p = Graph(n, tuple(a | b for a, b in zip(g2p.rows, f.rows)))
            out.append((draw.G, fin.couple(g2p, gen)))
    return out


@lru_cache(maxsize=16)
def blocks_model(n: int, d1: int, d2: int, epsilon: float) -> InvariantCoupler:
    """Maximal coupling of nu_{d2} (the law of G_oplus extended by a disjoint
    nu part) with mu_{d2}."""
    c2 = regular_classes(n, d2)
    return InvariantCoupler(c2, _per_graph(bar_nu(n, d2)), _per_graph(bar_mu(n, d2)))


def inclusion_pipeline(n: int, d1: int, d2: int, trials: int, seed: int, case: str = "decomposition",
                       epsilon: float = 0.3, workers: int = 1) -> ExperimentReport:
    """Coupled (G1, G2) with G1 ~ mu_{d1}, G2 ~ mu_{d2}; reports P(G1 subset G2).

    ``decomposition``: G2' = G1 + F with F ~ nu_{d2-d1} conditioned disjoint
    from G1, then G2 maximally coupled with G2'.  ``blocks``: G1 inside
    G_oplus ~ nu_{k d1} by complete_couple, extended by a disjoint nu part to
    nu_{d2}, then maximally coupled with mu_{d2}.
    """
    if case not in ("decomposition", "blocks"):
        raise PreconditionError(f"unknown case {case!r}")
    if not 1 <= d1 <= d2 <= n - 1 or n % 2:
        raise PreconditionError("need even n and 1 <= d1 <= d2 <= n-1")
    params = {"n": n, "d1": d1, "d2": d2, "case": case}
    if d1 == d2:
        return ExperimentReport("inclusion", params, seed, trials, estimates={"inclusion_rate": 1.0},
                                checks={"inclusion": True})
    refs: dict = {}
    if case == "decomposition":
        model = decomposition_model(n, d1, d2)
        refs.update({"tv_composition": model.tv_composition, "tv_first_marginal": model.tv_first_marginal,
                     "tv_forced_union": model.tv_forced})
    else:
        params["epsilon"] = epsilon
        cc = complete_couple_model(n, d1, float(epsilon))
        if cc.k * d1 > d2:
            raise PreconditionError(f"k d1 = {cc.k * d1} exceeds d2 = {d2}")
        refs.update({"k": cc.k, "k_needed": cc.k_needed, "miss_bound": cc.miss_bound,
                     "tv_eta_nu": cc.eta_nu_tv, "tv_nu_mu_d2": blocks_model(n, d1, d2, float(epsilon)).tv})
    pairs = [p for blk in run_blocks(_pipeline_block, seed, trials, workers=workers,
                                     args=(n, d1, d2, case, epsilon)) for p in blk]
    hits = sum(1 for g1, g2 in pairs if g1.is_subgraph_of(g2))
    rate = hits / len(pairs)
    sigma = math.sqrt(max(rate * (1 - rate), 1e-300) / len(pairs))
    est = {"inclusion_rate": rate, "wilson_3sigma": wilson_interval(hits, len(pairs))}
    checks = {}
    if n <= 10:
        gof = first_marginal_gof(n, d1, [g1 for g1, _ in pairs])
        est["g1_class_chi2"] = gof.to_dict()
        checks["g1_uniform"] = gof.p_value > 1e-3
    if case == "decomposition":
        checks["rate_vs_exact_tv"] = rate >= 1 - float(refs["tv_composition"]) - 3 * sigma
    return ExperimentReport("inclusion", params, seed, trials, estimates=est, stderr={"inclusion_rate": sigma},
                            references=refs, checks=checks)


def first_marginal_gof(n: int, d: int, graphs: Iterable[Graph]) -> GofReport:
    """Chi-square of isomorphism-class frequencies against class sizes."""
    classes = regular_classes(n, d)
    index = {c.key: i for i, c in enumerate(classes)}
    counts = [0] * len(classes)
    for g in graphs:
        counts[index[canonical_key(g)]] += 1
    if len(classes) == 1:
        return GofReport(0.0, 0, 1.0, sum(counts))
    return chi_square(counts, [c.size for c in classes])
