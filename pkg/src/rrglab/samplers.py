"""Seeded exact samplers for uniform regular graphs, perfect matchings,
edge-disjoint compositions and random overlays.

Every sampler is exact: uniform regular graphs come from the configuration
model with rejection of non-simple pairings, and compositions reject and
redraw all components jointly until they are pairwise edge-disjoint.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .config import CAPS, DEFAULTS
from .errors import CapExceeded, OddN, ParityViolation, PreconditionError, RejectionBudgetExceeded
from .graph import Graph, union_all
from .oracle import Atom, Oplus


# ---------------------------------------------------------------------------
# Streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeededStream:
    """(master_seed, stream_index) determines the generator; distinct indices
    give statistically independent PCG64 streams via SeedSequence."""

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence([self.master_seed & (2 ** 64 - 1), self.stream_index])
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "SeededStream":
        return SeededStream(self.master_seed, index)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, SeededStream):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return SeededStream(int(rng)).generator()
    raise TypeError(f"cannot make a generator from {type(rng).__name__}")


def block_plan(trials: int, block_size: int | None = None) -> list[int]:
    size = block_size or DEFAULTS.block_size
    full, rest = divmod(trials, size)
    return [size] * full + ([rest] if rest else [])


def run_blocks(fn: Callable, master_seed: int, trials: int, *, stream_offset: int = 0,
               block_size: int | None = None, workers: int = 1, args: tuple = ()) -> list:
    """Call fn(generator, count, *args) once per block with stream index
    stream_offset + block.  Results come back in block order whatever the
    worker count, so aggregates are reproducible."""
    sizes = block_plan(trials, block_size)
    jobs = [(fn, master_seed, stream_offset + i, c, args) for i, c in enumerate(sizes)]
    if workers <= 1 or len(jobs) <= 1:
        return [_run_job(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_job, jobs))


def _run_job(job):
    fn, seed, index, count, args = job
    return fn(SeededStream(seed, index).generator(), count, *args)


# ---------------------------------------------------------------------------
# Single-draw samplers
# ---------------------------------------------------------------------------

def _check_nd(n: int, d: int) -> None:
    if not 1 <= d <= n - 1:
        raise PreconditionError(f"need 1 <= d <= n-1, got n={n}, d={d}")
    if (n * d) % 2:
        raise ParityViolation(f"dn = {n * d} is odd")


def sample_matching(n: int, rng) -> Graph:
    """Uniform perfect matching: the least unmatched vertex is paired with a
    uniformly chosen unmatched partner."""
    if n % 2:
        raise OddN(f"perfect matchings need even n, got {n}")
    gen = as_generator(rng)
    free = list(range(n))
    rows = [0] * n
    while free:
        u = free.pop(0)
        w = free.pop(int(gen.integers(len(free))))
        rows[u] |= 1 << w
        rows[w] |= 1 << u
    return Graph(n, tuple(rows))


def _pairing_to_graph(n: int, pairs: np.ndarray) -> Graph | None:
    rows = [0] * n
    for a, b in pairs:
        a, b = int(a), int(b)
        if a == b or rows[a] >> b & 1:
            return None
        rows[a] |= 1 << b
        rows[b] |= 1 << a
    return Graph(n, tuple(rows))


def sample_regular(n: int, d: int, rng, budget: int | None = None) -> Graph:
    """Uniform d-regular graph: configuration-model pairing, rejected unless simple."""
    _check_nd(n, d)
    if d > CAPS.sampler_max_degree and n > 16:
        raise CapExceeded(f"rejection sampler capped at d={CAPS.sampler_max_degree}")
    gen = as_generator(rng)
    budget = budget or CAPS.rejection_budget
    stubs = np.repeat(np.arange(n), d)
    for _ in range(budget):
        perm = gen.permutation(stubs)
        g = _pairing_to_graph(n, perm.reshape(-1, 2))
        if g is not None:
            return g
    raise RejectionBudgetExceeded(budget, f"sample_regular(n={n}, d={d})")


class OplusDraw(NamedTuple):
    graph: Graph
    components: list[Graph]
    attempts: int


def _atoms(parts) -> list[Atom]:
    out = []
    for p in parts:
        if isinstance(p, Oplus):
            out.extend(_atoms(p.parts))
        else:
            out.append(p)
    return out


def _draw_atom(atom: Atom, n: int, gen: np.random.Generator, budget: int) -> Graph:
    if atom.kind == "mu":
        return sample_matching(n, gen) if atom.d == 1 else sample_regular(n, atom.d, gen, budget)
    return sample_nu(n, atom.d, gen, budget)[0]


def _pairwise_disjoint(graphs: Sequence[Graph]) -> bool:
    seen = [0] * graphs[0].n
    for g in graphs:
        for v, row in enumerate(g.rows):
            if seen[v] & row:
                return False
            seen[v] |= row
    return True


def sample_oplus(parts: Sequence, n: int, rng, budget: int | None = None) -> OplusDraw:
    """Independent components redrawn jointly until pairwise edge-disjoint;
    returns their union, the components, and the number of joint draws used.

    Nested compositions are flattened, which is exact by associativity.
    """
    atoms = _atoms(parts)
    if sum(a.d for a in atoms) > n - 1:
        raise PreconditionError(f"degree sum {sum(a.d for a in atoms)} exceeds n-1")
    gen = as_generator(rng)
    budget = budget or CAPS.rejection_budget
    for attempt in range(1, budget + 1):
        comps = [_draw_atom(a, n, gen, budget) for a in atoms]
        if _pairwise_disjoint(comps):
            return OplusDraw(union_all(comps), comps, attempt)
    raise RejectionBudgetExceeded(budget, "sample_oplus")


def sample_nu(n: int, d: int, rng, budget: int | None = None) -> tuple[Graph, list[Graph]]:
    """d uniform perfect matchings conditioned pairwise disjoint; the union has
    law nu_d and the matchings are a witness 1-factorisation."""
    if n % 2:
        raise OddN(f"n must be even, got {n}")
    if not 1 <= d <= n - 1:
        raise PreconditionError(f"need 1 <= d <= n-1, got {d}")
    gen = as_generator(rng)
    budget = budget or CAPS.rejection_budget
    for _ in range(budget):
        ms = [sample_matching(n, gen) for _ in range(d)]
        if _pairwise_disjoint(ms):
            return union_all(ms), ms
    raise RejectionBudgetExceeded(budget, f"sample_nu(n={n}, d={d})")


def uniform_relabeling(g: Graph, rng) -> Graph:
    """Uniform element of the isomorphism class of g (orbit-stabilizer)."""
    from .graph import _relabel_trusted
    gen = as_generator(rng)
    return _relabel_trusted(g, [int(x) for x in gen.permutation(g.n)])


# ---------------------------------------------------------------------------
# Overlays of unlabeled skeletons
# ---------------------------------------------------------------------------

@dataclass
class OverlaySpec:
    skeletons: list[Graph]
    degrees: list[int] = field(default_factory=list)

    def __post_init__(self):
        if not self.skeletons:
            raise PreconditionError("need at least one skeleton")
        n = self.skeletons[0].n
        if any(s.n != n for s in self.skeletons):
            raise PreconditionError("skeletons must share the vertex count")
        degs = []
        for s in self.skeletons:
            ds = set(s.degrees())
            if len(ds) != 1:
                raise PreconditionError("skeletons must be regular")
            degs.append(ds.pop())
        if self.degrees and list(self.degrees) != degs:
            raise PreconditionError(f"declared degrees {self.degrees} do not match skeletons {degs}")
        self.degrees = degs
        self._edges = [np.array(s.edges(), dtype=np.int64).reshape(-1, 2) for s in self.skeletons]

    @property
    def n(self) -> int:
        return self.skeletons[0].n

    @property
    def D(self) -> int:
        """Sum over pairs k < l of d_k * d_l."""
        d = self.degrees
        return sum(d[k] * d[l] for k in range(len(d)) for l in range(k + 1, len(d)))

    def edge_arrays(self) -> list[np.ndarray]:
        return self._edges


def _overlay_repeats(spec: OverlaySpec, gen: np.random.Generator) -> int:
    n = spec.n
    codes = []
    for i, e in enumerate(spec.edge_arrays()):
        if i == 0:
            lab = e
        else:
            lab = gen.permutation(n)[e]
        lo = np.minimum(lab[:, 0], lab[:, 1])
        hi = np.maximum(lab[:, 0], lab[:, 1])
        codes.append(lo * n + hi)
    if len(codes) == 1:
        return 0
    _, counts = np.unique(np.concatenate(codes), return_counts=True)
    return int((counts >= 2).sum())


def overlay(spec: OverlaySpec, rng) -> tuple[bool, int]:
    """Label each skeleton independently and uniformly (the first keeps the
    identity labeling); report pairwise disjointness and the number of edges
    lying in two or more of the labeled graphs."""
    r = _overlay_repeats(spec, as_generator(rng))
    return r == 0, r


def _overlay_block(gen: np.random.Generator, count: int, spec: OverlaySpec) -> list[int]:
    return [_overlay_repeats(spec, gen) for _ in range(count)]


def overlay_trials(spec: OverlaySpec, trials: int, seed: int, workers: int = 1) -> list[int]:
    """Repeated-edge counts of ``trials`` independent overlays, one stream per block."""
    out: list[int] = []
    for part in run_blocks(_overlay_block, seed, trials, workers=workers, args=(spec,)):
        out.extend(part)
    return out


# ---------------------------------------------------------------------------
# Batch samplers (same laws, vectorized) for Monte Carlo at small n
# ---------------------------------------------------------------------------

def pair_index_table(n: int) -> np.ndarray:
    """idx[u, v] = bit position of edge uv in the uint64 code (n <= 11)."""
    if n * (n - 1) // 2 > 64:
        raise CapExceeded(f"edge codes need C(n,2) <= 64, got n={n}")
    idx = np.full((n, n), -1, dtype=np.int64)
    k = 0
    for u in range(n):
        for v in range(u + 1, n):
            idx[u, v] = idx[v, u] = k
            k += 1
    return idx


def code_of(g: Graph) -> int:
    idx = pair_index_table(g.n)
    code = 0
    for u, v in g.edges():
        code |= 1 << int(idx[u, v])
    return code


def graph_of(code: int, n: int) -> Graph:
    edges = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return Graph.from_edges(n, [edges[k] for k in range(len(edges)) if code >> k & 1])


def _codes_from_pairs(pairs: np.ndarray, idx: np.ndarray) -> np.ndarray:
    bits = idx[pairs[..., 0], pairs[..., 1]].astype(np.uint64)
    return np.bitwise_or.reduce(np.left_shift(np.uint64(1), bits), axis=-1)


def batch_matchings(n: int, count: int, gen: np.random.Generator) -> np.ndarray:
    """Edge codes of ``count`` uniform perfect matchings (consecutive pairs of a
    uniform permutation)."""
    if n % 2:
        raise OddN(f"n must be even, got {n}")
    perms = gen.permuted(np.tile(np.arange(n), (count, 1)), axis=1)
    return _codes_from_pairs(perms.reshape(count, n // 2, 2), pair_index_table(n))


def batch_regular_pairs(n: int, d: int, count: int, gen: np.random.Generator,
                        budget: int | None = None, chunk: int = 4096) -> np.ndarray:
    """Edge arrays (count, nd/2, 2) of uniform d-regular graphs via the
    configuration model with rejection, vectorized over pairings."""
    _check_nd(n, d)
    budget = budget or CAPS.rejection_budget
    stubs = np.repeat(np.arange(n), d)
    out = []
    have = 0
    used = 0
    while have < count:
        if used >= budget * max(1, count):
            raise RejectionBudgetExceeded(budget, f"batch_regular(n={n}, d={d})")
        perms = gen.permuted(np.tile(stubs, (chunk, 1)), axis=1).reshape(chunk, -1, 2)
        used += chunk
        a = np.minimum(perms[..., 0], perms[..., 1])
        b = np.maximum(perms[..., 0], perms[..., 1])
        ok = (a != b).all(axis=1)
        codes = np.sort(a * n + b, axis=1)
        ok &= (codes[:, 1:] != codes[:, :-1]).all(axis=1)
        good = np.stack([a, b], axis=-1)[ok]
        out.append(good)
        have += len(good)
    return np.concatenate(out)[:count]


def batch_regular(n: int, d: int, count: int, gen: np.random.Generator) -> np.ndarray:
    return _codes_from_pairs(batch_regular_pairs(n, d, count, gen), pair_index_table(n))


def batch_nu(n: int, d: int, count: int, gen: np.random.Generator) -> np.ndarray:
    """Edge codes of nu_d draws: d matchings redrawn jointly until disjoint."""
    out = []
    have = 0
    chunk = max(64, 2 * count)
    while have < count:
        ms = [batch_matchings(n, chunk, gen) for _ in range(d)]
        acc = np.zeros(chunk, dtype=np.uint64)
        ok = np.ones(chunk, dtype=bool)
        for m in ms:
            ok &= (acc & m) == 0
            acc |= m
        out.append(acc[ok])
        have += int(ok.sum())
    return np.concatenate(out)[:count]


def batch_oplus(atoms: Sequence[Atom], n: int, count: int,
                gen: np.random.Generator) -> tuple[np.ndarray, list[np.ndarray], int]:
    """Vectorized sample_oplus: (union codes, component codes, joint draws used)."""
    atoms = _atoms(atoms)
    unions, comps_out = [], [[] for _ in atoms]
    have = 0
    draws = 0
    while have < count:
        chunk = max(256, 2 * (count - have))
        comps = []
        for a in atoms:
            if a.kind == "mu" and a.d == 1:
                comps.append(batch_matchings(n, chunk, gen))
            elif a.kind == "mu":
                comps.append(batch_regular(n, a.d, chunk, gen))
            else:
                comps.append(batch_nu(n, a.d, chunk, gen))
        acc = np.zeros(chunk, dtype=np.uint64)
        ok = np.ones(chunk, dtype=bool)
        for c in comps:
            ok &= (acc & c) == 0
            acc |= c
        # Keep the accepted draws in sequence order up to the needed count.
        idx = np.flatnonzero(ok)[: count - have]
        draws += int(idx[-1]) + 1 if len(idx) and have + len(idx) == count else chunk
        unions.append(acc[idx])
        for j, c in enumerate(comps):
            comps_out[j].append(c[idx])
        have += len(idx)
    return np.concatenate(unions), [np.concatenate(c) for c in comps_out], draws


def code_degrees_ok(codes: np.ndarray, n: int, d: int) -> bool:
    """Vectorized check that every coded graph is d-regular."""
    idx = pair_index_table(n)
    for v in range(n):
        mask = np.uint64(0)
        for w in range(n):
            if w != v:
                mask |= np.uint64(1) << np.uint64(idx[v, w])
        deg = np.array([int(x).bit_count() for x in (codes & mask)])
        if (deg != d).any():
            return False
    return True
