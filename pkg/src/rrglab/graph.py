"""Labeled simple graphs on [n] and their canonical forms.

Vertices are 0-based internally and 1-based in the text format.  Adjacency is
held as one Python int bitmask per vertex, which gives O(1) edge tests for the
oracle and scales to the n ~ 10^3 used by the overlay experiments.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import NotAPermutation, SharedEdge


@dataclass(frozen=True)
class Graph:
    """Immutable labeled simple graph.  ``rows[v]`` is the neighbour bitmask of v."""

    n: int
    rows: tuple[int, ...]

    # -- construction -------------------------------------------------------

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Graph":
        if n < 1:
            raise ValueError(f"vertex count must be positive, got {n}")
        rows = [0] * n
        for u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={n}")
            if u == v:
                raise ValueError(f"self-loop at {u}")
            if rows[u] >> v & 1:
                raise ValueError(f"multi-edge ({u}, {v})")
            rows[u] |= 1 << v
            rows[v] |= 1 << u
        return cls(n, tuple(rows))

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(n, (0,) * n)

    @classmethod
    def complete(cls, n: int) -> "Graph":
        full = (1 << n) - 1
        return cls(n, tuple(full ^ (1 << v) for v in range(n)))

    @classmethod
    def cycle(cls, n: int) -> "Graph":
        return cls.from_edges(n, [(i, (i + 1) % n) for i in range(n)])

    def validate(self) -> None:
        """Check symmetry and simplicity; raises ValueError on violation."""
        if len(self.rows) != self.n:
            raise ValueError("row count does not match n")
        for u, row in enumerate(self.rows):
            if row >> u & 1:
                raise ValueError(f"self-loop at {u}")
            if row >> self.n:
                raise ValueError(f"row {u} has bits beyond n")
            for v in _bits(row):
                if not self.rows[v] >> u & 1:
                    raise ValueError(f"asymmetric adjacency at ({u}, {v})")

    # -- queries ------------------------------------------------------------

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self.rows[u] >> v & 1)

    def neighbors(self, v: int) -> list[int]:
        return list(_bits(self.rows[v]))

    def degree(self, v: int) -> int:
        return self.rows[v].bit_count()

    def degrees(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    @property
    def m(self) -> int:
        return sum(r.bit_count() for r in self.rows) // 2

    def edges(self) -> list[tuple[int, int]]:
        """Edges (u, v) with u < v in lexicographic order."""
        out = []
        for u, row in enumerate(self.rows):
            for v in _bits(row >> (u + 1)):
                out.append((u, u + 1 + v))
        return out

    def is_regular(self, d: int) -> bool:
        return all(r.bit_count() == d for r in self.rows)

    def complement(self) -> "Graph":
        full = (1 << self.n) - 1
        return Graph(self.n, tuple(full ^ r ^ (1 << v) for v, r in enumerate(self.rows)))

    def edge_key(self) -> int:
        """Injective integer code of the labeled edge set (pair index u*n + v, u < v)."""
        key = 0
        n = self.n
        for u, v in self.edges():
            key |= 1 << (u * n + v)
        return key

    def is_disjoint(self, other: "Graph") -> bool:
        return not any(a & b for a, b in zip(self.rows, other.rows))

    def is_subgraph_of(self, other: "Graph") -> bool:
        return all(a & ~b == 0 for a, b in zip(self.rows, other.rows))

    def difference(self, other: "Graph") -> "Graph":
        """Edges of self not in other."""
        return Graph(self.n, tuple(a & ~b for a, b in zip(self.rows, other.rows)))

    # -- text format --------------------------------------------------------

    def to_text(self) -> str:
        edges = self.edges()
        lines = [f"{self.n} {len(edges)}"]
        lines.extend(f"{u + 1} {v + 1}" for u, v in edges)
        return "\n".join(lines) + "\n"

    def edge_string(self) -> str:
        """Compact one-line form used inside JSON dumps: ``"1-2 3-4"``."""
        return " ".join(f"{u + 1}-{v + 1}" for u, v in self.edges())

    @classmethod
    def from_text(cls, text: str) -> "Graph":
        lines = [ln.split() for ln in text.strip().splitlines() if ln.strip()]
        if not lines:
            raise ValueError("empty graph text")
        n, m = int(lines[0][0]), int(lines[0][1])
        body = lines[1:]
        if len(body) != m:
            raise ValueError(f"header declares {m} edges, found {len(body)}")
        edges = []
        for parts in body:
            u, v = int(parts[0]), int(parts[1])
            if not 1 <= u < v <= n:
                raise ValueError(f"edge line '{u} {v}' must satisfy 1 <= u < v <= n")
            edges.append((u - 1, v - 1))
        if edges != sorted(edges):
            raise ValueError("edge lines must be sorted lexicographically")
        return cls.from_edges(n, edges)

    def sort_key(self) -> tuple:
        """Order matching the text serialization's lexicographic edge order."""
        return (self.n, self.edges())

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, edges=[{self.edge_string()}])"


def _bits(x: int):
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


def union_disjoint(g1: Graph, g2: Graph) -> Graph:
    """Edge union of two edge-disjoint graphs on the same vertex set."""
    if g1.n != g2.n:
        raise ValueError(f"vertex counts differ: {g1.n} vs {g2.n}")
    for u, (a, b) in enumerate(zip(g1.rows, g2.rows)):
        common = a & b
        if common:
            v = next(_bits(common))
            raise SharedEdge(min(u, v) + 1, max(u, v) + 1)
    return Graph(g1.n, tuple(a | b for a, b in zip(g1.rows, g2.rows)))


def union_all(graphs: Sequence[Graph]) -> Graph:
    out = graphs[0]
    for g in graphs[1:]:
        out = union_disjoint(out, g)
    return out


def relabel(g: Graph, sigma: Sequence[int]) -> Graph:
    """Image of g under the vertex map v -> sigma[v]."""
    n = g.n
    if len(sigma) != n or sorted(sigma) != list(range(n)):
        raise NotAPermutation(list(sigma))
    rows = [0] * n
    for u, row in enumerate(g.rows):
        img = 0
        for v in _bits(row):
            img |= 1 << sigma[v]
        rows[sigma[u]] = img
    return Graph(n, tuple(rows))


def _relabel_trusted(g: Graph, sigma: Sequence[int]) -> Graph:
    rows = [0] * g.n
    for u, row in enumerate(g.rows):
        img = 0
        while row:
            low = row & -row
            img |= 1 << sigma[low.bit_length() - 1]
            row ^= low
        rows[sigma[u]] = img
    return Graph(g.n, tuple(rows))


# ---------------------------------------------------------------------------
# Canonical labeling
# ---------------------------------------------------------------------------

CanonicalKey = bytes


def _refine(rows: Sequence[int], cells: list[list[int]]) -> list[list[int]]:
    """Equitable refinement; splits are ordered by neighbour count so the
    result depends only on the isomorphism type of (graph, ordered partition)."""
    changed = True
    while changed:
        changed = False
        wi = 0
        while wi < len(cells):
            wmask = 0
            for v in cells[wi]:
                wmask |= 1 << v
            new: list[list[int]] = []
            split = False
            for c in cells:
                if len(c) == 1:
                    new.append(c)
                    continue
                groups: dict[int, list[int]] = {}
                for v in c:
                    groups.setdefault((rows[v] & wmask).bit_count(), []).append(v)
                if len(groups) > 1:
                    split = True
                    new.extend(groups[k] for k in sorted(groups))
                else:
                    new.append(c)
            if split:
                cells = new
                changed = True
            wi += 1
    return cells


def _certificate(rows: Sequence[int], order: Sequence[int]) -> tuple[int, ...]:
    pos = [0] * len(order)
    for i, v in enumerate(order):
        pos[v] = i
    cert = []
    for v in order:
        row = rows[v]
        img = 0
        while row:
            low = row & -row
            img |= 1 << pos[low.bit_length() - 1]
            row ^= low
        cert.append(img)
    return tuple(cert)


def _twin_classes(rows: Sequence[int], n: int) -> list[int]:
    """twin[v] = least vertex w with N(v) - w == N(w) - v.  Swapping twins is an
    automorphism."""
    twin = list(range(n))
    for v in range(n):
        for w in range(v):
            if twin[w] == w and rows[v] & ~(1 << w) == rows[w] & ~(1 << v):
                twin[v] = w
                break
    return twin


def _search(rows: Sequence[int], n: int):
    """Full individualization-refinement tree.  Returns (best certificate,
    best leaf order, number of leaves attaining it).

    Within a target cell only one vertex per twin class is branched on; the
    sibling subtrees are images under a transposition that fixes the node, so
    they are accounted for by a multiplicity.  The leaf count is |Aut|.
    """
    best: list = [None, None, 0]
    twin = _twin_classes(rows, n)

    def visit(cells: list[list[int]], mult: int) -> None:
        target = next((i for i, c in enumerate(cells) if len(c) > 1), None)
        if target is None:
            order = [c[0] for c in cells]
            cert = _certificate(rows, order)
            if best[0] is None or cert < best[0]:
                best[0], best[1], best[2] = cert, order, mult
            elif cert == best[0]:
                best[2] += mult
            return
        cell = cells[target]
        groups: dict[int, list[int]] = {}
        for v in cell:
            groups.setdefault(twin[v], []).append(v)
        for members in groups.values():
            v = members[0]
            rest = [w for w in cell if w != v]
            child = cells[:target] + [[v], rest] + cells[target + 1:]
            visit(_refine(rows, child), mult * len(members))

    visit(_refine(rows, [list(range(n))]), 1)
    return best[0], best[1], best[2]


def _dense(g: Graph) -> bool:
    return 4 * g.m > g.n * (g.n - 1)


def canonical_labeling(g: Graph) -> list[int]:
    """A permutation sigma such that relabel(g, sigma) is the canonical representative."""
    h = g.complement() if _dense(g) else g
    _, order, _ = _search(h.rows, h.n)
    sigma = [0] * g.n
    for i, v in enumerate(order):
        sigma[v] = i
    return sigma


def canonical_key(g: Graph) -> CanonicalKey:
    """Byte string equal for two graphs iff they are isomorphic.

    Dense graphs are keyed through their complement, which keeps the search
    tree small for near-complete graphs.
    """
    flag = _dense(g)
    h = g.complement() if flag else g
    cert, _, _ = _search(h.rows, h.n)
    width = max(1, (g.n + 7) // 8)
    head = g.n.to_bytes(4, "big") + bytes([flag])
    return head + b"".join(r.to_bytes(width, "big") for r in cert)


def automorphism_count(g: Graph) -> int:
    """|Aut(g)|, as the number of search-tree leaves with the canonical certificate."""
    h = g.complement() if _dense(g) else g
    _, _, count = _search(h.rows, h.n)
    return count


def canonical_form(g: Graph) -> tuple[CanonicalKey, Graph, int]:
    """(key, canonical representative, |Aut|) from a single search."""
    flag = _dense(g)
    h = g.complement() if flag else g
    cert, order, count = _search(h.rows, h.n)
    sigma = [0] * g.n
    for i, v in enumerate(order):
        sigma[v] = i
    width = max(1, (g.n + 7) // 8)
    key = g.n.to_bytes(4, "big") + bytes([flag]) + b"".join(r.to_bytes(width, "big") for r in cert)
    return key, _relabel_trusted(g, sigma), count


def brute_force_key(g: Graph) -> tuple[int, ...]:
    """Minimum adjacency certificate over all n! relabelings.  Exponential;
    used as an independent reference for small n."""
    best = None
    for order in itertools.permutations(range(g.n)):
        cert = _certificate(g.rows, order)
        if best is None or cert < best:
            best = cert
    return best


def is_isomorphic_brute(g: Graph, h: Graph) -> bool:
    """Direct permutation check, independent of the refinement search."""
    if g.n != h.n or g.m != h.m or sorted(g.degrees()) != sorted(h.degrees()):
        return False
    target = h.rows
    for perm in itertools.permutations(range(g.n)):
        if _relabel_trusted(g, perm).rows == target:
            return True
    return False


@dataclass(frozen=True)
class DegreeSequence:
    degrees: tuple[int, ...]

    def __post_init__(self):
        if any(x < 0 for x in self.degrees):
            raise ValueError("degrees must be non-negative")
        if sum(self.degrees) % 2:
            raise ValueError("degree sum must be even")

    @classmethod
    def regular(cls, n: int, d: int) -> "DegreeSequence":
        return cls((d,) * n)

    @property
    def n(self) -> int:
        return len(self.degrees)
