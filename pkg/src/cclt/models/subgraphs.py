"""Small simple graphs, embedding counts and extension counts."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

MAX_PATTERN_VERTICES = 8


@dataclass(frozen=True, slots=True)
class SubgraphSpec:
    """A simple graph on vertices ``0..v-1`` given by its edge list."""

    v: int
    edges: tuple[tuple[int, int], ...]
    label: str = ""

    def __post_init__(self):
        norm = []
        for a, b in self.edges:
            if a == b:
                raise ValueError("loops are not allowed")
            if not (0 <= a < self.v and 0 <= b < self.v):
                raise ValueError("edge endpoint out of range")
            norm.append((min(a, b), max(a, b)))
        if len(set(norm)) != len(norm):
            raise ValueError("multiple edges are not allowed")
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def adjacency(self) -> list[set[int]]:
        adj = [set() for _ in range(self.v)]
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    @classmethod
    def from_adjacency(cls, matrix, label: str = "") -> "SubgraphSpec":
        a = np.asarray(matrix)
        if a.shape[0] != a.shape[1] or np.any(a != a.T) or np.any(np.diag(a)):
            raise ValueError("adjacency must be symmetric with empty diagonal")
        v = a.shape[0]
        edges = tuple((i, j) for i in range(v) for j in range(i + 1, v) if a[i, j])
        return cls(v, edges, label)


def named_subgraph(name: str) -> SubgraphSpec:
    key = name.lower().replace("-", "").replace("_", "")
    table = {
        "edge": (2, [(0, 1)]),
        "wedge": (3, [(0, 1), (1, 2)]),
        "triangle": (3, [(0, 1), (1, 2), (0, 2)]),
        "k4": (4, [(i, j) for i in range(4) for j in range(i + 1, 4)]),
        "p4": (4, [(0, 1), (1, 2), (2, 3)]),
        "c4": (4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
        "star3": (4, [(0, 1), (0, 2), (0, 3)]),
        "paw": (4, [(0, 1), (1, 2), (0, 2), (2, 3)]),
        "diamond": (4, [(0, 1), (1, 2), (0, 2), (1, 3), (2, 3)]),
    }
    if key not in table:
        raise KeyError(f"unknown subgraph {name!r}; known: {', '.join(sorted(table))}")
    v, edges = table[key]
    return SubgraphSpec(v, tuple(edges), key)


def parse_subgraph(text: str) -> SubgraphSpec:
    """A name such as ``K4`` or an edge list such as ``0-1,1-2,2-0``."""
    if "-" in text and any(ch.isdigit() for ch in text):
        edges = []
        for part in text.split(","):
            a, b = part.split("-")
            edges.append((int(a), int(b)))
        v = 1 + max(max(e) for e in edges)
        return SubgraphSpec(v, tuple(edges), text)
    return named_subgraph(text)


def count_embeddings(pattern: SubgraphSpec, host_adj: list[set[int]]) -> int:
    """Number of injective edge-preserving vertex maps from ``pattern`` into the host.

    Vertices are placed in a connectivity-first order; candidates are pruned
    by degree and by adjacency to already placed neighbours.
    """
    v = pattern.v
    padj = pattern.adjacency
    order = _placement_order(padj)
    pdeg = [len(a) for a in padj]
    hdeg = [len(a) for a in host_adj]
    H = len(host_adj)
    earlier = {u: [w for w in padj[u] if order.index(w) < order.index(u)] for u in range(v)}
    image = [-1] * v
    used = [False] * H

    def extend(pos: int) -> int:
        if pos == v:
            return 1
        u = order[pos]
        placed = earlier[u]
        if placed:
            cand = set(host_adj[image[placed[0]]])
            for w in placed[1:]:
                cand &= host_adj[image[w]]
        else:
            cand = range(H)
        total = 0
        for h in cand:
            if used[h] or hdeg[h] < pdeg[u]:
                continue
            image[u] = h
            used[h] = True
            total += extend(pos + 1)
            used[h] = False
        image[u] = -1
        return total

    return extend(0)


def _placement_order(adj: list[set[int]]) -> list[int]:
    v = len(adj)
    order: list[int] = []
    remaining = set(range(v))
    while remaining:
        start = max(remaining, key=lambda u: len(adj[u]))
        order.append(start)
        remaining.discard(start)
        frontier = True
        while frontier:
            frontier = False
            best = None
            for u in sorted(remaining):
                links = sum(1 for w in adj[u] if w in order)
                if links and (best is None or (links, len(adj[u])) > best[0]):
                    best = ((links, len(adj[u])), u)
            if best is not None:
                order.append(best[1])
                remaining.discard(best[1])
                frontier = True
    return order


def complete_adjacency(n: int) -> list[set[int]]:
    return [set(range(n)) - {i} for i in range(n)]


def automorphisms(pattern: SubgraphSpec) -> int:
    return count_embeddings(pattern, pattern.adjacency)


def copies_in_complete_graph(pattern: SubgraphSpec, n: int) -> int:
    if pattern.v > n:
        return 0
    return math.perm(n, pattern.v) // automorphisms(pattern)


def extension_count(sub: SubgraphSpec, pattern: SubgraphSpec, n: int) -> int:
    """Copies of ``pattern`` in ``K_n`` containing one fixed copy of ``sub``."""
    if pattern.v > n:
        return 0
    emb = count_embeddings(sub, pattern.adjacency)
    num = math.factorial(n - sub.v) * emb
    den = math.factorial(n - pattern.v) * automorphisms(pattern)
    if num % den:
        raise ArithmeticError("extension count is not an integer")
    return num // den


def edge_index(i: int, j: int) -> int:
    """Slot of edge ``{i, j}``: ``j(j-1)/2 + i`` for ``i < j``."""
    if i == j:
        raise ValueError("no loops")
    i, j = min(i, j), max(i, j)
    return j * (j - 1) // 2 + i


def edge_endpoints(n: int) -> tuple[np.ndarray, np.ndarray]:
    N = n * (n - 1) // 2
    a = np.empty(N, dtype=np.int64)
    b = np.empty(N, dtype=np.int64)
    for j in range(1, n):
        for i in range(j):
            idx = edge_index(i, j)
            a[idx], b[idx] = i, j
    return a, b


def copy_edge_sets(pattern: SubgraphSpec, n: int) -> np.ndarray:
    """Edge-slot sets of every copy of ``pattern`` in ``K_n``, shape (copies, m)."""
    if pattern.v > MAX_PATTERN_VERTICES:
        raise ValueError(f"pattern has more than {MAX_PATTERN_VERTICES} vertices")
    seen = set()
    out = []
    for image in itertools.permutations(range(n), pattern.v):
        key = tuple(sorted(edge_index(image[a], image[b]) for a, b in pattern.edges))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return np.array(sorted(out), dtype=np.int64).reshape(len(out), pattern.m)


@dataclass(frozen=True)
class SubgraphCounter:
    pattern: SubgraphSpec
    n: int

    @cached_property
    def copies(self) -> np.ndarray:
        return copy_edge_sets(self.pattern, self.n)

    def count(self, configs) -> np.ndarray:
        c = np.asarray(configs, dtype=bool)
        return c[:, self.copies].all(axis=2).sum(axis=1)

    def flip_delta(self, configs) -> np.ndarray:
        """Change of the copy count when each edge slot is toggled, shape (B, N)."""
        c = np.asarray(configs, dtype=bool)
        B, N = c.shape
        out = np.zeros((B, N), dtype=np.int64)
        copies = self.copies
        m = copies.shape[1]
        for pos in range(m):
            others = np.delete(copies, pos, axis=1)
            present = c[:, others].all(axis=2) if m > 1 else np.ones((B, len(copies)), dtype=bool)
            np.add.at(out, (slice(None), copies[:, pos]), present.astype(np.int64))
        sign = np.where(c, -1, 1)
        return sign * out

    def overlap_sums(self) -> dict[int, int]:
        """``sum over edge sets s of size l of (copies containing s)^2`` for every l >= 1."""
        counts: dict[tuple[int, ...], int] = {}
        for row in self.copies:
            row = tuple(int(e) for e in row)
            for size in range(1, len(row) + 1):
                for sub in itertools.combinations(row, size):
                    counts[sub] = counts.get(sub, 0) + 1
        out: dict[int, int] = {}
        for sub, c in counts.items():
            out[len(sub)] = out.get(len(sub), 0) + c * c
        return out
