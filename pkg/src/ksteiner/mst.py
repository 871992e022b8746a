"""Minimum spanning trees, path-maximum tables and the F-MST update.

Edge order everywhere is the total order (length, min endpoint, max endpoint);
``rank[e]`` is the position of edge ``e`` in that order, so "longest edge on a
path" is always unique.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import kernels
from .norms import UnitBall


class ForestError(ValueError):
    """Raised for a non-viable forest or a tree/table mismatch."""


def edge_lengths(ball: UnitBall, P, edges) -> np.ndarray:
    """Lengths of ``edges`` (rows ``u < v``), always through the same numpy path."""
    P = np.asarray(P, float)
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if len(edges) == 0:
        return np.zeros(0)
    u = np.minimum(edges[:, 0], edges[:, 1])
    v = np.maximum(edges[:, 0], edges[:, 1])
    return kernels.norm_rows(P[v] - P[u], *ball.kernel_args)


def _rank(lengths, edges) -> np.ndarray:
    order = np.lexsort((edges[:, 1], edges[:, 0], lengths))
    rank = np.empty(len(order), dtype=np.int64)
    rank[order] = np.arange(len(order))
    return rank


@dataclass
class SpanningTree:
    """Tree on ``points``; the first ``n_terminals`` points are terminals."""

    points: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    ball: UnitBall
    n_terminals: int = -1

    def __post_init__(self):
        self.points = np.asarray(self.points, float).reshape(-1, 2)
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        self.lengths = np.asarray(self.lengths, float)
        if self.n_terminals < 0:
            self.n_terminals = len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)

    def role(self, v: int) -> str:
        return "terminal" if v < self.n_terminals else "steiner"

    @cached_property
    def rank(self) -> np.ndarray:
        return _rank(self.lengths, self.edges)

    @cached_property
    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj = [[] for _ in range(self.n)]
        for e, (u, v) in enumerate(self.edges):
            adj[u].append((int(v), e))
            adj[v].append((int(u), e))
        return adj

    def csr(self):
        deg = np.bincount(self.edges.ravel(), minlength=self.n)
        indptr = np.concatenate([[0], np.cumsum(deg)]).astype(np.int64)
        nbr = np.empty(2 * len(self.edges), dtype=np.int64)
        eid = np.empty_like(nbr)
        fill = indptr[:-1].copy()
        for e, (u, v) in enumerate(self.edges):
            nbr[fill[u]], eid[fill[u]] = v, e
            fill[u] += 1
            nbr[fill[v]], eid[fill[v]] = u, e
            fill[v] += 1
        return indptr, nbr, eid

    def total_length(self) -> float:
        return math.fsum(self.lengths.tolist())

    def degree(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n)

    def is_tree(self) -> bool:
        if len(self.edges) != self.n - 1:
            return False
        return _connected(self.n, self.edges)

    def path_edges(self, u: int, v: int) -> list[int]:
        """Edge ids on the tree path u..v (plain DFS; for tests and small trees)."""
        prev = {u: (-1, -1)}
        stack = [u]
        while stack:
            a = stack.pop()
            if a == v:
                break
            for b, e in self.adjacency[a]:
                if b not in prev:
                    prev[b] = (a, e)
                    stack.append(b)
        out = []
        while v != u:
            v, e = prev[v]
            out.append(e)
        return out[::-1]


def _connected(n, edges) -> bool:
    parent = list(range(n))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a
    comps = n
    for u, v in edges:
        ru, rv = find(int(u)), find(int(v))
        if ru == rv:
            return False
        parent[ru] = rv
        comps -= 1
    return comps == 1


def build_mst(ball: UnitBall, points) -> SpanningTree:
    """Prim MST, deterministic under the (length, min idx, max idx) order."""
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(P) == 0:
        raise ValueError("cannot build a spanning tree on no points")
    D = kernels.pairwise_norm(P, *ball.kernel_args)
    edges = kernels.prim_edges(D)
    lengths = edge_lengths(ball, P, edges)
    return SpanningTree(P, edges, lengths, ball)


# --------------------------------------------------------------------------
# PP1 / PP2
# --------------------------------------------------------------------------

@dataclass
class PP1Table:
    """``edge[u, v]``: id of the highest-rank edge on the path u..v (-1 on the diagonal)."""

    edge: np.ndarray
    rank: np.ndarray
    lengths: np.ndarray

    def longest(self, u: int, v: int) -> tuple[int, float] | None:
        e = int(self.edge[u, v])
        if e < 0:
            return None
        return e, float(self.lengths[e])


def preprocess_pp1(T: SpanningTree) -> PP1Table:
    indptr, nbr, eid = T.csr()
    table = kernels.pp1_table(T.n, indptr, nbr, eid, T.rank)
    return PP1Table(table, T.rank, T.lengths)


@dataclass
class PP2Table:
    """Path membership H(e, y, z) stored as subtree sides.

    ``below[e, y]`` is true when y lies on the child side of e (tree rooted
    at node 0); e is on the y..z path exactly when the two sides differ.
    """

    below: np.ndarray

    def H(self, e: int, y: int, z: int) -> bool:
        return bool(self.below[e, y] ^ self.below[e, z])

    def path(self, y: int, z: int) -> np.ndarray:
        return np.flatnonzero(self.below[:, y] ^ self.below[:, z])

    def avoids(self, deleted, Y, Z) -> np.ndarray:
        """``out[a, b]``: the path Y[a]..Z[b] uses none of ``deleted``."""
        Y = np.asarray(Y, dtype=np.int64)
        Z = np.asarray(Z, dtype=np.int64)
        if len(deleted) == 0:
            return np.ones((len(Y), len(Z)), dtype=bool)
        d = np.asarray(deleted, dtype=np.int64)
        sy = self.below[np.ix_(d, Y)]
        sz = self.below[np.ix_(d, Z)]
        return ~np.any(sy[:, :, None] ^ sz[:, None, :], axis=0)


def preprocess_pp2(T: SpanningTree) -> PP2Table:
    n = T.n
    below = np.zeros((max(n - 1, 0), n), dtype=bool)
    if n <= 1:
        return PP2Table(below)
    parent = np.full(n, -1)
    pedge = np.full(n, -1)
    order = [0]
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    for a in order:
        for b, e in T.adjacency[a]:
            if not seen[b]:
                seen[b] = True
                parent[b], pedge[b] = a, e
                order.append(b)
    # each node marks itself below its parent edge, then inherits its parent's marks
    for b in order[1:]:
        below[:, b] = below[:, parent[b]]
        below[pedge[b], b] = True
    return PP2Table(below)


# --------------------------------------------------------------------------
# viable forests
# --------------------------------------------------------------------------

@dataclass
class ViableForest:
    """Steiner points plus edges ``ss`` (steiner, steiner) and ``st`` (steiner, terminal)."""

    steiner: np.ndarray
    ss: list = field(default_factory=list)
    st: list = field(default_factory=list)

    def __post_init__(self):
        self.steiner = np.asarray(self.steiner, float).reshape(-1, 2)
        self.ss = [(int(a), int(b)) for a, b in self.ss]
        self.st = [(int(a), int(b)) for a, b in self.st]

    @property
    def k(self) -> int:
        return len(self.steiner)

    @property
    def attachments(self) -> list[int]:
        return sorted({t for _, t in self.st})

    def steiner_degree(self) -> np.ndarray:
        deg = np.zeros(self.k, dtype=int)
        for a, b in self.ss:
            deg[a] += 1
            deg[b] += 1
        for s, _ in self.st:
            deg[s] += 1
        return deg

    def components(self) -> list[tuple[list[int], list[int]]]:
        """``(steiner ids, sorted A^i)`` per connected component, ordered by smallest terminal.

        Components are connected through terminals as well, so two steiner
        groups sharing a terminal form one component.
        """
        parent: dict = {}

        def find(a):
            parent.setdefault(a, a)
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a
        for a, b in self.ss:
            parent[find(("s", a))] = find(("s", b))
        for s, t in self.st:
            parent[find(("s", s))] = find(("t", t))
        groups: dict = {}
        for s in range(self.k):
            groups.setdefault(find(("s", s)), ([], set()))[0].append(s)
        for s, t in self.st:
            groups[find(("s", s))][1].add(t)
        comps = [(ss, sorted(ts)) for ss, ts in groups.values()]
        comps.sort(key=lambda c: (c[1][0] if c[1] else math.inf, c[0][0]))
        return comps


def is_viable(F: ViableForest, k: int | None = None, shared_terminals: bool = False) -> bool:
    """Acyclic, leaves are exactly the terminals, steiner degrees in [2, 6].

    With ``shared_terminals`` a terminal may touch several steiner points
    (it is then an interior node of F); every leaf is still a terminal.
    """
    if k is not None and F.k > k:
        return False
    if F.k == 0:
        return not F.ss and not F.st
    deg = F.steiner_degree()
    if np.any(deg < 2) or np.any(deg > 6):
        return False
    tdeg: dict[int, int] = {}
    for s, t in F.st:
        if not 0 <= s < F.k or t < 0:
            return False
        tdeg[t] = tdeg.get(t, 0) + 1
    if not shared_terminals and any(d != 1 for d in tdeg.values()):
        return False
    if len(set(F.ss)) != len(F.ss) or any(a == b for a, b in F.ss):
        return False
    # acyclic: union-find over steiner + terminal nodes
    parent: dict = {}

    def find(a):
        parent.setdefault(a, a)
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a
    for a, b in [(("s", a), ("s", b)) for a, b in F.ss] + [(("s", s), ("t", t)) for s, t in F.st]:
        ra, rb = find(a), find(b)
        if ra == rb:
            return False
        parent[ra] = rb
    return True


# --------------------------------------------------------------------------
# F-MST
# --------------------------------------------------------------------------

@dataclass
class UpdatedTree:
    """``T - deleted + F`` kept lazily; steiner j is node ``T.n + j``."""

    base: SpanningTree
    forest: ViableForest
    deleted: list[int]
    # J-path trace per component for debugging: [(x, y, edge id), ...]
    trace: list = field(default_factory=list, repr=False)

    @cached_property
    def forest_edges(self) -> np.ndarray:
        n = self.base.n
        rows = [(n + a, n + b) for a, b in self.forest.ss] + [(t, n + s) for s, t in self.forest.st]
        e = np.array(rows, dtype=np.int64).reshape(-1, 2)
        return np.sort(e, axis=1)

    @cached_property
    def points(self) -> np.ndarray:
        return np.vstack([self.base.points, self.forest.steiner])

    @cached_property
    def forest_lengths(self) -> np.ndarray:
        return edge_lengths(self.base.ball, self.points, self.forest_edges)

    @cached_property
    def tree(self) -> SpanningTree:
        keep = np.ones(len(self.base.edges), dtype=bool)
        keep[self.deleted] = False
        edges = np.vstack([self.base.edges[keep], self.forest_edges])
        lengths = np.concatenate([self.base.lengths[keep], self.forest_lengths])
        return SpanningTree(self.points, edges, lengths, self.base.ball, self.base.n_terminals)

    def total_length(self) -> float:
        return self.tree.total_length()


def _j_minimax(x: int, y: int, groups: list[list[int]], pp1: PP1Table, pp2: PP2Table,
               deleted: list[int]) -> int:
    """Highest-rank T edge on the x..y path of the current contracted tree.

    J's nodes are {x}, {y} and the earlier attachment sets; an edge between
    two nodes exists when some witness pair has a T path avoiding every
    deleted edge, and it is weighted by the smallest such path maximum.  The
    minimax path in J then ends on the true cycle maximum.
    """
    nodes = [[x], [y]] + groups
    m = len(nodes)
    W = np.full((m, m), -1, dtype=np.int64)
    rank = pp1.rank
    for a in range(m):
        for b in range(a + 1, m):
            ok = pp2.avoids(deleted, nodes[a], nodes[b])
            if not ok.any():
                continue
            best = -1
            for ia, ib in zip(*np.nonzero(ok)):
                e = int(pp1.edge[nodes[a][ia], nodes[b][ib]])
                if e < 0:
                    continue
                if best < 0 or rank[e] < rank[best]:
                    best = e
            W[a, b] = W[b, a] = best
    # bottleneck Dijkstra from node 0 to node 1 on ranks
    INF = len(rank) + 1
    best_r = [INF] * m
    best_e = [-1] * m
    best_r[0] = -1
    heap = [(-1, 0)]
    done = [False] * m
    while heap:
        r, a = heapq.heappop(heap)
        if done[a]:
            continue
        done[a] = True
        if a == 1:
            break
        for b in range(m):
            e = W[a, b]
            if e < 0 or done[b]:
                continue
            nr = max(r, int(rank[e]))
            if nr < best_r[b]:
                best_r[b] = nr
                best_e[b] = int(e) if rank[e] >= r else best_e[a]
                heapq.heappush(heap, (nr, b))
    if best_e[1] < 0:
        raise ForestError(f"no path between terminals {x} and {y} in J")
    return best_e[1]


def fmst_deletions(pp1: PP1Table, pp2: PP2Table, attachment_sets, trace=None) -> list[int]:
    """T edges removed when the attachment sets are joined in the given order.

    Depends only on the sets, never on steiner coordinates.
    """
    deleted: list[int] = []
    groups: list[list[int]] = []
    for A in attachment_sets:
        A = list(A)
        new = []
        for a in range(len(A)):
            for b in range(a + 1, len(A)):
                if groups:
                    e = _j_minimax(A[a], A[b], groups, pp1, pp2, deleted)
                else:
                    e = int(pp1.edge[A[a], A[b]])
                if trace is not None:
                    trace.append((A[a], A[b], e))
                if e not in new:
                    new.append(e)
        deleted.extend(new)
        groups.append(A)
    return deleted


def fmst_update(T: SpanningTree, pp1: PP1Table, pp2: PP2Table, F: ViableForest,
                check: bool = True) -> UpdatedTree:
    """Minimum F-fixed spanning tree, built from T by deleting only T edges."""
    if pp1.edge.shape != (T.n, T.n) or pp2.below.shape != (max(T.n - 1, 0), T.n):
        raise ForestError("tables do not match the tree")
    if check and not is_viable(F, shared_terminals=True):
        raise ForestError("forest is not viable")
    if any(t >= T.n for _, t in F.st):
        raise ForestError("forest attaches to a terminal outside the tree")
    trace: list = []
    deleted = fmst_deletions(pp1, pp2, [A for _, A in F.components()], trace)
    return UpdatedTree(T, F, deleted, trace)
