"""k-steiner search: regions, viable topologies, placements, F-MST, best tree.

A candidate with k' steiner points is a forest whose steiner point s_i
attaches to a subset P_i of some region label.  Labels may repeat, so the
candidates are: steiner trees whose attachment sets P_i are drawn from the
down-closure of the labels, with every steiner degree in [2, 6].  Each such
steiner component is placed once.  Components are then combined, and two
components may meet in a terminal (the terminal becomes an interior node of
the forest) as long as the result stays acyclic; the placements stay
independent because the shared terminal is fixed.  F-MST deletions depend
only on the merged attachment sets, so every combination is priced by
arithmetic.
"""
from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from .mst import (SpanningTree, ViableForest, build_mst, edge_lengths, fmst_deletions,
                  fmst_update, preprocess_pp1, preprocess_pp2)
from .norms import UnitBall, as_point, construct_hex_frame
from .odc import build_odc_partition, working_box
from .overlay import candidate_region_labels, overlay_partitions
from .topology import (CostFunction, TopologyInstance, ToleranceNotReached, evaluate_cost,
                       solve_fixed_topology)

MAX_STEINER_DEGREE = 6


@dataclass
class ProblemSpec:
    terminals: np.ndarray
    ball: UnitBall
    k: int = 1
    cf: CostFunction = field(default_factory=CostFunction)
    tol: float = 1e-9
    threads: int = 1
    box_inflation: float = 3.0
    seed_direction: tuple | None = None

    def __post_init__(self):
        self.terminals = np.asarray(self.terminals, float).reshape(-1, 2)
        if len(self.terminals) == 0:
            raise ValueError("need at least one terminal")
        if not np.all(np.isfinite(self.terminals)):
            raise ValueError("terminal coordinates must be finite")
        if int(self.k) < 1:
            raise ValueError("k must be at least 1")
        self.k = int(self.k)
        self.threads = max(1, int(self.threads))


# --------------------------------------------------------------------------
# candidate graphs (literal form of the region-choice step)
# --------------------------------------------------------------------------

@dataclass
class CandidateGraph:
    """Steiner clique plus s_i -> x for every x in the i-th label."""

    terminals: list[int]
    labels: list[frozenset]
    ss: list[tuple[int, int]]
    st: list[tuple[int, int]]

    @property
    def k(self) -> int:
        return len(self.labels)


def _label_set(label) -> frozenset:
    if isinstance(label, frozenset):
        return label
    return frozenset(t for t in label if t is not None)


def build_candidate_graph(labels) -> CandidateGraph:
    sets = [_label_set(lab) for lab in labels]
    terms = sorted(set().union(*sets)) if sets else []
    ss = list(itertools.combinations(range(len(sets)), 2))
    st = [(i, t) for i, s in enumerate(sets) for t in sorted(s)]
    return CandidateGraph(terms, sets, ss, st)


def _spanning_forests(k: int):
    """Edge subsets of K_k that form forests (as sorted tuples)."""
    pairs = list(itertools.combinations(range(k), 2))
    for r in range(0, k):
        for sub in itertools.combinations(pairs, r):
            parent = list(range(k))

            def find(a):
                while parent[a] != a:
                    a = parent[a]
                return a
            ok = True
            for a, b in sub:
                ra, rb = find(a), find(b)
                if ra == rb:
                    ok = False
                    break
                parent[ra] = rb
            if ok:
                yield sub


def enumerate_viable_subforests(g: CandidateGraph, kp: int | None = None) -> Iterator[tuple]:
    """Every viable subforest of g using all of its steiner vertices.

    Yields ``(ss_edges, st_edges)`` with sorted edge tuples.
    """
    k = g.k if kp is None else kp
    if k != g.k:
        raise ValueError("k' must match the number of labels")
    for forest in _spanning_forests(k):
        tdeg = [0] * k
        for a, b in forest:
            tdeg[a] += 1
            tdeg[b] += 1
        # each terminal goes to at most one steiner whose label holds it
        owners = [[i for i in range(k) if t in g.labels[i]] for t in g.terminals]
        for choice in itertools.product(*[[-1] + o for o in owners]):
            deg = list(tdeg)
            for i in choice:
                if i >= 0:
                    deg[i] += 1
            if all(2 <= d <= MAX_STEINER_DEGREE for d in deg):
                st = tuple(sorted((i, t) for i, t in zip(choice, g.terminals) if i >= 0))
                yield tuple(forest), st


# --------------------------------------------------------------------------
# components
# --------------------------------------------------------------------------

def _bits(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def _canon(j: int, edges, masks) -> tuple:
    """Canonical form of a steiner tree whose node i carries terminal set masks[i]."""
    adj = [[] for _ in range(j)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)

    def enc(v, parent):
        return (masks[v], tuple(sorted(enc(w, v) for w in adj[v] if w != parent)))
    return min(enc(r, -1) for r in range(j))


def _decode(code) -> tuple[list, list]:
    """Inverse of :func:`_canon`: local edges and node masks in DFS order."""
    masks, edges = [], []

    def walk(node, parent):
        me = len(masks)
        masks.append(node[0])
        if parent >= 0:
            edges.append((parent, me))
        for child in node[1]:
            walk(child, me)
    walk(code, -1)
    return edges, masks


def _labelled_trees(j: int):
    if j == 1:
        yield ()
        return
    if j == 2:
        yield ((0, 1),)
        return
    for seq in itertools.product(range(j), repeat=j - 2):
        deg = [1] * j
        for s in seq:
            deg[s] += 1
        edges = []
        for s in seq:
            leaf = min(i for i in range(j) if deg[i] == 1)
            edges.append((min(leaf, s), max(leaf, s)))
            deg[leaf] -= 1
            deg[s] -= 1
        u, v = [i for i in range(j) if deg[i] == 1]
        edges.append((u, v))
        yield tuple(sorted(edges))


def down_closure(label_sets) -> dict[int, list[int]]:
    """All nonempty subsets of the label sets as bitmasks, grouped by size."""
    seen = set()
    for s in label_sets:
        items = sorted(s)
        for r in range(1, len(items) + 1):
            for sub in itertools.combinations(items, r):
                seen.add(sum(1 << t for t in sub))
    out: dict[int, list[int]] = {}
    for m in sorted(seen):
        out.setdefault(bin(m).count("1"), []).append(m)
    return out


def enumerate_components(D: dict[int, list[int]], j: int) -> list[tuple]:
    """Canonical codes of all components with j steiner points."""
    out = {}
    for edges in _labelled_trees(j):
        deg = [0] * j
        for a, b in edges:
            deg[a] += 1
            deg[b] += 1

        def rec(i, used, masks):
            if i == j:
                out.setdefault(_canon(j, edges, masks), None)
                return
            lo = max(0 if j > 1 else 2, 2 - deg[i])
            hi = MAX_STEINER_DEGREE - deg[i]
            if lo == 0:
                rec(i + 1, used, masks + [0])
                lo = 1
            for size in range(lo, hi + 1):
                for m in D.get(size, ()):
                    if m & used == 0:
                        rec(i + 1, used | m, masks + [m])
        rec(0, 0, [])
    return list(out)


def _component_mask(code) -> int:
    _, masks = _decode(code)
    m = 0
    for x in masks:
        m |= x
    return m


# --------------------------------------------------------------------------
# solution
# --------------------------------------------------------------------------

@dataclass
class Solution:
    terminals: np.ndarray
    steiner: np.ndarray
    edges: list  # [(("t", i) | ("s", j)), ...] pairs, sorted
    lengths: np.ndarray
    cost: float
    cf: CostFunction
    ball: UnitBall
    provenance: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    def node_point(self, ref) -> np.ndarray:
        kind, i = ref
        return self.terminals[i] if kind == "t" else self.steiner[i]

    def recompute_cost(self) -> float:
        L = [self.ball.distance(self.node_point(a), self.node_point(b)) for a, b in self.edges]
        return evaluate_cost(self.cf, L)

    def steiner_degrees(self) -> list[int]:
        deg = [0] * len(self.steiner)
        for a, b in self.edges:
            for kind, i in (a, b):
                if kind == "s":
                    deg[i] += 1
        return deg


def _edge_key(e):
    (ka, ia), (kb, ib) = e
    return ((0 if ka == "t" else 1), ia, (0 if kb == "t" else 1), ib)


def _ref_sort(a, b):
    return (a, b) if _edge_key((a, b)) <= _edge_key((b, a)) else (b, a)


# --------------------------------------------------------------------------
# solve
# --------------------------------------------------------------------------

def _dedup(X):
    uniq, first, inverse = np.unique(X, axis=0, return_index=True, return_inverse=True)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return X[np.sort(first)], rank[np.asarray(inverse).ravel()], np.sort(first)


class _Stage:
    """Shared read-only state for one solve."""

    def __init__(self, spec: ProblemSpec, X: np.ndarray):
        self.spec = spec
        self.X = X
        self.T = build_mst(spec.ball, X)
        self.pp1 = preprocess_pp1(self.T)
        self.pp2 = preprocess_pp2(self.T)
        cf = spec.cf
        self.t_edge_cost = (self.T.lengths if cf.kind != "power" else self.T.lengths ** cf.p)
        self.t_total = evaluate_cost(cf, self.T.lengths) if len(self.T.lengths) else 0.0
        self.order_desc = np.argsort(-self.T.rank)

    def component_instance(self, code) -> tuple[TopologyInstance, list[int], list]:
        edges, masks = _decode(code)
        j = len(masks)
        A = sorted(set().union(*[_bits(m) for m in masks]))
        pos = {t: i for i, t in enumerate(A)}
        c = len(A)
        topo = [(c + a, c + b) for a, b in edges]
        for i, m in enumerate(masks):
            for t in _bits(m):
                topo.append((pos[t], c + i))
        inst = TopologyInstance(self.X[A], j, topo, self.spec.ball)
        return inst, A, masks

    def solve_component(self, code):
        inst, A, masks = self.component_instance(code)
        try:
            pl = solve_fixed_topology(inst, self.spec.cf, tol=self.spec.tol)
        except ToleranceNotReached:
            return None
        return pl

    def price(self, comps, placements) -> float:
        cf = self.spec.cf
        groups = _clusters([_component_mask(c) for c in comps])
        deleted = fmst_deletions(self.pp1, self.pp2, groups)
        if cf.kind == "bottleneck":
            gone = set(deleted)
            rest = 0.0
            for e in self.order_desc:
                if int(e) not in gone:
                    rest = float(self.T.lengths[e])
                    break
            return max([rest] + [placements[c].cost for c in comps])
        terms = [self.t_total] + [-float(self.t_edge_cost[e]) for e in deleted]
        terms += [placements[c].cost for c in comps]
        return math.fsum(terms)

    def materialize(self, comps, placements):
        """Steiner coordinates and the F-MST for a set of components."""
        S, ss, st = [], [], []
        prov = []
        for c in sorted(comps, key=lambda c: sorted(_bits(_component_mask(c)))[0]):
            edges, masks = _decode(c)
            base = len(S)
            S.extend(placements[c].steiner.tolist())
            ss += [(base + a, base + b) for a, b in edges]
            for i, m in enumerate(masks):
                st += [(base + i, t) for t in _bits(m)]
            prov.append({"attach": sorted(_bits(_component_mask(c))),
                         "steiner": list(range(base, base + len(masks))),
                         "sets": [_bits(m) for m in masks],
                         "method": placements[c].method})
        F = ViableForest(np.array(S).reshape(-1, 2), ss, st)
        U = fmst_update(self.T, self.pp1, self.pp2, F)
        return U, prov


def _combos(by_size: dict[int, list], k: int) -> Iterator[tuple]:
    """Sets of steiner components with <= k steiner points whose union is a forest.

    Components may share terminals as long as the component/terminal
    incidence graph stays acyclic (two components meet in at most one
    terminal, and no longer cycles).
    """
    flat = [(j, c, _component_mask(c)) for j in sorted(by_size) for c in by_size[j]]

    def acyclic(masks):
        parent = {}

        def find(a):
            parent.setdefault(a, a)
            while parent[a] != a:
                a = parent[a]
            return a
        for ci, m in enumerate(masks):
            for t in _bits(m):
                ra, rb = find(("c", ci)), find(t)
                if ra == rb:
                    return False
                parent[ra] = rb
        return True

    def rec(start, budget, chosen, masks):
        if chosen:
            yield tuple(chosen)
        for idx in range(start, len(flat)):
            j, c, m = flat[idx]
            if j > budget:
                break  # flat is sorted by size
            if masks and not acyclic(masks + [m]):
                continue
            yield from rec(idx + 1, budget - j, chosen + [c], masks + [m])
    yield from rec(0, k, [], [])


def _clusters(masks: list[int]) -> list[list[int]]:
    """Terminal sets of the connected clusters formed by overlapping masks."""
    groups: list[int] = []
    for m in masks:
        merged = m
        rest = []
        for g in groups:
            if g & merged:
                merged |= g
            else:
                rest.append(g)
        groups = rest + [merged]
    out = [_bits(g) for g in groups]
    out.sort(key=lambda a: a[0])
    return out


def solve(spec: ProblemSpec, progress: Callable[[int, int], None] | None = None) -> Solution:
    """Minimum-cost tree with at most ``spec.k`` steiner points."""
    t0 = time.perf_counter()
    ball, cf = spec.ball, spec.cf
    X, inverse, first = _dedup(spec.terminals)
    n = len(X)
    stats = {"regions": 0, "distinct_labels": 0, "topologies_evaluated": 0,
             "wall_ms": 0.0, "warnings": 0}
    dup_edges = [(("t", int(first[inverse[i]])), ("t", i))
                 for i in range(len(spec.terminals)) if first[inverse[i]] != i]

    def finish(steiner, edges, prov):
        refs = []
        for a, b in edges:
            refs.append(_ref_sort(*[("t", int(first[x])) if x < n else ("s", x - n)
                                    for x in (a, b)]))
        refs += [_ref_sort(a, b) for a, b in dup_edges]
        refs.sort(key=_edge_key)
        sol = Solution(spec.terminals, np.asarray(steiner, float).reshape(-1, 2), refs,
                       np.zeros(0), 0.0, cf, ball, prov, stats)
        sol.lengths = np.array([ball.distance(sol.node_point(a), sol.node_point(b))
                                for a, b in refs])
        sol.cost = evaluate_cost(cf, sol.lengths)
        stats["wall_ms"] = (time.perf_counter() - t0) * 1e3
        return sol

    if n == 1:
        return finish(np.zeros((0, 2)), [], [])

    seed = None if spec.seed_direction is None else ball.boundary_point(as_point(spec.seed_direction))
    frame = construct_hex_frame(ball, seed)
    box = working_box(X, spec.box_inflation)
    parts = [build_odc_partition(ball, frame, X, i, box) for i in range(6)]
    regions = overlay_partitions(parts)
    labels = candidate_region_labels(regions)
    stats["regions"] = len(regions)
    stats["distinct_labels"] = len(labels)

    stage = _Stage(spec, X)
    D = down_closure([_label_set(lab) for lab, _ in labels])
    by_size = {j: enumerate_components(D, j) for j in range(1, spec.k + 1)}
    todo = [c for j in sorted(by_size) for c in by_size[j]]

    placements = {}
    total = len(todo)
    done = 0
    if spec.threads > 1 and total > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            for c, pl in zip(todo, pool.map(stage.solve_component, todo, chunksize=16)):
                placements[c] = pl
                done += 1
                if progress:
                    progress(done, total)
    else:
        for c in todo:
            placements[c] = stage.solve_component(c)
            done += 1
            if progress:
                progress(done, total)
    failed = {c for c, pl in placements.items() if pl is None}
    stats["warnings"] = len(failed)
    for c in failed:
        for j in by_size:
            if c in by_size[j]:
                by_size[j].remove(c)

    best_cost = stage.t_total
    best = [()]
    evaluated = 1
    for comps in _combos(by_size, spec.k):
        evaluated += 1
        cost = stage.price(comps, placements)
        if cost < best_cost:
            best_cost, best = cost, [comps]
        elif cost == best_cost:
            best.append(comps)
    stats["topologies_evaluated"] = evaluated

    def build(comps):
        if not comps:
            return stage.T.points[:0], [tuple(e) for e in stage.T.edges.tolist()], []
        U, prov = stage.materialize(comps, placements)
        return U.forest.steiner, [tuple(e) for e in U.tree.edges.tolist()], prov

    options = []
    for comps in best:
        steiner, edges, prov = build(comps)
        sol = finish(steiner, edges, prov)
        options.append(sol)
    options.sort(key=lambda s: (len(s.steiner), [_edge_key(e) for e in s.edges]))
    return options[0]
