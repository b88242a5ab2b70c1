"""Backbone extraction from projected networks.

Weights are turned into distances ``d = 1 - w / w_max`` and a minimal
spanning forest is grown greedily: links are taken by increasing distance and
skipped when they would close a cycle. Equal distances are taken in
lexicographic order of the endpoint id pair, which makes the output
reproducible.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import UndefinedMeasureError
from .graph import Mode
from .projection import ProjectedGraph

__all__ = [
    "UnionFind",
    "ForestEdge",
    "SpanningForest",
    "distance_transform",
    "minimal_spanning_forest",
    "tree_degrees",
    "hubs",
]


class UnionFind:
    """Disjoint sets over ``0..n-1`` with path compression and union by rank."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.sets = n

    def find(self, x: int) -> int:
        root = x
        parent = self.parent
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    def union(self, a: int, b: int) -> bool:
        """Merge the sets of ``a`` and ``b``; False if they were already joined."""
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        self.sets -= 1
        return True

    def connected(self, a: int, b: int) -> bool:
        return self.find(a) == self.find(b)


class ForestEdge(NamedTuple):
    i: int
    j: int
    weight: int
    distance: float


class SpanningForest:
    """One spanning tree per connected component of a projection.

    ``trees`` lists components ordered by their smallest node index; each
    tree is a tuple of :class:`ForestEdge` sorted by ``(i, j)``. Isolated
    nodes form components with an empty tree.
    """

    def __init__(self, mode: Mode, node_ids, trees, components, w_max: int | None):
        self.mode = mode
        self.node_ids = tuple(node_ids)
        self.trees = tuple(tuple(t) for t in trees)
        self.components = tuple(tuple(c) for c in components)
        self.w_max = w_max

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    @property
    def component_count(self) -> int:
        return len(self.components)

    @property
    def edges(self) -> list[ForestEdge]:
        return sorted((e for t in self.trees for e in t), key=lambda e: (e.i, e.j))

    @property
    def edge_count(self) -> int:
        return sum(len(t) for t in self.trees)

    @property
    def total_weight(self) -> int:
        return sum(e.weight for t in self.trees for e in t)

    def as_projection(self) -> ProjectedGraph:
        e = self.edges
        return ProjectedGraph(
            self.mode,
            self.node_ids,
            [x.i for x in e],
            [x.j for x in e],
            [x.weight for x in e],
        )

    def __repr__(self):
        return (
            f"SpanningForest(mode={self.mode.value}, nodes={self.node_count}, "
            f"edges={self.edge_count}, components={self.component_count})"
        )


def _distances(p: ProjectedGraph) -> np.ndarray:
    if p.edge_count == 0:
        raise UndefinedMeasureError("distance transform of a projection without links")
    w_max = int(p.weights.max())
    return 1.0 - p.weights / w_max


def distance_transform(p: ProjectedGraph) -> list[tuple[int, int, float]]:
    """``(i, j, 1 - w / w_max)`` for every projected link."""
    d = _distances(p)
    return list(zip(p.rows.tolist(), p.cols.tolist(), d.tolist()))


def minimal_spanning_forest(p: ProjectedGraph) -> SpanningForest:
    n = p.node_count
    uf = UnionFind(n)
    chosen = []
    w_max = None
    if p.edge_count:
        d = _distances(p)
        w_max = int(p.weights.max())
        # ties go to the lexicographically smaller (id_i, id_j) pair
        rank = np.empty(n, dtype=np.int64)
        rank[np.argsort(np.array(p.node_ids, dtype=object), kind="stable")] = np.arange(n)
        ri, rj = rank[p.rows], rank[p.cols]
        order = np.lexsort((np.maximum(ri, rj), np.minimum(ri, rj), d))
        rows, cols, ws = p.rows.tolist(), p.cols.tolist(), p.weights.tolist()
        dl = d.tolist()
        for k in order.tolist():
            if uf.union(rows[k], cols[k]):
                chosen.append(ForestEdge(rows[k], cols[k], ws[k], dl[k]))
                if uf.sets == 1:
                    break

    roots = [uf.find(x) for x in range(n)]
    members: dict[int, list[int]] = {}
    for x, r in enumerate(roots):
        members.setdefault(r, []).append(x)
    comp_roots = sorted(members, key=lambda r: members[r][0])
    slot = {r: k for k, r in enumerate(comp_roots)}
    trees: list[list[ForestEdge]] = [[] for _ in comp_roots]
    for e in chosen:
        trees[slot[roots[e.i]]].append(e)
    for t in trees:
        t.sort(key=lambda e: (e.i, e.j))
    return SpanningForest(
        p.mode, p.node_ids, trees, [members[r] for r in comp_roots], w_max
    )


def tree_degrees(f: SpanningForest) -> np.ndarray:
    """Number of forest links at each node."""
    deg = np.zeros(f.node_count, dtype=np.int64)
    for e in f.edges:
        deg[e.i] += 1
        deg[e.j] += 1
    return deg


def hubs(f: SpanningForest, top: int = 10) -> list[tuple[str, int]]:
    """Highest forest-degree nodes, ties broken by node id."""
    deg = tree_degrees(f)
    ranked = sorted(zip(f.node_ids, deg.tolist()), key=lambda t: (-t[1], t[0]))
    return ranked[:top]
