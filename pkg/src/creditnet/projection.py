"""One-mode projections of a bank-firm graph.

Two banks are linked when they lend to a common firm; two firms are linked
when they borrow from a common bank. The link weight is the number of shared
counterparties.
"""

from __future__ import annotations

import functools
import logging
from typing import Callable, Iterable, Iterator, NamedTuple

import numpy as np
from scipy import sparse

from .errors import ConfigError, InvalidNodeError, UndefinedMeasureError
from .graph import BipartiteGraph, Mode, NodeRef

logger = logging.getLogger(__name__)

__all__ = [
    "ProjectedGraph",
    "ProjectionStats",
    "project",
    "project_subset",
    "projection_stats",
    "projection_counts",
    "pair_increment_count",
]

# above this many pair increments a warning is logged before projecting
LARGE_PROJECTION = 50_000_000
# pair keys are reduced with np.unique in batches of roughly this size
_BATCH = 4_000_000


class ProjectedGraph:
    """Undirected one-mode graph with positive integer edge weights.

    Edges are stored once, as ``(i, j, shared_count)`` with ``i < j``, sorted
    by ``(i, j)``. Endpoint and weight arrays are kept as numpy arrays since
    firm projections can hold millions of links.
    """

    def __init__(
        self,
        mode: Mode,
        node_ids,
        rows,
        cols,
        weights,
        source_fingerprint: str | None = None,
        skipped_counterparties: int = 0,
        raw_node_count: int | None = None,
    ):
        ids = tuple(str(x) for x in node_ids)
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate node identifiers")
        n = len(ids)
        i = np.asarray(rows, dtype=np.int64).ravel()
        j = np.asarray(cols, dtype=np.int64).ravel()
        w = np.asarray(weights)
        if not (i.shape == j.shape == w.shape):
            raise ConfigError("edge arrays must have equal length")
        if w.size and not np.all(np.equal(np.mod(w, 1), 0)):
            raise ConfigError("shared counts must be integers")
        w = w.astype(np.int64)
        if i.size:
            if i.min() < 0 or j.max() >= n:
                raise InvalidNodeError("projected edge endpoint out of range")
            if np.any(i >= j):
                raise ConfigError("projected edges must satisfy i < j")
            if w.min() < 1:
                raise ConfigError("shared counts must be at least 1")
        keys = i * max(n, 1) + j
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if keys.size > 1 and np.any(keys[1:] == keys[:-1]):
            raise ConfigError("duplicate projected edge")
        self.mode = mode
        self.node_ids = ids
        self.rows = i[order]
        self.cols = j[order]
        self.weights = w[order]
        for a in (self.rows, self.cols, self.weights):
            a.setflags(write=False)
        self.source_fingerprint = source_fingerprint
        self.skipped_counterparties = int(skipped_counterparties)
        self.raw_node_count = n if raw_node_count is None else int(raw_node_count)
        self._lookup = {x: k for k, x in enumerate(ids)}
        self._csr_cache = None

    @property
    def node_count(self) -> int:
        return len(self.node_ids)

    @property
    def edge_count(self) -> int:
        return int(self.rows.size)

    @property
    def edges(self) -> Iterator[tuple[int, int, int]]:
        return zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist())

    def node(self, node_id: str) -> NodeRef:
        try:
            return NodeRef(self.mode, self._lookup[str(node_id)])
        except KeyError:
            raise InvalidNodeError(f"unknown node id {node_id!r}") from None

    def weight(self, a: int, b: int) -> int:
        """Shared count between two node indices, 0 if they are not linked."""
        i, j = min(a, b), max(a, b)
        k = np.searchsorted(self.rows * self.node_count + self.cols, i * self.node_count + j)
        if k < self.edge_count and self.rows[k] == i and self.cols[k] == j:
            return int(self.weights[k])
        return 0

    def degrees(self) -> np.ndarray:
        n = self.node_count
        return np.bincount(self.rows, minlength=n) + np.bincount(self.cols, minlength=n)

    def as_dict(self) -> dict[tuple[str, str], int]:
        ids = self.node_ids
        return {(ids[i], ids[j]): w for i, j, w in self.edges}

    # hooks used by graph.distance / graph.diameter
    def _flat(self, n: NodeRef) -> int:
        if not isinstance(n, NodeRef) or n.mode is not self.mode:
            raise InvalidNodeError(f"{n!r} is not a {self.mode.value} node")
        if not 0 <= n.index < self.node_count:
            raise InvalidNodeError(f"node index {n.index} out of range")
        return n.index

    def _unflat(self, i: int) -> NodeRef:
        return NodeRef(self.mode, i)

    def _flat_size(self) -> int:
        return self.node_count

    def _csr(self) -> sparse.csr_matrix:
        if self._csr_cache is None:
            n = self.node_count
            r = np.concatenate([self.rows, self.cols])
            c = np.concatenate([self.cols, self.rows])
            self._csr_cache = sparse.csr_matrix(
                (np.ones(r.size, dtype=np.int8), (r, c)), shape=(n, n)
            )
        return self._csr_cache

    def __eq__(self, other):
        if not isinstance(other, ProjectedGraph):
            return NotImplemented
        return (
            self.mode is other.mode
            and set(self.node_ids) == set(other.node_ids)
            and self.as_dict() == other.as_dict()
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"ProjectedGraph(mode={self.mode.value}, nodes={self.node_count}, "
            f"edges={self.edge_count})"
        )


class ProjectionStats(NamedTuple):
    node_count: int
    edge_count: int
    possible_edges: int
    density: float
    mean_degree: float


def projection_counts(node_count: int, edge_count: int) -> ProjectionStats:
    """Density bookkeeping from raw counts (exact integer possible-pair count)."""
    if node_count < 2:
        raise UndefinedMeasureError("density needs at least two nodes")
    possible = node_count * (node_count - 1) // 2
    if not 0 <= edge_count <= possible:
        raise ConfigError(f"{edge_count} edges impossible among {node_count} nodes")
    return ProjectionStats(
        node_count, edge_count, possible, edge_count / possible, 2.0 * edge_count / node_count
    )


def projection_stats(p: ProjectedGraph) -> ProjectionStats:
    return projection_counts(p.node_count, p.edge_count)


def pair_increment_count(g: BipartiteGraph, mode: Mode) -> int:
    """Sum over opposite-mode nodes of C(degree, 2): the work a projection does."""
    d = g.degrees(mode.other).astype(object)
    return int(sum(x * (x - 1) // 2 for x in d))


@functools.lru_cache(maxsize=32)
def _triu(d: int):
    return np.triu_indices(d, 1)


def _accumulate(neighbor_lists: Iterable[np.ndarray], n: int):
    """Count co-occurring pairs; each list must be sorted ascending."""
    parts_k, parts_c = [], []
    batch, size = [], 0

    def flush():
        nonlocal batch, size
        if batch:
            u, c = np.unique(np.concatenate(batch), return_counts=True)
            parts_k.append(u)
            parts_c.append(c)
        batch, size = [], 0

    for nb in neighbor_lists:
        d = nb.size
        if d < 2:
            continue
        iu, ju = _triu(d)
        batch.append(nb[iu] * n + nb[ju])
        size += iu.size
        if size >= _BATCH:
            flush()
    flush()
    if not parts_k:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    if len(parts_k) == 1:
        keys, counts = parts_k[0], parts_c[0]
    else:
        allk = np.concatenate(parts_k)
        keys, inv = np.unique(allk, return_inverse=True)
        counts = np.bincount(inv, weights=np.concatenate(parts_c)).astype(np.int64)
    return keys // n, keys % n, counts.astype(np.int64)


def _project(g, mode, selected, degree_cap, drop_isolated):
    other = mode.other
    n_sel = selected.size
    local = np.full(g.count(mode), -1, dtype=np.int64)
    local[selected] = np.arange(n_sel)
    if degree_cap is not None and degree_cap < 2:
        raise ConfigError("degree cap must be at least 2")

    work = pair_increment_count(g, mode)
    if work > LARGE_PROJECTION:
        logger.warning(
            "%s projection will accumulate about %d pair increments", mode.value, work
        )

    skipped = 0
    lists = []
    for nb in g.neighbor_indices(other):
        arr = local[np.asarray(nb, dtype=np.int64)] if nb else np.zeros(0, np.int64)
        arr = arr[arr >= 0]
        if degree_cap is not None and len(nb) > degree_cap:
            skipped += 1
            continue
        lists.append(arr)
    if skipped:
        logger.warning("skipped %d %s nodes above degree cap %d", skipped, other.value, degree_cap)

    rows, cols, counts = _accumulate(lists, max(n_sel, 1))
    ids = [g.ids(mode)[k] for k in selected.tolist()]
    if drop_isolated and n_sel:
        deg = np.bincount(rows, minlength=n_sel) + np.bincount(cols, minlength=n_sel)
        keep = np.flatnonzero(deg > 0)
        remap = np.full(n_sel, -1, dtype=np.int64)
        remap[keep] = np.arange(keep.size)
        rows, cols = remap[rows], remap[cols]
        ids = [ids[k] for k in keep.tolist()]
    return ProjectedGraph(
        mode,
        ids,
        rows,
        cols,
        counts,
        source_fingerprint=g.fingerprint(),
        skipped_counterparties=skipped,
        raw_node_count=n_sel,
    )


def project(
    g: BipartiteGraph, mode: Mode, degree_cap: int | None = None, drop_isolated: bool = False
) -> ProjectedGraph:
    """Project ``g`` onto the nodes of ``mode``.

    Every opposite-mode node of degree ``d`` contributes one increment to
    each of its ``C(d, 2)`` neighbour pairs, so the cost is
    ``sum C(d, 2)`` rather than quadratic in the number of projected nodes.

    Parameters
    ----------
    degree_cap
        Counterparties with more than this many links are ignored (counted
        in ``skipped_counterparties``). ``None`` keeps all of them.
    drop_isolated
        Remove nodes that end up with no projected link. ``raw_node_count``
        still reports the number of nodes before removal.
    """
    return _project(g, mode, np.arange(g.count(mode)), degree_cap, drop_isolated)


def project_subset(
    g: BipartiteGraph,
    mode: Mode,
    node_filter: Callable[[str], bool] | Iterable[str],
    degree_cap: int | None = None,
    drop_isolated: bool = False,
) -> ProjectedGraph:
    """Projection restricted to the selected nodes of ``mode``.

    ``node_filter`` is either a predicate on node ids or a collection of ids.
    Counterparties are not filtered.
    """
    ids = g.ids(mode)
    if callable(node_filter):
        mask = [bool(node_filter(x)) for x in ids]
    else:
        wanted = {str(x) for x in node_filter}
        unknown = wanted.difference(ids)
        if unknown:
            raise InvalidNodeError(f"unknown {mode.value} ids: {sorted(unknown)[:5]}")
        mask = [x in wanted for x in ids]
    selected = np.flatnonzero(np.asarray(mask, dtype=bool))
    if selected.size == 0:
        raise ConfigError("node filter selects no nodes")
    return _project(g, mode, selected, degree_cap, drop_isolated)
