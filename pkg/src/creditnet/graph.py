"""Immutable bipartite bank-firm graph and elementary node measures.

Banks and firms live in two separate index spaces. A node is addressed with a
:class:`NodeRef` (mode + dense index); string identifiers are kept alongside
for I/O and are mapped to indices when the graph is built.
"""

from __future__ import annotations

import enum
import hashlib
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import ConfigError, InvalidNodeError, UndefinedMeasureError

logger = logging.getLogger(__name__)

__all__ = [
    "Mode",
    "Term",
    "EdgeWeight",
    "NodeRef",
    "BipartiteGraph",
    "DiameterResult",
    "merge_duplicate_records",
    "degree",
    "strength",
    "neighbors",
    "distance",
    "diameter",
    "connected_components",
]


class Mode(enum.Enum):
    BANK = "bank"
    FIRM = "firm"

    @property
    def other(self) -> "Mode":
        return Mode.FIRM if self is Mode.BANK else Mode.BANK


class Term(enum.Enum):
    SHORT = "short"
    LONG = "long"
    TOTAL = "total"


@dataclass(frozen=True)
class EdgeWeight:
    """Loan amounts (million yen) on one bank-firm link.

    ``short_term`` and ``long_term`` are both ``None`` when the source only
    reports the total; term-specific measures skip such links.
    """

    short_term: float | None
    long_term: float | None
    total: float

    def __post_init__(self):
        s, l, t = self.short_term, self.long_term, self.total
        if (s is None) != (l is None):
            raise ConfigError("short_term and long_term must be given together")
        if not math.isfinite(t) or t <= 0:
            raise ConfigError(f"total must be a positive finite amount, got {t!r}")
        if s is not None:
            if not (math.isfinite(s) and math.isfinite(l)) or s < 0 or l < 0:
                raise ConfigError(f"negative or non-finite term amount ({s!r}, {l!r})")
            if not math.isclose(s + l, t, rel_tol=1e-12, abs_tol=0.0):
                raise ConfigError(f"total {t!r} != short_term + long_term {s + l!r}")

    @classmethod
    def split(cls, short_term: float, long_term: float) -> "EdgeWeight":
        short_term, long_term = float(short_term), float(long_term)
        return cls(short_term, long_term, short_term + long_term)

    @classmethod
    def total_only(cls, total: float) -> "EdgeWeight":
        return cls(None, None, float(total))

    @property
    def has_split(self) -> bool:
        return self.short_term is not None

    def component(self, term: Term) -> float | None:
        if term is Term.TOTAL:
            return self.total
        if term is Term.SHORT:
            return self.short_term
        return self.long_term

    def __add__(self, other: "EdgeWeight") -> "EdgeWeight":
        if self.has_split and other.has_split:
            return EdgeWeight.split(
                self.short_term + other.short_term, self.long_term + other.long_term
            )
        return EdgeWeight.total_only(self.total + other.total)


@dataclass(frozen=True, order=True)
class NodeRef:
    mode: Mode
    index: int

    def __repr__(self):
        return f"{self.mode.value[0].upper()}{self.index}"


class DiameterResult(NamedTuple):
    diameter: int
    connected: bool
    component_count: int
    giant_size: int


def merge_duplicate_records(records):
    """Sum repeated ``(bank_id, firm_id, EdgeWeight)`` records.

    Returns the merged records (first-seen order) and the number of rows that
    were folded into an earlier one.
    """
    merged: dict[tuple[str, str], EdgeWeight] = {}
    duplicates = 0
    for bank_id, firm_id, w in records:
        key = (bank_id, firm_id)
        if key in merged:
            merged[key] = merged[key] + w
            duplicates += 1
        else:
            merged[key] = w
    return [(b, f, w) for (b, f), w in merged.items()], duplicates


class BipartiteGraph:
    """Two-mode weighted graph of banks and firms.

    Parameters
    ----------
    bank_ids, firm_ids : sequence of str
        Node identifiers; position in the sequence is the node index.
    edges : iterable of (bank_index, firm_index, EdgeWeight)
        At most one edge per pair. Edges are stored sorted by
        ``(bank_index, firm_index)``.

    The object is immutable after construction and safe to share between
    threads.
    """

    __slots__ = (
        "_ids",
        "_lookup",
        "_edges",
        "_adj",
        "_inc",
        "_ends",
        "_weights",
        "_fingerprint",
        "_csr_cache",
    )

    def __init__(self, bank_ids: Iterable[str], firm_ids: Iterable[str], edges):
        ids = {Mode.BANK: tuple(str(x) for x in bank_ids), Mode.FIRM: tuple(str(x) for x in firm_ids)}
        lookup = {}
        for mode, seq in ids.items():
            table = {x: i for i, x in enumerate(seq)}
            if len(table) != len(seq):
                raise ConfigError(f"duplicate {mode.value} identifiers")
            lookup[mode] = table
        nb, nf = len(ids[Mode.BANK]), len(ids[Mode.FIRM])

        checked = []
        seen = set()
        for b, f, w in edges:
            b, f = int(b), int(f)
            if not (0 <= b < nb and 0 <= f < nf):
                raise InvalidNodeError(f"edge ({b}, {f}) out of range ({nb} banks, {nf} firms)")
            if not isinstance(w, EdgeWeight):
                raise ConfigError(f"edge ({b}, {f}) weight must be an EdgeWeight")
            if (b, f) in seen:
                raise ConfigError(f"duplicate edge ({b}, {f})")
            seen.add((b, f))
            checked.append((b, f, w))
        checked.sort(key=lambda e: (e[0], e[1]))

        self._ids = ids
        self._lookup = lookup
        self._edges = tuple(checked)
        m = len(checked)
        eb = np.fromiter((e[0] for e in checked), dtype=np.int64, count=m)
        ef = np.fromiter((e[1] for e in checked), dtype=np.int64, count=m)
        self._ends = {Mode.BANK: eb, Mode.FIRM: ef}
        nan = float("nan")
        self._weights = {
            Term.TOTAL: np.fromiter((e[2].total for e in checked), dtype=float, count=m),
            Term.SHORT: np.fromiter(
                (nan if e[2].short_term is None else e[2].short_term for e in checked),
                dtype=float,
                count=m,
            ),
            Term.LONG: np.fromiter(
                (nan if e[2].long_term is None else e[2].long_term for e in checked),
                dtype=float,
                count=m,
            ),
        }
        for arr in self._weights.values():
            arr.setflags(write=False)
        eb.setflags(write=False)
        ef.setflags(write=False)

        inc = {Mode.BANK: [[] for _ in range(nb)], Mode.FIRM: [[] for _ in range(nf)]}
        for k, (b, f, _) in enumerate(checked):
            inc[Mode.BANK][b].append(k)
            inc[Mode.FIRM][f].append(k)
        # edges are sorted by (bank, firm), so firm incidence lists come out in
        # bank order and bank incidence lists in firm order
        self._inc = {mode: tuple(tuple(x) for x in lists) for mode, lists in inc.items()}
        self._adj = {
            Mode.BANK: tuple(tuple(checked[k][1] for k in x) for x in self._inc[Mode.BANK]),
            Mode.FIRM: tuple(tuple(checked[k][0] for k in x) for x in self._inc[Mode.FIRM]),
        }
        self._fingerprint = None
        self._csr_cache = None

    @classmethod
    def from_records(cls, records, bank_ids: Iterable[str] = (), firm_ids: Iterable[str] = ()):
        """Build a graph from ``(bank_id, firm_id, EdgeWeight)`` records.

        Node indices follow the sorted order of identifiers, so the same set
        of records always yields the same graph. Repeated pairs are summed.
        ``bank_ids``/``firm_ids`` may add nodes that have no edges.
        """
        merged, dups = merge_duplicate_records(records)
        if dups:
            logger.warning("summed %d duplicate (bank, firm) records", dups)
        banks = sorted(set(map(str, bank_ids)) | {str(b) for b, _, _ in merged})
        firms = sorted(set(map(str, firm_ids)) | {str(f) for _, f, _ in merged})
        bi = {x: i for i, x in enumerate(banks)}
        fi = {x: i for i, x in enumerate(firms)}
        return cls(banks, firms, [(bi[str(b)], fi[str(f)], w) for b, f, w in merged])

    # -- basic accessors -------------------------------------------------

    @property
    def bank_count(self) -> int:
        return len(self._ids[Mode.BANK])

    @property
    def firm_count(self) -> int:
        return len(self._ids[Mode.FIRM])

    @property
    def bank_ids(self) -> tuple[str, ...]:
        return self._ids[Mode.BANK]

    @property
    def firm_ids(self) -> tuple[str, ...]:
        return self._ids[Mode.FIRM]

    @property
    def edges(self) -> tuple[tuple[int, int, EdgeWeight], ...]:
        return self._edges

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    @property
    def unsplit_edge_count(self) -> int:
        """Edges that carry only a total amount."""
        return int(np.isnan(self._weights[Term.SHORT]).sum())

    def count(self, mode: Mode) -> int:
        return len(self._ids[mode])

    def ids(self, mode: Mode) -> tuple[str, ...]:
        return self._ids[mode]

    def node(self, mode: Mode, node_id: str) -> NodeRef:
        try:
            return NodeRef(mode, self._lookup[mode][str(node_id)])
        except KeyError:
            raise InvalidNodeError(f"unknown {mode.value} id {node_id!r}") from None

    def node_id(self, n: NodeRef) -> str:
        self.check(n)
        return self._ids[n.mode][n.index]

    def nodes(self, mode: Mode) -> list[NodeRef]:
        return [NodeRef(mode, i) for i in range(self.count(mode))]

    def check(self, n: NodeRef) -> None:
        if not isinstance(n, NodeRef) or not isinstance(n.mode, Mode):
            raise InvalidNodeError(f"not a NodeRef: {n!r}")
        if not 0 <= n.index < self.count(n.mode):
            raise InvalidNodeError(f"{n.mode.value} index {n.index} out of range")

    def incident(self, n: NodeRef) -> tuple[int, ...]:
        """Indices into :attr:`edges` of the links touching ``n``."""
        self.check(n)
        return self._inc[n.mode][n.index]

    def neighbor_indices(self, mode: Mode) -> tuple[tuple[int, ...], ...]:
        """Per-node ascending neighbor indices (opposite mode) for every node."""
        return self._adj[mode]

    def edge_ends(self, mode: Mode) -> np.ndarray:
        """Edge-aligned endpoint indices of the given mode (read-only)."""
        return self._ends[mode]

    def weights(self, term: Term = Term.TOTAL) -> np.ndarray:
        """Edge-aligned weights; NaN for unsplit edges under SHORT/LONG."""
        return self._weights[term]

    # -- population arrays -----------------------------------------------

    def degrees(self, mode: Mode) -> np.ndarray:
        return np.bincount(self._ends[mode], minlength=self.count(mode)).astype(np.int64)

    def strengths(self, mode: Mode, term: Term = Term.TOTAL) -> np.ndarray:
        w = self._weights[term]
        ok = ~np.isnan(w)
        return np.bincount(self._ends[mode][ok], weights=w[ok], minlength=self.count(mode))

    # -- generic adjacency used by distance/diameter ----------------------

    def _flat(self, n: NodeRef) -> int:
        self.check(n)
        return n.index if n.mode is Mode.BANK else self.bank_count + n.index

    def _unflat(self, i: int) -> NodeRef:
        nb = self.bank_count
        return NodeRef(Mode.BANK, i) if i < nb else NodeRef(Mode.FIRM, i - nb)

    def _flat_size(self) -> int:
        return self.bank_count + self.firm_count

    def _csr(self) -> sparse.csr_matrix:
        if self._csr_cache is not None:
            return self._csr_cache
        n = self._flat_size()
        eb, ef = self._ends[Mode.BANK], self._ends[Mode.FIRM] + self.bank_count
        rows = np.concatenate([eb, ef])
        cols = np.concatenate([ef, eb])
        data = np.ones(rows.size, dtype=np.int8)
        self._csr_cache = sparse.csr_matrix((data, (rows, cols)), shape=(n, n))
        return self._csr_cache

    # -- identity --------------------------------------------------------

    def fingerprint(self) -> str:
        """Stable digest of ids and edges, independent of index order."""
        if self._fingerprint is None:
            h = hashlib.sha256()
            for mode in (Mode.BANK, Mode.FIRM):
                for x in sorted(self._ids[mode]):
                    h.update(f"{mode.value}:{x}\n".encode())
            for line in sorted(self._edge_keys()):
                h.update(line.encode())
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def _edge_keys(self):
        banks, firms = self.bank_ids, self.firm_ids
        for b, f, w in self._edges:
            yield f"{banks[b]}\x00{firms[f]}\x00{w.short_term!r}\x00{w.long_term!r}\x00{w.total!r}\n"

    def __eq__(self, other):
        if not isinstance(other, BipartiteGraph):
            return NotImplemented
        return (
            set(self.bank_ids) == set(other.bank_ids)
            and set(self.firm_ids) == set(other.firm_ids)
            and sorted(self._edge_keys()) == sorted(other._edge_keys())
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"BipartiteGraph(banks={self.bank_count}, firms={self.firm_count}, "
            f"edges={self.edge_count})"
        )


def degree(g: BipartiteGraph, n: NodeRef) -> int:
    """Number of distinct counterparties of ``n``."""
    return len(g.incident(n))


def strength(g: BipartiteGraph, n: NodeRef, term: Term = Term.TOTAL) -> float:
    """Sum of the selected loan component over the links of ``n``.

    Links without a short/long split are skipped for ``Term.SHORT`` and
    ``Term.LONG``.
    """
    total = 0.0
    for k in g.incident(n):
        v = g.edges[k][2].component(term)
        if v is not None:
            total += v
    return total


def neighbors(g: BipartiteGraph, n: NodeRef) -> list[NodeRef]:
    g.check(n)
    other = n.mode.other
    return [NodeRef(other, j) for j in g.neighbor_indices(n.mode)[n.index]]


def distance(g, a: NodeRef, b: NodeRef) -> int | None:
    """Hop count of the shortest path from ``a`` to ``b``; ``None`` if unreachable.

    Works on :class:`BipartiteGraph` and on projected graphs.
    """
    src, dst = g._flat(a), g._flat(b)
    if src == dst:
        return 0
    m = g._csr()
    indptr, indices = m.indptr, m.indices
    seen = np.zeros(g._flat_size(), dtype=bool)
    seen[src] = True
    queue = deque([(src, 0)])
    while queue:
        u, d = queue.popleft()
        for v in indices[indptr[u] : indptr[u + 1]]:
            if v == dst:
                return d + 1
            if not seen[v]:
                seen[v] = True
                queue.append((v, d + 1))
    return None


def connected_components(g) -> tuple[int, np.ndarray]:
    """Component count and a flat label array (banks first, then firms)."""
    n = g._flat_size()
    if n == 0:
        return 0, np.zeros(0, dtype=np.int64)
    count, labels = csgraph.connected_components(g._csr(), directed=False)
    return int(count), labels


def diameter(g, chunk: int = 256) -> DiameterResult:
    """Largest finite hop distance inside the giant component.

    The result also carries whether the whole graph is connected, the
    component count and the giant component size. Ties for the giant
    component are resolved towards the component holding the lowest index.
    """
    n = g._flat_size()
    if n == 0:
        raise UndefinedMeasureError("diameter of an empty graph")
    count, labels = connected_components(g)
    sizes = np.bincount(labels)
    giant = int(np.argmax(sizes))
    members = np.flatnonzero(labels == giant)
    m = g._csr()
    best = 0
    for start in range(0, members.size, chunk):
        dist = csgraph.shortest_path(
            m, method="D", directed=False, unweighted=True, indices=members[start : start + chunk]
        )
        finite = dist[np.isfinite(dist)]
        if finite.size:
            best = max(best, int(finite.max()))
    return DiameterResult(best, count == 1, count, int(sizes[giant]))
