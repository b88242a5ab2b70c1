"""Reading and writing credit-network files, plus the bank and sector tables.

File conventions: UTF-8, comma separated, first non-comment row is the
header, lines starting with ``#`` are comments. Amounts are in million yen.

Edge list::

    bank_id,firm_id,short_term,long_term[,total]

``short_term``/``long_term`` may both be empty when only ``total`` is known.

Attributes::

    bank_id,name,bank_type,region,capital,asset
    firm_id,name,sector,asset,debt,capital

Projections and forests::

    node_i,node_j,shared_count[,distance]
"""

from __future__ import annotations

import csv
import enum
import io
import logging
import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigError, LoadError
from .graph import BipartiteGraph, EdgeWeight, Mode, merge_duplicate_records
from .mst import SpanningForest
from .projection import ProjectedGraph

logger = logging.getLogger(__name__)

__all__ = [
    "BANK_TYPES",
    "REGIONS",
    "SECTORS",
    "MANUFACTURING",
    "SECTOR_GROUPS",
    "GROUP_LABELS",
    "BankInfo",
    "FirmInfo",
    "NodeAttributes",
    "EdgeLoadReport",
    "ExportFormat",
    "sector_group",
    "read_edges",
    "load_edges",
    "load_attributes",
    "load_graph",
    "load_projection",
    "render",
    "export_graph",
    "render_attributes",
    "export_attributes",
]

# code -> (color, description)
BANK_TYPES = {
    1: ("black", "long-term credit bank"),
    2: ("blue", "city bank"),
    3: ("green", "regional bank"),
    4: ("yellow", "trust bank"),
    5: ("orange", "secondary regional bank"),
    6: ("white", "other institution"),
}

REGIONS = {
    0: ("white", "not regional"),
    1: ("black", "Hokkaido and Tohoku"),
    2: ("blue", "Kantou"),
    3: ("green", "Chubu"),
    4: ("yellow", "Kinki"),
    5: ("orange", "Chugoku"),
    6: ("red", "Shikoku"),
    7: ("brown", "Kyushu"),
}

MANUFACTURING = (
    "Foods",
    "Textile Products",
    "Pulp & Paper",
    "Chemicals",
    "Drugs",
    "Petroleum",
    "Rubber Products",
    "Stone, Clay & Glass Products",
    "Iron & Steel",
    "Non-ferrous Metal & Metal Products",
    "Machinery",
    "Electric & Electronic Equip.",
    "Shipbuilding & Repair",
    "Motor Vehicles & Auto Parts",
    "Transportation Equip.",
    "Precision Equip.",
    "Other Manufacturing",
)

NON_MANUFACTURING = (
    "Fish & Marine Products",
    "Mining",
    "Construction",
    "Wholesale Trade",
    "Retail Trade",
    "Securities houses",
    "Credit & Leasing",
    "Real Estate",
    "Railroad Transportation",
    "Trucking",
    "Sea Transportation",
    "Air Transportation",
    "Warehousing & Harbor Transportation",
    "Communication Services",
    "Utilities(Electric)",
    "Utilities(Gas)",
    "Services",
)

SECTORS = MANUFACTURING + NON_MANUFACTURING

_EXPLICIT_GROUPS = {
    "Foods": 1,
    "Chemicals": 1,
    "Drugs": 1,
    "Iron & Steel": 2,
    "Non-ferrous Metal & Metal Products": 2,
    "Motor Vehicles & Auto Parts": 3,
    "Transportation Equip.": 3,
    "Shipbuilding & Repair": 3,
    "Machinery": 4,
    "Electric & Electronic Equip.": 4,
    "Precision Equip.": 4,
    "Other Manufacturing": 4,
}

SECTOR_GROUPS = {
    s: _EXPLICIT_GROUPS.get(s, 5) if s in MANUFACTURING else 6 for s in SECTORS
}

GROUP_LABELS = {
    1: "Foods, Chemicals, Drugs",
    2: "Iron, Steel, Non-ferrous Metals, Metal Products",
    3: "Motor Vehicles, Auto Parts, Transportation Equip., Shipbuilding",
    4: "Machinery, Electric and Electronic Equip., Precision Equip., Other Manufacturing",
    5: "Other manufacturing sectors",
    6: "Non-manufacturing",
}

GROUP_COLORS = {1: "red", 2: "gray", 3: "blue", 4: "green", 5: "orange", 6: "white"}
UNKNOWN_COLOR = "lightgray"


def _sector_key(name: str) -> str:
    return re.sub(r"[\s]+", "", name).casefold()


_SECTOR_LOOKUP = {_sector_key(s): s for s in SECTORS}


def sector_group(sector: str) -> int:
    """Six-way aggregate group (1-6) of one of the 34 industrial sectors.

    Matching ignores case and whitespace.
    """
    canon = _SECTOR_LOOKUP.get(_sector_key(sector))
    if canon is None:
        raise ConfigError(f"unknown sector {sector!r}")
    return SECTOR_GROUPS[canon]


# ---------------------------------------------------------------------------
# attribute model


@dataclass(frozen=True)
class BankInfo:
    name: str
    bank_type: int
    region: int
    capital: float | None = None
    asset: float | None = None

    @property
    def type_label(self) -> str:
        return BANK_TYPES[self.bank_type][1]

    @property
    def region_label(self) -> str:
        return REGIONS[self.region][1]


@dataclass(frozen=True)
class FirmInfo:
    name: str
    sector: str
    asset: float | None = None
    debt: float | None = None
    capital: float | None = None

    @property
    def group(self) -> int:
        return SECTOR_GROUPS[self.sector]


class AttributeReport(NamedTuple):
    orphan_banks: int
    orphan_firms: int
    missing_banks: int
    missing_firms: int


@dataclass
class NodeAttributes:
    banks: dict[str, BankInfo] = field(default_factory=dict)
    firms: dict[str, FirmInfo] = field(default_factory=dict)
    report: AttributeReport | None = None

    def color(self, mode: Mode, node_id: str, scheme: str | None = None) -> str:
        """Fill colour of a node: bank ``type``/``region`` or firm ``group``."""
        if mode is Mode.BANK:
            info = self.banks.get(node_id)
            if info is None:
                return UNKNOWN_COLOR
            if scheme in (None, "type"):
                return BANK_TYPES[info.bank_type][0]
            if scheme == "region":
                return REGIONS[info.region][0]
            raise ConfigError(f"unknown bank colour scheme {scheme!r}")
        info = self.firms.get(node_id)
        if info is None:
            return UNKNOWN_COLOR
        # bank schemes leave firms coloured by group
        if scheme in (None, "group", "type", "region"):
            return GROUP_COLORS[info.group]
        raise ConfigError(f"unknown firm colour scheme {scheme!r}")

    def class_code(self, mode: Mode, node_id: str, scheme: str | None = None) -> str:
        if mode is Mode.BANK:
            info = self.banks.get(node_id)
            if info is None:
                return ""
            return str(info.region if scheme == "region" else info.bank_type)
        info = self.firms.get(node_id)
        return "" if info is None else str(info.group)

    def values(self, mode: Mode, ids, name: str) -> np.ndarray:
        """Numeric attribute aligned with ``ids``; NaN where missing."""
        table = self.banks if mode is Mode.BANK else self.firms
        out = np.full(len(ids), np.nan)
        for k, x in enumerate(ids):
            info = table.get(x)
            v = None if info is None else getattr(info, name)
            if v is not None:
                out[k] = float(v)
        return out

    def selector(self, mode: Mode, **criteria) -> Callable[[str], bool]:
        """Predicate on node ids, e.g. ``selector(Mode.FIRM, group=1)``."""
        table = self.banks if mode is Mode.BANK else self.firms
        for key in criteria:
            if key not in ("bank_type", "region", "group", "sector"):
                raise ConfigError(f"cannot filter on {key!r}")
        if "sector" in criteria:
            canon = _SECTOR_LOOKUP.get(_sector_key(str(criteria["sector"])))
            if canon is None:
                raise ConfigError(f"unknown sector {criteria['sector']!r}")
            criteria = {**criteria, "sector": canon}

        def pick(node_id: str) -> bool:
            info = table.get(node_id)
            return info is not None and all(
                getattr(info, k, None) == v for k, v in criteria.items()
            )

        return pick


# ---------------------------------------------------------------------------
# CSV helpers


def _rows(text: str):
    """Yield ``(line_number, fields)`` for non-blank, non-comment lines."""
    for ln, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield ln, next(csv.reader([line]))


def _comments(text: str):
    for line in text.splitlines():
        s = line.strip()
        if s.startswith("#"):
            yield s[1:].strip()


def _read(path) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def _amount(raw: str, name: str, errors, ln) -> float | None:
    raw = raw.strip()
    if raw == "":
        return None
    try:
        v = float(raw)
    except ValueError:
        errors.append((ln, f"{name}: not a number: {raw!r}"))
        return None
    if not math.isfinite(v):
        errors.append((ln, f"{name}: non-finite value {raw!r}"))
        return None
    return v


def _header(path, rows, required, optional):
    try:
        ln, header = next(rows)
    except StopIteration:
        raise LoadError(path, [(1, "missing header row")]) from None
    header = [h.strip() for h in header]
    errs = []
    unknown = [h for h in header if h not in required and h not in optional]
    if unknown:
        errs.append((ln, f"unknown column(s): {', '.join(unknown)}"))
    missing = [h for h in required if h not in header]
    if missing:
        errs.append((ln, f"missing column(s): {', '.join(missing)}"))
    if len(set(header)) != len(header):
        errs.append((ln, "repeated column name"))
    if errs:
        raise LoadError(path, errs)
    return header


class EdgeLoadReport(NamedTuple):
    rows: int
    duplicates: int
    dropped_zero: int
    unsplit: int


EDGE_COLUMNS = ("bank_id", "firm_id", "short_term", "long_term")


def _parse_edges(path, text):
    rows = _rows(text)
    header = _header(path, rows, EDGE_COLUMNS, ("total",))
    errors, records = [], []
    n_rows = dropped = unsplit = 0
    for ln, fields in rows:
        n_rows += 1
        if len(fields) != len(header):
            errors.append((ln, f"expected {len(header)} fields, got {len(fields)}"))
            continue
        rec = dict(zip(header, fields))
        bank, firm = rec["bank_id"].strip(), rec["firm_id"].strip()
        if not bank or not firm:
            errors.append((ln, "empty bank_id or firm_id"))
        s = _amount(rec["short_term"], "short_term", errors, ln)
        l = _amount(rec["long_term"], "long_term", errors, ln)
        t = _amount(rec.get("total", ""), "total", errors, ln)
        bad = False
        for name, v in (("short_term", s), ("long_term", l), ("total", t)):
            if v is not None and v < 0:
                errors.append((ln, f"{name}: negative amount {v!r}"))
                bad = True
        if bad or not bank or not firm:
            continue
        blank_s, blank_l = rec["short_term"].strip() == "", rec["long_term"].strip() == ""
        if blank_s != blank_l:
            errors.append((ln, "short_term and long_term must both be given or both be empty"))
            continue
        if blank_s:
            if t is None:
                if rec.get("total", "").strip() == "":
                    errors.append((ln, "no amounts: give short_term/long_term or total"))
                continue
            if t == 0:
                dropped += 1
                continue
            unsplit += 1
            records.append((bank, firm, EdgeWeight.total_only(t)))
            continue
        if s is None or l is None:
            continue
        if t is not None and not math.isclose(t, s + l, rel_tol=1e-9, abs_tol=1e-9):
            errors.append((ln, f"total {t!r} != short_term + long_term {s + l!r}"))
            continue
        if s + l == 0:
            dropped += 1
            continue
        records.append((bank, firm, EdgeWeight.split(s, l)))
    if errors:
        raise LoadError(path, errors)
    merged, dups = merge_duplicate_records(records)
    return merged, EdgeLoadReport(n_rows, dups, dropped, unsplit)


def read_edges(path) -> tuple[BipartiteGraph, EdgeLoadReport]:
    """Load an edge-list CSV and report what was merged or dropped.

    Comment lines ``# isolated_bank=<id>`` and ``# isolated_firm=<id>`` declare
    nodes without links.

    Raises :class:`LoadError` listing every bad row; nothing is returned
    unless the whole file is valid.
    """
    text = _read(path)
    merged, report = _parse_edges(path, text)
    extra = {"isolated_bank": [], "isolated_firm": []}
    for c in _comments(text):
        key, sep, value = c.partition("=")
        if sep and key.strip() in extra:
            extra[key.strip()].append(value.strip())
    g = BipartiteGraph.from_records(merged, extra["isolated_bank"], extra["isolated_firm"])
    return g, report


def load_edges(path) -> BipartiteGraph:
    g, report = read_edges(path)
    if report.duplicates:
        logger.warning("%s: summed %d duplicate (bank, firm) rows", path, report.duplicates)
    if report.dropped_zero:
        logger.warning("%s: dropped %d zero-amount rows", path, report.dropped_zero)
    if report.unsplit:
        logger.info("%s: %d rows carry a total only", path, report.unsplit)
    return g


BANK_COLUMNS = ("bank_id", "name", "bank_type", "region", "capital", "asset")
FIRM_COLUMNS = ("firm_id", "name", "sector", "asset", "debt", "capital")


def _code(raw, name, allowed, default, errors, ln):
    raw = raw.strip()
    if raw == "":
        return default
    try:
        v = int(raw)
    except ValueError:
        errors.append((ln, f"{name}: not an integer code: {raw!r}"))
        return None
    if v not in allowed:
        errors.append((ln, f"{name}: code {v} outside {min(allowed)}..{max(allowed)}"))
        return None
    return v


def _parse_attrs(path, text, banks, firms):
    rows = _rows(text)
    try:
        ln0, first = next(_rows(text))
    except StopIteration:
        raise LoadError(path, [(1, "missing header row")]) from None
    kind = first[0].strip() if first else ""
    if kind == "bank_id":
        header = _header(path, rows, BANK_COLUMNS[:2], BANK_COLUMNS[2:])
    elif kind == "firm_id":
        header = _header(path, rows, FIRM_COLUMNS[:3], FIRM_COLUMNS[3:])
    else:
        raise LoadError(path, [(ln0, "header must start with bank_id or firm_id")])
    errors = []
    parsed, seen = {}, set()
    for ln, fields in rows:
        if len(fields) != len(header):
            errors.append((ln, f"expected {len(header)} fields, got {len(fields)}"))
            continue
        rec = {k: v for k, v in zip(header, fields)}
        node_id = rec[kind].strip()
        if not node_id:
            errors.append((ln, f"empty {kind}"))
            continue
        if node_id in seen:
            errors.append((ln, f"{kind} {node_id!r} listed twice"))
            continue
        seen.add(node_id)
        n_err = len(errors)
        nums = {}
        for name in ("capital", "asset", "debt"):
            if name in rec:
                nums[name] = _amount(rec[name], name, errors, ln)
        if nums.get("asset") is not None and nums["asset"] <= 0:
            errors.append((ln, f"asset: must be positive, got {nums['asset']!r}"))
        if nums.get("debt") is not None and nums["debt"] < 0:
            errors.append((ln, f"debt: negative amount {nums['debt']!r}"))
        if kind == "bank_id":
            # institutions without a type code fall in the residual class 6
            t = _code(rec.get("bank_type", ""), "bank_type", BANK_TYPES, 6, errors, ln)
            r = _code(rec.get("region", ""), "region", REGIONS, 0, errors, ln)
            if len(errors) == n_err:
                parsed[node_id] = BankInfo(
                    rec["name"].strip(), t, r, nums.get("capital"), nums.get("asset")
                )
        else:
            canon = _SECTOR_LOOKUP.get(_sector_key(rec["sector"]))
            if canon is None:
                errors.append((ln, f"sector: unknown sector {rec['sector']!r}"))
            if len(errors) == n_err:
                parsed[node_id] = FirmInfo(
                    rec["name"].strip(), canon, nums.get("asset"), nums.get("debt"), nums.get("capital")
                )
    if errors:
        raise LoadError(path, errors)
    target = banks if kind == "bank_id" else firms
    clash = set(parsed) & set(target)
    if clash:
        raise LoadError(path, [(0, f"ids already loaded from another file: {sorted(clash)[:5]}")])
    target.update(parsed)


def load_attributes(*paths, graph: BipartiteGraph | None = None) -> NodeAttributes:
    """Read bank and/or firm attribute files (schema detected from the header).

    With ``graph`` given, ``report`` counts attribute rows whose id is not in
    the graph (orphans) and graph nodes without attributes (missing).
    """
    banks: dict[str, BankInfo] = {}
    firms: dict[str, FirmInfo] = {}
    for p in paths:
        _parse_attrs(p, _read(p), banks, firms)
    report = None
    if graph is not None:
        gb, gf = set(graph.bank_ids), set(graph.firm_ids)
        report = AttributeReport(
            len(set(banks) - gb), len(set(firms) - gf), len(gb - set(banks)), len(gf - set(firms))
        )
        if any(report):
            logger.warning("attribute coverage: %s", report._asdict())
    return NodeAttributes(banks, firms, report)


# ---------------------------------------------------------------------------
# rendering


class ExportFormat(enum.Enum):
    EDGE_CSV = "csv"
    DOT = "dot"
    GRAPHML = "graphml"

    @classmethod
    def parse(cls, value) -> "ExportFormat":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower().lstrip("."))
        except ValueError:
            raise ConfigError(f"unknown export format {value!r}") from None

    @classmethod
    def from_path(cls, path) -> "ExportFormat":
        return cls.parse(Path(path).suffix or "csv")


def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv_line(fields) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow(fields)
    return buf.getvalue()


def _comment_lines(comment, prefix):
    if not comment:
        return []
    return [f"{prefix} {line}".rstrip() + "\n" for line in str(comment).splitlines()]


def _sorted_bipartite(g: BipartiteGraph):
    banks, firms = g.bank_ids, g.firm_ids
    edges = sorted(((banks[b], firms[f], w) for b, f, w in g.edges), key=lambda e: (e[0], e[1]))
    return sorted(banks), sorted(firms), edges


def _sorted_projection(obj):
    if isinstance(obj, SpanningForest):
        ids = obj.node_ids
        rows = [(ids[e.i], ids[e.j], e.weight, e.distance) for e in obj.edges]
    else:
        ids = obj.node_ids
        rows = [(ids[i], ids[j], w, None) for i, j, w in obj.edges]
    rows = [(a, b, w, d) if a <= b else (b, a, w, d) for a, b, w, d in rows]
    rows.sort(key=lambda r: (r[0], r[1]))
    return sorted(ids), rows


def _render_csv(obj, comment):
    out = _comment_lines(comment, "#")
    if isinstance(obj, BipartiteGraph):
        banks, firms, edges = _sorted_bipartite(obj)
        out.append("# amounts in million yen\n")
        linked_b = {e[0] for e in edges}
        linked_f = {e[1] for e in edges}
        out += [f"# isolated_bank={x}\n" for x in banks if x not in linked_b]
        out += [f"# isolated_firm={x}\n" for x in firms if x not in linked_f]
        with_total = any(not w.has_split for _, _, w in edges)
        cols = list(EDGE_COLUMNS) + (["total"] if with_total else [])
        out.append(_csv_line(cols))
        for b, f, w in edges:
            if w.has_split:
                row = [b, f, _num(w.short_term), _num(w.long_term)]
                if with_total:
                    row.append("")
            else:
                row = [b, f, "", "", _num(w.total)]
            out.append(_csv_line(row))
        return "".join(out)
    ids, rows = _sorted_projection(obj)
    forest = isinstance(obj, SpanningForest)
    out.append(f"# mode={obj.mode.value}\n")
    linked = {r[0] for r in rows} | {r[1] for r in rows}
    for x in ids:
        if x not in linked:
            out.append(f"# isolated={x}\n")
    out.append(_csv_line(["node_i", "node_j", "shared_count"] + (["distance"] if forest else [])))
    for a, b, w, d in rows:
        out.append(_csv_line([a, b, _num(w)] + ([_num(d)] if forest else [])))
    return "".join(out)


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _dot_attrs(pairs) -> str:
    return ", ".join(f"{k}={_dot_quote(str(v))}" for k, v in pairs)


def _node_decor(attrs, mode, node_id, color_by):
    if attrs is None:
        return []
    return [
        ("fillcolor", attrs.color(mode, node_id, color_by)),
        ("class", attrs.class_code(mode, node_id, color_by)),
    ]


def _render_dot(obj, attrs, color_by, comment):
    out = _comment_lines(comment, "//")
    if isinstance(obj, BipartiteGraph):
        banks, firms, edges = _sorted_bipartite(obj)
        out.append('graph "credit" {\n')
        out.append("  node [style=filled];\n")
        for mode, ids in ((Mode.BANK, banks), (Mode.FIRM, firms)):
            for x in ids:
                pairs = [("label", x), ("mode", mode.value)] + _node_decor(attrs, mode, x, color_by)
                out.append(f"  {_dot_quote(mode.value + ':' + x)} [{_dot_attrs(pairs)}];\n")
        for b, f, w in edges:
            pairs = [("total", _num(w.total))]
            if w.has_split:
                pairs = [("short_term", _num(w.short_term)), ("long_term", _num(w.long_term))] + pairs
            out.append(f"  {_dot_quote('bank:' + b)} -- {_dot_quote('firm:' + f)} [{_dot_attrs(pairs)}];\n")
        out.append("}\n")
        return "".join(out)
    ids, rows = _sorted_projection(obj)
    kind = "forest" if isinstance(obj, SpanningForest) else "projection"
    out.append(f"graph {_dot_quote(obj.mode.value + '_' + kind)} {{\n")
    out.append("  node [style=filled];\n")
    for x in ids:
        pairs = [("label", x)] + _node_decor(attrs, obj.mode, x, color_by)
        out.append(f"  {_dot_quote(x)} [{_dot_attrs(pairs)}];\n")
    for a, b, w, d in rows:
        pairs = [("shared_count", _num(w))] + ([("distance", _num(d))] if d is not None else [])
        out.append(f"  {_dot_quote(a)} -- {_dot_quote(b)} [{_dot_attrs(pairs)}];\n")
    out.append("}\n")
    return "".join(out)


_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def _render_graphml(obj, attrs, color_by, comment):
    root = ET.Element("graphml", {"xmlns": _GRAPHML_NS})
    if comment:
        root.append(ET.Comment(f" {comment} "))
    bip = isinstance(obj, BipartiteGraph)
    node_keys = ["label"] + (["mode"] if bip else []) + (["color", "class"] if attrs else [])
    if bip:
        edge_keys = [("short_term", "double"), ("long_term", "double"), ("total", "double")]
    else:
        edge_keys = [("shared_count", "int")]
        if isinstance(obj, SpanningForest):
            edge_keys.append(("distance", "double"))
    for k in node_keys:
        ET.SubElement(root, "key", {"id": k, "for": "node", "attr.name": k, "attr.type": "string"})
    for k, t in edge_keys:
        ET.SubElement(root, "key", {"id": k, "for": "edge", "attr.name": k, "attr.type": t})

    def data(parent, key, value):
        el = ET.SubElement(parent, "data", {"key": key})
        el.text = value

    if bip:
        banks, firms, edges = _sorted_bipartite(obj)
        graph = ET.SubElement(root, "graph", {"id": "credit", "edgedefault": "undirected"})
        for mode, ids in ((Mode.BANK, banks), (Mode.FIRM, firms)):
            for x in ids:
                node = ET.SubElement(graph, "node", {"id": f"{mode.value}:{x}"})
                data(node, "label", x)
                data(node, "mode", mode.value)
                for k, v in _node_decor(attrs, mode, x, color_by):
                    data(node, "color" if k == "fillcolor" else k, v)
        for b, f, w in edges:
            e = ET.SubElement(graph, "edge", {"source": f"bank:{b}", "target": f"firm:{f}"})
            if w.has_split:
                data(e, "short_term", _num(w.short_term))
                data(e, "long_term", _num(w.long_term))
            data(e, "total", _num(w.total))
    else:
        ids, rows = _sorted_projection(obj)
        kind = "forest" if isinstance(obj, SpanningForest) else "projection"
        graph = ET.SubElement(
            root, "graph", {"id": f"{obj.mode.value}_{kind}", "edgedefault": "undirected"}
        )
        for x in ids:
            node = ET.SubElement(graph, "node", {"id": x})
            data(node, "label", x)
            for k, v in _node_decor(attrs, obj.mode, x, color_by):
                data(node, "color" if k == "fillcolor" else k, v)
        for a, b, w, d in rows:
            e = ET.SubElement(graph, "edge", {"source": a, "target": b})
            data(e, "shared_count", _num(w))
            if d is not None:
                data(e, "distance", _num(d))
    ET.indent(root, space="  ")
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def render(obj, fmt, attrs: NodeAttributes | None = None, color_by: str | None = None, comment: str | None = None) -> str:
    """Serialize a bipartite graph, projection or forest to text.

    Output is ordered by node id, so equal objects always render to the same
    bytes. ``attrs`` adds fill colours and class codes to DOT/GraphML nodes;
    ``color_by`` picks ``type``/``region`` for banks (``group`` for firms).
    """
    fmt = ExportFormat.parse(fmt)
    if not isinstance(obj, (BipartiteGraph, ProjectedGraph, SpanningForest)):
        raise ConfigError(f"cannot export {type(obj).__name__}")
    if fmt is ExportFormat.EDGE_CSV:
        return _render_csv(obj, comment)
    if fmt is ExportFormat.DOT:
        return _render_dot(obj, attrs, color_by, comment)
    return _render_graphml(obj, attrs, color_by, comment)


def export_graph(obj, path, fmt=None, attrs=None, color_by=None, comment=None) -> Path:
    """Write :func:`render` output to ``path`` (format from suffix if not given)."""
    fmt = ExportFormat.from_path(path) if fmt is None else ExportFormat.parse(fmt)
    text = render(obj, fmt, attrs, color_by, comment)
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


def _opt(x) -> str:
    return "" if x is None else _num(x)


def render_attributes(attrs: NodeAttributes) -> tuple[str, str]:
    """Bank and firm attribute CSV texts, rows sorted by id."""
    bank = [_csv_line(BANK_COLUMNS)]
    for x in sorted(attrs.banks):
        b = attrs.banks[x]
        bank.append(_csv_line([x, b.name, b.bank_type, b.region, _opt(b.capital), _opt(b.asset)]))
    firm = [_csv_line(FIRM_COLUMNS)]
    for x in sorted(attrs.firms):
        f = attrs.firms[x]
        firm.append(_csv_line([x, f.name, f.sector, _opt(f.asset), _opt(f.debt), _opt(f.capital)]))
    return "".join(bank), "".join(firm)


def export_attributes(attrs: NodeAttributes, bank_path, firm_path) -> tuple[Path, Path]:
    texts = render_attributes(attrs)
    paths = (Path(bank_path), Path(firm_path))
    for path, text in zip(paths, texts):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return paths


# ---------------------------------------------------------------------------
# reading back DOT / GraphML / projection CSV

_DOT_STR = r'"((?:[^"\\]|\\.)*)"'
_DOT_NODE = re.compile(rf"^\s*{_DOT_STR}\s*\[(.*)\];\s*$")
_DOT_EDGE = re.compile(rf"^\s*{_DOT_STR}\s*--\s*{_DOT_STR}\s*\[(.*)\];\s*$")
_DOT_ATTR = re.compile(rf"(\w+)={_DOT_STR}")


def _dot_unquote(s: str) -> str:
    return re.sub(r"\\(.)", lambda m: "\n" if m.group(1) == "n" else m.group(1), s)


def _weight_from(attrs: dict, errors, ln) -> EdgeWeight | None:
    try:
        if "short_term" in attrs:
            return EdgeWeight.split(float(attrs["short_term"]), float(attrs["long_term"]))
        return EdgeWeight.total_only(float(attrs["total"]))
    except (KeyError, ValueError, ConfigError) as exc:
        errors.append((ln, f"bad edge amounts: {exc}"))
        return None


def _split_node_name(name, errors, ln):
    mode, sep, node_id = name.partition(":")
    if not sep or mode not in ("bank", "firm"):
        errors.append((ln, f"node {name!r} lacks a bank:/firm: prefix"))
        return None, None
    return Mode(mode), node_id


def _load_dot(path, text):
    errors = []
    banks, firms, records = [], [], []
    for ln, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s.startswith("//") or s.startswith("graph ") or s == "}" or s.startswith("node "):
            continue
        m = _DOT_EDGE.match(line)
        if m:
            a = _dot_unquote(m.group(1))
            b = _dot_unquote(m.group(2))
            kv = {k: _dot_unquote(v) for k, v in _DOT_ATTR.findall(m.group(3))}
            ma, ia = _split_node_name(a, errors, ln)
            mb, ib = _split_node_name(b, errors, ln)
            w = _weight_from(kv, errors, ln)
            if ma is Mode.BANK and mb is Mode.FIRM and w is not None:
                records.append((ia, ib, w))
            elif ma is not None and mb is not None:
                errors.append((ln, "edge must run from a bank to a firm"))
            continue
        m = _DOT_NODE.match(line)
        if m:
            mode, node_id = _split_node_name(_dot_unquote(m.group(1)), errors, ln)
            if mode is Mode.BANK:
                banks.append(node_id)
            elif mode is Mode.FIRM:
                firms.append(node_id)
            continue
        errors.append((ln, f"unrecognised DOT statement: {s[:60]!r}"))
    if errors:
        raise LoadError(path, errors)
    return BipartiteGraph.from_records(records, banks, firms)


def _load_graphml(path, text):
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise LoadError(path, [(exc.position[0], f"XML error: {exc}")]) from None
    ns = {"g": _GRAPHML_NS}
    graph = root.find("g:graph", ns)
    if graph is None:
        raise LoadError(path, [(0, "no <graph> element")])
    errors = []
    banks, firms, records = [], [], []
    for node in graph.findall("g:node", ns):
        mode, node_id = _split_node_name(node.get("id", ""), errors, 0)
        if mode is Mode.BANK:
            banks.append(node_id)
        elif mode is Mode.FIRM:
            firms.append(node_id)
    for edge in graph.findall("g:edge", ns):
        kv = {d.get("key"): d.text or "" for d in edge.findall("g:data", ns)}
        ma, ia = _split_node_name(edge.get("source", ""), errors, 0)
        mb, ib = _split_node_name(edge.get("target", ""), errors, 0)
        w = _weight_from(kv, errors, 0)
        if ma is Mode.BANK and mb is Mode.FIRM and w is not None:
            records.append((ia, ib, w))
        elif ma is not None and mb is not None:
            errors.append((0, "edge must run from a bank to a firm"))
    if errors:
        raise LoadError(path, errors)
    return BipartiteGraph.from_records(records, banks, firms)


def load_graph(path, fmt=None) -> BipartiteGraph:
    """Load a bipartite graph written by :func:`export_graph` in any format."""
    fmt = ExportFormat.from_path(path) if fmt is None else ExportFormat.parse(fmt)
    if fmt is ExportFormat.EDGE_CSV:
        return load_edges(path)
    text = _read(path)
    if fmt is ExportFormat.DOT:
        return _load_dot(path, text)
    return _load_graphml(path, text)


def sniff_csv(path) -> str:
    """``"edges"`` for a bank-firm edge list, ``"projection"`` for node_i/node_j files."""
    for _, fields in _rows(_read(path)):
        first = fields[0].strip() if fields else ""
        if first == "bank_id":
            return "edges"
        if first == "node_i":
            return "projection"
        break
    raise LoadError(path, [(1, "cannot tell edge list from projection by its header")])


def load_projection(path, mode: Mode | None = None) -> ProjectedGraph:
    """Read a projection (or forest) CSV back into a :class:`ProjectedGraph`.

    The ``distance`` column of forest files is ignored; distances are always
    recomputed from shared counts.
    """
    text = _read(path)
    meta_mode, isolated = None, []
    for c in _comments(text):
        key, sep, value = c.partition("=")
        if sep and key.strip() == "mode":
            meta_mode = value.strip()
        elif sep and key.strip() == "isolated":
            isolated.append(value.strip())
    if mode is None:
        if meta_mode not in ("bank", "firm"):
            raise LoadError(path, [(1, "projection mode unknown: no '# mode=' line")])
        mode = Mode(meta_mode)
    rows = _rows(text)
    header = _header(path, rows, ("node_i", "node_j", "shared_count"), ("distance",))
    errors, pairs = [], {}
    for ln, fields in rows:
        if len(fields) != len(header):
            errors.append((ln, f"expected {len(header)} fields, got {len(fields)}"))
            continue
        rec = dict(zip(header, fields))
        a, b = rec["node_i"].strip(), rec["node_j"].strip()
        if not a or not b or a == b:
            errors.append((ln, "endpoints must be two distinct non-empty ids"))
            continue
        try:
            w = int(rec["shared_count"])
        except ValueError:
            errors.append((ln, f"shared_count: not an integer: {rec['shared_count']!r}"))
            continue
        if w < 1:
            errors.append((ln, "shared_count must be at least 1"))
            continue
        key = (min(a, b), max(a, b))
        if key in pairs:
            errors.append((ln, f"pair {key} listed twice"))
            continue
        pairs[key] = w
    if errors:
        raise LoadError(path, errors)
    ids = sorted({x for k in pairs for x in k} | set(isolated))
    index = {x: k for k, x in enumerate(ids)}
    keys = list(pairs)
    return ProjectedGraph(
        mode,
        ids,
        [index[a] for a, _ in keys],
        [index[b] for _, b in keys],
        [pairs[k] for k in keys],
    )
