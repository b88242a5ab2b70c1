"""Command-line front end.

Every command reads its inputs, computes all results in memory and only then
writes files into ``--out``. Each written file starts with a ``run=<id>``
comment that points at the matching line of ``manifest.jsonl`` in the same
directory. Exit codes: 0 success, 1 invalid input, 2 computation failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, ingest, metrics
from .errors import ConfigError, CreditNetError, LoadError, UndefinedMeasureError
from .graph import BipartiteGraph, Mode, Term, diameter
from .mst import hubs, minimal_spanning_forest
from .projection import project, project_subset, projection_stats
from .synth import GeneratorConfig, generate_with_report
from .tailfit import Explicit, FixedQuantile, fit_tail

logger = logging.getLogger("creditnet")

EXIT_OK, EXIT_INPUT, EXIT_COMPUTE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if math.isnan(x) else repr(float(x))
    return str(x)


def _table(header, rows) -> str:
    return "".join(ingest._csv_line([_fmt(v) for v in r]) for r in [header, *rows])


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


_LOCATION_KEYS = {"out", "verbose", "edges", "attrs", "projection", "table"}


class Run:
    """Collects outputs of one command and writes them with a manifest entry."""

    def __init__(self, command: str, out: Path, inputs, config: dict):
        self.command = command
        self.out = Path(out)
        self.inputs = {str(p): _digest(p) for p in inputs}
        self.config = config
        # the id ignores where files live, so the same analysis elsewhere gives the same bytes
        stable = {k: v for k, v in config.items() if k not in _LOCATION_KEYS}
        key = json.dumps(
            [command, list(self.inputs.values()), stable, __version__], sort_keys=True, default=str
        )
        self.run_id = hashlib.sha256(key.encode()).hexdigest()[:16]
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str, style: str = "#"):
        if style == "xml":
            head, _, rest = text.partition("\n")
            text = f"{head}\n<!-- run={self.run_id} -->\n{rest}"
        else:
            text = f"{style} run={self.run_id}\n{text}"
        self.files[name] = text

    def add_export(self, name: str, obj, fmt, **kw):
        fmt = ingest.ExportFormat.parse(fmt)
        comment = f"run={self.run_id}"
        self.files[name] = ingest.render(obj, fmt, comment=comment, **kw)

    def commit(self) -> list[Path]:
        self.out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.files.items():
            path = self.out / name
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            written.append(path)
        entry = {
            "run_id": self.run_id,
            "command": self.command,
            "inputs": self.inputs,
            "config": self.config,
            "version": __version__,
            "outputs": sorted(self.files),
        }
        with open(self.out / "manifest.jsonl", "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True, default=str) + "\n")
        return written


def _load_graph(args) -> BipartiteGraph:
    if Path(args.edges).suffix in (".dot", ".graphml"):
        return ingest.load_graph(args.edges)
    return ingest.load_edges(args.edges)


def _load_attrs(args, g=None):
    if not args.attrs:
        return None
    return ingest.load_attributes(*args.attrs, graph=g)


def _config(args, skip=("func", "command")) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _inputs(*paths):
    out = []
    for p in paths:
        if p is None:
            continue
        out.extend(p if isinstance(p, list) else [p])
    return out


# ---------------------------------------------------------------------------
# stats


def _cdf_table(values) -> str:
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v) & (v > 0)]
    if v.size == 0:
        return _table(["value", "fraction"], [])
    cd = metrics.cumulative_distribution(v)
    return _table(["value", "fraction"], cd.points)


def cmd_stats(args) -> list[str]:
    g = _load_graph(args)
    if g.edge_count == 0:
        raise ConfigError(f"{args.edges}: graph has no links")
    attrs = _load_attrs(args, g)
    term = Term(args.term)
    run = Run("stats", args.out, _inputs(args.edges, args.attrs), _config(args))

    summary = [("bank_count", g.bank_count), ("firm_count", g.firm_count), ("edge_count", g.edge_count),
               ("unsplit_edge_count", g.unsplit_edge_count)]
    for mode in Mode:
        k = g.degrees(mode)
        s = g.strengths(mode, term)
        summary += [
            (f"mean_degree_{mode.value}", float(k.mean())),
            (f"max_degree_{mode.value}", int(k.max())),
            (f"mean_strength_{mode.value}", float(np.nanmean(s))),
            (f"max_strength_{mode.value}", float(np.nanmax(s))),
        ]
        try:
            corr = metrics.strength_degree_correlations(g, mode, term)
            r_raw, r_log = corr["raw"].coefficient, corr["log"].coefficient
        except UndefinedMeasureError:
            r_raw = r_log = None
        summary += [(f"strength_degree_r_{mode.value}", r_raw),
                    (f"strength_degree_log_r_{mode.value}", r_log)]
    d = diameter(g)
    summary += [("components", d.component_count), ("giant_component_size", d.giant_size),
                ("diameter", d.diameter)]
    run.add("summary.csv", _table(["measure", "value"], summary))

    for mode in Mode:
        m = mode.value
        k = g.degrees(mode)
        s = g.strengths(mode, term)
        run.add(f"degree_cdf_{m}.csv", _cdf_table(k))
        run.add(f"strength_cdf_{m}.csv", _cdf_table(s))
        idx, deg, y = metrics.participation_ratios(g, mode, term)
        ids = g.ids(mode)
        run.add(
            f"participation_{m}.csv",
            _table(["node_id", "degree", "inv_degree", "participation_ratio"],
                   [(ids[i], int(kk), 1.0 / kk, float(yy)) for i, kk, yy in zip(idx, deg, y)]),
        )
        knn = metrics.assortativity_summary(g, mode).knn
        header = ["node_id", "degree", "strength", "knn"]
        cols = [list(ids), k, s, knn]
        if attrs is not None and mode is Mode.FIRM:
            debt = attrs.values(mode, ids, "debt")
            asset = attrs.values(mode, ids, "asset")
            header += ["asset", "debt", "capital", "dar"]
            cols += [asset, debt, attrs.values(mode, ids, "capital"),
                     metrics.debt_asset_ratio(debt, asset)]
        elif attrs is not None:
            header += ["capital", "asset"]
            cols += [attrs.values(mode, ids, "capital"), attrs.values(mode, ids, "asset")]
        rows = zip(*cols)
        run.add(f"nodes_{m}.csv", _table(header, rows))
    run.add("weight_cdf.csv", _cdf_table(g.weights(term)))

    shares = []
    for f in g.nodes(Mode.FIRM):
        try:
            sh, lo = metrics.term_share(g, f)
        except UndefinedMeasureError:
            continue
        shares.append((g.node_id(f), sh, lo))
    run.add("term_share.csv", _table(["firm_id", "short_share", "long_share"], shares))
    run.commit()
    return [f"{name}: {value}" for name, value in summary]


# ---------------------------------------------------------------------------
# project


def _parse_filters(items):
    crit = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"filter {item!r} is not KEY=VALUE")
        key = key.strip()
        crit[key] = value.strip() if key == "sector" else _int(value, key)
    return crit


def _int(value, key):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"filter {key} needs an integer code, got {value!r}") from None


def cmd_project(args) -> list[str]:
    g = _load_graph(args)
    mode = Mode(args.mode)
    crit = _parse_filters(args.filter)
    if crit and not args.attrs:
        raise ConfigError("--filter needs --attrs")
    attrs = _load_attrs(args, g)
    if crit:
        p = project_subset(g, mode, attrs.selector(mode, **crit), args.degree_cap, args.drop_isolated)
    else:
        p = project(g, mode, args.degree_cap, args.drop_isolated)
    st = projection_stats(p)
    run = Run("project", args.out, _inputs(args.edges, args.attrs), _config(args))
    run.files[f"projection_{mode.value}.csv"] = ingest.render(p, "csv", comment=f"run={run.run_id}")
    rows = list(st._asdict().items()) + [("skipped_counterparties", p.skipped_counterparties),
                                         ("raw_node_count", p.raw_node_count)]
    run.add(f"projection_{mode.value}_stats.csv", _table(["measure", "value"], rows))
    run.commit()
    return [f"{k}: {_fmt(v)}" for k, v in rows]


# ---------------------------------------------------------------------------
# mst


def cmd_mst(args) -> list[str]:
    inputs = _inputs(args.projection, args.edges, args.attrs)
    if args.projection:
        p = ingest.load_projection(args.projection)
        g = None
    else:
        if not args.mode:
            raise ConfigError("--edges needs --mode")
        g = _load_graph(args)
        p = project(g, Mode(args.mode))
    if args.mode and Mode(args.mode) is not p.mode:
        raise ConfigError(f"projection holds {p.mode.value} nodes, not {args.mode}")
    attrs = _load_attrs(args, g)
    if p.edge_count == 0:
        raise UndefinedMeasureError("projection has no links; nothing to span")
    f = minimal_spanning_forest(p)
    run = Run("mst", args.out, inputs, _config(args))
    for fmt in dict.fromkeys(args.format or ["csv"]):
        fmt = ingest.ExportFormat.parse(fmt)
        run.add_export(f"forest_{p.mode.value}.{fmt.value}", f, fmt, attrs=attrs, color_by=args.color_by)
    top = hubs(f, args.top)
    run.add(f"hubs_{p.mode.value}.csv", _table(["node_id", "tree_degree"], top))
    run.commit()
    lines = [f"nodes: {f.node_count}", f"tree_edges: {f.edge_count}",
             f"components: {f.component_count}", f"total_weight: {f.total_weight}"]
    return lines + [f"hub {x}: {d}" for x, d in top]


# ---------------------------------------------------------------------------
# fit / corr


def _read_columns(path, names):
    text = ingest._read(path)
    rows = ingest._rows(text)
    try:
        ln, header = next(rows)
    except StopIteration:
        raise LoadError(path, [(1, "missing header row")]) from None
    header = [h.strip() for h in header]
    missing = [n for n in names if n not in header]
    if missing:
        raise LoadError(path, [(ln, f"no column(s) {', '.join(missing)}; have {', '.join(header)}")])
    pos = [header.index(n) for n in names]
    out = [[] for _ in names]
    errors = []
    for ln, fields in rows:
        if len(fields) != len(header):
            errors.append((ln, f"expected {len(header)} fields, got {len(fields)}"))
            continue
        for col, k in zip(out, pos):
            raw = fields[k].strip()
            if raw == "":
                col.append(math.nan)
                continue
            try:
                col.append(float(raw))
            except ValueError:
                errors.append((ln, f"{header[k]}: not a number: {raw!r}"))
                col.append(math.nan)
    if errors:
        raise LoadError(path, errors)
    return [np.asarray(c, dtype=float) for c in out]


def cmd_fit(args) -> list[str]:
    (x,) = _read_columns(args.table, [args.column])
    if args.cutoff is not None:
        strategy = Explicit(args.cutoff)
    else:
        strategy = FixedQuantile(args.cutoff_quantile)
    fit = fit_tail(x, strategy, discrete=args.discrete)
    run = Run("fit", args.out, [args.table], _config(args))
    header = ["column", "mu_hat", "std_error", "cutoff", "tail_count", "discrete", "density_exponent"]
    row = [args.column, fit.mu_hat, fit.std_error, fit.cutoff, fit.tail_count, fit.discrete,
           fit.density_exponent]
    run.add(f"fit_{args.column}.csv", _table(header, [row]))
    run.commit()
    return [f"mu = {fit.mu_hat:.4g} +/- {fit.std_error:.2g} "
            f"({fit.tail_count} samples >= {fit.cutoff:g})"]


def cmd_corr(args) -> list[str]:
    x, y = _read_columns(args.table, [args.x, args.y])
    keep = np.isfinite(x) & np.isfinite(y)
    if args.transform == "log":
        keep &= (x > 0) & (y > 0)
    dropped = int(x.size - keep.sum())
    x, y = x[keep], y[keep]
    if args.transform == "log":
        x, y = np.log(x), np.log(y)
    fn = metrics.pearson if args.method == "pearson" else metrics.kendall_tau
    r = fn(x, y)
    run = Run("corr", args.out, [args.table], _config(args))
    header = ["x", "y", "method", "transform", "coefficient", "p_value", "sigma_multiple",
              "sample_count", "dropped_rows"]
    row = [args.x, args.y, r.method, args.transform, r.coefficient, r.p_value, r.sigma_multiple,
           r.sample_count, dropped]
    run.add(f"corr_{args.x}_{args.y}.csv", _table(header, [row]))
    run.commit()
    extra = f", p = {r.p_value:.3g}" if r.p_value is not None else ""
    extra += f", {r.sigma_multiple:.1f} sigma" if r.sigma_multiple is not None else ""
    return [f"{r.method} {args.y} vs {args.x}: {r.coefficient:.4f}{extra} (N = {r.sample_count})"]


# ---------------------------------------------------------------------------
# synth


def cmd_synth(args) -> list[str]:
    cfg = GeneratorConfig(
        bank_count=args.banks,
        firm_count=args.firms,
        firm_degree_exponent=args.mu,
        mean_firm_degree=args.mean_degree,
        weight_exponent=args.weight_exponent,
        seed=args.seed,
        scale=args.scale,
        attachment_offset=args.attachment_offset,
        bank_size_exponent=None if args.bank_size_exponent <= 0 else args.bank_size_exponent,
    )
    g, attrs, report = generate_with_report(cfg)
    run = Run("synth", args.out, [], _config(args))
    run.add_export("edges.csv", g, "csv")
    banks, firms = ingest.render_attributes(attrs)
    run.add("banks.csv", banks)
    run.add("firms.csv", firms)
    run.commit()
    kf = g.degrees(Mode.FIRM)
    return [f"banks: {g.bank_count}", f"firms: {g.firm_count}", f"edges: {g.edge_count}",
            f"mean_degree_firm: {kf.mean():.3f}", f"max_degree_bank: {g.degrees(Mode.BANK).max()}",
            f"dropped_stubs: {report.dropped_stubs}"]


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="creditnet", description="Analyse bipartite bank-firm credit networks.")
    p.add_argument("--version", action="version", version=f"creditnet {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, edges=True):
        if edges:
            sp.add_argument("--edges", required=True, help="edge list (CSV, DOT or GraphML)")
        sp.add_argument("--out", required=True, type=Path, help="output directory")

    def attrs(sp):
        sp.add_argument("--attrs", action="append", help="bank or firm attribute CSV (repeatable)")

    sp = sub.add_parser("stats", help="summary measures and distribution tables")
    common(sp)
    attrs(sp)
    sp.add_argument("--term", choices=[t.value for t in Term], default="total")
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("project", help="one-mode projection edge list")
    common(sp)
    attrs(sp)
    sp.add_argument("--mode", choices=["bank", "firm"], required=True)
    sp.add_argument("--filter", action="append", metavar="KEY=VALUE",
                    help="keep nodes with bank_type, region, group or sector equal to VALUE")
    sp.add_argument("--degree-cap", type=int, help="ignore counterparties with more links")
    sp.add_argument("--drop-isolated", action="store_true")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("mst", help="minimal spanning forest of a projection")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--projection", help="projection CSV written by 'project'")
    src.add_argument("--edges", help="bipartite edge list, projected on the fly")
    sp.add_argument("--out", required=True, type=Path, help="output directory")
    attrs(sp)
    sp.add_argument("--mode", choices=["bank", "firm"])
    sp.add_argument("--format", action="append", choices=[f.value for f in ingest.ExportFormat],
                    help="forest export format (repeatable; default csv)")
    sp.add_argument("--color-by", choices=["type", "region", "group"])
    sp.add_argument("--top", type=int, default=10, help="number of hubs to report")
    sp.set_defaults(func=cmd_mst)

    sp = sub.add_parser("fit", help="Hill estimate of a tail exponent")
    sp.add_argument("--table", required=True, help="CSV with a header row")
    sp.add_argument("--column", required=True)
    sp.add_argument("--out", required=True, type=Path, help="output directory")
    cut = sp.add_mutually_exclusive_group()
    cut.add_argument("--cutoff-quantile", type=float, default=0.5)
    cut.add_argument("--cutoff", type=float, help="explicit lower cutoff")
    sp.add_argument("--discrete", action="store_true", help="integer data such as degrees")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("corr", help="correlation between two table columns")
    sp.add_argument("--table", required=True, help="CSV with a header row")
    sp.add_argument("--x", required=True)
    sp.add_argument("--y", required=True)
    sp.add_argument("--method", choices=["pearson", "kendall"], default="pearson")
    sp.add_argument("--transform", choices=["none", "log"], default="none")
    sp.add_argument("--out", required=True, type=Path, help="output directory")
    sp.set_defaults(func=cmd_corr)

    sp = sub.add_parser("synth", help="generate a synthetic credit network")
    sp.add_argument("--out", required=True, type=Path, help="output directory")
    d = GeneratorConfig()
    sp.add_argument("--seed", type=int, default=d.seed)
    sp.add_argument("--scale", type=float, default=d.scale)
    sp.add_argument("--banks", type=int, default=d.bank_count)
    sp.add_argument("--firms", type=int, default=d.firm_count)
    sp.add_argument("--mu", type=float, default=d.firm_degree_exponent,
                    help="cumulative tail exponent of firm degrees")
    sp.add_argument("--mean-degree", type=float, default=d.mean_firm_degree)
    sp.add_argument("--weight-exponent", type=float, default=d.weight_exponent)
    sp.add_argument("--attachment-offset", type=float, default=d.attachment_offset)
    sp.add_argument("--bank-size-exponent", type=float, default=d.bank_size_exponent,
                    help="tail exponent of bank size factors (0 for equal sizes)")
    sp.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as exc:
        print(f"creditnet: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        lines = args.func(args)
    except (LoadError, ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"creditnet: invalid input: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (UndefinedMeasureError, CreditNetError) as exc:
        print(f"creditnet: cannot compute: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    for line in lines:
        print(line)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
