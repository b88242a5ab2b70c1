import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditnet import ingest
from creditnet.errors import ConfigError, LoadError
from creditnet.graph import BipartiteGraph, EdgeWeight, Mode
from creditnet.ingest import ExportFormat, NodeAttributes
from creditnet.mst import minimal_spanning_forest
from creditnet.projection import ProjectedGraph, project

from .conftest import graphs, random_graph


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


# --- classification tables -------------------------------------------------


def test_sector_table_shape():
    assert len(ingest.SECTORS) == 34
    assert len(set(ingest.SECTORS)) == 34
    groups = list(ingest.SECTOR_GROUPS.values())
    assert groups.count(6) == 17
    assert set(groups) == {1, 2, 3, 4, 5, 6}
    assert all(ingest.SECTOR_GROUPS[s] <= 5 for s in ingest.MANUFACTURING)


@pytest.mark.parametrize(
    "sector,group",
    [
        ("Foods", 1),
        ("Drugs", 1),
        ("Iron & Steel", 2),
        ("Motor Vehicles & Auto Parts", 3),
        ("Shipbuilding & Repair", 3),
        ("Precision Equip.", 4),
        ("Pulp & Paper", 5),
        ("Stone, Clay & Glass Products", 5),
        ("Construction", 6),
        ("utilities(gas)", 6),
        ("  real   estate ", 6),
    ],
)
def test_sector_group(sector, group):
    assert ingest.sector_group(sector) == group


def test_unknown_sector():
    with pytest.raises(ConfigError):
        ingest.sector_group("Alchemy")


def test_colour_tables():
    assert ingest.BANK_TYPES[2][0] == "blue"
    assert ingest.BANK_TYPES[6][0] == "white"
    assert ingest.REGIONS[6][0] == "red"
    assert ingest.REGIONS[7] == ("brown", "Kyushu")
    assert sorted(ingest.REGIONS) == list(range(8))


# --- edge lists ------------------------------------------------------------


EDGES = """\
# toy book
bank_id,firm_id,short_term,long_term
B1,F1,1.5,2.0
B1,F2,0,3
B2,F1,4,0

B1,F1,0.5,0.0
B2,F2,0,0
"""


def test_read_edges_merges_and_drops(tmp_path):
    g, report = ingest.read_edges(write(tmp_path, "e.csv", EDGES))
    assert report.rows == 5
    assert report.duplicates == 1
    assert report.dropped_zero == 1
    assert g.bank_ids == ("B1", "B2")
    assert g.firm_ids == ("F1", "F2")
    weights = {(g.bank_ids[b], g.firm_ids[f]): w for b, f, w in g.edges}
    assert weights[("B1", "F1")] == EdgeWeight.split(2.0, 2.0)
    assert ("B2", "F2") not in weights
    assert g.edge_count == 3


def test_errors_are_collected_with_line_numbers(tmp_path):
    text = (
        "bank_id,firm_id,short_term,long_term\n"
        "B1,F1,1,2\n"
        "B1,F2,-1,2\n"
        "B2,F1,abc,2\n"
        "# comment\n"
        "B3,F3,1\n"
        ",F4,1,1\n"
        "B4,F4,1,\n"
    )
    with pytest.raises(LoadError) as info:
        ingest.load_edges(write(tmp_path, "bad.csv", text))
    lines = [ln for ln, _ in info.value.violations]
    assert lines == [3, 4, 6, 7, 8]
    msg = str(info.value)
    assert "bad.csv:3:" in msg and "short_term" in msg


def test_header_problems(tmp_path):
    with pytest.raises(LoadError, match="unknown column"):
        ingest.load_edges(write(tmp_path, "a.csv", "bank_id,firm_id,short_term,long_term,x\n"))
    with pytest.raises(LoadError, match="missing column"):
        ingest.load_edges(write(tmp_path, "b.csv", "bank_id,firm_id,short_term\n"))
    with pytest.raises(LoadError, match="missing header"):
        ingest.load_edges(write(tmp_path, "c.csv", "# nothing\n"))


def test_total_column(tmp_path):
    text = (
        "bank_id,firm_id,short_term,long_term,total\n"
        "B1,F1,1,2,3\n"
        "B1,F2,,,5\n"
        "B2,F2,,,0\n"
    )
    g, report = ingest.read_edges(write(tmp_path, "t.csv", text))
    assert report.unsplit == 1 and report.dropped_zero == 1
    assert g.unsplit_edge_count == 1
    bad = "bank_id,firm_id,short_term,long_term,total\nB1,F1,1,2,4\n"
    with pytest.raises(LoadError, match="total"):
        ingest.load_edges(write(tmp_path, "t2.csv", bad))


def test_quoted_ids_survive(tmp_path):
    g = BipartiteGraph.from_records([('Bank "A", Ltd', "F,1", EdgeWeight.split(1.0, 2.0))])
    for fmt in ExportFormat:
        p = ingest.export_graph(g, tmp_path / f"q.{fmt.value}")
        assert ingest.load_graph(p) == g


def test_empty_graph_exports_header_only(tmp_path):
    g = BipartiteGraph([], [], [])
    text = ingest.render(g, "csv")
    data = [ln for ln in text.splitlines() if not ln.startswith("#")]
    assert data == ["bank_id,firm_id,short_term,long_term"]
    p = ingest.export_graph(g, tmp_path / "empty.csv")
    assert ingest.load_edges(p) == g


def test_isolated_nodes_survive(tmp_path):
    g = BipartiteGraph(["B1", "B2"], ["F1", "F2"], [(0, 0, EdgeWeight.split(1, 1))])
    for fmt in ExportFormat:
        p = ingest.export_graph(g, tmp_path / f"iso.{fmt.value}")
        h = ingest.load_graph(p)
        assert h == g and h.bank_count == 2 and h.firm_count == 2


@pytest.mark.parametrize("fmt", list(ExportFormat))
def test_round_trip_random(tmp_path, rng, fmt):
    for k in range(15):
        g = random_graph(rng, max_banks=15, max_firms=15, split=bool(k % 3))
        p = ingest.export_graph(g, tmp_path / f"g{k}.{fmt.value}")
        h = ingest.load_graph(p)
        assert h == g
        assert ingest.render(h, fmt) == p.read_text(encoding="utf-8")


@settings(max_examples=40, deadline=None)
@given(graphs(), st.sampled_from(list(ExportFormat)))
def test_round_trip_property(g, fmt):
    text = ingest.render(g, fmt)
    import tempfile, os

    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "g." + fmt.value)
        with open(p, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        h = ingest.load_graph(p)
    assert h == g
    assert ingest.render(h, fmt) == text


def test_render_is_independent_of_index_order():
    w = EdgeWeight.split
    a = BipartiteGraph(["B1", "B2"], ["F1"], [(0, 0, w(1, 2)), (1, 0, w(3, 4))])
    b = BipartiteGraph(["B2", "B1"], ["F1"], [(1, 0, w(1, 2)), (0, 0, w(3, 4))])
    assert a == b
    for fmt in ExportFormat:
        assert ingest.render(a, fmt) == ingest.render(b, fmt)


def test_unknown_format():
    with pytest.raises(ConfigError):
        ExportFormat.parse("xlsx")


def test_bad_dot_and_graphml(tmp_path):
    with pytest.raises(LoadError):
        ingest.load_graph(write(tmp_path, "x.dot", 'graph "g" {\n  what is this\n}\n'))
    with pytest.raises(LoadError):
        ingest.load_graph(write(tmp_path, "x.graphml", "<graphml><oops"))


# --- projections and forests -----------------------------------------------


def test_projection_csv_round_trip(tmp_path, rng):
    for k in range(10):
        g = random_graph(rng, max_banks=12, max_firms=12)
        for mode in Mode:
            p = project(g, mode)
            path = ingest.export_graph(p, tmp_path / f"p{k}{mode.value}.csv")
            back = ingest.load_projection(path)
            assert back == p
            assert back.mode is mode


def test_forest_exports_distances(tmp_path):
    p = ProjectedGraph(Mode.BANK, ["a", "b", "c", "d"], [0, 0, 1], [1, 2, 2], [4, 2, 1])
    f = minimal_spanning_forest(p)
    text = ingest.render(f, "csv")
    assert "node_i,node_j,shared_count,distance" in text
    assert "a,b,4,0.0" in text and "a,c,2,0.5" in text
    assert "# isolated=d" in text
    path = write(tmp_path, "f.csv", text)
    assert ingest.load_projection(path) == f.as_projection()
    dot = ingest.render(f, "dot")
    assert '"a" -- "c" [shared_count="2", distance="0.5"];' in dot


def test_projection_csv_errors(tmp_path):
    text = "# mode=firm\nnode_i,node_j,shared_count\nx,y,2\nx,x,1\ny,x,3\nx,z,0\n"
    with pytest.raises(LoadError) as info:
        ingest.load_projection(write(tmp_path, "p.csv", text))
    assert [ln for ln, _ in info.value.violations] == [4, 5, 6]
    with pytest.raises(LoadError, match="mode"):
        ingest.load_projection(write(tmp_path, "q.csv", "node_i,node_j,shared_count\n"))


def test_sniff(tmp_path):
    assert ingest.sniff_csv(write(tmp_path, "a.csv", EDGES)) == "edges"
    assert ingest.sniff_csv(write(tmp_path, "b.csv", "# mode=bank\nnode_i,node_j,shared_count\n")) == "projection"


# --- attributes ------------------------------------------------------------

BANKS = """\
bank_id,name,bank_type,region,capital,asset
B1,Alpha,2,0,100,2000
B2,Beta,3,6,,
B3,Gamma,,,5,
"""

FIRMS = """\
firm_id,name,sector,asset,debt,capital
F1,Acme,Foods,100,40,60
F2,"Stone Co","Stone, Clay & Glass Products",50,,
F9,Orphan,Services,10,1,9
"""


def test_load_attributes(tmp_path, toy):
    attrs = ingest.load_attributes(
        write(tmp_path, "banks.csv", BANKS), write(tmp_path, "firms.csv", FIRMS)
    )
    assert attrs.banks["B1"].type_label == "city bank"
    assert attrs.banks["B3"].bank_type == 6 and attrs.banks["B3"].region == 0
    assert attrs.banks["B2"].region_label == "Shikoku"
    assert attrs.firms["F2"].group == 5
    assert attrs.color(Mode.BANK, "B1") == "blue"
    assert attrs.color(Mode.BANK, "B2", "region") == "red"
    assert attrs.color(Mode.FIRM, "nobody") == ingest.UNKNOWN_COLOR
    v = attrs.values(Mode.FIRM, ["F1", "F2", "zzz"], "debt")
    assert v[0] == 40 and np.isnan(v[1]) and np.isnan(v[2])
    pick = attrs.selector(Mode.FIRM, group=1)
    assert pick("F1") and not pick("F2") and not pick("missing")


def test_attribute_coverage_report(tmp_path):
    g = BipartiteGraph(["B1", "B7"], ["F1", "F2"], [(0, 0, EdgeWeight.split(1, 1))])
    attrs = ingest.load_attributes(write(tmp_path, "f.csv", FIRMS), graph=g)
    assert attrs.report == (0, 1, 2, 0)


def test_attribute_errors(tmp_path):
    text = (
        "bank_id,name,bank_type,region\n"
        "B1,a,9,0\n"
        "B2,b,1,x\n"
        "B1,c,1,1\n"
    )
    with pytest.raises(LoadError) as info:
        ingest.load_attributes(write(tmp_path, "b.csv", text))
    assert [ln for ln, _ in info.value.violations] == [2, 3, 4]
    text = "firm_id,name,sector,asset\nF1,a,Alchemy,1\nF2,b,Foods,-3\n"
    with pytest.raises(LoadError) as info:
        ingest.load_attributes(write(tmp_path, "f.csv", text))
    assert [ln for ln, _ in info.value.violations] == [2, 3]
    with pytest.raises(LoadError, match="bank_id or firm_id"):
        ingest.load_attributes(write(tmp_path, "x.csv", "id,name\n"))


def test_coloured_exports(tmp_path, toy):
    attrs = NodeAttributes(
        banks={"B0": ingest.BankInfo("x", 2, 3)},
        firms={"F0": ingest.FirmInfo("y", "Machinery")},
    )
    dot = ingest.render(toy, "dot", attrs=attrs)
    assert '"bank:B0" [label="B0", mode="bank", fillcolor="blue", class="2"];' in dot
    assert '"firm:F0" [label="F0", mode="firm", fillcolor="green", class="4"];' in dot
    by_region = ingest.render(toy, "dot", attrs=attrs, color_by="region")
    assert 'fillcolor="green", class="3"' in by_region
    p = project(toy, Mode.BANK)
    xml = ingest.render(p, "graphml", attrs=attrs)
    assert '<data key="color">blue</data>' in xml
    # decorated files still load back
    path = ingest.export_graph(toy, tmp_path / "c.graphml", attrs=attrs)
    assert ingest.load_graph(path) == toy
    path = ingest.export_graph(toy, tmp_path / "c.dot", attrs=attrs, comment="run abc")
    assert path.read_text().startswith("// run abc\n")
    assert ingest.load_graph(path) == toy


def test_attribute_round_trip(tmp_path):
    from creditnet.synth import GeneratorConfig, generate

    g, attrs = generate(GeneratorConfig(scale=0.05, seed=1))
    bp, fp = ingest.export_attributes(attrs, tmp_path / "banks.csv", tmp_path / "firms.csv")
    back = ingest.load_attributes(bp, fp, graph=g)
    assert back.banks == attrs.banks and back.firms == attrs.firms
    assert back.report == (0, 0, 0, 0)
    assert ingest.render_attributes(back) == ingest.render_attributes(attrs)


def test_coloured_tree_dot():
    p = ProjectedGraph(Mode.BANK, ["a", "b", "c"], [0, 1], [1, 2], [3, 1])
    f = minimal_spanning_forest(p)
    attrs = NodeAttributes(banks={x: ingest.BankInfo(x, t, 0) for x, t in zip("abc", (1, 2, 6))})
    dot = ingest.render(f, "dot", attrs=attrs)
    body = [ln.strip() for ln in dot.splitlines()]
    nodes = [ln for ln in body if ln.startswith('"') and "--" not in ln]
    edges = [ln for ln in body if "--" in ln]
    assert len(nodes) == 3 and len(edges) == 2
    assert 'fillcolor="black"' in nodes[0] and 'fillcolor="white"' in nodes[2]
