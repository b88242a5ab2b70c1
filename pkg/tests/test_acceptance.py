"""Acceptance suite: ten end-to-end criteria at their pinned tolerances.

Each check prints one ``criterion N: PASS|FAIL`` line. Under pytest the lines
are repeated in the terminal summary; ``python3 -m tests.test_acceptance``
runs the checks without pytest.
"""

import math
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from creditnet import ingest
from creditnet.errors import UndefinedMeasureError
from creditnet.graph import BipartiteGraph, EdgeWeight, Mode, connected_components
from creditnet.metrics import kendall_tau, participation_ratios
from creditnet.mst import minimal_spanning_forest
from creditnet.projection import ProjectedGraph, project, projection_counts, projection_stats
from creditnet.synth import GeneratorConfig, generate
from creditnet.tailfit import FixedQuantile, fit_tail, hill_fit

from .conftest import random_graph
from .oracles import (
    common_neighbor_projection,
    kendall_pairs,
    max_spanning_tree_weight,
    random_connected_projection,
    replay_acyclic,
)

RESULTS: list[str] = []
SEED = 20041231


def record(number, title, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}  [{detail}]"
    RESULTS.append(line)
    print(line)
    return ok


# shared graph collections, built lazily so every criterion can reuse them
_cache = {}


def synthetic_default():
    if "synth" not in _cache:
        t0 = time.perf_counter()
        g, attrs = generate(GeneratorConfig(seed=SEED))
        _cache["synth"] = (g, time.perf_counter() - t0)
    return _cache["synth"]


def small_synthetic():
    if "small" not in _cache:
        _cache["small"] = [generate(GeneratorConfig(scale=0.1, seed=s))[0] for s in range(5)]
    return _cache["small"]


def random_bipartite(count, seed):
    rng = np.random.default_rng(seed)
    return [random_graph(rng, split=bool(k % 4)) for k in range(count)]


def fixture_graphs():
    w = EdgeWeight.split
    toy = BipartiteGraph(
        ["B0", "B1"], ["F0", "F1", "F2"],
        [(0, 0, w(2, 1)), (0, 1, w(0, 1)), (0, 2, w(1, 1)), (1, 2, w(3, 0))],
    )
    equal = BipartiteGraph(
        ["B0", "B1", "B2"], ["F0", "F1", "F2", "F3"],
        [(b, f, w(2.5, 2.5)) for b in range(3) for f in range(4) if (b + f) % 3],
    )
    single = BipartiteGraph(["B0"], ["F0"], [(0, 0, EdgeWeight.total_only(7.0))])
    return [toy, equal, single]


# ---------------------------------------------------------------------------


def check_1():
    t0 = time.perf_counter()
    st = projection_counts(2661, 2_881_763)
    ok = st.possible_edges == 3_539_130 and st.density > 0.80
    # same numbers from an actual projected graph of that size
    rng = np.random.default_rng(SEED)
    iu, ju = np.triu_indices(2661, 1)
    pick = np.sort(rng.choice(iu.size, size=2_881_763, replace=False))
    p = ProjectedGraph(Mode.FIRM, [f"F{k:04d}" for k in range(2661)], iu[pick], ju[pick],
                       np.ones(pick.size, dtype=np.int64))
    st2 = projection_stats(p)
    ok = ok and st2.possible_edges == 3_539_130 and st2.edge_count == 2_881_763
    ok = ok and st2.density > 0.80
    counts_time = time.perf_counter() - t0
    detail = f"possible={st.possible_edges} density={st.density:.4f} ({counts_time:.2f}s incl. graph build)"
    return record(1, "projection density arithmetic", ok, detail)


def check_2():
    t0 = time.perf_counter()
    graphs = random_bipartite(200, SEED + 2)
    mismatches = 0
    for g in graphs:
        for mode in Mode:
            if project(g, mode).as_dict() != common_neighbor_projection(g, mode):
                mismatches += 1
    dt = time.perf_counter() - t0
    ok = mismatches == 0 and dt < 10
    return record(2, "projection vs common-neighbour oracle", ok,
                  f"{len(graphs)} graphs x 2 modes, {mismatches} mismatches, {dt:.2f}s")


def _mst_cases():
    if "mst" not in _cache:
        rng = np.random.default_rng(SEED + 3)
        _cache["mst"] = [random_connected_projection(rng, max_nodes=12, max_extra=12)
                         for _ in range(100)]
    return _cache["mst"]


def check_3():
    t0 = time.perf_counter()
    bad = 0
    for p in _mst_cases():
        f = minimal_spanning_forest(p)
        best = max_spanning_tree_weight(p.node_count, list(p.edges))
        bad += f.total_weight != best or f.component_count != 1
    dt = time.perf_counter() - t0
    ok = bad == 0 and dt < 30
    return record(3, "spanning forest vs exhaustive maximum spanning tree", ok,
                  f"100 graphs, {bad} mismatches, {dt:.2f}s")


def check_4():
    projections = list(_mst_cases())
    for g in random_bipartite(60, SEED + 4) + small_synthetic() + fixture_graphs():
        projections += [project(g, m) for m in Mode]
    bad = checked = 0
    for p in projections:
        if p.edge_count == 0:
            continue
        f = minimal_spanning_forest(p)
        n_comp, _ = connected_components(p)
        edges = [(e.i, e.j) for e in f.edges]
        good = (
            f.edge_count == f.node_count - f.component_count
            and f.component_count == n_comp
            and replay_acyclic(f.node_count, edges)
            and sorted(x for c in f.components for x in c) == list(range(f.node_count))
        )
        bad += not good
        checked += 1
    return record(4, "forest edge count and acyclicity", bad == 0,
                  f"{checked} forests, {bad} violations")


def check_5():
    tol = 1e-12
    graphs = random_bipartite(100, SEED + 5) + small_synthetic() + fixture_graphs()
    graphs.append(synthetic_default()[0])
    worst, nodes = 0.0, 0
    for g in graphs:
        for mode in Mode:
            _, k, y = participation_ratios(g, mode)
            nodes += k.size
            if k.size:
                worst = max(worst, float(np.max(1.0 / k - y)), float(np.max(y - 1.0)))
    ok = worst <= tol
    # all links of a node equal: Y must be exactly 1/k
    equal = fixture_graphs()[1]
    dev = 0.0
    for mode in Mode:
        _, k, y = participation_ratios(equal, mode)
        dev = max(dev, float(np.max(np.abs(y - 1.0 / k))))
    ok = ok and dev <= tol
    return record(5, "participation ratio bounds", ok,
                  f"{nodes} nodes, worst bound excess {worst:.1e}, equal-weight deviation {dev:.1e}")


def check_6():
    t0 = time.perf_counter()
    rng = np.random.default_rng(SEED + 6)
    parts, ok = [], True
    for mu in (0.5, 0.9, 2.6):
        est, cover = [], 0
        for _ in range(100):
            x = (1.0 - rng.random(100_000)) ** (-1.0 / mu)
            fit = hill_fit(x, 1.0)
            est.append(fit.mu_hat)
            cover += abs(fit.mu_hat - mu) <= 3 * fit.std_error
        pooled = float(np.mean(est))
        good = cover >= 95 and abs(pooled - mu) <= 0.05
        ok &= good
        parts.append(f"mu={mu}: cover {cover}/100, mean {pooled:.4f}")
    dt = time.perf_counter() - t0
    ok &= dt < 60
    return record(6, "Hill estimator recovery", ok, "; ".join(parts) + f"; {dt:.1f}s")


def check_7():
    rng = np.random.default_rng(SEED + 7)
    worst, undefined_agree, trials = 0.0, 0, 500
    ok = True
    for _ in range(trials):
        n = int(rng.integers(2, 51))
        hi = int(rng.integers(1, 12))
        x = rng.integers(0, hi + 1, n).tolist()
        y = rng.integers(0, hi + 1, n).tolist()
        try:
            expected = kendall_pairs(x, y)
        except ZeroDivisionError:
            expected = None
        try:
            got = kendall_tau(x, y).coefficient
        except UndefinedMeasureError:
            got = None
        if expected is None or got is None:
            ok &= expected is None and got is None
            undefined_agree += 1
            continue
        worst = max(worst, abs(got - expected))
    ok &= worst <= 1e-12
    extremes = []
    for _ in range(20):
        n = int(rng.integers(2, 51))
        v = rng.permutation(1000)[:n].astype(float)
        s = np.sort(v)
        extremes += [kendall_tau(s, s).coefficient, kendall_tau(s, s[::-1]).coefficient]
    ok &= all(t == 1.0 for t in extremes[0::2]) and all(t == -1.0 for t in extremes[1::2])
    return record(7, "Kendall tau-b vs pair-counting oracle", ok,
                  f"{trials} lists, max diff {worst:.1e}, {undefined_agree} undefined on both sides, "
                  f"sorted/reversed exact")


def check_8():
    g, dt = synthetic_default()
    kf = g.degrees(Mode.FIRM)
    kb = g.degrees(Mode.BANK)
    mean = float(kf.mean())
    fit = fit_tail(kf, FixedQuantile(0.5), discrete=True)
    _, labels = connected_components(g)
    active = np.concatenate([kb, kf]) > 0
    giant = int(np.bincount(labels[active]).max())
    share = giant / int(active.sum())
    ok = 6 <= mean <= 10 and abs(fit.mu_hat - 2.6) <= 0.3 and share >= 0.95 and dt < 60
    return record(8, "synthetic calibration at full scale", ok,
                  f"<k_f>={mean:.2f}, mu={fit.mu_hat:.3f}+/-{fit.std_error:.3f} "
                  f"(cutoff {fit.cutoff:g}), giant {share:.3f}, max bank degree {kb.max()}, "
                  f"{dt:.2f}s")


def check_9():
    graphs = random_bipartite(50, SEED + 9)
    bad = 0
    with tempfile.TemporaryDirectory() as d:
        for k, g in enumerate(graphs):
            for fmt in ingest.ExportFormat:
                path = ingest.export_graph(g, Path(d) / f"g{k}.{fmt.value}")
                h = ingest.load_graph(path)
                same = h == g and ingest.render(h, fmt) == path.read_text(encoding="utf-8")
                bad += not same
    return record(9, "export/load round trip", bad == 0,
                  f"50 graphs x 3 formats, {bad} failures")


def check_10():
    graphs = random_bipartite(100, SEED + 10) + small_synthetic() + fixture_graphs()
    graphs.append(synthetic_default()[0])
    bad = 0
    for g in graphs:
        kb, kf = g.degrees(Mode.BANK), g.degrees(Mode.FIRM)
        sb, sf = g.strengths(Mode.BANK).sum(), g.strengths(Mode.FIRM).sum()
        w = g.weights().sum()
        handshake = int(kb.sum()) == int(kf.sum()) == g.edge_count
        conserved = math.isclose(sb, sf, rel_tol=1e-12) and math.isclose(sb, w, rel_tol=1e-12)
        bad += not (handshake and conserved)
    return record(10, "handshake and strength conservation", bad == 0,
                  f"{len(graphs)} graphs, {bad} violations")


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9, check_10]


def test_criterion_01_projection_density():
    assert check_1()


def test_criterion_02_projection_oracle():
    assert check_2()


def test_criterion_03_mst_oracle():
    assert check_3()


def test_criterion_04_forest_structure():
    assert check_4()


def test_criterion_05_participation_bounds():
    assert check_5()


def test_criterion_06_hill_recovery():
    assert check_6()


def test_criterion_07_kendall_oracle():
    assert check_7()


def test_criterion_08_synthetic_calibration():
    assert check_8()


def test_criterion_09_round_trip():
    assert check_9()


def test_criterion_10_conservation():
    assert check_10()


if __name__ == "__main__":
    results = [c() for c in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
