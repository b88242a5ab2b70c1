import numpy as np
import pytest
from hypothesis import strategies as st

from creditnet.graph import BipartiteGraph, EdgeWeight


def random_graph(rng, max_banks=30, max_firms=30, density=None, split=True, isolated=True):
    """Random bipartite graph with ids B000../F000.. and float weights."""
    nb = int(rng.integers(1, max_banks + 1))
    nf = int(rng.integers(1, max_firms + 1))
    p = rng.uniform(0.02, 0.9) if density is None else density
    mask = rng.random((nb, nf)) < p
    records = []
    for b, f in zip(*np.nonzero(mask)):
        if split:
            s, l = rng.uniform(0, 100, size=2).round(3)
            if s + l == 0:
                l = 1.0
            w = EdgeWeight.split(s, l)
        else:
            w = EdgeWeight.total_only(round(float(rng.uniform(0.5, 100)), 3))
        records.append((f"B{b:03d}", f"F{f:03d}", w))
    extra_b = [f"B{b:03d}" for b in range(nb)] if isolated else ()
    extra_f = [f"F{f:03d}" for f in range(nf)] if isolated else ()
    return BipartiteGraph.from_records(records, extra_b, extra_f)


@st.composite
def graphs(draw, max_banks=8, max_firms=8):
    nb = draw(st.integers(1, max_banks))
    nf = draw(st.integers(1, max_firms))
    pairs = draw(
        st.sets(st.tuples(st.integers(0, nb - 1), st.integers(0, nf - 1)), max_size=nb * nf)
    )
    amount = st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False)
    edges = []
    for b, f in sorted(pairs):
        s, l = draw(amount), draw(amount)
        if s + l <= 0:
            l = 1.0
        edges.append((b, f, EdgeWeight.split(s, l)))
    return BipartiteGraph([f"B{i}" for i in range(nb)], [f"F{j}" for j in range(nf)], edges)


@pytest.fixture
def rng():
    return np.random.default_rng(20041231)


@pytest.fixture
def toy():
    """B0 lends to F0, F1, F2; B1 lends to F2.

    Weights (short, long): B0-F0 (2, 1), B0-F1 (0, 1), B0-F2 (1, 1), B1-F2 (3, 0).
    """
    w = EdgeWeight.split
    return BipartiteGraph(
        ["B0", "B1"],
        ["F0", "F1", "F2"],
        [(0, 0, w(2, 1)), (0, 1, w(0, 1)), (0, 2, w(1, 1)), (1, 2, w(3, 0))],
    )


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in test_acceptance.RESULTS:
            terminalreporter.write_line(line)
