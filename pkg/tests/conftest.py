import numpy as np
from hypothesis import HealthCheck, settings, strategies as st

from netvector.graph import Graph

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def small_graphs(draw, max_nodes=8, directed=None, weighted=True, loops=True):
    n = draw(st.integers(1, max_nodes))
    is_directed = draw(st.booleans()) if directed is None else directed
    pairs = st.tuples(st.integers(0, n - 1), st.integers(0, n - 1))
    weight = (st.floats(0.1, 10.0, allow_nan=False) if weighted else st.just(1.0))
    raw = draw(st.lists(st.tuples(pairs, weight), max_size=3 * n))
    edges = [(a, b, w) for (a, b), w in raw if loops or a != b]
    return Graph.from_edges(edges, directed=is_directed, n_nodes=n)


def random_graph(rng, n, p, weighted=True, directed=False):
    edges = [(u, v, float(rng.uniform(0.5, 3.0)) if weighted else 1.0)
             for u in range(n) for v in range(n)
             if (directed or u < v) and u != v and rng.random() < p]
    return Graph.from_edges(edges, directed=directed, n_nodes=n)


def triangle():
    return Graph.from_edges([(0, 1), (1, 2), (0, 2)], labels=["a", "b", "c"])


def path3():
    return Graph.from_edges([(0, 1), (1, 2)], labels=["a", "b", "c"])


def star(leaves):
    return Graph.from_edges([(0, i) for i in range(1, leaves + 1)])


def tv(p, q):
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


ACCEPTANCE_LINES = []


def record_criterion(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
    ACCEPTANCE_LINES.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
