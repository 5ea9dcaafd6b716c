"""Small planted benchmarks with known ground truth."""
from __future__ import annotations

import numpy as np

from .graph import Graph


def stochastic_block_model(sizes, p_in, p_out, seed=0):
    """Undirected SBM; returns ``(graph, labels)`` with labels keyed by node id."""
    rng = np.random.default_rng(seed)
    block = np.repeat(np.arange(len(sizes)), sizes)
    n = len(block)
    edges = []
    for u in range(n):
        probs = np.where(block[u + 1:] == block[u], p_in, p_out)
        hits = np.flatnonzero(rng.random(n - u - 1) < probs) + u + 1
        edges += [(u, int(v)) for v in hits]
    g = Graph.from_edges(edges, n_nodes=n)
    return g, {u: {f"block{block[u]}"} for u in range(n)}


def role_ego_graph(n_hub=50, n_dense=50, size=(6, 10), n_giants=4, giants_per_ego=(1, 2),
                   core_size=60, core_p=0.5, seed=0):
    """Parent graph whose centers show one of two ego-network patterns.

    Hub-dominated centers link to one or two of a few corpus-wide "giant"
    nodes plus fresh leaves; each leaf links to those giants and to nothing
    else, so the ego is a few stars glued at the giants. Dense centers link
    to members of a shared, densely interconnected core, so their
    neighbors mostly link to each other.

    Returns ``(graph, centers, labels)`` with labels ``{"hub"}``/``{"dense"}``.
    """
    rng = np.random.default_rng(seed)
    giants = list(range(n_giants))
    core = list(range(n_giants, n_giants + core_size))
    nxt = n_giants + core_size
    edges = [(u, v) for i, u in enumerate(core) for v in core[i + 1:] if rng.random() < core_p]
    kinds = ["hub"] * n_hub + ["dense"] * n_dense
    centers, labels = [], {}
    for kind in kinds:
        c = nxt
        nxt += 1
        m = int(rng.integers(size[0], size[1] + 1))
        if kind == "hub":
            ng = int(rng.integers(giants_per_ego[0], giants_per_ego[1] + 1))
            hubs = [int(x) for x in rng.choice(giants, size=ng, replace=False)]
            leaves = list(range(nxt, nxt + m - ng))
            nxt += m - ng
            edges += [(c, v) for v in hubs + leaves]
            edges += [(leaf, h) for leaf in leaves for h in hubs]
        else:
            members = [int(x) for x in rng.choice(core, size=m, replace=False)]
            edges += [(c, v) for v in members]
        centers.append(c)
        labels[c] = {kind}
    g = Graph.from_edges(edges, n_nodes=nxt)
    return g, centers, labels


def planted_analogies(n_nodes=20, dim=16, n_tuples=10, noise=0.0, seed=0):
    """Embeddings where ``v_d = v_b - v_a + v_c`` holds for each planted tuple.

    The vocabulary is split into disjoint quadruples so every answer is
    unique; remaining rows are random.
    """
    if n_nodes < 4 * n_tuples // 2:
        raise ValueError("vocabulary too small for the requested tuples")
    rng = np.random.default_rng(seed)
    emb = rng.normal(size=(n_nodes, dim))
    tuples = []
    # pairs of (a, b) share a relation offset; each offset serves two tuples
    ids = rng.permutation(n_nodes)
    n_groups = n_tuples // 2
    for gi in range(n_groups):
        a, b, c, d = (int(x) for x in ids[4 * gi:4 * gi + 4])
        offset = rng.normal(size=dim) * 3.0
        emb[b] = emb[a] + offset
        emb[d] = emb[c] + offset
        tuples += [(a, b, c, d), (c, d, a, b)]
    emb += noise * rng.normal(size=emb.shape)
    return emb, tuples
