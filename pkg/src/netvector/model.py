"""Trainable parameters and scoring for the two Network Vector architectures.

A model holds one node matrix shared by the target and context roles, one
vector per graph, and position-dependent context weights:

* ``dm_context_weights`` row ``n-1-j`` weights the context node ``j`` steps
  before the target (row ``n-2`` is the adjacent position);
* ``sg_context_weights`` rows ``0..n-1`` weight offsets ``-n..-1`` and rows
  ``n..2n-1`` weight offsets ``+1..+n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ParseError, ValidationError


@dataclass
class WindowSample:
    """A target node with its positioned context inside one walk.

    ``context`` holds ``(offset, node)`` pairs; offsets are signed distances
    from the target (negative means the node precedes it).
    """

    graph: int
    target: int
    context: Sequence[tuple[int, int]] = ()


@dataclass
class EmbeddingModel:
    dim: int
    window: int
    node_vectors: np.ndarray
    graph_vectors: np.ndarray
    dm_context_weights: np.ndarray
    sg_context_weights: np.ndarray
    node_labels: Sequence[str] | None = None
    graph_labels: Sequence[str] | None = None

    @property
    def n_nodes(self) -> int:
        return self.node_vectors.shape[0]

    @property
    def n_graphs(self) -> int:
        return self.graph_vectors.shape[0]

    def parameter_count(self) -> int:
        return (self.node_vectors.size + self.graph_vectors.size
                + self.dm_context_weights.size + self.sg_context_weights.size)

    def copy(self) -> "EmbeddingModel":
        return EmbeddingModel(self.dim, self.window, self.node_vectors.copy(),
                              self.graph_vectors.copy(), self.dm_context_weights.copy(),
                              self.sg_context_weights.copy(), self.node_labels, self.graph_labels)

    def arrays(self):
        return (self.node_vectors, self.graph_vectors,
                self.dm_context_weights, self.sg_context_weights)

    def allclose(self, other, **kw) -> bool:
        return all(np.allclose(a, b, **kw) for a, b in zip(self.arrays(), other.arrays()))

    def array_equal(self, other) -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))

    # context weight rows

    def dm_row(self, offset: int) -> int:
        dist = -offset
        if not 1 <= dist <= self.window - 1:
            raise KeyError(f"offset {offset} outside the DM window of size {self.window}")
        return self.window - 1 - dist

    def sg_row(self, offset: int) -> int:
        n = self.window
        if offset == 0 or not -n <= offset <= n:
            raise KeyError(f"offset {offset} outside the inverse window of size {n}")
        return offset + n if offset < 0 else offset + n - 1

    def _node(self, i):
        if not (isinstance(i, (int, np.integer)) and 0 <= i < self.n_nodes):
            raise KeyError(f"node id {i!r} not in vocabulary of {self.n_nodes}")
        return self.node_vectors[i]

    def _graph(self, i):
        if not (isinstance(i, (int, np.integer)) and 0 <= i < self.n_graphs):
            raise KeyError(f"graph id {i!r} not in model with {self.n_graphs} graphs")
        return self.graph_vectors[i]


def init(n_nodes: int, n_graphs: int, dim: int, window: int, seed: int = 0,
         node_labels=None, graph_labels=None) -> EmbeddingModel:
    """Uniform ``[-0.5/d, 0.5/d]`` vectors and all-ones context weights."""
    if dim <= 0:
        raise ValidationError("dimension must be positive")
    if n_nodes <= 0 or n_graphs <= 0 or window <= 0:
        raise ValidationError("node count, graph count and window must be positive")
    rng = np.random.default_rng(seed)
    half = 0.5 / dim
    nodes = rng.uniform(-half, half, size=(n_nodes, dim))
    graphs = rng.uniform(-half, half, size=(n_graphs, dim))
    return EmbeddingModel(
        dim=dim, window=window, node_vectors=nodes, graph_vectors=graphs,
        dm_context_weights=np.ones((window - 1, dim)),
        sg_context_weights=np.ones((2 * window, dim)),
        node_labels=list(node_labels) if node_labels is not None else None,
        graph_labels=list(graph_labels) if graph_labels is not None else None,
    )


def predicted_representation(m: EmbeddingModel, s: WindowSample) -> np.ndarray:
    if not s.context:
        raise ValidationError("DM window needs at least one context node")
    v = m._graph(s.graph).copy()
    for off, node in s.context:
        v += m.dm_context_weights[m.dm_row(off)] * m._node(node)
    return v


def dm_score(m: EmbeddingModel, s: WindowSample, candidate: int) -> float:
    """Negated DM energy ``v_hat . v_candidate``."""
    return float(predicted_representation(m, s) @ m._node(candidate))


def inverse_scores(m: EmbeddingModel, graph: int, target: int, context):
    """Positive logits of the inverse architecture.

    Returns the graph term ``v_G . v_t`` and, per ``(offset, node)`` context
    entry, ``v_t . (c_offset * v_node)``.
    """
    vt = m._node(target)
    graph_term = float(m._graph(graph) @ vt)
    terms = [float(vt @ (m.sg_context_weights[m.sg_row(off)] * m._node(node)))
             for off, node in context]
    return graph_term, terms


# embedding files

def write_embeddings(vectors: np.ndarray, path, labels=None) -> None:
    """Write ``count dim`` then ``id v1 .. vd`` per row (round-trip exact)."""
    vectors = np.asarray(vectors, dtype=np.float64)
    n, d = vectors.shape
    if labels is None:
        labels = [str(i) for i in range(n)]
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{n} {d}\n")
        for lab, row in zip(labels, vectors):
            f.write(lab + " " + " ".join(repr(float(x)) for x in row) + "\n")


def read_embeddings(path):
    """Returns ``(labels, vectors)``."""
    labels = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ParseError("header must be 'count dim'", str(path), 1)
        try:
            n, d = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError("header must be 'count dim'", str(path), 1) from None
        vecs = np.zeros((n, d))
        i = 0
        for lineno, raw in enumerate(f, start=2):
            parts = raw.split()
            if not parts:
                continue
            if len(parts) != d + 1:
                raise ParseError(f"expected {d + 1} fields, got {len(parts)}", str(path), lineno)
            if i >= n:
                raise ParseError(f"more than {n} rows", str(path), lineno)
            labels.append(parts[0])
            try:
                vecs[i] = [float(x) for x in parts[1:]]
            except ValueError:
                raise ParseError("non-numeric vector entry", str(path), lineno) from None
            i += 1
    if i != n:
        raise ParseError(f"expected {n} rows, found {i}", str(path))
    return labels, vecs


def save_model(m: EmbeddingModel, node_path, graph_path) -> None:
    write_embeddings(m.node_vectors, node_path, m.node_labels)
    write_embeddings(m.graph_vectors, graph_path, m.graph_labels)
