"""Weighted graphs in compressed sparse row form, ego-networks and structural features."""
from __future__ import annotations

import os
from collections import OrderedDict
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import eigsh

from .errors import ParseError, ValidationError

N_EIGENVALUES = 10


class Graph:
    """Immutable weighted graph with dense node ids ``0..N-1``.

    Adjacency is stored as CSR arrays (``indptr``, ``indices``, ``weights``) with
    each row sorted by neighbor id. Undirected edges appear in both rows; a
    self-loop appears once in its own row.
    """

    __slots__ = ("directed", "labels", "_index", "indptr", "indices", "weights")

    def __init__(self, indptr, indices, weights, directed=False, labels=None):
        indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        indices = np.ascontiguousarray(indices, dtype=np.int64)
        weights = np.ascontiguousarray(weights, dtype=np.float64)
        n = len(indptr) - 1
        if labels is None:
            labels = [str(i) for i in range(n)]
        labels = tuple(str(x) for x in labels)
        if len(labels) != n:
            raise ValidationError("label count does not match node count")
        if len(indices) != len(weights) or indptr[-1] != len(indices):
            raise ValidationError("inconsistent CSR arrays")
        if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
            raise ValidationError("edge weights must be positive and finite")
        for a in (indptr, indices, weights):
            a.setflags(write=False)
        self.directed = bool(directed)
        self.labels = labels
        self._index = {lab: i for i, lab in enumerate(labels)}
        if len(self._index) != n:
            raise ValidationError("node labels must be unique")
        self.indptr = indptr
        self.indices = indices
        self.weights = weights

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], directed: bool = False, labels=None,
                   n_nodes: int | None = None) -> "Graph":
        """Build a graph from ``(src, dst[, weight])`` tuples of integer ids.

        Duplicate edges are merged by summing their weights.
        """
        merged: dict[tuple[int, int], float] = {}
        top = -1
        for e in edges:
            a, b = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if not w > 0:
                raise ValidationError(f"non-positive weight {w} on edge ({a}, {b})")
            if a < 0 or b < 0:
                raise ValidationError("node ids must be non-negative")
            key = (a, b) if directed or a <= b else (b, a)
            merged[key] = merged.get(key, 0.0) + w
            top = max(top, a, b)
        if n_nodes is None:
            n_nodes = len(labels) if labels is not None else top + 1
        if top >= n_nodes:
            raise ValidationError("edge endpoint outside node range")
        rows: list[dict[int, float]] = [dict() for _ in range(n_nodes)]
        for (a, b), w in merged.items():
            rows[a][b] = w
            if not directed and a != b:
                rows[b][a] = w
        indptr = np.zeros(n_nodes + 1, dtype=np.int64)
        indices, weights = [], []
        for i, row in enumerate(rows):
            for j in sorted(row):
                indices.append(j)
                weights.append(row[j])
            indptr[i + 1] = len(indices)
        return cls(indptr, indices, weights, directed=directed, labels=labels)

    # basic queries

    @property
    def node_count(self) -> int:
        return len(self.indptr) - 1

    def __len__(self):
        return self.node_count

    @property
    def edge_count(self) -> int:
        """Number of distinct edges (unordered pairs when undirected)."""
        nnz = len(self.indices)
        if self.directed:
            return nnz
        loops = int(np.sum(self.indices == self._row_ids()))
        return (nnz - loops) // 2 + loops

    def _row_ids(self):
        return np.repeat(np.arange(self.node_count), np.diff(self.indptr))

    def neighbors(self, u: int) -> np.ndarray:
        self._check(u)
        return self.indices[self.indptr[u]:self.indptr[u + 1]]

    def neighbor_weights(self, u: int) -> np.ndarray:
        self._check(u)
        return self.weights[self.indptr[u]:self.indptr[u + 1]]

    def degree(self, u: int) -> int:
        self._check(u)
        return int(self.indptr[u + 1] - self.indptr[u])

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def in_degrees(self) -> np.ndarray:
        if not self.directed:
            return self.degrees()
        return np.bincount(self.indices, minlength=self.node_count)

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        return bool(i < len(nb) and nb[i] == v)

    def weight(self, u: int, v: int) -> float:
        nb = self.neighbors(u)
        i = np.searchsorted(nb, v)
        if i < len(nb) and nb[i] == v:
            return float(self.weights[self.indptr[u] + i])
        raise KeyError(f"no edge ({u}, {v})")

    def id_of(self, label) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise KeyError(f"unknown node {label!r}") from None

    def label_of(self, u: int) -> str:
        self._check(u)
        return self.labels[u]

    def edges(self):
        """Yield ``(u, v, w)`` once per edge (``u <= v`` when undirected)."""
        for u in range(self.node_count):
            lo, hi = self.indptr[u], self.indptr[u + 1]
            for v, w in zip(self.indices[lo:hi], self.weights[lo:hi]):
                if self.directed or u <= v:
                    yield u, int(v), float(w)

    def adjacency_matrix(self) -> sparse.csr_matrix:
        n = self.node_count
        return sparse.csr_matrix((np.array(self.weights), np.array(self.indices),
                                  np.array(self.indptr)), shape=(n, n))

    def _check(self, u):
        if not (isinstance(u, (int, np.integer)) and 0 <= u < self.node_count):
            raise KeyError(f"node id {u!r} not in graph of {self.node_count} nodes")

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (self.directed == other.directed and self.labels == other.labels
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices)
                and np.array_equal(self.weights, other.weights))

    __hash__ = None

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Graph({self.node_count} nodes, {self.edge_count} edges, {kind})"


# edge-list IO

def _parse_lines(lines, path=None):
    order: OrderedDict[str, int] = OrderedDict()
    edges = []

    def nid(tok):
        if tok not in order:
            order[tok] = len(order)
        return order[tok]

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) == 1:
            nid(parts[0])
            continue
        if len(parts) > 3:
            raise ParseError(f"expected 'src dst [weight]', got {len(parts)} fields", path, lineno)
        w = 1.0
        if len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise ParseError(f"bad weight {parts[2]!r}", path, lineno) from None
            if not w > 0 or not np.isfinite(w):
                raise ValidationError(f"{path or '<input>'}:{lineno}: non-positive weight {parts[2]}")
        edges.append((nid(parts[0]), nid(parts[1]), w))
    return list(order), edges


def load_edge_list(path, directed: bool = False) -> Graph:
    """Read a whitespace-separated edge list.

    Lines are ``src dst [weight]``; ``#`` starts a comment line and a lone token
    declares a (possibly isolated) node. Node labels keep their first-seen order.
    """
    with open(path, encoding="utf-8") as f:
        labels, edges = _parse_lines(f, path=os.fspath(path))
    return Graph.from_edges(edges, directed=directed, labels=labels)


def parse_edge_list(text: str, directed: bool = False) -> Graph:
    labels, edges = _parse_lines(text.splitlines())
    return Graph.from_edges(edges, directed=directed, labels=labels)


def write_edge_list(g: Graph, path) -> None:
    """Write ``g`` so that :func:`load_edge_list` rebuilds an identical graph."""
    with open(path, "w", encoding="utf-8") as f:
        for lab in g.labels:
            f.write(f"{lab}\n")
        for u, v, w in g.edges():
            f.write(f"{g.labels[u]}\t{g.labels[v]}\t{w!r}\n")


def load_karate() -> Graph:
    """Zachary's karate club (34 nodes, 78 edges), labelled ``"1"``..``"34"``."""
    ref = resources.files("netvector") / "data" / "karate.edgelist"
    with resources.as_file(ref) as p:
        return load_edge_list(p)


def load_labels(path, graph: Graph | None = None) -> dict:
    """Read ``node<TAB>label1[,label2,...]`` lines.

    Keys are node labels, or dense ids when ``graph`` is given.
    """
    out = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ParseError("expected 'node<TAB>label[,label...]'", os.fspath(path), lineno)
            node, labs = parts
            labset = {x.strip() for x in labs.split(",") if x.strip()}
            if not labset:
                raise ParseError("empty label set", os.fspath(path), lineno)
            key = node
            if graph is not None:
                try:
                    key = graph.id_of(node)
                except KeyError:
                    raise ParseError(f"unknown node {node!r}", os.fspath(path), lineno) from None
            out.setdefault(key, set()).update(labset)
    return out


def write_labels(labels: dict, path, names=None) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for node in sorted(labels, key=lambda x: (str(type(x)), x)):
            name = names[node] if names is not None else node
            f.write(f"{name}\t{','.join(sorted(labels[node]))}\n")


# ego-networks

@dataclass(frozen=True)
class EgoNetwork:
    center: int
    subgraph: Graph
    parent_ids: np.ndarray = field(repr=False)

    @property
    def node_count(self):
        return self.subgraph.node_count


def ego_network(g: Graph, center: int) -> EgoNetwork:
    """Induced subgraph over ``center`` and its out-neighbors.

    The center gets local id 0, neighbors follow in ascending parent id.
    """
    g._check(center)
    nb = [int(v) for v in g.neighbors(center) if v != center]
    members = [center] + nb
    local = {u: i for i, u in enumerate(members)}
    edges = []
    for u in members:
        lo, hi = g.indptr[u], g.indptr[u + 1]
        for v, w in zip(g.indices[lo:hi], g.weights[lo:hi]):
            v = int(v)
            if v in local and (g.directed or u <= v):
                edges.append((local[u], local[v], float(w)))
    sub = Graph.from_edges(edges, directed=g.directed,
                           labels=[g.labels[u] for u in members])
    return EgoNetwork(center=center, subgraph=sub,
                      parent_ids=np.asarray(members, dtype=np.int64))


# structural features

@dataclass(frozen=True)
class StructuralFeatures:
    node_count: int
    edge_count: int
    average_degree: float
    max_in_degree: int
    max_out_degree: int
    global_clustering: float
    mean_clustering: float
    eigenvalues: np.ndarray

    def degree_vector(self):
        return np.array([self.node_count, self.edge_count, self.average_degree,
                         self.max_in_degree, self.max_out_degree], dtype=float)

    def clustering_vector(self):
        return np.array([self.global_clustering, self.mean_clustering])

    def as_vector(self, groups: Sequence[str] = ("degrees", "clustering", "eigens")) -> np.ndarray:
        parts = {"degrees": self.degree_vector, "clustering": self.clustering_vector,
                 "eigens": lambda: np.asarray(self.eigenvalues, dtype=float)}
        return np.concatenate([parts[gname]() for gname in groups])


def _simple_undirected_sets(g: Graph):
    nbrs = [set() for _ in range(g.node_count)]
    for u in range(g.node_count):
        for v in g.neighbors(u):
            v = int(v)
            if v != u:
                nbrs[u].add(v)
                nbrs[v].add(u)
    return nbrs


def clustering_coefficients(g: Graph) -> tuple[float, float]:
    """(global transitivity, mean local clustering), self-loops ignored."""
    nbrs = _simple_undirected_sets(g)
    tri_total = 0
    triples = 0
    local = np.zeros(g.node_count)
    for u, nu in enumerate(nbrs):
        k = len(nu)
        if k < 2:
            continue
        t = sum(len(nu & nbrs[v]) for v in nu) // 2
        pairs = k * (k - 1) // 2
        local[u] = t / pairs
        tri_total += t
        triples += pairs
    glob = tri_total / triples if triples else 0.0
    return float(glob), float(local.mean()) if g.node_count else 0.0


def top_eigenvalues(g: Graph, count: int = N_EIGENVALUES, tol: float = 1e-8) -> np.ndarray:
    """Largest eigenvalues of the symmetrized weighted adjacency, descending.

    Graphs with fewer than ``count`` nodes are padded with zeros before the
    sort, so the list stays non-increasing when some eigenvalues are negative.
    """
    A = g.adjacency_matrix().astype(float)
    if g.directed:
        A = (A + A.T) * 0.5
    n = g.node_count
    out = np.zeros(count)
    if n <= count + 1:
        vals = np.linalg.eigvalsh(A.toarray())
    else:
        vals = eigsh(A, k=count, which="LA", tol=tol, return_eigenvectors=False)
    out[:min(len(vals), count)] = np.sort(vals)[::-1][:count]
    return np.sort(out)[::-1]


def structural_features(g: Graph) -> StructuralFeatures:
    if g.node_count == 0:
        raise ValidationError("structural features of an empty graph")
    out_deg = g.degrees()
    in_deg = g.in_degrees()
    glob, mean_c = clustering_coefficients(g)
    return StructuralFeatures(
        node_count=g.node_count,
        edge_count=g.edge_count,
        average_degree=float(out_deg.mean()),
        max_in_degree=int(in_deg.max()),
        max_out_degree=int(out_deg.max()),
        global_clustering=glob,
        mean_clustering=mean_c,
        eigenvalues=top_eigenvalues(g),
    )
