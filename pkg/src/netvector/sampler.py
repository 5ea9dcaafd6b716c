"""Second-order biased random walks with alias-table sampling."""
from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .errors import DeadEndError, ParseError, ValidationError
from .graph import Graph


# alias tables

@njit(cache=True, nogil=True)
def _fill_alias(p, prob, alias):
    # Vose's method; p must sum to 1
    n = len(p)
    scaled = np.empty(n)
    small = np.empty(n, dtype=np.int64)
    large = np.empty(n, dtype=np.int64)
    ns = 0
    nl = 0
    for i in range(n):
        scaled[i] = p[i] * n
        alias[i] = i
        if scaled[i] < 1.0:
            small[ns] = i
            ns += 1
        else:
            large[nl] = i
            nl += 1
    while ns > 0 and nl > 0:
        ns -= 1
        s = small[ns]
        nl -= 1
        g = large[nl]
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        if scaled[g] < 1.0:
            small[ns] = g
            ns += 1
        else:
            large[nl] = g
            nl += 1
    for i in range(nl):
        prob[large[i]] = 1.0
    for i in range(ns):
        prob[small[i]] = 1.0


@njit(cache=True, nogil=True)
def _alias_draw(prob, alias, lo, n):
    i = int(np.random.random() * n)
    if i == n:
        i = n - 1
    if np.random.random() < prob[lo + i]:
        return i
    return alias[lo + i]


@dataclass(frozen=True)
class AliasTable:
    """Constant-time sampler for a fixed discrete distribution."""

    prob: np.ndarray
    alias: np.ndarray
    outcomes: np.ndarray

    def __len__(self):
        return len(self.prob)

    def distribution(self) -> np.ndarray:
        """Exact distribution over ``outcomes`` encoded by the table."""
        n = len(self.prob)
        out = self.prob / n
        np.add.at(out, self.alias, (1.0 - self.prob) / n)
        return out

    def sample(self, rng: np.random.Generator, size=None):
        n = len(self.prob)
        shape = () if size is None else size
        i = rng.integers(0, n, size=shape)
        keep = rng.random(size=shape) < self.prob[i]
        j = np.where(keep, i, self.alias[i])
        res = self.outcomes[j]
        return res if size is not None else res.item()


def build_alias(dist, outcomes=None) -> AliasTable:
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim != 1 or len(dist) == 0:
        raise ValidationError("distribution must be a non-empty vector")
    if np.any(dist < 0) or not np.all(np.isfinite(dist)):
        raise ValidationError("distribution entries must be finite and non-negative")
    total = dist.sum()
    if total == 0:
        raise ValidationError("all-zero distribution")
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"distribution sums to {total!r}, not 1")
    prob = np.empty(len(dist))
    alias = np.empty(len(dist), dtype=np.int64)
    _fill_alias(dist / total, prob, alias)
    if outcomes is None:
        outcomes = np.arange(len(dist))
    outcomes = np.asarray(outcomes)
    if len(outcomes) != len(dist):
        raise ValidationError("outcomes and distribution differ in length")
    return AliasTable(prob, alias, outcomes)


# walk configuration and kernels

@dataclass(frozen=True)
class WalkConfig:
    p: float = 1.0
    q: float = 1.0
    walk_length: int = 80
    walks_per_node: int = 10
    seed: int = 0
    precompute: bool = True
    workers: int = 1

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise ValidationError("p and q must be positive")
        if self.walk_length < 2:
            raise ValidationError("walk_length must be at least 2")
        if self.walks_per_node < 1:
            raise ValidationError("walks_per_node must be at least 1")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")


def _bias(g: Graph, prev: int, cand: np.ndarray, p: float, q: float) -> np.ndarray:
    prev_nb = g.neighbors(prev)
    pos = np.searchsorted(prev_nb, cand)
    pos = np.minimum(pos, max(len(prev_nb) - 1, 0))
    near = (prev_nb[pos] == cand) if len(prev_nb) else np.zeros(len(cand), bool)
    m = np.where(near, 1.0, 1.0 / q)
    return np.where(cand == prev, 1.0 / p, m)


def transition_distribution(g: Graph, prev: int, cur: int, cfg: WalkConfig) -> np.ndarray:
    """Next-step probabilities over ``g.neighbors(cur)`` given the previous node."""
    if not g.has_edge(prev, cur):
        raise ValidationError(f"({prev}, {cur}) is not an edge")
    cand = g.neighbors(cur)
    if len(cand) == 0:
        raise DeadEndError(cur)
    w = _bias(g, prev, cand, cfg.p, cfg.q) * g.neighbor_weights(cur)
    return w / w.sum()


def first_step_distribution(g: Graph, root: int) -> np.ndarray:
    w = g.neighbor_weights(root)
    if len(w) == 0:
        raise DeadEndError(root)
    return w / w.sum()


@njit(cache=True, nogil=True)
def _build_node_tables(indptr, weights, prob, alias):
    for u in range(len(indptr) - 1):
        lo = indptr[u]
        hi = indptr[u + 1]
        if hi > lo:
            w = weights[lo:hi]
            _fill_alias(w / w.sum(), prob[lo:hi], alias[lo:hi])


@njit(cache=True, nogil=True)
def _contains(indices, lo, hi, x):
    # binary search in the sorted slice indices[lo:hi]
    while lo < hi:
        mid = (lo + hi) >> 1
        v = indices[mid]
        if v == x:
            return True
        if v < x:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True, nogil=True)
def _edge_weights(indptr, indices, weights, prev, cur, p, q, out):
    lo = indptr[cur]
    hi = indptr[cur + 1]
    plo = indptr[prev]
    phi = indptr[prev + 1]
    tot = 0.0
    for j in range(lo, hi):
        c = indices[j]
        if c == prev:
            m = 1.0 / p
        elif _contains(indices, plo, phi, c):
            m = 1.0
        else:
            m = 1.0 / q
        out[j - lo] = m * weights[j]
        tot += out[j - lo]
    return tot


@njit(cache=True, nogil=True)
def _build_edge_tables(indptr, indices, weights, p, q, offsets, prob, alias):
    n = len(indptr) - 1
    maxdeg = 1
    for u in range(n):
        maxdeg = max(maxdeg, indptr[u + 1] - indptr[u])
    buf = np.empty(maxdeg)
    for prev in range(n):
        for e in range(indptr[prev], indptr[prev + 1]):
            cur = indices[e]
            k = indptr[cur + 1] - indptr[cur]
            if k == 0:
                continue
            tot = _edge_weights(indptr, indices, weights, prev, cur, p, q, buf)
            o = offsets[e]
            _fill_alias(buf[:k] / tot, prob[o:o + k], alias[o:o + k])


@njit(cache=True, nogil=True)
def _walk_roots(indptr, indices, weights, roots, seeds, r, length, p, q, precompute,
                node_prob, node_alias, edge_off, edge_prob, edge_alias, out, lens):
    maxdeg = 1
    for u in range(len(indptr) - 1):
        maxdeg = max(maxdeg, indptr[u + 1] - indptr[u])
    buf = np.empty(maxdeg)
    for ri in range(len(roots)):
        root = roots[ri]
        np.random.seed(seeds[ri])
        for rep in range(r):
            row = out[ri, rep]
            row[0] = root
            n_vis = 1
            lo = indptr[root]
            k = indptr[root + 1] - lo
            if k > 0:
                j = _alias_draw(node_prob, node_alias, lo, k)
                e = lo + j
                row[1] = indices[e]
                n_vis = 2
                while n_vis < length:
                    prev = row[n_vis - 2]
                    cur = row[n_vis - 1]
                    lo = indptr[cur]
                    k = indptr[cur + 1] - lo
                    if k == 0:
                        break
                    if precompute:
                        j = _alias_draw(edge_prob, edge_alias, edge_off[e], k)
                    else:
                        tot = _edge_weights(indptr, indices, weights, prev, cur, p, q, buf)
                        u = np.random.random() * tot
                        acc = 0.0
                        j = k - 1
                        for t in range(k):
                            acc += buf[t]
                            if u < acc:
                                j = t
                                break
                    e = lo + j
                    row[n_vis] = indices[e]
                    n_vis += 1
            lens[ri, rep] = n_vis


class WalkEngine:
    """Per-graph sampling state (alias tables) for the second-order walk."""

    def __init__(self, g: Graph, cfg: WalkConfig):
        self.graph = g
        self.cfg = cfg
        nnz = len(g.indices)
        self.node_prob = np.ones(nnz)
        self.node_alias = np.zeros(nnz, dtype=np.int64)
        _build_node_tables(g.indptr, g.weights, self.node_prob, self.node_alias)
        deg = np.diff(g.indptr)
        sizes = deg[g.indices] if nnz else np.zeros(0, dtype=np.int64)
        if cfg.precompute:
            self.edge_off = np.zeros(nnz, dtype=np.int64)
            if nnz:
                self.edge_off[1:] = np.cumsum(sizes)[:-1]
            total = int(sizes.sum())
            self.edge_prob = np.ones(total)
            self.edge_alias = np.zeros(total, dtype=np.int64)
            _build_edge_tables(g.indptr, g.indices, g.weights, float(cfg.p), float(cfg.q),
                               self.edge_off, self.edge_prob, self.edge_alias)
        else:
            self.edge_off = np.zeros(1, dtype=np.int64)
            self.edge_prob = np.ones(1)
            self.edge_alias = np.zeros(1, dtype=np.int64)

    @property
    def n_edge_tables(self) -> int:
        """Number of stored second-order alias tables (one per directed edge)."""
        return len(self.graph.indices) if self.cfg.precompute else 0

    def edge_table(self, prev: int, cur: int) -> AliasTable:
        g = self.graph
        if not self.cfg.precompute:
            raise ValidationError("edge tables exist only in precompute mode")
        lo = g.indptr[prev]
        e = lo + int(np.searchsorted(g.neighbors(prev), cur))
        k = g.degree(cur)
        o = self.edge_off[e]
        return AliasTable(self.edge_prob[o:o + k], self.edge_alias[o:o + k], g.neighbors(cur))

    def walk(self, roots, seeds):
        """Run ``walks_per_node`` walks from each root; returns (nodes, lengths)."""
        g, cfg = self.graph, self.cfg
        roots = np.asarray(roots, dtype=np.int64)
        seeds = np.asarray(seeds, dtype=np.int64)
        out = np.full((len(roots), cfg.walks_per_node, cfg.walk_length), -1, dtype=np.int64)
        lens = np.zeros((len(roots), cfg.walks_per_node), dtype=np.int64)
        nw = min(cfg.workers, max(1, len(roots)))
        if nw == 1:
            self._run(roots, seeds, out, lens)
        else:
            parts = np.array_split(np.arange(len(roots)), nw)
            threads = [threading.Thread(target=self._run_part, args=(ix, roots, seeds, out, lens))
                       for ix in parts]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        return out, lens

    def _run_part(self, ix, roots, seeds, out, lens):
        o = np.empty((len(ix),) + out.shape[1:], dtype=np.int64)
        ln = np.empty((len(ix), out.shape[1]), dtype=np.int64)
        self._run(roots[ix], seeds[ix], o, ln)
        out[ix] = o
        lens[ix] = ln

    def _run(self, roots, seeds, out, lens):
        g, cfg = self.graph, self.cfg
        _walk_roots(g.indptr, g.indices, g.weights, roots, seeds, cfg.walks_per_node,
                    cfg.walk_length, float(cfg.p), float(cfg.q), cfg.precompute,
                    self.node_prob, self.node_alias, self.edge_off, self.edge_prob,
                    self.edge_alias, out, lens)


def root_seeds(seed: int, graph_index: int, n_roots: int) -> np.ndarray:
    """Independent per-root seeds derived from (seed, graph, root)."""
    return np.array([np.random.SeedSequence([seed, graph_index, root]).generate_state(1)[0]
                     for root in range(n_roots)], dtype=np.int64)


# corpus

@dataclass
class WalkCorpus:
    """Walks stored flat: ``nodes[offsets[i]:offsets[i+1]]`` is walk ``i``."""

    nodes: np.ndarray
    offsets: np.ndarray
    graph_ids: np.ndarray
    n_nodes: int
    node_labels: Sequence[str] | None = None
    graph_labels: Sequence[str] | None = None
    node_counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.nodes = np.ascontiguousarray(self.nodes, dtype=np.int64)
        self.offsets = np.ascontiguousarray(self.offsets, dtype=np.int64)
        self.graph_ids = np.ascontiguousarray(self.graph_ids, dtype=np.int64)
        if len(self.offsets) != len(self.graph_ids) + 1:
            raise ValidationError("offsets must have one more entry than walks")
        if len(self.nodes) and (self.nodes.min() < 0 or self.nodes.max() >= self.n_nodes):
            raise ValidationError("walk node outside vocabulary")
        self.node_counts = np.bincount(self.nodes, minlength=self.n_nodes)

    def __len__(self):
        return len(self.graph_ids)

    @property
    def n_graphs(self) -> int:
        if self.graph_labels is not None:
            return len(self.graph_labels)
        return int(self.graph_ids.max()) + 1 if len(self.graph_ids) else 0

    def walk(self, i: int) -> np.ndarray:
        return self.nodes[self.offsets[i]:self.offsets[i + 1]]

    @property
    def walks(self):
        return [(int(self.graph_ids[i]), self.walk(i)) for i in range(len(self))]

    def __eq__(self, other):
        if not isinstance(other, WalkCorpus):
            return NotImplemented
        return (self.n_nodes == other.n_nodes
                and np.array_equal(self.nodes, other.nodes)
                and np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.graph_ids, other.graph_ids))

    @classmethod
    def from_walks(cls, walks, n_nodes=None, node_labels=None, graph_labels=None):
        """Build from ``(graph_id, node sequence)`` pairs."""
        walks = list(walks)
        seqs = [np.asarray(w, dtype=np.int64) for _, w in walks]
        offsets = np.zeros(len(seqs) + 1, dtype=np.int64)
        offsets[1:] = np.cumsum([len(s) for s in seqs])
        nodes = np.concatenate(seqs) if seqs else np.zeros(0, dtype=np.int64)
        if n_nodes is None:
            n_nodes = len(node_labels) if node_labels is not None else (int(nodes.max()) + 1 if len(nodes) else 0)
        return cls(nodes, offsets, [gid for gid, _ in walks], n_nodes,
                   node_labels=node_labels, graph_labels=graph_labels)


def generate_corpus(graphs, cfg: WalkConfig, node_maps=None, n_nodes=None,
                    node_labels=None, graph_labels=None) -> WalkCorpus:
    """Sample ``walks_per_node`` walks from every node of every graph.

    ``node_maps[i]`` translates local ids of ``graphs[i]`` into a shared
    vocabulary (used for ego-networks); without it each graph's ids are used
    as-is. Walks are laid out graph by graph, repetition-outer and root-inner,
    then shuffled once with ``cfg.seed``.
    """
    if isinstance(graphs, Graph):
        graphs = [graphs]
    graphs = list(graphs)
    if not graphs:
        raise ValidationError("no graphs given")
    seqs, gids = [], []
    for gi, g in enumerate(graphs):
        if g.node_count == 0:
            raise ValidationError(f"graph {gi} is empty")
        engine = WalkEngine(g, cfg)
        out, lens = engine.walk(np.arange(g.node_count), root_seeds(cfg.seed, gi, g.node_count))
        mapping = None if node_maps is None else np.asarray(node_maps[gi], dtype=np.int64)
        for rep in range(cfg.walks_per_node):
            for root in range(g.node_count):
                w = out[root, rep, :lens[root, rep]]
                seqs.append(w if mapping is None else mapping[w])
                gids.append(gi)
    order = np.random.default_rng(cfg.seed).permutation(len(seqs))
    seqs = [seqs[i] for i in order]
    gids = [gids[i] for i in order]
    if n_nodes is None:
        if node_labels is not None:
            n_nodes = len(node_labels)
        elif node_maps is None:
            n_nodes = max(g.node_count for g in graphs)
        else:
            n_nodes = max(int(np.max(m)) for m in node_maps) + 1
    if node_labels is None and node_maps is None and len(graphs) == 1:
        node_labels = graphs[0].labels
    if graph_labels is None:
        graph_labels = [str(i) for i in range(len(graphs))]
    return WalkCorpus.from_walks(zip(gids, seqs), n_nodes=n_nodes,
                                 node_labels=node_labels, graph_labels=graph_labels)


def write_corpus(corpus: WalkCorpus, path) -> None:
    """One walk per line: ``graphId<TAB>node1 node2 ...`` using labels when known."""
    nl = corpus.node_labels
    gl = corpus.graph_labels
    with open(path, "w", encoding="utf-8") as f:
        for i in range(len(corpus)):
            gid = int(corpus.graph_ids[i])
            w = corpus.walk(i)
            toks = [nl[u] for u in w] if nl is not None else [str(u) for u in w]
            f.write(f"{gl[gid] if gl is not None else gid}\t{' '.join(toks)}\n")


def read_corpus(path) -> WalkCorpus:
    """Read a corpus file; node and graph vocabularies follow first-seen order."""
    nodes: dict[str, int] = {}
    graphs: dict[str, int] = {}
    walks = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if "\t" not in line:
                raise ParseError("expected 'graphId<TAB>nodes'", os.fspath(path), lineno)
            gtok, rest = line.split("\t", 1)
            toks = rest.split()
            if not toks:
                raise ParseError("empty walk", os.fspath(path), lineno)
            gid = graphs.setdefault(gtok, len(graphs))
            walks.append((gid, [nodes.setdefault(t, len(nodes)) for t in toks]))
    return WalkCorpus.from_walks(walks, n_nodes=len(nodes), node_labels=list(nodes),
                                 graph_labels=list(graphs))
