"""Stochastic gradient ascent on the negative-sampling objective.

Both architectures share one update rule per window: every gradient is
computed from the parameters as they were before the step, then all
updates are applied together. The single-step functions (:func:`dm_step`,
:func:`inverse_step`) and the compiled training loop call the same kernels.
"""
from __future__ import annotations

import csv
import math
import threading
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ValidationError
from .model import EmbeddingModel, WindowSample
from .sampler import AliasTable, WalkCorpus, build_alias

LOGIT_CLIP = 30.0
_TINY = 1e-280
MAX_REDRAWS = 100
ARCHITECTURES = ("dm", "inverse")
# unigram noise for DM; flat noise for the inverse architecture, whose graph
# term would otherwise have the node-frequency signal divided out of it
DEFAULT_NOISE_EXPONENT = {"dm": 1.0, "inverse": 0.0}


@dataclass(frozen=True)
class TrainConfig:
    architecture: str = "inverse"
    window: int = 10
    negatives: int = 5
    epochs: int = 1
    lr0: float = 0.025
    lr_min: float | None = None
    noise_exponent: float | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValidationError(f"architecture must be one of {ARCHITECTURES}")
        if self.window < 1 or self.negatives < 1:
            raise ValidationError("window and negatives must be at least 1")
        if self.epochs < 0:
            raise ValidationError("epochs must be non-negative")
        if not self.lr0 > self.min_lr > 0:
            raise ValidationError("need lr0 > lr_min > 0")
        if self.alpha < 0:
            raise ValidationError("noise exponent must be non-negative")
        if self.workers < 1:
            raise ValidationError("workers must be at least 1")

    @property
    def alpha(self) -> float:
        """Resolved noise exponent (architecture default when unset)."""
        if self.noise_exponent is None:
            return DEFAULT_NOISE_EXPONENT[self.architecture]
        return self.noise_exponent

    @property
    def min_lr(self) -> float:
        return self.lr0 * 1e-4 if self.lr_min is None else self.lr_min


@dataclass(frozen=True)
class NoiseDistribution:
    support: np.ndarray
    probs: np.ndarray
    table: AliasTable

    def sample(self, rng, size=None):
        return self.table.sample(rng, size)

    def as_dense(self, n_nodes: int) -> np.ndarray:
        out = np.zeros(n_nodes)
        out[self.support] = self.probs
        return out


def build_noise(corpus_or_counts, alpha: float = 0.0) -> NoiseDistribution:
    """Noise distribution proportional to ``count ** alpha`` over observed nodes."""
    counts = (corpus_or_counts.node_counts if isinstance(corpus_or_counts, WalkCorpus)
              else np.asarray(corpus_or_counts))
    if alpha < 0:
        raise ValidationError("noise exponent must be non-negative")
    support = np.flatnonzero(counts > 0)
    if len(support) == 0:
        raise ValidationError("empty corpus")
    w = counts[support].astype(np.float64) ** alpha
    probs = w / w.sum()
    return NoiseDistribution(support, probs, build_alias(probs, support))


# scalar helpers

@njit(cache=True, nogil=True, inline="always")
def _clip(s):
    if s > LOGIT_CLIP:
        return LOGIT_CLIP
    if s < -LOGIT_CLIP:
        return -LOGIT_CLIP
    return s


@njit(cache=True, nogil=True)
def _log_sigmoid(s):
    s = _clip(s)
    if s >= 0:
        return -math.log1p(math.exp(-s))
    return s - math.log1p(math.exp(s))


@njit(cache=True, nogil=True)
def _sigmoid(s):
    s = _clip(s)
    return 1.0 / (1.0 + math.exp(-s))


@njit(cache=True, nogil=True, inline="always", error_model="numpy")
def _logit_terms(s, positive):
    """(sigmoid of the signed logit, d log-sigmoid / d s)."""
    s = _clip(s)
    e = math.exp(-abs(s))
    inv = 1.0 / (1.0 + e)
    if s >= 0:
        sp = inv
        sn = e * inv
    else:
        sp = e * inv
        sn = inv
    if positive:
        return sp, sn
    return sn, -sp


def ns_objective(positive_score: float, negative_scores) -> float:
    """``log s(pos) + sum log s(-neg)`` with logits clipped to +-30."""
    total = _log_sigmoid(float(positive_score))
    for s in negative_scores:
        total += _log_sigmoid(-float(s))
    return float(total)


# update kernels

@njit(cache=True, nogil=True, inline="always")
def _accumulate(obj, prod, f):
    # objective kept as a product of sigmoids; folded into the log-sum before underflow
    prod *= f
    if prod < _TINY:
        obj += math.log(prod)
        prod = 1.0
    return obj, prod


@njit(cache=True, nogil=True, fastmath=True, error_model="numpy")
def _dm_update(V, G, C, g, ctx_nodes, ctx_rows, nctx, outs, nout, lr, ws, coefs, dctx_v, dctx_c):
    # ws rows: 0 predicted representation, 1 its gradient
    d = V.shape[1]
    vhat = ws[0]
    gvh = ws[1]
    vg = G[g]
    for j in range(d):
        vhat[j] = vg[j]
        gvh[j] = 0.0
    for i in range(nctx):
        vu = V[ctx_nodes[i]]
        cr = C[ctx_rows[i]]
        for j in range(d):
            vhat[j] += cr[j] * vu[j]
    obj = 0.0
    prod = 1.0
    for m in range(nout):
        o = outs[m]
        if o < 0:
            continue
        vo = V[o]
        s = 0.0
        for j in range(d):
            s += vhat[j] * vo[j]
        f, coef = _logit_terms(s, m == 0)
        obj, prod = _accumulate(obj, prod, f)
        coefs[m] = coef
        for j in range(d):
            gvh[j] += coef * vo[j]
    for i in range(nctx):
        vu = V[ctx_nodes[i]]
        cr = C[ctx_rows[i]]
        dv = dctx_v[i]
        dcc = dctx_c[i]
        for j in range(d):
            dv[j] = cr[j] * gvh[j]
            dcc[j] = vu[j] * gvh[j]
    for j in range(d):
        vg[j] += lr * gvh[j]
    for m in range(nout):
        o = outs[m]
        if o < 0:
            continue
        vo = V[o]
        c = lr * coefs[m]
        for j in range(d):
            vo[j] += c * vhat[j]
    for i in range(nctx):
        vu = V[ctx_nodes[i]]
        cr = C[ctx_rows[i]]
        dv = dctx_v[i]
        dcc = dctx_c[i]
        for j in range(d):
            vu[j] += lr * dv[j]
            cr[j] += lr * dcc[j]
    return obj + math.log(prod)


@njit(cache=True, nogil=True, fastmath=True, error_model="numpy")
def _inverse_update(V, G, C, g, t, gouts, ctx_rows, couts, nctx, nout, lr, ws, gcoef, ccoef, u, dc):
    # ws rows: 0 target gradient, 1 graph gradient, 2 saved v_G, 3 saved v_t, 4 accumulator
    d = V.shape[1]
    dvt = ws[0]
    dg = ws[1]
    gsave = ws[2]
    tsave = ws[3]
    acc = ws[4]
    vg = G[g]
    vt = V[t]
    for j in range(d):
        dvt[j] = 0.0
        dg[j] = 0.0
        gsave[j] = vg[j]
        tsave[j] = vt[j]
    obj = 0.0
    prod = 1.0
    # graph -> target
    for m in range(nout):
        o = gouts[m]
        if o < 0:
            continue
        vo = V[o]
        s = 0.0
        for j in range(d):
            s += gsave[j] * vo[j]
        f, coef = _logit_terms(s, m == 0)
        obj, prod = _accumulate(obj, prod, f)
        gcoef[m] = coef
        for j in range(d):
            dg[j] += coef * vo[j]
    # target -> each context position through its weight vector
    for i in range(nctx):
        ui = u[i]
        cr = C[ctx_rows[i]]
        for j in range(d):
            ui[j] = tsave[j] * cr[j]
            acc[j] = 0.0
        for m in range(nout):
            o = couts[i, m]
            if o < 0:
                continue
            vo = V[o]
            s = 0.0
            for j in range(d):
                s += ui[j] * vo[j]
            f, coef = _logit_terms(s, m == 0)
            obj, prod = _accumulate(obj, prod, f)
            ccoef[i, m] = coef
            for j in range(d):
                acc[j] += coef * vo[j]
        dci = dc[i]
        for j in range(d):
            dvt[j] += cr[j] * acc[j]
            dci[j] = tsave[j] * acc[j]
    for j in range(d):
        vg[j] += lr * dg[j]
        vt[j] += lr * dvt[j]
    for m in range(nout):
        o = gouts[m]
        if o < 0:
            continue
        vo = V[o]
        c = lr * gcoef[m]
        for j in range(d):
            vo[j] += c * gsave[j]
    for i in range(nctx):
        ui = u[i]
        for m in range(nout):
            o = couts[i, m]
            if o < 0:
                continue
            vo = V[o]
            c = lr * ccoef[i, m]
            for j in range(d):
                vo[j] += c * ui[j]
        cr = C[ctx_rows[i]]
        dci = dc[i]
        for j in range(d):
            cr[j] += lr * dci[j]
    return obj + math.log(prod)


# splitmix64 stream for the training loops; numba's thread-local np.random
# costs ~20ns per call, which would dominate the per-window work at small d
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_TO_UNIT = 1.0 / 9007199254740992.0


@njit(cache=True, nogil=True, inline="always")
def _uniform(state):
    z = state[0] + _GOLDEN
    state[0] = z
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    z = z ^ (z >> np.uint64(31))
    return float(z >> np.uint64(11)) * _TO_UNIT


@njit(cache=True, nogil=True)
def _draw_negative(nprob, nalias, nvals, avoid, state):
    n = len(nprob)
    for _ in range(MAX_REDRAWS):
        x = _uniform(state) * n
        i = int(x)
        if x - i >= nprob[i]:
            i = nalias[i]
        v = nvals[i]
        if v != avoid:
            return v
    return -1


@njit(cache=True, nogil=True)
def _schedule(lr0, lr_min, progress, total):
    lr = lr0 - (lr0 - lr_min) * progress / total
    return lr if lr > lr_min else lr_min


@njit(cache=True, nogil=True)
def _train_dm(nodes, offsets, gids, walk_ids, V, G, C, n, k, nprob, nalias, nvals,
              lr0, lr_min, total, progress0, obj, obj0, seed):
    state = np.full(1, seed, dtype=np.uint64)
    d = V.shape[1]
    width = max(n - 1, 1)
    ctx_nodes = np.empty(width, dtype=np.int64)
    ctx_rows = np.empty(width, dtype=np.int64)
    outs = np.empty(k + 1, dtype=np.int64)
    ws = np.empty((2, d))
    coefs = np.empty(k + 1)
    dctx_v = np.empty((width, d))
    dctx_c = np.empty((width, d))
    done = 0
    for wi in walk_ids:
        lo = offsets[wi]
        hi = offsets[wi + 1]
        g = gids[wi]
        for t in range(lo + 1, hi):
            nctx = 0
            for dist in range(1, n):
                p = t - dist
                if p < lo:
                    break
                ctx_nodes[nctx] = nodes[p]
                ctx_rows[nctx] = n - 1 - dist
                nctx += 1
            target = nodes[t]
            outs[0] = target
            for m in range(1, k + 1):
                outs[m] = _draw_negative(nprob, nalias, nvals, target, state)
            lr = _schedule(lr0, lr_min, progress0 + done, total)
            obj[obj0 + done] = _dm_update(V, G, C, g, ctx_nodes, ctx_rows, nctx, outs, k + 1,
                                          lr, ws, coefs, dctx_v, dctx_c)
            done += 1
    return done


@njit(cache=True, nogil=True)
def _train_inverse(nodes, offsets, gids, walk_ids, V, G, C, n, k, nprob, nalias, nvals,
                   lr0, lr_min, total, progress0, obj, obj0, seed):
    state = np.full(1, seed, dtype=np.uint64)
    d = V.shape[1]
    gouts = np.empty(k + 1, dtype=np.int64)
    ctx_rows = np.empty(2 * n, dtype=np.int64)
    couts = np.empty((2 * n, k + 1), dtype=np.int64)
    ws = np.empty((5, d))
    gcoef = np.empty(k + 1)
    ccoef = np.empty((2 * n, k + 1))
    u = np.empty((2 * n, d))
    dc = np.empty((2 * n, d))
    done = 0
    for wi in walk_ids:
        lo = offsets[wi]
        hi = offsets[wi + 1]
        g = gids[wi]
        for t in range(lo, hi):
            target = nodes[t]
            gouts[0] = target
            for m in range(1, k + 1):
                gouts[m] = _draw_negative(nprob, nalias, nvals, target, state)
            nctx = 0
            for off in range(-n, n + 1):
                p = t + off
                if off == 0 or p < lo or p >= hi:
                    continue
                ctx = nodes[p]
                ctx_rows[nctx] = off + n if off < 0 else off + n - 1
                couts[nctx, 0] = ctx
                for m in range(1, k + 1):
                    couts[nctx, m] = _draw_negative(nprob, nalias, nvals, ctx, state)
                nctx += 1
            lr = _schedule(lr0, lr_min, progress0 + done, total)
            obj[obj0 + done] = _inverse_update(V, G, C, g, target, gouts, ctx_rows, couts,
                                               nctx, k + 1, lr, ws, gcoef, ccoef, u, dc)
            done += 1
    return done


# single-step API

def _draw_negatives(noise: NoiseDistribution, rng, k: int, avoid: int) -> np.ndarray:
    out = np.full(k, -1, dtype=np.int64)
    for m in range(k):
        for _ in range(MAX_REDRAWS):
            v = int(noise.sample(rng))
            if v != avoid:
                out[m] = v
                break
    return out


def dm_step(m: EmbeddingModel, s: WindowSample, noise: NoiseDistribution | None,
            cfg: TrainConfig, lr: float, rng=None, negatives=None) -> float:
    """One ascent step for a DM window; returns the objective before the update.

    ``negatives`` overrides sampling from ``noise``; entries of ``-1`` are skipped.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    m._graph(s.graph)
    m._node(s.target)
    for _, u in s.context:
        m._node(u)
    ctx_nodes = np.array([u for _, u in s.context], dtype=np.int64)
    ctx_rows = np.array([m.dm_row(off) for off, _ in s.context], dtype=np.int64)
    if negatives is None:
        negatives = _draw_negatives(noise, rng, cfg.negatives, s.target)
    outs = np.concatenate([[s.target], np.asarray(negatives, dtype=np.int64)]).astype(np.int64)
    for o in outs:
        if o >= 0:
            m._node(int(o))
    nctx, d, nout = len(ctx_nodes), m.dim, len(outs)
    w = max(nctx, 1)
    return float(_dm_update(m.node_vectors, m.graph_vectors, m.dm_context_weights, s.graph,
                            ctx_nodes.reshape(-1), ctx_rows.reshape(-1), nctx, outs, nout,
                            float(lr), np.empty((2, d)), np.empty(nout),
                            np.empty((w, d)), np.empty((w, d))))


def inverse_step(m: EmbeddingModel, graph: int, target: int, context, noise, cfg: TrainConfig,
                 lr: float, rng=None, negatives=None) -> float:
    """One ascent step for the inverse architecture.

    The graph vector predicts ``target`` and ``target`` predicts each
    ``(offset, node)`` of ``context``. ``negatives`` may be given as
    ``(graph_negatives, [negatives per context entry])``.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    m._graph(graph)
    m._node(target)
    context = list(context)
    k = cfg.negatives
    if negatives is None:
        gneg = _draw_negatives(noise, rng, k, target)
        cneg = [_draw_negatives(noise, rng, k, node) for _, node in context]
    else:
        gneg, cneg = negatives
        gneg = np.asarray(gneg, dtype=np.int64)
        cneg = [np.asarray(x, dtype=np.int64) for x in cneg]
        k = len(gneg)
        if len(cneg) != len(context) or any(len(x) != k for x in cneg):
            raise ValidationError("need one negative list of equal length per context entry")
    nctx, d, nout = len(context), m.dim, k + 1
    gouts = np.concatenate([[target], gneg]).astype(np.int64)
    couts = np.full((max(nctx, 1), nout), -1, dtype=np.int64)
    rows = np.zeros(max(nctx, 1), dtype=np.int64)
    for i, (off, node) in enumerate(context):
        m._node(node)
        rows[i] = m.sg_row(off)
        couts[i, 0] = node
        couts[i, 1:] = cneg[i]
    for o in np.concatenate([gouts, couts.ravel()]):
        if o >= 0:
            m._node(int(o))
    w = max(nctx, 1)
    return float(_inverse_update(m.node_vectors, m.graph_vectors, m.sg_context_weights, graph,
                                 target, gouts, rows, couts, nctx, nout, float(lr),
                                 np.empty((5, d)), np.empty(nout), np.empty((w, nout)),
                                 np.empty((w, d)), np.empty((w, d))))


# training loop

@dataclass
class TrainResult:
    model: EmbeddingModel
    epoch_objectives: list = field(default_factory=list)
    sample_objectives: np.ndarray = field(default_factory=lambda: np.zeros(0))


def samples_per_walk(corpus: WalkCorpus, architecture: str) -> np.ndarray:
    lens = np.diff(corpus.offsets)
    return np.maximum(lens - 1, 0) if architecture == "dm" else lens


def _epoch_seed(seed, epoch, worker):
    return int(np.random.SeedSequence([seed, epoch, worker]).generate_state(1)[0])


def train(m: EmbeddingModel, corpus: WalkCorpus, cfg: TrainConfig) -> TrainResult:
    """Train ``m`` in place over ``cfg.epochs`` passes of ``corpus``.

    The learning rate decays linearly per window from ``lr0`` to ``lr_min``.
    ``sample_objectives`` holds the per-window objective of every epoch in
    processing order. With ``workers > 1`` walks are split into contiguous
    chunks trained by threads that update the shared arrays without locks.
    """
    if corpus.n_nodes > m.n_nodes:
        raise ValidationError(f"corpus has {corpus.n_nodes} nodes, model only {m.n_nodes}")
    if len(corpus) and int(corpus.graph_ids.max()) >= m.n_graphs:
        raise ValidationError(f"corpus references graph {int(corpus.graph_ids.max())}, "
                              f"model has {m.n_graphs}")
    if cfg.window != m.window:
        raise ValidationError(f"config window {cfg.window} != model window {m.window}")
    result = TrainResult(model=m)
    if cfg.epochs == 0 or len(corpus) == 0:
        return result
    noise = build_noise(corpus, cfg.alpha)
    nprob, nalias, nvals = noise.table.prob, noise.table.alias, noise.table.outcomes.astype(np.int64)
    per_walk = samples_per_walk(corpus, cfg.architecture)
    starts = np.concatenate([[0], np.cumsum(per_walk)])
    per_epoch = int(starts[-1])
    total = float(max(per_epoch * cfg.epochs, 1))
    if cfg.architecture == "dm":
        kernel, C = _train_dm, m.dm_context_weights
    else:
        kernel, C = _train_inverse, m.sg_context_weights
    traces = []
    nw = min(cfg.workers, len(corpus))
    chunks = np.array_split(np.arange(len(corpus), dtype=np.int64), nw)
    for epoch in range(cfg.epochs):
        obj = np.zeros(per_epoch)

        def run(worker, ids):
            first = int(starts[ids[0]]) if len(ids) else 0
            kernel(corpus.nodes, corpus.offsets, corpus.graph_ids, ids, m.node_vectors,
                   m.graph_vectors, C, cfg.window, cfg.negatives, nprob, nalias, nvals,
                   cfg.lr0, cfg.min_lr, total, epoch * per_epoch + first, obj, first,
                   _epoch_seed(cfg.seed, epoch, worker))

        if nw == 1:
            run(0, chunks[0])
        else:
            threads = [threading.Thread(target=run, args=(i, ids)) for i, ids in enumerate(chunks)]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
        traces.append(obj)
        result.epoch_objectives.append(float(obj.mean()) if per_epoch else 0.0)
    result.sample_objectives = np.concatenate(traces)
    return result


def write_trace(epoch_objectives, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["epoch", "mean_objective"])
        for i, v in enumerate(epoch_objectives, start=1):
            w.writerow([i, repr(float(v))])
