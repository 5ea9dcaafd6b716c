"""Role discovery, concept analogy and multi-label classification protocols."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ParseError, ValidationError
from .graph import Graph, ego_network, structural_features
from .model import EmbeddingModel, init
from .sampler import WalkConfig, generate_corpus
from .trainer import TrainConfig, train


def cosine(u, v) -> float:
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValidationError("cosine of a zero vector")
    return float(np.clip(u @ v / (nu * nv), -1.0, 1.0))


def _cosines(q, X):
    nq = np.linalg.norm(q)
    if nq == 0:
        raise ValidationError("query vector is zero")
    norms = np.linalg.norm(X, axis=1)
    norms[norms == 0] = np.inf
    return X @ q / (norms * nq)


def rank_by_cosine(query_vec, embeddings, candidates) -> np.ndarray:
    """Candidates sorted by cosine to ``query_vec``, ties by ascending id."""
    cand = np.asarray(sorted(candidates), dtype=np.int64)
    sims = _cosines(np.asarray(query_vec, float), np.asarray(embeddings, float)[cand])
    return cand[np.lexsort((cand, -sims))]


# role discovery

def precision_at_k(query: int, embeddings, labels: Mapping[int, set], k: int) -> float:
    if query not in labels:
        raise ValidationError(f"query {query} is unlabeled")
    others = [i for i in labels if i != query]
    if len(others) < k:
        raise ValidationError(f"only {len(others)} candidates for k={k}")
    emb = np.asarray(embeddings, float)
    ranked = rank_by_cosine(emb[query], emb, others)[:k]
    mine = labels[query]
    return sum(1 for i in ranked if labels[int(i)] & mine) / k


def mean_precision_at_k(embeddings, labels: Mapping[int, set], ks=(1, 5, 10)) -> dict:
    """Mean precision@k over every labeled query."""
    return {k: float(np.mean([precision_at_k(q, embeddings, labels, k) for q in labels]))
            for k in ks}


# analogy

@dataclass(frozen=True)
class AnalogyTuple:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if len({self.a, self.b, self.c, self.d}) != 4:
            raise ValidationError(f"analogy ids must be distinct: {self}")


def analogy_query(a: int, b: int, c: int, embeddings, k: int | None = None) -> np.ndarray:
    """Nodes nearest to ``v_b - v_a + v_c`` by cosine, excluding a, b and c."""
    emb = np.asarray(embeddings, float)
    n = emb.shape[0]
    for x in (a, b, c):
        if not 0 <= x < n:
            raise KeyError(f"node {x} not in vocabulary")
    target = emb[b] - emb[a] + emb[c]
    cand = [i for i in range(n) if i not in (a, b, c)]
    ranked = rank_by_cosine(target, emb, cand)
    return ranked if k is None else ranked[:k]


def analogy_hits(tuples: Iterable[AnalogyTuple], embeddings, ks=(1, 5, 10)) -> dict:
    tuples = list(tuples)
    if not tuples:
        raise ValidationError("no analogy tuples")
    top = max(ks)
    hits = {k: 0 for k in ks}
    for t in tuples:
        ranked = list(analogy_query(t.a, t.b, t.c, embeddings, top))
        pos = ranked.index(t.d) if t.d in ranked else None
        for k in ks:
            hits[k] += pos is not None and pos < k
    return {k: hits[k] / len(tuples) for k in ks}


def read_analogies(path, index: Mapping[str, int]) -> list[AnalogyTuple]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) != 4:
                raise ParseError("expected 4 ids", str(path), lineno)
            try:
                out.append(AnalogyTuple(*(index[p] for p in parts)))
            except KeyError as e:
                raise ParseError(f"unknown id {e.args[0]}", str(path), lineno) from None
            except ValidationError as e:
                raise ParseError(str(e), str(path), lineno) from None
    return out


# one-vs-rest logistic regression

def logistic_loss_grad(w, b, X, y, l2):
    """Mean log-loss plus ``l2/2 * |w|^2`` and its gradient; intercept unpenalized."""
    z = X @ w + b
    # log(1 + e^z) - y z, evaluated stably
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * (w @ w)
    r = (0.5 * (1.0 + np.tanh(0.5 * z)) - y) / len(y)
    return loss, X.T @ r + l2 * w, r.sum()


def fit_logistic(X, y, l2, tol=1e-6, max_iter=1000):
    """Full-batch gradient descent with Armijo backtracking.

    Each coordinate's step is scaled by the inverse of its curvature bound
    (``mean(x_j^2)/4 + l2`` for weights, ``1/4`` for the intercept) so a
    heavy penalty on ``w`` does not stall the intercept. Returns
    ``(w, b, losses)``; ``losses`` is non-increasing.
    """
    n, d = X.shape
    scale_w = 1.0 / (0.25 * np.mean(X * X, axis=0) + l2 + 1e-12)
    scale_b = 4.0
    w = np.zeros(d)
    b = 0.0
    loss, gw, gb = logistic_loss_grad(w, b, X, y, l2)
    losses = [loss]
    step = 1.0
    for _ in range(max_iter):
        if np.sqrt(gw @ gw + gb * gb) < tol:
            break
        dw, db = scale_w * gw, scale_b * gb
        decrease = gw @ dw + gb * db
        while True:
            w_new = w - step * dw
            b_new = b - step * db
            new_loss, ngw, ngb = logistic_loss_grad(w_new, b_new, X, y, l2)
            if new_loss <= loss - 0.5 * step * decrease or step < 1e-12:
                break
            step *= 0.5
        if new_loss > loss:
            break
        w, b, loss, gw, gb = w_new, b_new, new_loss, ngw, ngb
        losses.append(loss)
        step = min(step * 2.0, 1.0)
    return w, b, losses


@dataclass
class OvrClassifier:
    labels: list
    weights: np.ndarray
    intercepts: np.ndarray
    features: np.ndarray = field(repr=False)
    degenerate: list = field(default_factory=list)

    def predict_proba(self, X) -> np.ndarray:
        z = np.asarray(X, float) @ self.weights.T + self.intercepts
        p = 0.5 * (1.0 + np.tanh(0.5 * z))
        for j, lab in enumerate(self.labels):
            if lab in self.degenerate:
                p[:, j] = 0.0
        return p

    def predict(self, X) -> list[set]:
        """Labels with probability above 0.5, or the single best label if none."""
        P = self.predict_proba(X)
        out = []
        for row in P:
            chosen = {self.labels[j] for j in np.flatnonzero(row > 0.5)}
            if not chosen:
                chosen = {self.labels[int(np.argmax(row))]}
            out.append(chosen)
        return out

    def predict_ids(self, ids) -> list[set]:
        return self.predict(self.features[np.asarray(list(ids), dtype=np.int64)])


def train_ovr_logreg(features, labels: Mapping[int, set], l2: float, train_ids,
                     label_universe: Sequence | None = None) -> OvrClassifier:
    features = np.asarray(features, float)
    train_ids = list(train_ids)
    for i in train_ids:
        if i not in labels:
            raise ValidationError(f"training node {i} has no label")
        if not 0 <= i < len(features):
            raise ValidationError(f"training node {i} has no embedding")
    universe = sorted(set(label_universe) if label_universe is not None
                      else set().union(*(labels[i] for i in labels)))
    X = features[np.asarray(train_ids, dtype=np.int64)]
    W = np.zeros((len(universe), features.shape[1]))
    B = np.zeros(len(universe))
    degenerate = []
    for j, lab in enumerate(universe):
        y = np.array([lab in labels[i] for i in train_ids], dtype=float)
        if y.sum() == 0:
            degenerate.append(lab)
            B[j] = -np.inf
            continue
        W[j], B[j], _ = fit_logistic(X, y, l2)
    return OvrClassifier(universe, W, B, features, degenerate)


def f1_scores(true_sets, pred_sets, universe=None):
    """Return ``(macro, micro, per_label)`` F1 for parallel lists of label sets."""
    if len(true_sets) == 0:
        raise ValidationError("empty test set")
    if universe is None:
        universe = set().union(*true_sets, *pred_sets)
    universe = sorted(universe)
    per = {}
    tp_all = fp_all = fn_all = 0
    for lab in universe:
        tp = sum(1 for t, p in zip(true_sets, pred_sets) if lab in t and lab in p)
        fp = sum(1 for t, p in zip(true_sets, pred_sets) if lab not in t and lab in p)
        fn = sum(1 for t, p in zip(true_sets, pred_sets) if lab in t and lab not in p)
        per[lab] = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn else 0.0
        tp_all += tp
        fp_all += fp
        fn_all += fn
    macro = float(np.mean(list(per.values()))) if per else 0.0
    denom = 2 * tp_all + fp_all + fn_all
    micro = 2 * tp_all / denom if denom else 0.0
    return macro, float(micro), per


def multilabel_f1(classifier: OvrClassifier, test_ids, labels: Mapping[int, set]):
    """(macro_f1, micro_f1) over labels seen in test truth or predictions."""
    test_ids = list(test_ids)
    if not test_ids:
        raise ValidationError("empty test set")
    truth = [labels[i] for i in test_ids]
    pred = classifier.predict_ids(test_ids)
    macro, micro, _ = f1_scores(truth, pred)
    return macro, micro


def stratified_split(ids, labels: Mapping[int, set], train_fraction: float, rng):
    """Seeded split stratified on each node's first (sorted) label."""
    if not 0 < train_fraction < 1:
        raise ValidationError("train fraction must lie in (0, 1)")
    strata: dict = {}
    for i in sorted(ids):
        strata.setdefault(min(labels[i]), []).append(i)
    train_ids, test_ids = [], []
    for key in sorted(strata):
        members = np.array(strata[key])
        rng.shuffle(members)
        cut = int(round(train_fraction * len(members)))
        if len(members) > 1:
            cut = min(max(cut, 1), len(members) - 1)
        train_ids += members[:cut].tolist()
        test_ids += members[cut:].tolist()
    return sorted(train_ids), sorted(test_ids)


@dataclass
class ClassificationReport:
    macro_f1: float
    micro_f1: float
    splits: np.ndarray
    per_label: dict


def evaluate_classification(features, labels: Mapping[int, set], train_fraction=0.5,
                            repeats=10, l2=1e-4, seed=0) -> ClassificationReport:
    """Mean F1 over ``repeats`` seeded stratified splits.

    ``splits`` holds one ``(macro, micro)`` row per split; ``per_label`` is
    each label's F1 averaged over the splits in which it was scored.
    """
    if repeats < 1:
        raise ValidationError("repeats must be positive")
    rng = np.random.default_rng(seed)
    ids = sorted(labels)
    universe = sorted(set().union(*labels.values()))
    scores, per = [], {}
    for _ in range(repeats):
        tr, te = stratified_split(ids, labels, train_fraction, rng)
        clf = train_ovr_logreg(features, labels, l2, tr, universe)
        macro, micro, per_split = f1_scores([labels[i] for i in te], clf.predict_ids(te))
        scores.append((macro, micro))
        for lab, f in per_split.items():
            per.setdefault(lab, []).append(f)
    scores = np.array(scores)
    return ClassificationReport(float(scores[:, 0].mean()), float(scores[:, 1].mean()),
                                scores, {lab: float(np.mean(v)) for lab, v in per.items()})


# role discovery pipeline

FEATURE_BASELINES = {
    "degrees": ("degrees",),
    "clustering": ("clustering",),
    "eigens": ("eigens",),
    "degrees+clustering+eigens": ("degrees", "clustering", "eigens"),
}


@dataclass
class RoleDiscoveryResult:
    precision: dict
    model: EmbeddingModel
    centers: list
    labels: dict
    baselines: dict = field(default_factory=dict)

    @property
    def graph_vectors(self):
        return self.model.graph_vectors


def ego_corpus(g: Graph, centers, walkcfg: WalkConfig):
    """Walks over each center's ego-network, in parent-graph node ids."""
    egos = [ego_network(g, c) for c in centers]
    corpus = generate_corpus([e.subgraph for e in egos], walkcfg,
                             node_maps=[e.parent_ids for e in egos], n_nodes=g.node_count,
                             node_labels=g.labels, graph_labels=[g.labels[c] for c in centers])
    return egos, corpus


def role_discovery_pipeline(g: Graph, centers, labels: Mapping[int, set], walkcfg: WalkConfig,
                            traincfg: TrainConfig, ks=(1, 5, 10), dim: int = 128,
                            baselines: bool = False) -> RoleDiscoveryResult:
    """Jointly embed the ego-networks of ``centers`` and score retrieval by role.

    ``labels`` is keyed by center node id. Each ego-network gets its own
    graph vector; precision@k is averaged over all centers.
    """
    centers = list(centers)
    for c in centers:
        if c not in labels:
            raise ValidationError(f"center {c} is unlabeled")
    egos, corpus = ego_corpus(g, centers, walkcfg)
    model = init(g.node_count, len(centers), dim, traincfg.window, seed=traincfg.seed,
                 node_labels=g.labels, graph_labels=corpus.graph_labels)
    train(model, corpus, traincfg)
    glabels = {i: set(labels[c]) for i, c in enumerate(centers)}
    result = RoleDiscoveryResult(mean_precision_at_k(model.graph_vectors, glabels, ks),
                                 model, centers, glabels)
    if baselines:
        feats = [structural_features(e.subgraph) for e in egos]
        for name, groups in FEATURE_BASELINES.items():
            X = np.array([f.as_vector(groups) for f in feats])
            result.baselines[name] = mean_precision_at_k(X + 1e-12, glabels, ks)
        mean_nodes = np.array([model.node_vectors[e.parent_ids].mean(axis=0) for e in egos])
        result.baselines["node_mean"] = mean_precision_at_k(mean_nodes, glabels, ks)
    return result


# output files

def write_rows(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in r])


def write_projection(path, ids, coords, tags) -> None:
    """``id,x,y,tag`` rows for scatter plots."""
    coords = np.asarray(coords, float)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValidationError("projection needs two coordinates per row")
    write_rows(path, ["id", "x", "y", "tag"],
               [(i, float(x), float(y), t) for i, (x, y), t in zip(ids, coords, tags)])
