"""Acceptance gate: one test and one printed PASS/FAIL line per criterion."""
import time

import networkx as nx
import numpy as np
import pytest
from scipy.stats import spearmanr

from conftest import random_graph, record_criterion, tv
from oracles import (dm_objective, inverse_objective, numeric_gradient, random_dm_instance,
                     random_inverse_instance, rel_error)
from netvector.cli import main as cli_main
from netvector.evalsuite import (AnalogyTuple, analogy_hits, evaluate_classification,
                                 fit_logistic, logistic_loss_grad, role_discovery_pipeline,
                                 stratified_split, write_projection)
from netvector.graph import load_karate
from netvector.model import init
from netvector.sampler import (WalkConfig, WalkEngine, first_step_distribution, generate_corpus,
                               transition_distribution)
from netvector.synthetic import planted_analogies, role_ego_graph, stochastic_block_model
from netvector.trainer import TrainConfig, dm_step, inverse_step, train

SEEDS = range(10)


def _test_graphs():
    rng = np.random.default_rng(2024)
    out = []
    for _ in range(50):
        n = int(rng.integers(3, 21))
        g = random_graph(rng, n, float(rng.uniform(0.15, 0.5)))
        p, q = np.exp(rng.uniform(np.log(0.25), np.log(4.0), size=2))
        out.append((g, float(p), float(q)))
    return out


def _states(g):
    for u in range(g.node_count):
        for v in g.neighbors(u):
            if g.degree(int(v)):
                yield u, int(v)


def _distance_kernel(g, prev, cur, p, q):
    G = nx.Graph(list((a, b) for a, b, _ in g.edges()))
    w = []
    for c in g.neighbors(cur):
        d = nx.shortest_path_length(G, prev, int(c))
        w.append((1 / p if d == 0 else 1.0 if d == 1 else 1 / q) * g.weight(cur, int(c)))
    return np.array(w) / sum(w)


def test_criterion_01_transition_kernel_fidelity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_tv = worst_exact = 0.0
    states = 0
    for g, p, q in _test_graphs():
        cfg = WalkConfig(p=p, q=q)
        engine = WalkEngine(g, cfg)
        for prev, cur in _states(g):
            exact = transition_distribution(g, prev, cur, cfg)
            table = engine.edge_table(prev, cur)
            draws = table.sample(rng, 10**5)
            freq = np.bincount(np.searchsorted(table.outcomes, draws),
                               minlength=len(exact)) / 1e5
            worst_tv = max(worst_tv, tv(freq, exact))
            if states % 25 == 0:
                ref = _distance_kernel(g, prev, cur, p, q)
                worst_exact = max(worst_exact, float(np.abs(ref - exact).max()))
            states += 1
    elapsed = time.perf_counter() - t0
    ok = worst_tv < 0.01 and elapsed < 30 and worst_exact < 1e-12
    record_criterion(1, "transition-kernel fidelity", ok,
                     f"{states} states on 50 graphs, max TV {worst_tv:.4f} (< 0.01), "
                     f"kernel vs distance oracle {worst_exact:.1e}, {elapsed:.1f}s (< 30s)")
    assert ok


def test_criterion_02_first_order_reduction():
    worst = 0.0
    states = 0
    for g, _, _ in _test_graphs():
        cfg = WalkConfig(p=1.0, q=1.0)
        engine = WalkEngine(g, cfg)
        for prev, cur in _states(g):
            first = first_step_distribution(g, cur)
            worst = max(worst, float(np.abs(transition_distribution(g, prev, cur, cfg)
                                            - first).max()),
                        float(np.abs(engine.edge_table(prev, cur).distribution() - first).max()))
            states += 1
    ok = worst <= 1e-12
    record_criterion(2, "p=q=1 reduces to the weighted first-order kernel", ok,
                     f"{states} states, max entry-wise gap {worst:.1e} (<= 1e-12)")
    assert ok


def _dm_blocks(seed):
    m, s, negs = random_dm_instance(np.random.default_rng(seed))
    arrays = [m.node_vectors.copy(), m.graph_vectors.copy(), m.dm_context_weights.copy()]
    numeric = numeric_gradient(lambda: dm_objective(arrays[0], arrays[1], arrays[2], m.window,
                                                    s.graph, s.context, s.target, negs), arrays)
    before = [a.copy() for a in m.arrays()[:3]]
    dm_step(m, s, None, TrainConfig(window=m.window), 1.0, negatives=negs)
    grads = [a - b for a, b in zip(m.arrays()[:3], before)]
    ctx_ids = [u for _, u in s.context]
    out_ids = [s.target] + list(negs)
    return {
        "v_G": rel_error(grads[1], numeric[1]),
        "v_i": rel_error(grads[0][ctx_ids], numeric[0][ctx_ids]),
        "c_i": rel_error(grads[2], numeric[2]),
        "targets/negatives": rel_error(grads[0][out_ids], numeric[0][out_ids]),
        "all": rel_error(grads[0], numeric[0]),
    }


def _inverse_blocks(seed):
    m, g, t, ctx, gneg, cneg = random_inverse_instance(np.random.default_rng(seed))
    C = m.sg_context_weights
    arrays = [m.node_vectors.copy(), m.graph_vectors.copy(), C.copy()]
    numeric = numeric_gradient(lambda: inverse_objective(arrays[0], arrays[1], arrays[2],
                                                         m.window, g, t, ctx, gneg, cneg), arrays)
    before = [m.node_vectors.copy(), m.graph_vectors.copy(), C.copy()]
    inverse_step(m, g, t, ctx, None, TrainConfig(window=m.window), 1.0, negatives=(gneg, cneg))
    grads = [m.node_vectors - before[0], m.graph_vectors - before[1], C - before[2]]
    ctx_ids = [u for _, u in ctx] or [t]
    out_ids = [t] + list(gneg) + [x for negs in cneg for x in negs]
    return {
        "v_G": rel_error(grads[1], numeric[1]),
        "v_i": rel_error(grads[0][ctx_ids], numeric[0][ctx_ids]),
        "c_i": rel_error(grads[2], numeric[2]),
        "targets/negatives": rel_error(grads[0][out_ids], numeric[0][out_ids]),
        "all": rel_error(grads[0], numeric[0]),
    }


def test_criterion_03_gradient_correctness():
    t0 = time.perf_counter()
    worst = {}
    for arch, fn in (("dm", _dm_blocks), ("inverse", _inverse_blocks)):
        for seed in range(100):
            for block, err in fn(10_000 + seed).items():
                worst[(arch, block)] = max(worst.get((arch, block), 0.0), err)
    elapsed = time.perf_counter() - t0
    top = max(worst.values())
    ok = top < 1e-4 and elapsed < 10
    record_criterion(3, "finite-difference gradient checks", ok,
                     f"100 instances x 2 architectures x 4 blocks, max rel. error {top:.1e} "
                     f"(< 1e-4), {elapsed:.1f}s (< 10s)")
    assert ok


def test_criterion_04_objective_descent():
    g = load_karate()
    wins = {}
    for arch in ("dm", "inverse"):
        wins[arch] = 0
        for seed in SEEDS:
            corpus = generate_corpus([g], WalkConfig(seed=seed))
            m = init(g.node_count, 1, 128, 10, seed=seed)
            obj = train(m, corpus, TrainConfig(architecture=arch, seed=seed)).sample_objectives
            tenth = len(obj) // 10
            wins[arch] += obj[-tenth:].mean() > obj[:tenth].mean()
    ok = all(w == 10 for w in wins.values())
    record_criterion(4, "objective descent on Karate", ok,
                     f"final-10% mean > first-10% mean in dm {wins['dm']}/10, "
                     f"inverse {wins['inverse']}/10 seeds (need 10/10 each)")
    assert ok


def test_criterion_05_karate_global_vector():
    t0 = time.perf_counter()
    g = load_karate()
    deg = g.degrees()
    hubs = {g.id_of("1"), g.id_of("34")}
    passed, rhos = 0, []
    for seed in SEEDS:
        corpus = generate_corpus([g], WalkConfig(seed=seed))
        m = init(g.node_count, 1, 2, 10, seed=seed)
        train(m, corpus, TrainConfig(seed=seed))
        score = m.node_vectors @ m.graph_vectors[0]
        rho = spearmanr(deg, score).statistic
        top5 = set(np.argsort(-score, kind="stable")[:5].tolist())
        rhos.append(rho)
        passed += rho >= 0.5 and hubs <= top5
    elapsed = time.perf_counter() - t0
    ok = passed >= 8 and elapsed < 10
    record_criterion(5, "Karate global vector near high-degree nodes", ok,
                     f"{passed}/10 seeds with Spearman >= 0.5 and nodes 1, 34 in top 5 "
                     f"(need >= 8), Spearman range {min(rhos):.2f}..{max(rhos):.2f}, "
                     f"{elapsed:.1f}s (< 10s)")
    assert ok


def _probe_accuracy(coords, y, seed):
    labels = {i: {str(int(v))} for i, v in enumerate(y)}
    tr, te = stratified_split(list(labels), labels, 0.5, np.random.default_rng(seed))
    mu, sd = coords[tr].mean(axis=0), coords[tr].std(axis=0) + 1e-12
    X = (coords - mu) / sd
    w, b, _ = fit_logistic(X[tr], y[tr], 1e-4)
    return float(np.mean(((X[te] @ w + b) > 0) == y[te]))


def test_criterion_06_role_discovery(tmp_path):
    p1, probes = [], []
    for seed in SEEDS:
        g, centers, labels = role_ego_graph(seed=seed)
        walk = WalkConfig(seed=seed)
        cfg = TrainConfig(architecture="dm", seed=seed)
        p1.append(role_discovery_pipeline(g, centers, labels, walk, cfg, ks=(1,),
                                          dim=128).precision[1])
        flat = role_discovery_pipeline(g, centers, labels, walk, cfg, ks=(1,), dim=2)
        dump = tmp_path / f"proj{seed}.csv"
        write_projection(dump, [g.labels[c] for c in centers], flat.graph_vectors,
                         [next(iter(labels[c])) for c in centers])
        rows = np.genfromtxt(dump, delimiter=",", skip_header=1, dtype=str)
        coords = rows[:, 1:3].astype(float)
        y = (rows[:, 3] == "hub").astype(float)
        probes.append(_probe_accuracy(coords, y, seed))
    ok = np.mean(p1) >= 0.8 and np.mean(probes) >= 0.9
    record_criterion(6, "role discovery on 50 hub + 50 dense ego-networks", ok,
                     f"mean p@1 {np.mean(p1):.3f} (>= 0.8, range {min(p1):.2f}..{max(p1):.2f}); "
                     f"2-D logistic probe held-out accuracy mean {np.mean(probes):.3f} "
                     f"(>= 0.9, min {min(probes):.2f})")
    assert ok


def test_criterion_07_analogy_mechanics():
    emb, tuples = planted_analogies(n_nodes=20, n_tuples=10, seed=0)
    planted = analogy_hits([AnalogyTuple(*t) for t in tuples], emb, (1,))[1]
    rng = np.random.default_rng(0)
    hits = 0
    for _ in range(1000):
        rand = rng.normal(size=(20, 16))
        a, b, c, d = (int(x) for x in rng.choice(20, 4, replace=False))
        hits += analogy_hits([AnalogyTuple(a, b, c, d)], rand, (1,))[1]
    chance = 1 / 17
    rate = hits / 1000
    ok = planted == 1.0 and rate <= 2 * chance
    record_criterion(7, "analogy mechanics", ok,
                     f"planted hit@1 {planted:.2f} (= 1.0) over {len(tuples)} tuples; random "
                     f"hit@1 {rate:.3f} (<= {2 * chance:.3f}, chance {chance:.3f})")
    assert ok


def test_criterion_08_classification_harness():
    scores = []
    for seed in SEEDS:
        g, labels = stochastic_block_model([100, 100], 0.1, 0.01, seed=seed)
        corpus = generate_corpus([g], WalkConfig(seed=seed))
        m = init(g.node_count, 1, 128, 10, seed=seed)
        train(m, corpus, TrainConfig(seed=seed))
        scores.append(evaluate_classification(m.node_vectors, labels, 0.5, repeats=10,
                                              seed=seed).macro_f1)
    rng = np.random.default_rng(3)
    grad_err = 0.0
    for _ in range(10):
        X = rng.normal(size=(40, 5))
        y = (rng.random(40) < 0.5).astype(float)
        w, b = rng.normal(size=5), np.array([rng.normal()])
        _, gw, gb = logistic_loss_grad(w, b[0], X, y, 0.01)
        num = numeric_gradient(lambda: logistic_loss_grad(w, b[0], X, y, 0.01)[0], [w, b])
        grad_err = max(grad_err, rel_error(gw, num[0]), rel_error(np.array([gb]), num[1]))
    ok = np.mean(scores) >= 0.9 and grad_err < 1e-4
    record_criterion(8, "SBM multi-label classification", ok,
                     f"Macro-F1 at 50-50 mean {np.mean(scores):.3f} (>= 0.9, min "
                     f"{min(scores):.3f}); logistic gradient rel. error {grad_err:.1e} (< 1e-4)")
    assert ok


def _pipeline(root, karate_path):
    root.mkdir()
    centers = root / "centers.txt"
    centers.write_text("1\n2\n3\n33\n34\n")
    labels = root / "roles.tsv"
    labels.write_text("1\tleader\n34\tleader\n2\tmember\n3\tmember\n33\tmember\n")
    node_labels = root / "nodes.tsv"
    node_labels.write_text("".join(f"{i}\t{'a' if i <= 17 else 'b'}\n" for i in range(1, 35)))
    analogies = root / "analogies.txt"
    analogies.write_text("1 2 34 33\n2 1 33 34\n")
    steps = [
        ["walks", "--input", karate_path, "--output", root / "k.walks", "--p", "0.5",
         "--q", "2"],
        ["train", "--corpus", root / "k.walks", "--output-prefix", root / "k", "--dim", "16"],
        ["train", "--corpus", root / "k.walks", "--output-prefix", root / "kdm", "--arch", "dm",
         "--dim", "2"],
        ["ego", "--input", karate_path, "--centers", centers, "--output-dir", root / "egos"],
        ["walks", "--input", root / "egos" / "index.tsv", "--ego-index", "--output",
         root / "e.walks", "--num-walks", "5"],
        ["train", "--corpus", root / "e.walks", "--output-prefix", root / "e", "--arch", "dm",
         "--dim", "8"],
        ["eval", "role", "--embeddings", root / "e.graphs.emb", "--labels", labels,
         "--k", "1,2,3", "--output", root / "role.csv"],
        ["eval", "analogy", "--embeddings", root / "k.nodes.emb", "--tuples", analogies,
         "--k", "1,5", "--output", root / "analogy.csv"],
        ["eval", "classify", "--embeddings", root / "k.nodes.emb", "--labels", node_labels,
         "--train-fraction", "0.3,0.5", "--repeats", "3", "--output", root / "classify.csv",
         "--per-label", root / "per_label.csv"],
        ["eval", "project", "--embeddings", root / "kdm.nodes.emb", "--labels", node_labels,
         "--output", root / "projection.csv"],
    ]
    codes = [cli_main([str(a) for a in step]) for step in steps]
    outputs = {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*"))
               if p.is_file() and not p.name.endswith("manifest.json")}
    return codes, outputs


def test_criterion_09_determinism(tmp_path):
    karate = tmp_path / "karate.edgelist"
    from importlib.resources import files
    karate.write_text(files("netvector").joinpath("data/karate.edgelist").read_text())
    codes_a, out_a = _pipeline(tmp_path / "a", karate)
    codes_b, out_b = _pipeline(tmp_path / "b", karate)
    same = sorted(out_a) == sorted(out_b) and all(out_a[k] == out_b[k] for k in out_a)
    # replaying a recorded manifest rewrites an identical file
    target = tmp_path / "a" / "k.nodes.emb"
    target.unlink()
    replay = cli_main(["replay", str(tmp_path / "a" / "k.nodes.emb.manifest.json")])
    replay_same = replay == 0 and target.read_bytes() == out_a["k.nodes.emb"]
    ok = set(codes_a + codes_b) == {0} and same and replay_same
    record_criterion(9, "byte-identical pipeline reruns", ok,
                     f"{len(out_a)} output files over walks/train/ego/eval, identical: {same}; "
                     f"manifest replay identical: {replay_same}")
    assert ok


def _train_time(corpus, arch, dim, repeats):
    best = np.inf
    for _ in range(repeats):
        m = init(corpus.n_nodes, 1, dim, 10, seed=0)
        t0 = time.perf_counter()
        train(m, corpus, TrainConfig(architecture=arch))
        best = min(best, time.perf_counter() - t0)
    return best


def test_criterion_10_linear_in_dimension():
    corpus = generate_corpus([load_karate()], WalkConfig())
    ratios = {}
    for arch in ("inverse", "dm"):
        _train_time(corpus, arch, 64, 1)
        _train_time(corpus, arch, 128, 1)
        t64 = _train_time(corpus, arch, 64, 7)
        t128 = _train_time(corpus, arch, 128, 7)
        ratios[arch] = (t128 / t64, t64, t128)
    ok = all(1.5 <= r <= 2.5 for r, _, _ in ratios.values())
    detail = "; ".join(f"{a} {t64 * 1e3:.0f}ms -> {t128 * 1e3:.0f}ms, ratio {r:.2f}"
                       for a, (r, t64, t128) in ratios.items())
    record_criterion(10, "training time linear in d (64 -> 128)", ok,
                     f"{detail} (need 1.5..2.5, best of 7 after warm-up)")
    assert ok
