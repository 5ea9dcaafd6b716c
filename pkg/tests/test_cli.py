import json
import subprocess
import sys
from importlib.resources import files

import numpy as np
import pytest

from netvector.cli import build_parser, main
from netvector.graph import load_edge_list
from netvector.model import init, read_embeddings


@pytest.fixture
def karate(tmp_path):
    p = tmp_path / "karate.edgelist"
    p.write_text(files("netvector").joinpath("data/karate.edgelist").read_text())
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_walks_karate_defaults(tmp_path, karate):
    out = tmp_path / "k.walks"
    assert run("walks", "--input", karate, "--output", out, "--p", 1, "--q", 1) == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 340
    assert all(len(ln.split("\t")[1].split()) == 80 for ln in lines)
    man = json.loads((tmp_path / "k.walks.manifest.json").read_text())
    assert man["config"]["walk_length"] == 80 and man["config"]["num_walks"] == 10
    assert man["config"]["precompute"] is True and man["seed"] == 0
    assert set(man["inputs"]) == {str(karate)} and len(man["inputs"][str(karate)]) == 64
    assert man["outputs"] == [str(out)] and "walks" in man["timings"]
    assert "--walk-length" in man["argv"] and "--workers" in man["argv"]


def test_missing_input_is_usage_error(tmp_path, capsys):
    assert run("walks", "--output", tmp_path / "x") == 2
    assert "--input" in capsys.readouterr().err
    assert run("train", "--corpus", "c", "--output-prefix", "p", "--arch", "cbow") == 2
    assert run("eval", "role", "--embeddings", "e", "--labels", "l", "--output", "o",
               "--k", "0") == 2
    assert run() == 2


def test_exit_codes(tmp_path, karate):
    assert run("walks", "--input", tmp_path / "missing", "--output", tmp_path / "w") == 4
    bad = tmp_path / "bad.el"
    bad.write_text("a b 0\n")
    assert run("walks", "--input", bad, "--output", tmp_path / "w") == 3
    assert run("walks", "--input", karate, "--output", tmp_path / "w", "--p", "-1") == 3
    empty = tmp_path / "empty.walks"
    empty.write_text("")
    assert run("train", "--corpus", empty, "--output-prefix", tmp_path / "m") == 3


def test_defaults_match_reference_setting():
    args = build_parser().parse_args(["train", "--corpus", "c", "--output-prefix", "p"])
    assert (args.dim, args.window, args.epochs, args.negatives) == (128, 10, 1, 5)
    assert args.arch == "inverse" and args.lr == 0.025
    args = build_parser().parse_args(["walks", "--input", "g", "--output", "w"])
    assert (args.walk_length, args.num_walks) == (80, 10)
    args = build_parser().parse_args(["eval", "classify", "--embeddings", "e", "--labels", "l",
                                      "--output", "o"])
    assert [float(x) for x in args.train_fraction.split(",")] == pytest.approx(
        np.arange(1, 10) / 10)


def _walks_and_train(tmp_path, karate, *train_args):
    w = tmp_path / "k.walks"
    assert run("walks", "--input", karate, "--output", w, "--num-walks", 2,
               "--walk-length", 20) == 0
    prefix = tmp_path / "m"
    assert run("train", "--corpus", w, "--output-prefix", prefix, *train_args) == 0
    return prefix


def test_train_dim2_header(tmp_path, karate):
    prefix = _walks_and_train(tmp_path, karate, "--dim", 2)
    nodes = (tmp_path / "m.nodes.emb").read_text().splitlines()
    assert nodes[0] == "34 2"
    assert (tmp_path / "m.graphs.emb").read_text().splitlines()[0] == "1 2"
    trace = (tmp_path / "m.trace.csv").read_text().splitlines()
    assert trace[0] == "epoch,mean_objective" and len(trace) == 2
    man = json.loads((tmp_path / "m.nodes.emb.manifest.json").read_text())
    assert man["config"]["alpha"] == 0.0 and man["config"]["lr_min"] == pytest.approx(2.5e-6)
    assert "--alpha" in man["argv"] and "--lr-min" in man["argv"]
    assert len(man["outputs"]) == 3 and "train" in man["timings"]
    assert prefix.name == "m"


def test_train_epochs_zero_is_init(tmp_path, karate):
    _walks_and_train(tmp_path, karate, "--dim", 4, "--epochs", 0, "--seed", 7)
    _, v = read_embeddings(tmp_path / "m.nodes.emb")
    _, gv = read_embeddings(tmp_path / "m.graphs.emb")
    ref = init(34, 1, 4, 10, seed=7)
    assert np.array_equal(v, ref.node_vectors) and np.array_equal(gv, ref.graph_vectors)


def test_ego_outputs(tmp_path, karate):
    centers = tmp_path / "centers.txt"
    centers.write_text("1\n34\nnope\n")
    out = tmp_path / "egos"
    assert run("ego", "--input", karate, "--centers", centers, "--output-dir", out) == 0
    index = [ln.split("\t") for ln in (out / "index.tsv").read_text().splitlines()]
    assert [r[0] for r in index] == ["1", "34"]
    assert (out / "skipped.txt").read_text() == "nope\n"
    ego1 = load_edge_list(out / index[0][2])
    assert ego1.node_count == 17 and ego1.labels[0] == "1"
    assert (out / "manifest.json").exists()
    walks = tmp_path / "ego.walks"
    assert run("walks", "--input", out / "index.tsv", "--ego-index", "--output", walks,
               "--num-walks", 2, "--walk-length", 10) == 0
    gids = {ln.split("\t")[0] for ln in walks.read_text().splitlines()}
    assert gids == {"1", "34"}


def test_eval_role_three_rows(tmp_path):
    emb = tmp_path / "g.emb"
    rng = np.random.default_rng(0)
    emb.write_text("12 3\n" + "".join(f"c{i} " + " ".join(repr(float(x)) for x in rng.normal(size=3)) + "\n"
                                      for i in range(12)))
    labels = tmp_path / "l.tsv"
    labels.write_text("".join(f"c{i}\t{'hub' if i % 2 else 'dense'}\n" for i in range(12)))
    out = tmp_path / "role.csv"
    assert run("eval", "role", "--embeddings", emb, "--labels", labels, "--k", "1,5,10",
               "--output", out) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "metric,k,value" and [r.split(",")[1] for r in rows[1:]] == ["1", "5", "10"]
    labels.write_text("zzz\thub\n")
    assert run("eval", "role", "--embeddings", emb, "--labels", labels, "--output", out) == 3


def test_eval_analogy_toy(tmp_path):
    e = np.eye(3)
    vecs = [e[0], e[1], e[2], e[1] + e[2] - e[0], [1, 1, 1], [-1, 0, 0.2]]
    emb = tmp_path / "n.emb"
    emb.write_text("6 3\n" + "".join(f"{n} " + " ".join(repr(float(x)) for x in v) + "\n"
                                     for n, v in zip("abcdef", vecs)))
    tuples = tmp_path / "t.txt"
    tuples.write_text("a b c d\n")
    out = tmp_path / "a.csv"
    assert run("eval", "analogy", "--embeddings", emb, "--tuples", tuples, "--k", "1",
               "--output", out) == 0
    assert out.read_text().splitlines()[1] == "hit,1,1.0"
    tuples.write_text("a b c\n")
    assert run("eval", "analogy", "--embeddings", emb, "--tuples", tuples, "--output", out) == 3


def _classify_inputs(tmp_path):
    rng = np.random.default_rng(0)
    X = np.r_[rng.normal(-1, 0.3, size=(20, 2)), rng.normal(1, 0.3, size=(20, 2))]
    emb = tmp_path / "n.emb"
    emb.write_text("40 2\n" + "".join(f"n{i} {float(x)!r} {float(y)!r}\n" for i, (x, y) in enumerate(X)))
    labels = tmp_path / "l.tsv"
    labels.write_text("".join(f"n{i}\t{'a' if i < 20 else 'b'}\n" for i in range(40)))
    return emb, labels


def test_eval_classify(tmp_path):
    emb, labels = _classify_inputs(tmp_path)
    out = tmp_path / "c.csv"
    per = tmp_path / "per.csv"
    assert run("eval", "classify", "--embeddings", emb, "--labels", labels,
               "--train-fraction", "0.5", "--output", out, "--per-label", per) == 0
    rows = out.read_text().splitlines()
    assert rows[1:] == ["macro_f1,0.5,1.0", "micro_f1,0.5,1.0"]
    assert per.read_text().splitlines() == ["label,f1", "a,1.0", "b,1.0"]
    assert run("eval", "classify", "--embeddings", emb, "--labels", labels,
               "--output", out, "--repeats", 2) == 0
    assert len(out.read_text().splitlines()) == 1 + 2 * 9


def test_eval_project(tmp_path):
    emb, labels = _classify_inputs(tmp_path)
    out = tmp_path / "p.csv"
    assert run("eval", "project", "--embeddings", emb, "--labels", labels, "--output", out) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "id,x,y,tag" and rows[1].startswith("n0,") and rows[1].endswith(",a")


def test_idempotent_and_replay(tmp_path, karate):
    outs = []
    for name in ("a", "b"):
        w = tmp_path / f"{name}.walks"
        run("walks", "--input", karate, "--output", w, "--num-walks", 3, "--q", 0.5)
        run("train", "--corpus", w, "--output-prefix", tmp_path / name, "--dim", 8)
        outs.append([w.read_bytes()] + [(tmp_path / f"{name}{s}").read_bytes()
                                        for s in (".nodes.emb", ".graphs.emb", ".trace.csv")])
    assert outs[0] == outs[1]
    before = (tmp_path / "a.nodes.emb").read_bytes()
    (tmp_path / "a.nodes.emb").unlink()
    assert run("replay", tmp_path / "a.nodes.emb.manifest.json") == 0
    assert (tmp_path / "a.nodes.emb").read_bytes() == before
    assert run("replay", tmp_path / "missing.json") == 4


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "netvector", "--help"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and "walks" in r.stdout
