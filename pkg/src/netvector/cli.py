"""Command-line pipeline: walks -> train -> eval, communicating through files.

Every command writes ``<output>.manifest.json`` next to its main output with
the fully resolved arguments, input digests, output paths and timings;
``netvector replay MANIFEST`` re-executes the recorded command.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ValidationError
from .evalsuite import (analogy_hits, evaluate_classification, mean_precision_at_k,
                        read_analogies, write_projection, write_rows)
from .graph import ego_network, load_edge_list, load_labels, write_edge_list
from .model import init, read_embeddings, save_model
from .sampler import WalkConfig, generate_corpus, read_corpus, write_corpus
from .trainer import DEFAULT_NOISE_EXPONENT, TrainConfig, train, write_trace

log = logging.getLogger("netvector")

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO = 0, 2, 3, 4
DEFAULT_FRACTIONS = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Manifest:
    def __init__(self, args, argv):
        self.data = {
            "netvector_version": __version__,
            "command": args.command if not getattr(args, "eval_command", None)
            else f"eval {args.eval_command}",
            "argv": argv,
            "config": {k: v for k, v in sorted(vars(args).items()) if k != "func"},
            "seed": getattr(args, "seed", None),
            "inputs": {},
            "outputs": [],
            "timings": {},
        }
        self._t = None

    def input(self, path):
        self.data["inputs"][os.fspath(path)] = _digest(path)

    def output(self, path):
        self.data["outputs"].append(os.fspath(path))

    def stage(self, name):
        manifest = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                manifest.data["timings"][name] = time.perf_counter() - self.t0

        return _Timer()

    def write(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.data, f, indent=2, sort_keys=True)
            f.write("\n")


def _resolved_argv(args, parser_defaults_skip=("func", "command", "eval_command", "manifest_path")):
    """Rebuild an argv that spells out every option, defaults included."""
    argv = [args.command]
    if getattr(args, "eval_command", None):
        argv.append(args.eval_command)
    for key, val in sorted(vars(args).items()):
        if key in parser_defaults_skip or val is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(val, bool):
            if key == "precompute":
                argv.append("--precompute" if val else "--no-precompute")
            elif val:
                argv.append(flag)
            continue
        argv += [flag, str(val)]
    return argv


def _ints(text):
    try:
        vals = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("cut-offs must be positive")
    return text


def _floats(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals or any(not 0 < v < 1 for v in vals):
        raise argparse.ArgumentTypeError("fractions must lie in (0, 1)")
    return text


# commands

def _read_ego_index(path):
    """Rows of ``center<TAB>graph_id<TAB>edge_list_path`` (paths relative to the index)."""
    base = Path(path).parent
    rows = []
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            parts = raw.rstrip("\n").split("\t")
            if not raw.strip() or raw.startswith("#"):
                continue
            if len(parts) != 3:
                raise ValidationError(f"{path}:{lineno}: expected center, graph id and path")
            rows.append((parts[0], parts[1], base / parts[2]))
    return rows


def cmd_walks(args, manifest):
    cfg = WalkConfig(p=args.p, q=args.q, walk_length=args.walk_length,
                     walks_per_node=args.num_walks, seed=args.seed,
                     precompute=args.precompute, workers=args.workers)
    manifest.input(args.input)
    with manifest.stage("load"):
        if args.ego_index:
            rows = _read_ego_index(args.input)
            graphs = []
            for _, _, p in rows:
                manifest.input(p)
                graphs.append(load_edge_list(p, directed=args.directed))
            vocab: dict[str, int] = {}
            maps = [np.array([vocab.setdefault(lab, len(vocab)) for lab in g.labels])
                    for g in graphs]
            glabels = [gid for _, gid, _ in rows]
            kw = dict(node_maps=maps, n_nodes=len(vocab), node_labels=list(vocab),
                      graph_labels=glabels)
        else:
            graphs = [load_edge_list(args.input, directed=args.directed)]
            kw = dict(graph_labels=[args.graph_id])
    if not graphs:
        raise ValidationError("no graphs to walk")
    with manifest.stage("walks"):
        corpus = generate_corpus(graphs, cfg, **kw)
    write_corpus(corpus, args.output)
    manifest.output(args.output)
    log.info("wrote %d walks to %s", len(corpus), args.output)
    return args.output


def cmd_train(args, manifest):
    cfg = TrainConfig(architecture=args.arch, window=args.window, negatives=args.negatives,
                      epochs=args.epochs, lr0=args.lr, lr_min=args.lr_min,
                      noise_exponent=args.alpha, seed=args.seed, workers=args.workers)
    manifest.input(args.corpus)
    with manifest.stage("load"):
        corpus = read_corpus(args.corpus)
    if len(corpus) == 0:
        raise ValidationError(f"{args.corpus}: empty corpus")
    model = init(corpus.n_nodes, corpus.n_graphs, args.dim, args.window, seed=args.seed,
                 node_labels=corpus.node_labels, graph_labels=corpus.graph_labels)
    with manifest.stage("train"):
        result = train(model, corpus, cfg)
    prefix = args.output_prefix
    paths = (prefix + ".nodes.emb", prefix + ".graphs.emb", prefix + ".trace.csv")
    save_model(model, paths[0], paths[1])
    write_trace(result.epoch_objectives, paths[2])
    for p in paths:
        manifest.output(p)
    return prefix + ".nodes.emb"


def cmd_ego(args, manifest):
    manifest.input(args.input)
    manifest.input(args.centers)
    g = load_edge_list(args.input, directed=args.directed)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(args.centers, encoding="utf-8") as f:
        centers = [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]
    index_rows, skipped = [], []
    with manifest.stage("ego"):
        for lab in centers:
            try:
                c = g.id_of(lab)
            except KeyError:
                skipped.append(lab)
                continue
            fname = f"ego_{len(index_rows)}.edgelist"
            write_edge_list(ego_network(g, c).subgraph, out / fname)
            manifest.output(out / fname)
            index_rows.append((lab, lab, fname))
    index = out / "index.tsv"
    with open(index, "w", encoding="utf-8") as f:
        for row in index_rows:
            f.write("\t".join(row) + "\n")
    manifest.output(index)
    skipped_path = out / "skipped.txt"
    with open(skipped_path, "w", encoding="utf-8") as f:
        for lab in skipped:
            f.write(lab + "\n")
    manifest.output(skipped_path)
    if skipped:
        log.warning("skipped %d unknown centers", len(skipped))
    return str(index)


def _load_embedding_labels(emb_path, labels_path):
    names, vecs = read_embeddings(emb_path)
    index = {n: i for i, n in enumerate(names)}
    raw = load_labels(labels_path)
    labels = {}
    for name, labs in raw.items():
        if name not in index:
            raise ValidationError(f"{labels_path}: {name!r} has no embedding in {emb_path}")
        labels[index[name]] = labs
    return names, vecs, labels


def cmd_eval_role(args, manifest):
    manifest.input(args.embeddings)
    manifest.input(args.labels)
    _, vecs, labels = _load_embedding_labels(args.embeddings, args.labels)
    ks = [int(x) for x in args.k.split(",")]
    with manifest.stage("eval"):
        prec = mean_precision_at_k(vecs, labels, ks)
    write_rows(args.output, ["metric", "k", "value"], [("precision", k, prec[k]) for k in ks])
    manifest.output(args.output)
    return args.output


def cmd_eval_analogy(args, manifest):
    manifest.input(args.embeddings)
    manifest.input(args.tuples)
    names, vecs = read_embeddings(args.embeddings)
    tuples = read_analogies(args.tuples, {n: i for i, n in enumerate(names)})
    ks = [int(x) for x in args.k.split(",")]
    with manifest.stage("eval"):
        hits = analogy_hits(tuples, vecs, ks)
    write_rows(args.output, ["metric", "k", "value"], [("hit", k, hits[k]) for k in ks])
    manifest.output(args.output)
    return args.output


def cmd_eval_classify(args, manifest):
    manifest.input(args.embeddings)
    manifest.input(args.labels)
    _, vecs, labels = _load_embedding_labels(args.embeddings, args.labels)
    fractions = [float(x) for x in args.train_fraction.split(",")]
    rows, per_label = [], []
    with manifest.stage("eval"):
        for frac in fractions:
            rep = evaluate_classification(vecs, labels, frac, repeats=args.repeats,
                                          l2=args.l2, seed=args.seed)
            rows += [("macro_f1", frac, rep.macro_f1), ("micro_f1", frac, rep.micro_f1)]
            per_label = rep.per_label
    write_rows(args.output, ["metric", "k", "value"], rows)
    manifest.output(args.output)
    if args.per_label:
        write_rows(args.per_label, ["label", "f1"], sorted(per_label.items()))
        manifest.output(args.per_label)
    return args.output


def cmd_eval_project(args, manifest):
    manifest.input(args.embeddings)
    names, vecs = read_embeddings(args.embeddings)
    if vecs.shape[1] != 2:
        raise ValidationError(f"{args.embeddings}: projection needs 2-D embeddings "
                              f"(train with --dim 2), got {vecs.shape[1]}")
    tags = {}
    if args.labels:
        manifest.input(args.labels)
        tags = {k: ",".join(sorted(v)) for k, v in load_labels(args.labels).items()}
    write_projection(args.output, names, vecs, [tags.get(n, "") for n in names])
    manifest.output(args.output)
    return args.output


# parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netvector", allow_abbrev=False,
                                     description="Network Vector embeddings for nodes and graphs.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("walks", allow_abbrev=False, help="sample a second-order walk corpus")
    p.add_argument("--input", required=True, help="edge list, or ego index with --ego-index")
    p.add_argument("--output", required=True)
    p.add_argument("--ego-index", action="store_true",
                   help="treat --input as an index written by 'netvector ego'")
    p.add_argument("--graph-id", default="0", help="graph id for a single input graph")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--p", type=float, default=1.0, help="return parameter")
    p.add_argument("--q", type=float, default=1.0, help="in-out parameter")
    p.add_argument("--walk-length", type=int, default=80)
    p.add_argument("--num-walks", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--precompute", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_walks)

    p = sub.add_parser("train", allow_abbrev=False, help="train node and graph vectors")
    p.add_argument("--corpus", required=True)
    p.add_argument("--output-prefix", required=True)
    p.add_argument("--arch", choices=("dm", "inverse"), default="inverse")
    p.add_argument("--dim", type=int, default=128)
    p.add_argument("--window", type=int, default=10)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=1)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--lr-min", type=float, default=None, help="default: lr * 1e-4")
    p.add_argument("--alpha", type=float, default=None,
                   help="noise exponent on node counts (default: 1 for dm, 0 for inverse)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ego", allow_abbrev=False, help="extract ego-networks for centers")
    p.add_argument("--input", required=True)
    p.add_argument("--centers", required=True, help="file with one node label per line")
    p.add_argument("--output-dir", required=True)
    p.add_argument("--directed", action="store_true")
    p.set_defaults(func=cmd_ego)

    p = sub.add_parser("eval", allow_abbrev=False, help="evaluation protocols")
    esub = p.add_subparsers(dest="eval_command", required=True)

    e = esub.add_parser("role", allow_abbrev=False, help="precision@k role retrieval")
    e.add_argument("--embeddings", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--k", type=_ints, default="1,5,10")
    e.add_argument("--output", required=True)
    e.set_defaults(func=cmd_eval_role)

    e = esub.add_parser("analogy", allow_abbrev=False, help="hit@k for a:b::c:d tuples")
    e.add_argument("--embeddings", required=True)
    e.add_argument("--tuples", required=True)
    e.add_argument("--k", type=_ints, default="1,5,10")
    e.add_argument("--output", required=True)
    e.set_defaults(func=cmd_eval_analogy)

    e = esub.add_parser("classify", allow_abbrev=False, help="one-vs-rest multi-label F1")
    e.add_argument("--embeddings", required=True)
    e.add_argument("--labels", required=True)
    e.add_argument("--train-fraction", type=_floats, default=DEFAULT_FRACTIONS)
    e.add_argument("--repeats", type=int, default=10)
    e.add_argument("--l2", type=float, default=1e-4)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output", required=True)
    e.add_argument("--per-label", default=None, help="optional label,f1 CSV")
    e.set_defaults(func=cmd_eval_classify)

    e = esub.add_parser("project", allow_abbrev=False, help="dump 2-D embeddings as id,x,y,tag")
    e.add_argument("--embeddings", required=True)
    e.add_argument("--labels", default=None)
    e.add_argument("--output", required=True)
    e.set_defaults(func=cmd_eval_project)

    p = sub.add_parser("replay", allow_abbrev=False, help="re-run the command in a manifest")
    p.add_argument("manifest_path")
    p.set_defaults(func=None)
    return parser


def _manifest_path(output):
    output = str(output)
    if output.endswith(os.sep) or os.path.isdir(output):
        return os.path.join(output, "manifest.json")
    return output + ".manifest.json"


def _resolve_defaults(args):
    # defaults that depend on other flags are written out so manifests are explicit
    if args.command == "train":
        if args.alpha is None:
            args.alpha = DEFAULT_NOISE_EXPONENT[args.arch]
        if args.lr_min is None:
            args.lr_min = args.lr * 1e-4


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "replay":
            with open(args.manifest_path, encoding="utf-8") as f:
                recorded = json.load(f)["argv"]
            return main(recorded)
        _resolve_defaults(args)
        resolved = _resolved_argv(args)
        if args.verbose:
            resolved.insert(0, "--verbose")
        manifest = Manifest(args, resolved)
        main_out = args.func(args, manifest)
        manifest.write(_manifest_path(args.output_dir if args.command == "ego" else main_out))
        return EXIT_OK
    except ValidationError as e:
        print(f"netvector: error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except KeyError as e:
        print(f"netvector: error: {e.args[0] if e.args else e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError) as e:
        print(f"netvector: I/O error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
