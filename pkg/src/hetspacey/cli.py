"""``hetspacey`` command line: walk, train, embed, evaluate, verify, sweep, synth."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time

import numpy as np

from .evaluation import (
    EvaluationError,
    classification_protocol,
    link_prediction_protocol,
    lp_split,
    parameter_sweep,
)
from .graph import GraphError, MetaSchema, derive_schema, generate_synthetic, load_graph, save_graph
from .metalang import read_metagraph_file
from .oracle import ConvergenceError, OracleError
from .skipgram import (
    TrainConfig,
    read_embeddings_text,
    train,
    write_embeddings_binary,
    write_embeddings_text,
)
from .walks import Corpus, WalkConfig, generate_corpus

logger = logging.getLogger("hetspacey")

DEFAULT_SCHEMA = "A-P,P-C,P-T"
DEFAULT_SIZES = "1000,10000,100000,1000000"

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ToleranceFailure(Exception):
    pass


def _count(text: str) -> int:
    """Integer that also accepts ``1e6`` style input."""
    value = float(text)
    if value != int(value):
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(value)


def _graph_args(p):
    p.add_argument("--nodes", required=True, help="node file: <id> TAB <type>")
    p.add_argument("--edges", required=True, help="edge file: <id> TAB <id> [TAB <relation>]")


def _walk_args(p):
    p.add_argument("--mode", choices=["markovian", "metapath", "metagraph", "metaschema"], default="metapath")
    p.add_argument("--metapath", help="e.g. A-P-V-P-A")
    p.add_argument("--metagraph", help="file with one member meta-path per line")
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--walk-times", type=_count, default=20)
    p.add_argument("--walk-length", type=_count, default=320)
    p.add_argument("--occupation-scope", choices=["walk", "global"], default="walk")


def _train_args(p):
    p.add_argument("--dimension", type=_count, default=128)
    p.add_argument("--window", type=_count, default=10)
    p.add_argument("--negatives", type=_count, default=5)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--epochs", type=_count, default=1)
    p.add_argument("--negative-scope", choices=["type", "global"], default="type")
    p.add_argument("--window-mode", choices=["radius", "span"], default="radius")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; explicit flags override it")
    common.add_argument("--seed", type=_count, default=0)
    common.add_argument("--threads", type=_count, default=1)
    common.add_argument("--deterministic", action="store_true",
                        help="single-threaded training with bit-identical output")
    common.add_argument("--log-level", default="INFO")

    parser = argparse.ArgumentParser(prog="hetspacey", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("walk", parents=[common], help="generate a walk corpus")
    _graph_args(p)
    _walk_args(p)
    p.add_argument("--output", required=True)
    p.add_argument("--stats")

    p = sub.add_parser("train", parents=[common], help="train embeddings on an existing corpus")
    _graph_args(p)
    _train_args(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--binary", help="also write float32 vectors to this path")

    p = sub.add_parser("embed", parents=[common], help="walk and train in one go")
    _graph_args(p)
    _walk_args(p)
    _train_args(p)
    p.add_argument("--output", required=True)
    p.add_argument("--binary")
    p.add_argument("--corpus-output", help="keep the corpus on disk")
    p.add_argument("--stats")

    p = sub.add_parser("eval-classify", parents=[common], help="node classification on given embeddings")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--labels", required=True, help="<id> TAB <label>[,label...]")
    p.add_argument("--repeats", type=_count, default=10)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.add_argument("--report", help="per-run TSV")
    p.add_argument("--summary", help="key=value summary")

    p = sub.add_parser("eval-lp", parents=[common], help="link prediction with an embedded residual graph")
    _graph_args(p)
    _walk_args(p)
    _train_args(p)
    p.add_argument("--edge-type", required=True, help="type pair such as A-P")
    p.add_argument("--hide-fraction", type=float, default=0.2)
    p.add_argument("--sample", type=_count, default=2048)
    p.add_argument("--report")
    p.add_argument("--summary")

    p = sub.add_parser("verify-stationary", parents=[common], help="compare walkers with the dense oracles")
    _graph_args(p)
    p.add_argument("--metapath", required=True)
    p.add_argument("--steps", type=_count, default=1_000_000)
    p.add_argument("--alpha", type=float, default=0.8)
    p.add_argument("--tol", type=float, default=0.05)

    p = sub.add_parser("sweep", parents=[common], help="classification score over one parameter")
    _graph_args(p)
    _walk_args(p)
    _train_args(p)
    p.add_argument("--labels", required=True)
    p.add_argument("--axis", required=True, choices=["walk_times", "walk_length", "alpha"])
    p.add_argument("--values", required=True, help="comma-separated")
    p.add_argument("--repeats", type=_count, default=10)
    p.add_argument("--report")

    p = sub.add_parser("synth", parents=[common], help="write synthetic typed graphs")
    p.add_argument("--schema", default=DEFAULT_SCHEMA, help="type edges, e.g. A-P,P-C,P-T; a bare name adds an isolated type")
    p.add_argument("--sizes", default=DEFAULT_SIZES, help="comma-separated node counts")
    p.add_argument("--avg-degree", type=float, default=10.0)
    p.add_argument("--proportions", help="e.g. A=0.4,P=0.4,C=0.1,T=0.1")
    p.add_argument("--communities", type=_count, default=0)
    p.add_argument("--p-in", type=float, default=0.9)
    p.add_argument("--out-dir", required=True)
    return parser


def read_config(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise GraphError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _subparser(parser, command):
    for action in parser._subparsers._group_actions:
        if command in action.choices:
            return action.choices[command]
    raise KeyError(command)


def parse_args(argv=None) -> argparse.Namespace:
    """Parse flags with config-file values installed as subcommand defaults."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    command = next((a for a in argv if not a.startswith("-")), None)
    if not known.config or command not in COMMANDS:
        return parser.parse_args(argv)
    try:
        values = read_config(known.config)
    except OSError as exc:
        parser.error(f"cannot read config {known.config}: {exc.strerror}")
    except GraphError as exc:
        parser.error(str(exc))
    sp = _subparser(parser, command)
    actions = {a.dest: a for a in sp._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            parser.error(f"config key {key!r} is not an option of {command}")
        if action.nargs == 0:
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except (ValueError, argparse.ArgumentTypeError):
                parser.error(f"config key {key!r}: invalid value {raw!r}")
            if action.choices and defaults[key] not in action.choices:
                parser.error(f"config key {key!r}: {raw!r} not in {sorted(action.choices)}")
        action.required = False
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _load(args):
    for path in (args.nodes, args.edges):
        if not os.path.exists(path):
            raise FileNotFoundError(2, "No such file", path)
    return load_graph(args.nodes, args.edges)


def _guidance(args, g):
    from .estimator import resolve_guidance

    if args.mode == "metagraph":
        if not args.metagraph:
            raise GraphError("mode 'metagraph' needs --metagraph FILE")
        return read_metagraph_file(args.metagraph, derive_schema(g)), "spacey"
    return resolve_guidance(g, args.mode, args.metapath)


def _walk_cfg(args, walk_mode) -> WalkConfig:
    return WalkConfig(walk_times=args.walk_times, walk_length=args.walk_length, alpha=args.alpha,
                      seed=args.seed, mode=walk_mode, occupation_scope=args.occupation_scope,
                      n_jobs=max(1, args.threads),
                      min_walk_nodes=getattr(args, "window", 1) + 1)


def _train_cfg(args) -> TrainConfig:
    return TrainConfig(dimension=args.dimension, window=args.window, negatives=args.negatives,
                       learning_rate=args.lr, epochs=args.epochs, seed=args.seed,
                       deterministic=args.deterministic or args.threads <= 1,
                       negative_scope=args.negative_scope, window_mode=args.window_mode,
                       threads=1 if args.deterministic else args.threads)


def _walk(args, g):
    guidance, walk_mode = _guidance(args, g)
    t0 = time.perf_counter()
    corpus = generate_corpus(g, guidance, _walk_cfg(args, walk_mode))
    secs = time.perf_counter() - t0
    logger.info("phase=walk secs=%.6f nodes=%d walks=%d steps=%d", secs, g.node_count,
                corpus.stats["walks"], corpus.stats["steps"])
    corpus.stats["walk_secs"] = secs
    return corpus


def _train(args, g, corpus):
    t0 = time.perf_counter()
    emb = train(corpus, g, _train_cfg(args))
    secs = time.perf_counter() - t0
    logger.info("phase=train secs=%.6f nodes=%d", secs, g.node_count)
    return emb, secs


def _write_kv(path, data: dict):
    text = "".join(f"{k}={v}\n" for k, v in data.items())
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_tsv(path, rows):
    text = "".join("\t".join(str(x) for x in r) + "\n" for r in rows)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def read_labels(path) -> dict[str, object]:
    out = {}
    multi = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t") if "\t" in line else line.split()
            if len(parts) != 2:
                raise GraphError(f"{path}:{lineno}: expected <id> TAB <label>[,label...]")
            labels = [s for s in parts[1].split(",") if s]
            if not labels:
                raise GraphError(f"{path}:{lineno}: empty label")
            multi = multi or len(labels) > 1
            out[parts[0]] = labels
    return {k: (frozenset(v) if multi else v[0]) for k, v in out.items()}


def _labeled_rows(names, labels):
    """Map labeled ids to embedding rows; nodes no walk visited have no row and are skipped."""
    index = {n: i for i, n in enumerate(names)}
    missing = [k for k in labels if k not in index]
    if missing:
        logger.warning("%d of %d labeled nodes have no embedding (never visited), e.g. %r; skipped",
                       len(missing), len(labels), missing[0])
    rows = {index[k]: v for k, v in labels.items() if k in index}
    if not rows:
        raise EvaluationError("no labeled node has an embedding")
    return rows


def cmd_walk(args):
    g = _load(args)
    corpus = _walk(args, g)
    corpus.write(args.output, g)
    if args.stats:
        corpus.write_stats(args.stats)
    _write_kv(None, {k: corpus.stats[k] for k in ("walks", "truncated", "dropped", "steps")})
    return EXIT_OK


def cmd_train(args):
    g = _load(args)
    corpus = Corpus.read(args.corpus, g)
    emb, _ = _train(args, g, corpus)
    write_embeddings_text(args.output, emb, g)
    if args.binary:
        write_embeddings_binary(args.binary, emb, g)
    return EXIT_OK


def cmd_embed(args):
    g = _load(args)
    corpus = _walk(args, g)
    if args.corpus_output:
        corpus.write(args.corpus_output, g)
    emb, train_secs = _train(args, g, corpus)
    write_embeddings_text(args.output, emb, g)
    if args.binary:
        write_embeddings_binary(args.binary, emb, g)
    stats = dict(corpus.stats, train_secs=train_secs, embedded_nodes=int(emb.nodes.size))
    if args.stats:
        _write_kv(args.stats, stats)
    _write_kv(None, stats)
    return EXIT_OK


def cmd_eval_classify(args):
    names, vectors = read_embeddings_text(args.embeddings)
    labeled = _labeled_rows(names, read_labels(args.labels))
    rep = classification_protocol(vectors, labeled, repeats=args.repeats,
                                  train_fraction=args.train_fraction, seed=args.seed)
    _write_tsv(args.report, rep.rows())
    _write_kv(args.summary, rep.summary())
    return EXIT_OK


def _edge_type(spec: str):
    parts = spec.split("-")
    if len(parts) != 2:
        raise GraphError(f"edge type must look like A-P, got {spec!r}")
    return parts[0], parts[1]


def cmd_eval_lp(args):
    g = _load(args)
    split = lp_split(g, _edge_type(args.edge_type), hide_fraction=args.hide_fraction,
                     sample=args.sample, seed=args.seed)
    corpus = _walk(args, split.train_graph)
    emb, _ = _train(args, split.train_graph, corpus)
    rep = link_prediction_protocol(emb.center, split)
    _write_tsv(args.report, [("operator", "auc")] + sorted(rep.auc.items()))
    _write_kv(args.summary, rep.summary())
    return EXIT_OK


def cmd_verify_stationary(args):
    from .metalang import parse_metapath
    from .oracle import (
        MAX_DENSE_NODES,
        build_hypermatrix,
        empirical_distribution,
        fixed_point_stationary,
        pair_chain_stationary,
    )
    from .walks import simulate

    g = _load(args)
    if g.node_count > MAX_DENSE_NODES:
        raise OracleError(f"graph has {g.node_count} nodes; verify-stationary is capped at {MAX_DENSE_NODES}")
    mp = parse_metapath(args.metapath, derive_schema(g))
    H = build_hypermatrix(g, mp)
    fp = fixed_point_stationary(H, tol=1e-10)
    pc = pair_chain_stationary(H)
    spacey = empirical_distribution(simulate(g, mp, args.steps, alpha=args.alpha, mode="spacey", seed=args.seed), g.node_count)
    markov = empirical_distribution(simulate(g, mp, args.steps, mode="markovian", seed=args.seed), g.node_count)
    d = {
        "l1_spacey_fixed_point": float(np.abs(spacey - fp.x).sum()),
        "l1_markovian_pair_chain": float(np.abs(markov - pc.marginal).sum()),
        "l1_fixed_point_pair_chain": float(np.abs(fp.x - pc.marginal).sum()),
    }
    rows = [("node", "fixed_point", "pair_chain", "spacey", "markovian")]
    rows += [(g.name_of(u), f"{fp.x[u]:.6f}", f"{pc.marginal[u]:.6f}", f"{spacey[u]:.6f}", f"{markov[u]:.6f}")
             for u in range(g.node_count)]
    _write_tsv(None, rows)
    _write_kv(None, {"fixed_point_residual": f"{fp.residual:.3e}", "fixed_point_iterations": fp.iterations,
                     "steps": args.steps, "tol": args.tol, **d})
    bad = {k: v for k, v in d.items() if not v <= args.tol}
    if bad:
        raise ToleranceFailure("distance above tolerance: " + ", ".join(f"{k}={v:.4g}" for k, v in bad.items()))
    return EXIT_OK


def cmd_sweep(args):
    g = _load(args)
    labels = read_labels(args.labels)
    labeled = {g.node_id(k): v for k, v in labels.items()}
    axis_type = float if args.axis == "alpha" else _count
    values = [axis_type(v) for v in args.values.split(",") if v.strip()]

    def run(params):
        sub = argparse.Namespace(**vars(args))
        for k, v in params.items():
            setattr(sub, k, v)
        corpus = _walk(sub, g)
        emb, _ = _train(sub, g, corpus)
        rep = classification_protocol(emb.center, labeled, repeats=args.repeats, seed=args.seed)
        return {"micro_f1_mean": rep.micro_f1, "micro_f1_var": rep.micro_var,
                "macro_f1_mean": rep.macro_f1, "macro_f1_var": rep.macro_var}

    rows = parameter_sweep(args.axis, values, run)
    keys = list(rows[0])
    _write_tsv(args.report, [keys] + [[r[k] for k in keys] for r in rows])
    return EXIT_OK


def _parse_proportions(text):
    if not text:
        return None
    out = {}
    for item in text.split(","):
        name, _, value = item.partition("=")
        out[name.strip()] = float(value)
    return out


def cmd_synth(args):
    schema = MetaSchema.parse(args.schema)
    sizes = [_count(s) for s in args.sizes.split(",") if s.strip()]
    os.makedirs(args.out_dir, exist_ok=True)
    for n in sizes:
        g = generate_synthetic(schema, _parse_proportions(args.proportions), n, args.avg_degree, args.seed,
                               n_communities=args.communities, p_in=args.p_in)
        stem = os.path.join(args.out_dir, f"synth_{n}")
        save_graph(g, stem + ".nodes", stem + ".edges")
        if g.communities is not None:
            with open(stem + ".labels", "w", encoding="utf-8", newline="\n") as fh:
                for u in range(g.node_count):
                    fh.write(f"{g.name_of(u)}\t{int(g.communities[u])}\n")
        _write_kv(None, {"nodes": g.node_count, "edges": g.edge_count,
                         "avg_degree": f"{2 * g.edge_count / max(1, g.node_count):.3f}", "path": stem})
    return EXIT_OK


COMMANDS = {
    "walk": cmd_walk,
    "train": cmd_train,
    "embed": cmd_embed,
    "eval-classify": cmd_eval_classify,
    "eval-lp": cmd_eval_lp,
    "verify-stationary": cmd_verify_stationary,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="%(message)s", stream=sys.stderr, force=True)
    print(f"seed={args.seed}", file=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except ToleranceFailure as exc:
        print(f"hetspacey: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ConvergenceError as exc:
        print(f"hetspacey: {exc} (residual {exc.residual})", file=sys.stderr)
        return EXIT_FAIL
    except FileNotFoundError as exc:
        print(f"hetspacey: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"hetspacey: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, ValueError) as exc:
        print(f"hetspacey: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
