"""``titlerank`` command line entry point.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

from . import __version__
from . import checkpoint, corpus, evaluation, interpret, pairing, synth
from .baselines import BaselineConfig, train_baseline
from .model import ModelConfig, Ranker
from .text import EmbeddingFormatError, TextConfig, load_embeddings
from .train import TrainConfig, TrainingError, train

logger = logging.getLogger("titlerank")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def run_manifest(args, inputs: list, started: float, extra: dict | None = None) -> dict:
    flags = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "flags": flags,
        "seeds": {k: v for k, v in flags.items() if "seed" in k},
        "inputs": {str(p): sha256(p) for p in inputs if p},
        "tool_version": __version__,
        "format_version": checkpoint.FORMAT_VERSION,
        "wall_time_seconds": round(time.perf_counter() - started, 3),
    }
    if extra:
        manifest.update(extra)
    return manifest


def write_run_manifest(out, manifest: dict) -> None:
    Path(str(out) + ".manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def threads(args) -> int:
    n = args.threads or int(os.environ.get("TITLERANK_THREADS", "1") or 1)
    return max(1, n)


# ------------------------------------------------------------- commands


def cmd_ingest(args, started):
    c = corpus.load_posts(args.input, subreddit=args.subreddit, strict=args.strict)
    loaded, skipped = len(c), c.skipped
    c = corpus.filter_posts(c, args.min_score, exclude_stickied=not args.keep_stickied)
    if args.sample_fraction is not None:
        c = corpus.subsample(c, args.sample_fraction, args.seed)
    corpus.write_posts(c, args.out)
    stats = {"loaded": loaded, "skipped_records": skipped, "kept": len(c)}
    write_run_manifest(args.out, run_manifest(args, [args.input], started, {"counts": stats}))
    print(f"kept {len(c)} of {loaded} posts -> {args.out}")


def cmd_pair(args, started):
    c = corpus.load_posts(args.input)
    cfg = pairing.PairingConfig(int(round(args.max_gap_min * 60)), args.min_diff, args.min_ratio)
    pairs = pairing.pair_posts(c, cfg)
    pairing.write_pairs(pairs, args.out)
    write_run_manifest(args.out, run_manifest(args, [args.input], started,
                                              {"counts": {"posts": len(c), "pairs": len(pairs)}}))
    print(f"{len(pairs)} pairs from {len(c)} posts -> {args.out}")


def _model_config(args, dim) -> ModelConfig:
    return ModelConfig(dim=dim, kernel_size=args.kernel_size, num_filters=args.filters,
                       max_len=args.max_len, activation=args.activation, use_conv=not args.no_conv)


def _train_config(args) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, batch_size=args.batch, learning_rate=args.lr,
                       margin=args.margin, seed=args.seed, optimizer=args.optimizer)


def _baseline_config(args) -> BaselineConfig:
    return BaselineConfig(epochs=args.epochs, batch_size=args.batch, learning_rate=args.lr,
                          seed=args.seed, loss=args.loss, margin=args.margin,
                          vocab_size=args.vocab_size, hidden=args.hidden)


def cmd_train(args, started):
    pairs = pairing.load_pairs(args.pairs)
    emb = load_embeddings(args.embeddings, args.dim)
    mcfg, tcfg = _model_config(args, args.dim), _train_config(args)
    text = TextConfig(max_len=args.max_len, oov=args.oov)
    params, report = train(pairs, emb, mcfg, tcfg, text)
    ranker = Ranker(params, mcfg, emb, text)
    meta = run_manifest(args, [args.pairs, args.embeddings], started, {
        "model_config": asdict(mcfg), "train_config": asdict(tcfg), "text_config": asdict(text),
        "report": asdict(report),
    })
    checkpoint.save(args.out, ranker, meta)
    logger.info("throughput %.0f pairs/s", report.pairs_per_second)
    print(f"trained on {report.n_pairs} pairs; final loss {report.epoch_loss[-1]:.4f}, "
          f"train accuracy {report.epoch_accuracy[-1]:.4f} -> {args.out}")


def cmd_baseline(args, started):
    pairs = pairing.load_pairs(args.pairs)
    emb = None
    if args.kind == "mlp":
        if not args.embeddings:
            raise UsageError("baseline --kind mlp requires --embeddings")
        emb = load_embeddings(args.embeddings, args.dim)
    cfg = _baseline_config(args)
    model = train_baseline(args.kind, pairs, cfg, emb)
    meta = run_manifest(args, [args.pairs, args.embeddings], started,
                        {"baseline_config": asdict(cfg), "loss_history": model.loss_history})
    checkpoint.save(args.out, model, meta)
    acc = evaluation.pairwise_accuracy(model, pairs)
    print(f"{model.kind}: train accuracy {acc:.4f} -> {args.out}")


def _fitter(kind, args, emb):
    if kind == "attention":
        mcfg, tcfg = _model_config(args, args.dim), _train_config(args)
        text = TextConfig(max_len=args.max_len, oov=args.oov)

        def fit(train_pairs):
            params, _ = train(train_pairs, emb, mcfg, tcfg, text)
            return Ranker(params, mcfg, emb, text)
        return fit
    cfg = _baseline_config(args)
    return lambda train_pairs: train_baseline(kind, train_pairs, cfg, emb)


def cmd_eval(args, started):
    pairs = pairing.load_pairs(args.pairs)
    emb = load_embeddings(args.embeddings, args.dim) if args.embeddings else None
    kinds = [args.model] + [k for k in (args.compare or "").split(",") if k]
    for k in kinds:
        if k not in ("attention", "onehot", "mlp"):
            raise UsageError(f"unknown model kind {k!r}")
        if k != "onehot" and emb is None:
            raise UsageError(f"model {k!r} requires --embeddings")
    n_jobs = threads(args)
    results = {}
    for k in kinds:
        reports = evaluation.kfold_cv(pairs, _fitter(k, args, emb), args.folds, args.seed, n_jobs)
        results[k] = reports
        mean, std = evaluation.summarize(reports)
        print(f"{k}: {mean:.3f} ({std:.3f})")
    evaluation.write_report(results[args.model], args.report)
    extra = {"results": {k: [asdict(r) for r in v] for k, v in results.items()}}
    base = Path(args.report)
    for k in kinds[1:]:
        evaluation.write_report(results[k], base.with_name(f"{base.stem}.{k}{base.suffix}"))
        sig = evaluation.paired_t_test([r.accuracy for r in results[args.model]],
                                       [r.accuracy for r in results[k]])
        extra.setdefault("t_tests", {})[k] = asdict(sig)
        print(f"{args.model} vs {k}: diff {sig.mean_diff:+.4f}, t {sig.t_statistic:.3f}, "
              f"p {sig.p_value:.4g}{' *' if sig.significant_at_05 else ''}")
    write_run_manifest(args.report, run_manifest(args, [args.pairs, args.embeddings], started, extra))


def _titles_from(path):
    return [p.title for p in corpus.load_posts(path)]


def cmd_interpret(args, started):
    if args.analysis == "quartiles":
        c = corpus.load_posts(args.input)
        table = interpret.quartile_word_scores(c.posts, args.min_freq, args.top_n, args.sample, args.seed)
        interpret.write_quartiles(table, args.out)
        write_run_manifest(args.out, run_manifest(args, [args.input], started,
                                                  {"boundaries": table.boundaries}))
        print(f"{len(table.scores)} words scored -> {args.out}")
        return
    emb = load_embeddings(args.embeddings, args.dim)
    if args.analysis == "compare":
        a = checkpoint.load(args.checkpoint_a, emb)
        b = checkpoint.load(args.checkpoint_b, emb)
        rows = interpret.compare_title(args.title, a, b)
        interpret.write_comparison(rows, args.out)
        write_run_manifest(args.out, run_manifest(
            args, [args.checkpoint_a, args.checkpoint_b, args.embeddings], started))
        print(f"{len(rows)} tokens compared -> {args.out}")
        return
    model = checkpoint.load(args.checkpoint, emb)
    if not isinstance(model, Ranker):
        raise UsageError("attention analyses need an attention_conv checkpoint")
    titles = _titles_from(args.input)
    inputs = [args.checkpoint, args.embeddings, args.input]
    if args.analysis == "top-words":
        ww = interpret.word_attention_weights(model, titles, args.min_freq, args.aggregation)
        top = interpret.top_k_words(ww, args.k)
        interpret.write_word_weights(top, args.out)
        print("\n".join(f"{w.token}\t{w.weight:.4f}" for w in top))
    else:
        from .stopwords import load_stopwords
        graph = interpret.attention_graph(model, titles, args.top_edges,
                                          load_stopwords(args.stopwords), args.min_count)
        graph.write_dot(args.out)
        print(f"{len(graph.nodes)} nodes, {len(graph.edges)} edges -> {args.out}")
    write_run_manifest(args.out, run_manifest(args, inputs, started))


def cmd_synth(args, started):
    cfg_dict = {}
    if args.config:
        cfg_dict = json.loads(Path(args.config).read_text(encoding="utf-8"))
    for key in ("n_posts", "vocab_size", "dim"):
        if getattr(args, key) is not None:
            cfg_dict[key] = getattr(args, key)
    try:
        cfg = synth.SynthConfig(**cfg_dict)
    except TypeError as exc:
        raise UsageError(f"bad synth config: {exc}") from exc
    sc = synth.generate(cfg, args.seed)
    paths = synth.write_corpus(sc, args.out_dir)
    write_run_manifest(Path(args.out_dir) / "run",
                       run_manifest(args, [args.config] if args.config else [], started,
                                    {"outputs": {k: str(v) for k, v in paths.items()}}))
    print(f"{len(sc.posts)} posts, {len(sc.embeddings)} embeddings -> {args.out_dir}")


# ---------------------------------------------------------------- parser


def _add_model_flags(p):
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--kernel-size", type=int, default=3)
    p.add_argument("--filters", type=int, default=1)
    p.add_argument("--max-len", type=int, default=30)
    p.add_argument("--activation", choices=("relu", "none"), default="relu")
    p.add_argument("--oov", choices=("drop", "zero"), default="drop")
    p.add_argument("--no-conv", action="store_true", help="bypass the convolution (ablation)")


def _add_train_flags(p, lr=1e-3):
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--margin", type=float, default=0.0)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--seed", type=int, default=0)


def _add_baseline_flags(p):
    p.add_argument("--loss", choices=("logistic", "hinge"), default="logistic")
    p.add_argument("--vocab-size", type=int, default=20000)
    p.add_argument("--hidden", type=int, default=256)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="titlerank", description="Pairwise popularity ranking of post titles.")
    parser.add_argument("--version", action="version",
                        version=f"titlerank {__version__} (checkpoint format {checkpoint.FORMAT_VERSION})")
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse and filter a record dump, optionally subsampling it")
    p.add_argument("--input", required=True)
    p.add_argument("--subreddit", required=True)
    p.add_argument("--min-score", type=int, default=2)
    p.add_argument("--keep-stickied", action="store_true")
    p.add_argument("--sample-fraction", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strict", action="store_true", help="abort on the first bad record")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("pair", help="build time-controlled winner/loser pairs")
    p.add_argument("--input", required=True)
    p.add_argument("--max-gap-min", type=float, default=30)
    p.add_argument("--min-diff", type=int, default=20)
    p.add_argument("--min-ratio", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pair)

    p = sub.add_parser("train", help="train the attention/convolution scorer")
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings", required=True)
    _add_model_flags(p)
    _add_train_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("baseline", help="train a baseline scorer")
    p.add_argument("--kind", choices=("onehot", "mlp"), required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--dim", type=int, default=300)
    _add_train_flags(p, lr=1e-2)
    _add_baseline_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("eval", help="k-fold cross-validated pairwise accuracy")
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--model", choices=("attention", "onehot", "mlp"), default="attention")
    p.add_argument("--compare", help="comma-separated extra kinds to t-test against --model")
    p.add_argument("--folds", type=int, default=5)
    _add_model_flags(p)
    _add_train_flags(p)
    _add_baseline_flags(p)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("interpret", help="attention interpretation exports")
    isub = p.add_subparsers(dest="analysis", parser_class=_Parser)
    for name in ("top-words", "graph"):
        q = isub.add_parser(name)
        q.add_argument("--checkpoint", required=True)
        q.add_argument("--embeddings", required=True)
        q.add_argument("--dim", type=int, default=300)
        q.add_argument("--input", required=True, help="post record file")
        q.add_argument("--out", required=True)
        if name == "top-words":
            q.add_argument("--k", type=int, default=15)
            q.add_argument("--min-freq", type=int, default=5)
            q.add_argument("--aggregation", choices=interpret.AGGREGATIONS, default="incoming")
        else:
            q.add_argument("--top-edges", type=int, default=50)
            q.add_argument("--min-count", type=int, default=3)
            q.add_argument("--stopwords", help="stopword file overriding the built-in list")
    q = isub.add_parser("compare")
    q.add_argument("--checkpoint-a", required=True)
    q.add_argument("--checkpoint-b", required=True)
    q.add_argument("--embeddings", required=True)
    q.add_argument("--dim", type=int, default=300)
    q.add_argument("--title", required=True)
    q.add_argument("--out", required=True)
    q = isub.add_parser("quartiles")
    q.add_argument("--input", required=True)
    q.add_argument("--min-freq", type=int, default=10)
    q.add_argument("--top-n", type=int, default=100)
    q.add_argument("--sample", type=int, default=150)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interpret)

    p = sub.add_parser("synth", help="generate a planted-signal synthetic corpus")
    p.add_argument("--config", help="JSON file of generator settings")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-posts", type=int)
    p.add_argument("--vocab-size", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        if args.command == "interpret" and args.analysis is None:
            raise UsageError("interpret needs one of: top-words, graph, compare, quartiles")
        logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
        args.func(args, time.perf_counter())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (corpus.CorpusError, EmbeddingFormatError, TrainingError, checkpoint.CheckpointError,
            interpret.InterpretationError, OSError, ValueError) as exc:
        print(f"titlerank: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
