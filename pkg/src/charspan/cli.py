"""Command-line pipelines.

Subcommands: transform (word trees -> char trees), detransform (inverse,
plus segmentation output), train, parse (checkpoint or score file ->
trees), eval (joint seg/parse report), bench (decode throughput, with a
backend comparison mode).

Exit codes are a stable contract: 0 success, 1 usage error, 2 data error.
Logs go to standard error; data goes to files or standard output.
"""

from __future__ import annotations

import argparse
import io
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .chartree import (from_char_tree, load_char_trees, save_char_trees,
                       to_char_tree)
from .decoder import DecodeConfig, available_backends, cky_decode
from .metrics import joint_report
from .scoring import SpanScores, build_vocab, read_score_file, score_spans
from .trainer import Checkpoint, TrainConfig, load_train_config, train
from .treebank import (TreeFormatError, load_corpus, save_corpus,
                       serialize_bracketed)


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1; argparse's default of 2 is reserved for data errors
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _line_at(path: str, pos: int) -> int:
    with io.open(path, "r", encoding="utf-8") as f:
        return f.read().count("\n", 0, pos) + 1


def _located(path: str, err: TreeFormatError) -> ValueError:
    if err.pos is not None:
        return ValueError(f"{path}: line {_line_at(path, err.pos)}: {err}")
    return ValueError(f"{path}: {err}")


def _read_sentences(path: str) -> list[str]:
    with io.open(path, "r", encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def _map_maybe_parallel(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def cmd_transform(args) -> int:
    try:
        corpus = load_corpus(args.input, strip_tags=args.strip_tags)
    except TreeFormatError as e:
        raise _located(args.input, e) from e
    char_trees = [to_char_tree(t) for t in corpus]
    save_char_trees(char_trees, args.output)
    print(f"transformed {len(char_trees)} trees -> {args.output}", file=sys.stderr)
    return 0


def cmd_detransform(args) -> int:
    try:
        char_trees = load_char_trees(args.input)
    except TreeFormatError as e:
        raise _located(args.input, e) from e
    trees = []
    segs = []
    for ct in char_trees:
        tree, seg = from_char_tree(ct)
        trees.append(tree)
        segs.append(seg)
    save_corpus(trees, args.output)
    if args.segs:
        with io.open(args.segs, "w", encoding="utf-8") as f:
            for seg in segs:
                f.write(" ".join(seg.words) + "\n")
    print(f"recovered {len(trees)} trees -> {args.output}", file=sys.stderr)
    return 0


def _train_config_from_args(args) -> TrainConfig:
    config = load_train_config(args.config) if args.config else TrainConfig()
    overrides = {}
    for name in ("scorer", "learning_rate", "decay_factor", "decay_patience",
                 "max_decay", "batch_size", "label_loss_epochs", "max_epochs",
                 "mlp_hidden", "dropout", "seed", "margin_mode", "loss_spans",
                 "feature_dim"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        from dataclasses import replace
        config = replace(config, **overrides)
    return config


def cmd_train(args) -> int:
    config = _train_config_from_args(args)
    try:
        train_corpus = load_corpus(args.train)
    except TreeFormatError as e:
        raise _located(args.train, e) from e
    try:
        dev_corpus = load_corpus(args.dev)
    except TreeFormatError as e:
        raise _located(args.dev, e) from e
    history: list[dict] = []
    checkpoint = train(train_corpus, dev_corpus, config, history=history)
    for rec in history:
        print("epoch={epoch} loss_kind={loss_kind} loss={loss:.6f} lr={lr:.6g} "
              "decays={decays} dev_seg_f1={dev_seg_f1:.4f} "
              "dev_parse_f1={dev_parse_f1:.4f}".format(**rec), file=sys.stderr)
    checkpoint.save(args.output)
    print(f"saved checkpoint (best epoch {checkpoint.epoch}, "
          f"dev parse F1 {checkpoint.best_dev_f1:.4f}) -> {args.output}",
          file=sys.stderr)
    return 0


def _decode_flags(args) -> DecodeConfig:
    return DecodeConfig(constrain_char_labels=args.constrain_char_labels,
                        require_nonnull_root=args.require_nonnull_root)


def cmd_parse(args) -> int:
    decode_cfg = _decode_flags(args)
    if args.checkpoint:
        checkpoint = Checkpoint.load(args.checkpoint)
        vocab = checkpoint.vocab
        scorer = checkpoint.build_scorer()
        sentences = _read_sentences(args.input)

        def run(sentence: str):
            scores = score_spans(scorer, sentence, vocab)
            ct, _ = cky_decode(scores, vocab, decode_cfg, chars=sentence,
                               backend=args.backend)
            return ct

        char_trees = _map_maybe_parallel(run, sentences, args.threads)
    else:
        with io.open(args.score_file, "r", encoding="utf-8") as f:
            blocks, vocab = read_score_file(f)
        sentences = _read_sentences(args.input) if args.input else None
        if sentences is not None and len(sentences) != len(blocks):
            raise ValueError(f"score file has {len(blocks)} sentences, "
                             f"input has {len(sentences)}")

        def run_block(item):
            k, (sid, scores) = item
            chars = None
            if sentences is not None:
                chars = sentences[k]
                if len(chars) != scores.n:
                    raise ValueError(
                        f"sentence {sid}: score file says n={scores.n}, "
                        f"input line has {len(chars)} characters")
            ct, _ = cky_decode(scores, vocab, decode_cfg, chars=chars,
                               backend=args.backend)
            return ct

        char_trees = _map_maybe_parallel(run_block, list(enumerate(blocks)),
                                         args.threads)

    trees = []
    segs = []
    for ct in char_trees:
        tree, seg = from_char_tree(ct)
        trees.append(tree)
        segs.append(seg)

    out = sys.stdout if args.output == "-" else io.open(args.output, "w",
                                                        encoding="utf-8")
    try:
        for tree in trees:
            out.write(serialize_bracketed(tree) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    if args.char_trees:
        save_char_trees(char_trees, args.char_trees)
    if args.segs:
        with io.open(args.segs, "w", encoding="utf-8") as f:
            for seg in segs:
                f.write(" ".join(seg.words) + "\n")
    print(f"parsed {len(trees)} sentences", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    try:
        gold = load_corpus(args.gold)
    except TreeFormatError as e:
        raise _located(args.gold, e) from e
    try:
        pred = load_corpus(args.pred)
    except TreeFormatError as e:
        raise _located(args.pred, e) from e
    report = joint_report(list(gold), list(pred))
    print(report)
    if args.report_file:
        with io.open(args.report_file, "w", encoding="utf-8") as f:
            f.write(report.splitlines()[-1] + "\n")
    return 0


def cmd_bench(args) -> int:
    corpus = load_corpus(args.corpus)
    trees = list(corpus)
    if not trees:
        raise ValueError("bench corpus is empty")
    sentences = ["".join(t.leaves()) for t in trees]
    decode_cfg = _decode_flags(args)

    if args.checkpoint:
        checkpoint = Checkpoint.load(args.checkpoint)
        vocab = checkpoint.vocab
        scorer = checkpoint.build_scorer()
    else:
        vocab = build_vocab(to_char_tree(t) for t in trees)
        scorer = None

    def make_scores(index: int, sentence: str) -> SpanScores:
        if scorer is not None:
            return score_spans(scorer, sentence, vocab)
        rng = np.random.default_rng((args.seed, index))
        n = len(sentence)
        values = rng.uniform(-1.0, 1.0, (n + 1, n + 1, len(vocab)))
        return SpanScores(n, len(vocab), values, validate=False)

    prepared = [make_scores(k, s) for k, s in enumerate(sentences)]

    if args.backend == "both":
        backends = ["python", "cython"]
        if "cython" not in available_backends():
            raise ValueError("compiled kernel unavailable; cannot compare both backends")
    else:
        backends = [args.backend]

    for backend in backends:
        def decode_one(item):
            scores, sentence = item
            if args.include_scoring:
                scores = score_spans(scorer, sentence, vocab)
            return cky_decode(scores, vocab, decode_cfg, chars=sentence,
                              backend=backend)

        items = list(zip(prepared, sentences))
        decode_one(items[0])  # warm up (imports, allocator)
        rates = []
        for rep in range(args.repeats):
            t0 = time.perf_counter()
            _map_maybe_parallel(decode_one, items, args.threads)
            dt = time.perf_counter() - t0
            rate = len(items) / dt
            rates.append(rate)
            print(f"backend={backend} repeat={rep + 1} time={dt:.4f}s "
                  f"rate={rate:.1f} sents/sec", file=sys.stderr)
        mean = float(np.mean(rates))
        std = float(np.std(rates))
        print(f"backend={backend} sentences={len(items)} repeats={args.repeats} "
              f"include_scoring={str(bool(args.include_scoring)).lower()} "
              f"threads={args.threads} "
              f"sents_per_sec_mean={mean:.2f} sents_per_sec_std={std:.2f}")
    return 0


def _add_decode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--constrain-char-labels", action=argparse.BooleanOptionalAction,
                   default=True, help="keep @1-final labels on exactly length-1 spans")
    p.add_argument("--require-nonnull-root", action=argparse.BooleanOptionalAction,
                   default=True, help="forbid the null label on the whole-sentence span")
    p.add_argument("--backend", choices=["auto", "python", "cython"], default="auto",
                   help="chart-fill implementation")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="charspan",
                     description="Joint Chinese segmentation and parsing by "
                                 "character-level span decoding")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transform", help="word-level trees to character-level trees")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--strip-tags", action=argparse.BooleanOptionalAction, default=True,
                   help="drop -/= function suffixes from labels at load")
    p.set_defaults(func=cmd_transform)

    p = sub.add_parser("detransform", help="character-level trees back to word level")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--segs", help="also write one segmented sentence per line")
    p.set_defaults(func=cmd_detransform)

    p = sub.add_parser("train", help="train a span scorer")
    p.add_argument("train")
    p.add_argument("dev")
    p.add_argument("output", help="checkpoint path (.npz)")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--scorer", choices=["linear", "mlp"])
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--decay-factor", type=float)
    p.add_argument("--decay-patience", type=int)
    p.add_argument("--max-decay", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--label-loss-epochs", type=int)
    p.add_argument("--max-epochs", type=int)
    p.add_argument("--mlp-hidden", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--margin-mode", choices=["flat", "hamming"])
    p.add_argument("--loss-spans", choices=["all", "gold"])
    p.add_argument("--feature-dim", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("parse", help="decode sentences to trees")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--checkpoint", help="trained scorer checkpoint")
    src.add_argument("--score-file", help="externally computed span scores")
    p.add_argument("--input", help="sentences, one per line (required with "
                                   "--checkpoint; optional with --score-file)")
    p.add_argument("--output", default="-", help="word-level trees ('-' = stdout)")
    p.add_argument("--segs", help="also write segmented sentences")
    p.add_argument("--char-trees", help="also write raw character-level trees")
    p.add_argument("--threads", type=int, default=1)
    _add_decode_flags(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="joint segmentation/parse F1 report")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("--report-file", help="also write the key=value line here")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="decode throughput benchmark")
    p.add_argument("corpus", help="word-level trees; sentences are their yields")
    p.add_argument("--checkpoint", help="score with a trained scorer (default: "
                                        "seeded random scores)")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--include-scoring", action="store_true",
                   help="time scoring too, not just decoding")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    _add_decode_flags(p)
    p.set_defaults(func=cmd_bench)
    # bench accepts --backend both on top of the shared choices
    for action in p._actions:
        if action.dest == "backend":
            action.choices = ["auto", "python", "cython", "both"]
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "parse" and args.checkpoint and not args.input:
        parser.error("--input is required with --checkpoint")
    if (getattr(args, "command", None) == "bench" and args.include_scoring
            and not args.checkpoint):
        parser.error("--include-scoring requires --checkpoint")
    try:
        return args.func(args)
    except TreeFormatError as e:
        print(f"charspan: error: {e}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as e:
        print(f"charspan: error: {e}", file=sys.stderr)
        return 2
