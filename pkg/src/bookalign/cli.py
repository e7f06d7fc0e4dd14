"""Command-line entry point: ingest, align, evaluate, summarize, report, synth."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import BookalignError, ConfigError
from .pipeline import (
    RunConfig,
    cmd_align,
    cmd_evaluate,
    cmd_ingest,
    cmd_report,
    cmd_summarize,
)
from .synth import MODES, SUMMARY_MODES, make_synthetic_corpus

EXIT_OK = 0
EXIT_PAIR_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _add_common_flags(parser: argparse.ArgumentParser, manifest_required: bool) -> None:
    parser.add_argument("--manifest", type=Path, required=manifest_required,
                        help="TSV of pair id, book path, summary path")
    parser.add_argument("--out", type=Path, default=Path("out"),
                        help="output directory (default: out)")
    parser.add_argument("--model", default="passage",
                        choices=("passage", "token", "jing", "all"))
    parser.add_argument("--k", type=int, default=100,
                        help="passage model state count")
    parser.add_argument("--iters", type=int, default=500,
                        help="training iterations")
    parser.add_argument("--alpha", type=float, default=0.01,
                        help="unigram smoothing for the passage model")
    parser.add_argument("--tau", type=int, default=1000,
                        help="maximum real-to-real token jump distance")
    parser.add_argument("--bins", default="1,10,100,1000",
                        help="comma-separated jump bin bounds")
    parser.add_argument("--null-bins", type=int, default=9, dest="null_bins",
                        help="number of token-model null states")
    parser.add_argument("--lambda", type=float, default=1.0, dest="lam",
                        help="extractor L2 strength")
    parser.add_argument("--folds", type=int, default=10)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--workers", type=int, default=1,
                        help="pair-level parallel workers")
    parser.add_argument("--min-book-words", type=int, default=10_000)
    parser.add_argument("--min-summary-words", type=int, default=100)
    parser.add_argument("--burn-in", type=float, default=0.2,
                        help="fraction of boundary samples discarded")
    parser.add_argument("--decode", choices=("modal", "last"), default="modal")
    parser.add_argument("--thesaurus", type=Path,
                        help="synonym file: 'head: syn1, syn2' per line")
    parser.add_argument("--label-mode", default="auto",
                        choices=("auto", "span-best", "token-threshold"))
    parser.add_argument("--alignments", type=Path,
                        help="directory of alignment files (default: --out)")
    parser.add_argument("--budget", type=int, default=1000,
                        help="extract word budget")
    parser.add_argument("--export-features", action="store_true",
                        help="also write sparse feature matrices (summarize)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bookalign",
        description="Align books to their summaries and train an extractive summarizer.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    descriptions = {
        "ingest": "tokenize the corpus and report length statistics",
        "align": "train an aligner per pair and write alignment files",
        "evaluate": "cross-validated extractor training and scoring",
        "summarize": "train on all pairs and emit extracts",
        "report": "feature ranking and boundary sample histograms",
    }
    for name, desc in descriptions.items():
        cmd = sub.add_parser(name, help=desc)
        _add_common_flags(cmd, manifest_required=name != "report")

    synth = sub.add_parser("synth", help="generate a synthetic corpus with gold alignments")
    synth.add_argument("--out", type=Path, required=True)
    synth.add_argument("--pairs", type=int, default=10)
    synth.add_argument("--passages", type=int, default=5)
    synth.add_argument("--pool", type=int, default=60,
                       help="vocabulary size per passage block")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--mode", choices=MODES, default="spread")
    synth.add_argument("--repeats", type=int, default=1,
                       help="occurrences of each pool word per block")
    synth.add_argument("--overlap", type=float, default=0.0,
                       help="fraction of foreign words mixed into each block")
    synth.add_argument("--block-sentences", type=int, default=2,
                       help="summary sentences per block")
    synth.add_argument("--summary-mode", choices=SUMMARY_MODES, default="sample",
                       help="'cover' uses every pool word in the summary")
    synth.add_argument("--prefix-words", type=int, default=1200,
                       help="background words before the blocks (middle mode)")
    synth.add_argument("--suffix-words", type=int, default=200,
                       help="background words after the blocks (middle mode)")
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        manifest=args.manifest,
        out=args.out,
        model=args.model,
        k=args.k,
        iters=args.iters,
        alpha=args.alpha,
        tau=args.tau,
        bins=args.bins,
        null_bins=args.null_bins,
        lam=args.lam,
        folds=args.folds,
        seed=args.seed,
        workers=args.workers,
        min_book_words=args.min_book_words,
        min_summary_words=args.min_summary_words,
        burn_in=args.burn_in,
        decode=args.decode,
        thesaurus=args.thesaurus,
        label_mode=args.label_mode,
        alignments=args.alignments,
        budget=args.budget,
        export_features=args.export_features,
    )


_COMMANDS = {
    "ingest": cmd_ingest,
    "align": cmd_align,
    "evaluate": cmd_evaluate,
    "summarize": cmd_summarize,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "synth":
            corpus = make_synthetic_corpus(
                args.out,
                num_pairs=args.pairs,
                num_passages=args.passages,
                vocab_per_passage=args.pool,
                seed=args.seed,
                mode=args.mode,
                repeats=args.repeats,
                overlap_fraction=args.overlap,
                sentences_per_passage=args.block_sentences,
                background_prefix=args.prefix_words,
                background_suffix=args.suffix_words,
                summary_mode=args.summary_mode,
            )
            print(corpus.manifest)
            return EXIT_OK
        return _COMMANDS[args.command](_config_from_args(args))
    except ConfigError as exc:
        print(f"bookalign: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except BookalignError as exc:
        print(f"bookalign: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except ValueError as exc:
        print(f"bookalign: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
