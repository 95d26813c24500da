"""Command-line harness.

Subcommands: ``synth`` generates a planted corpus (plus seeds, truth, and
synthetic pretrained vectors), ``train`` runs the full bootstrap, ``baseline``
runs the explicit-pattern or label-propagation comparison systems,
``export-interp`` rebuilds a decision list from run artifacts, ``classify``
applies one, and ``eval`` recomputes metrics from traces.  Every run
directory gets the delimited outputs plus rendered figures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .baselines import epb_int_build, epb_run, lp_bootstrap_run
from .bootstrap import BootstrapConfig, RunResult, run
from .embed import TrainConfig
from .evaluate import evaluate_decision_list, gold_entity_labels, precision_throughput
from .interp import build_decision_list, classify
from .plots import save_pattern_histogram, save_precision_throughput
from .synth import select_seeds, synth_corpus, synthetic_pretrained


def _add_corpus_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--corpus", required=True, help="CoNLL-style corpus file")
    parser.add_argument(
        "--format",
        default="auto",
        choices=["auto", "conll2003", "2col"],
        help="corpus column format (default: detect)",
    )
    parser.add_argument("--window", type=int, default=4, help="context n-gram window")
    parser.add_argument(
        "--min-freq", type=int, default=1, help="prune vocab below this frequency"
    )


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    _add_corpus_flags(parser)
    parser.add_argument("--seeds", required=True, help="JSON category -> seed surfaces")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--pretrained", help="pretrained word-vector TSV")
    parser.add_argument("--epochs", type=int, default=20)
    parser.add_argument("--inner-epochs", type=int, default=100)
    parser.add_argument("--dim", type=int, default=15)
    parser.add_argument("--promote-entities", type=int, default=10)
    parser.add_argument("--promote-patterns", type=int, default=10)
    parser.add_argument("--neg-samples", type=int, default=5)
    parser.add_argument("--learning-rate", type=float, default=0.05)
    parser.add_argument("--rng-seed", type=int, default=0)


def _config(args) -> BootstrapConfig:
    return BootstrapConfig(
        epochs=args.epochs,
        k_entities=args.promote_entities,
        k_patterns=args.promote_patterns,
        window=args.window,
        dim=args.dim,
        min_freq=args.min_freq,
        train=TrainConfig(
            inner_epochs=args.inner_epochs,
            learning_rate=args.learning_rate,
            neg_samples=args.neg_samples,
        ),
        rng_seed=args.rng_seed,
    )


def _emit_run(
    out_dir: Path,
    result: RunResult,
    corpus,
    decision_list=None,
    write_embeddings: bool = True,
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    io.write_trace_jsonl(result.trace, out_dir / "trace.jsonl")
    gold = gold_entity_labels(corpus)
    points = precision_throughput(result.trace, gold)
    curves = {result.trace.system: points}
    io.write_metrics_csv(curves, out_dir / "metrics.csv")
    save_precision_throughput(curves, out_dir / "precision_throughput.png")
    if write_embeddings:
        io.write_embeddings_tsv(result.table, result.vocab, out_dir / "embeddings.tsv")
    if decision_list is not None:
        io.write_decision_list_tsv(decision_list, out_dir / "decision_list.tsv")


def cmd_train(args) -> int:
    corpus = io.load_corpus(args.corpus, args.format)
    seeds = io.load_seeds(args.seeds)
    pretrained = io.load_pretrained(args.pretrained) if args.pretrained else None
    config = _config(args)
    result = run(config, corpus, seeds, pretrained=pretrained)
    dl = build_decision_list(result.pools, result.table, result.vocab, config.epochs)
    _emit_run(Path(args.out), result, corpus, decision_list=dl)
    return 0


def cmd_baseline(args) -> int:
    corpus = io.load_corpus(args.corpus, args.format)
    seeds = io.load_seeds(args.seeds)
    config = _config(args)
    if args.system == "epb":
        pretrained = io.load_pretrained(args.pretrained) if args.pretrained else None
        result = epb_run(config, corpus, seeds, pretrained=pretrained)
        dl = None
        if pretrained is not None:
            dl = epb_int_build(result.pools, result.vocab, pretrained, config.epochs)
        elif not args.quiet:
            print(
                "note: no --pretrained given, skipping the decision-list export",
                file=sys.stderr,
            )
        _emit_run(Path(args.out), result, corpus, decision_list=dl, write_embeddings=False)
    else:
        result = lp_bootstrap_run(
            config, corpus, seeds, gamma=args.gamma, max_iter=args.lp_max_iter
        )
        _emit_run(Path(args.out), result, corpus, write_embeddings=False)
    return 0


def cmd_synth(args) -> int:
    spec = io.load_synth_spec(args.spec)
    synthetic = synth_corpus(spec)
    io.write_conll(synthetic.corpus, args.out)
    if args.seeds_out:
        io.write_seeds(select_seeds(synthetic, args.seeds_per_category), args.seeds_out)
    if args.truth_out:
        io.write_pattern_truth(synthetic.pattern_truth, args.truth_out)
    if args.pretrained_out:
        pretrained = synthetic_pretrained(
            synthetic, dim=args.pretrained_dim, rng_seed=spec.rng_seed
        )
        io.write_pretrained(pretrained, args.pretrained_out)
    return 0


def cmd_export_interp(args) -> int:
    from .corpus import generate_patterns

    corpus = io.load_corpus(args.corpus, args.format)
    vocab, _ = generate_patterns(corpus.unlabeled(), args.window, args.min_freq)
    trace = io.read_trace(args.trace)
    pools, final_epoch = io.pools_from_trace(trace, vocab)
    if args.embeddings:
        table = io.load_embeddings_tsv(args.embeddings, vocab)
        dl = build_decision_list(pools, table, vocab, final_epoch)
    else:
        pretrained = io.load_pretrained(args.pretrained)
        dl = epb_int_build(pools, vocab, pretrained, final_epoch)
    io.write_decision_list_tsv(dl, args.out)
    return 0


def cmd_classify(args) -> int:
    from .corpus import generate_patterns

    corpus = io.load_corpus(args.corpus, args.format)
    vocab, cooc = generate_patterns(corpus.unlabeled(), args.window, args.min_freq)
    trace = io.read_trace(args.trace)
    dl = io.decision_list_from_files(args.decision_list, trace, vocab)
    if args.entities:
        surfaces = [
            line.strip()
            for line in Path(args.entities).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
        missing = [s for s in surfaces if s not in vocab.entity_index]
        if missing:
            raise ValueError(f"entities not in the corpus: {missing[:5]}")
        entity_ids = [vocab.entity_index[s] for s in surfaces]
    else:
        entity_ids = list(range(vocab.n_entities))
    rows = []
    for e in entity_ids:
        result = classify(e, dl, cooc)
        rows.append(
            (
                vocab.entity_surfaces[e],
                result.label,
                result.contributing_patterns,
                result.scores,
            )
        )
    io.write_predictions_tsv(rows, dl.categories, args.out)
    return 0


def cmd_eval(args) -> int:
    from .corpus import generate_patterns

    corpus = io.load_corpus(args.corpus, args.format)
    gold = gold_entity_labels(corpus)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    curves = {}
    traces = [io.read_trace(path) for path in args.trace]
    for trace in traces:
        if trace.system in curves:
            raise ValueError(f"duplicate system tag {trace.system!r} among traces")
        curves[trace.system] = precision_throughput(trace, gold)
    io.write_metrics_csv(curves, out_dir / "metrics.csv")
    save_precision_throughput(curves, out_dir / "precision_throughput.png")

    if args.decision_list:
        vocab, cooc = generate_patterns(corpus.unlabeled(), args.window, args.min_freq)
        dl = io.decision_list_from_files(args.decision_list, traces[0], vocab)
        evaluation = evaluate_decision_list(
            dl, list(range(vocab.n_entities)), gold, cooc, vocab
        )
        io.write_dl_evaluation(evaluation, out_dir / "dl_evaluation.json")
        save_pattern_histogram(evaluation, out_dir / "pattern_histogram.png")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emboot",
        description="Bootstrapped named entity classification with learned "
        "entity/pattern embeddings and an interpretable decision-list export.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run the full bootstrapping system")
    _add_run_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_base = sub.add_parser("baseline", help="run a comparison system")
    p_base.add_argument("--system", required=True, choices=["epb", "lp"])
    _add_run_flags(p_base)
    p_base.add_argument("--gamma", type=float, default=None, help="LP kernel width")
    p_base.add_argument("--lp-max-iter", type=int, default=1000)
    p_base.add_argument("--quiet", action="store_true")
    p_base.set_defaults(func=cmd_baseline)

    p_synth = sub.add_parser("synth", help="generate a synthetic corpus")
    p_synth.add_argument("--spec", required=True, help="JSON synthetic-corpus spec")
    p_synth.add_argument("--out", required=True, help="corpus output file")
    p_synth.add_argument("--seeds-out", help="also write a seeds JSON here")
    p_synth.add_argument("--seeds-per-category", type=int, default=10)
    p_synth.add_argument("--truth-out", help="also write the pattern truth JSON here")
    p_synth.add_argument("--pretrained-out", help="also write synthetic word vectors")
    p_synth.add_argument("--pretrained-dim", type=int, default=25)
    p_synth.set_defaults(func=cmd_synth)

    p_export = sub.add_parser(
        "export-interp", help="rebuild a decision list from run artifacts"
    )
    _add_corpus_flags(p_export)
    p_export.add_argument("--trace", required=True, help="trace.jsonl of the run")
    p_export.add_argument("--out", required=True, help="decision-list TSV to write")
    group = p_export.add_mutually_exclusive_group(required=True)
    group.add_argument("--embeddings", help="embeddings.tsv from the run")
    group.add_argument("--pretrained", help="pretrained word vectors instead")
    p_export.set_defaults(func=cmd_export_interp)

    p_classify = sub.add_parser("classify", help="apply a decision list to entities")
    _add_corpus_flags(p_classify)
    p_classify.add_argument("--trace", required=True)
    p_classify.add_argument("--decision-list", required=True)
    p_classify.add_argument("--entities", help="file of entity surfaces, one per line")
    p_classify.add_argument("--out", required=True, help="predictions TSV to write")
    p_classify.set_defaults(func=cmd_classify)

    p_eval = sub.add_parser("eval", help="recompute metrics from traces")
    _add_corpus_flags(p_eval)
    p_eval.add_argument(
        "--trace", action="append", required=True, help="trace.jsonl (repeatable)"
    )
    p_eval.add_argument("--decision-list", help="evaluate this decision list too")
    p_eval.add_argument("--out-dir", required=True)
    p_eval.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_error:
        return int(exit_error.code or 0)
    try:
        return args.func(args)
    except (OSError, ValueError, RuntimeError) as error:
        print(f"error: {error}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
