"""Command-line surface.

Subcommands: induce, evaluate, sweep, transliterate, train-edit-model,
gen-benchmark. Heavy imports happen inside main() so the thread limit can
be applied to the numerical backend before it loads.

Exit codes: 0 success, 2 configuration error, 3 input error, 4
non-convergence, 5 no usable candidate pairs, 6 untrainable edit model.
"""

import argparse
import json
import logging
import os
import sys

THREADS_ENV_VAR = "ORTHOMAP_THREADS"


def _add_run_options(parser):
    # Paths may come from --config, so they are validated later, not here.
    parser.add_argument("--src-emb", help="source embedding file")
    parser.add_argument("--tgt-emb", help="target embedding file")
    parser.add_argument("--output-dir", help="artifact directory")
    parser.add_argument(
        "--mode",
        choices=("baseline", "ortho-ext", "edit-dist", "external-scorer"),
        help="pipeline configuration (default baseline)",
    )
    parser.add_argument("--scale", type=float, help="orthographic scaling constant c")
    parser.add_argument("--seed", type=int, dest="seed", help="master random seed")
    parser.add_argument("--dev", dest="dev", help="development lexicon file")
    parser.add_argument("--test", dest="test", help="test lexicon file")
    parser.add_argument("--scorer-table", help="conditional probability table (TSV)")
    parser.add_argument("--max-vocab", type=int, help="truncate both vocabularies")
    parser.add_argument("--train-cutoff", type=int, help="words used for training")
    parser.add_argument("--csls-k", type=int, help="neighbourhood size for rescaling")
    parser.add_argument("--stall-window", type=int, help="iterations without improvement")
    parser.add_argument("--p-init", type=float, help="initial keep probability")
    parser.add_argument("--p-factor", type=float, help="keep probability multiplier")
    parser.add_argument("--objective-eps", type=float, help="improvement threshold")
    parser.add_argument("--max-iterations", type=int, help="hard iteration cap")
    parser.add_argument("--em-iterations", type=int, help="edit-model EM iterations")
    parser.add_argument("--synth-pairs", type=int, help="synthetic training pairs")
    parser.add_argument("--delete-k", type=int, help="max deletions for candidates")
    parser.add_argument("--alphabet-k", type=int, help="n-grams per language and order")
    parser.add_argument(
        "--oov-mode", choices=("skip", "count-wrong"), help="handling of OOV test words"
    )
    parser.add_argument("--config", help="JSON config file; explicit flags win")


_FLAG_TO_FIELD = {
    "src_emb": "src_embeddings",
    "tgt_emb": "tgt_embeddings",
    "dev": "dev_lexicon",
    "test": "test_lexicon",
    "scorer_table": "scorer_table",
}


def _config_from_args(args, extra=None):
    from .errors import ConfigError
    from .pipeline import RunConfig

    mapping = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                mapping.update(json.load(fh))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"malformed config file: {exc}") from exc
        mapping.pop("package_version", None)
        for key in ("seed_used", "iterations", "final_objective", "mean_cosine",
                    "test_p_at_1", "alphabet_size", "synthetic_pairs", "candidates",
                    "untransliterable", "boosted_pairs", "edit_model_path",
                    "selected_scale"):
            mapping.pop(key, None)
    for flag, name in _FLAG_TO_FIELD.items():
        value = getattr(args, flag, None)
        if value is not None:
            mapping[name] = value
    for name in (
        "output_dir", "mode", "scale", "max_vocab", "oov_mode", "train_cutoff",
        "csls_k", "stall_window", "p_init", "p_factor", "objective_eps",
        "max_iterations", "em_iterations", "synth_pairs", "delete_k", "alphabet_k",
        "threads",
    ):
        value = getattr(args, name, None)
        if value is not None:
            mapping[name] = value
    if getattr(args, "seed", None) is not None:
        mapping["seeds"] = [args.seed]
    if extra:
        mapping.update(extra)
    return RunConfig.from_mapping(mapping)


def _cmd_induce(args):
    from .pipeline import run_pipeline

    cfg = _config_from_args(args)
    outcome = run_pipeline(cfg)
    print(f"lexicon written to {cfg.output_dir}/lexicon.tsv")
    if outcome.eval_report is not None:
        print(outcome.eval_report.summary())
    return 0


def _cmd_sweep(args):
    from .pipeline import run_sweep

    extra = {}
    if args.grid:
        extra["grid"] = [float(v) for v in args.grid.split(",") if v.strip()]
    if args.criterion:
        extra["criterion"] = args.criterion
    if args.runs_per_c is not None:
        extra["runs_per_c"] = args.runs_per_c
    cfg = _config_from_args(args, extra)
    best, points = run_sweep(cfg)
    for point in points:
        print(f"c={point.scale:g}\t{point.mean:.6f}")
    print(f"selected c={best:g}")
    return 0


def _cmd_evaluate(args):
    from .corpus_io import load_ref_lexicon, read_lexicon_tsv
    from .evaluation import precision_at_1, write_predictions_tsv

    predicted = read_lexicon_tsv(args.lexicon)
    ref = load_ref_lexicon(args.reference)
    report = precision_at_1(predicted, ref, args.oov_mode)
    print(report.summary())
    if args.predictions_out:
        write_predictions_tsv(report, args.predictions_out)
    return 0


def _cmd_transliterate(args):
    from .edit_model import EditModel, transliterate

    model = EditModel.load(args.model)
    if args.words:
        words = args.words
    elif args.input:
        with open(args.input, encoding="utf-8", errors="surrogateescape") as fh:
            words = [line.strip() for line in fh if line.strip()]
    else:
        words = [line.strip() for line in sys.stdin if line.strip()]
    for word in words:
        rendered, score = transliterate(word, model)
        print(f"{word}\t{rendered}\t{score:.6f}")
    return 0


def _cmd_train_edit_model(args):
    from .corpus_io import load_embeddings
    from .edit_model import build_edit_alphabets, em_train
    from .errors import InputFormatError

    pairs = []
    with open(args.pairs, encoding="utf-8", errors="surrogateescape") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 2:
                raise InputFormatError(f"{args.pairs}:{lineno}: expected 2 fields")
            pairs.append((tokens[0], tokens[1]))
    if args.src_vocab and args.tgt_vocab:
        src_words = load_embeddings(args.src_vocab).vocab.words
        tgt_words = load_embeddings(args.tgt_vocab).vocab.words
    else:
        src_words = [x for x, _ in pairs]
        tgt_words = [z for _, z in pairs]
    alphabets = build_edit_alphabets(src_words, tgt_words)
    model = em_train(pairs, alphabets, args.iterations)
    model.save(args.output)
    stats = model.training_stats
    print(
        f"model written to {args.output} "
        f"(log-likelihood {stats.log_likelihoods[-1]:.4f}, "
        f"skipped {stats.skipped_uncovered + stats.skipped_zero_prob})"
    )
    return 0


def _cmd_gen_benchmark(args):
    from .benchmark import generate_cipher_benchmark

    bench = generate_cipher_benchmark(
        args.n_words, args.dim, args.seed, args.noise, args.output_dir
    )
    print(f"benchmark written to {args.output_dir}")
    print(f"  source embeddings: {bench.src_embeddings}")
    print(f"  target embeddings: {bench.tgt_embeddings}")
    print(f"  gold lexicon:      {bench.gold_lexicon}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="orthomap",
        description="Induce bilingual word translation dictionaries from "
        "monolingual embeddings, optionally using orthographic signals.",
    )
    parser.add_argument("--verbose", "-v", action="store_true", help="log progress")
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"numerical backend threads (default: ${THREADS_ENV_VAR} or all cores)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("induce", help="run the pipeline and write a lexicon")
    _add_run_options(p)
    p.set_defaults(func=_cmd_induce)

    p = sub.add_parser("sweep", help="select the scaling constant over a grid")
    _add_run_options(p)
    p.add_argument("--grid", help="comma-separated c values (default: built-in 18)")
    p.add_argument("--criterion", choices=("dev-accuracy", "objective"))
    p.add_argument("--runs-per-c", type=int, help="seeded runs averaged per value")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("evaluate", help="score an induced lexicon against a reference")
    p.add_argument("--lexicon", required=True, help="induced lexicon TSV")
    p.add_argument("--reference", required=True, help="reference lexicon file")
    p.add_argument("--oov-mode", choices=("skip", "count-wrong"), default="skip")
    p.add_argument("--predictions-out", help="write per-pair predictions TSV")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("transliterate", help="render words with a trained edit model")
    p.add_argument("--model", required=True, help="edit model file")
    p.add_argument("--input", help="file with one word per line (default: stdin)")
    p.add_argument("words", nargs="*", help="words given directly")
    p.set_defaults(func=_cmd_transliterate)

    p = sub.add_parser("train-edit-model", help="EM-train an edit model on word pairs")
    p.add_argument("--pairs", required=True, help="file with one word pair per line")
    p.add_argument("--output", required=True, help="model file to write")
    p.add_argument("--iterations", type=int, default=3)
    p.add_argument("--src-vocab", help="embedding file defining the source alphabet")
    p.add_argument("--tgt-vocab", help="embedding file defining the target alphabet")
    p.set_defaults(func=_cmd_train_edit_model)

    p = sub.add_parser("gen-benchmark", help="generate a synthetic cipher benchmark")
    p.add_argument("--n-words", type=int, default=2000)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--output-dir", required=True)
    p.set_defaults(func=_cmd_gen_benchmark)
    return parser


def _apply_thread_limit(threads):
    if threads is None:
        threads = os.environ.get(THREADS_ENV_VAR)
    if not threads:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(threads))


def main(argv=None):
    args = build_parser().parse_args(argv)
    _apply_thread_limit(args.threads)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    from .errors import (
        CandidateError,
        ConfigError,
        ConvergenceError,
        EmTrainingError,
        InputFormatError,
    )

    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (InputFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except CandidateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except EmTrainingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())
