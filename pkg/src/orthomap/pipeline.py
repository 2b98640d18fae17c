"""End-to-end run orchestration: configuration, modes, artifacts, sweeps.

Four modes cover the supported configurations: "baseline" is the plain
self-learning loop; "ortho-ext" extends the embeddings with character
n-gram counts; "edit-dist" learns a stochastic edit distance on induced
pairs and boosts candidate similarities; "external-scorer" boosts the same
candidates with file-fed conditional probabilities instead.
"""

import dataclasses
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .candidates import candidate_pairs
from .corpus_io import load_embeddings, load_ref_lexicon, write_lexicon
from .edit_model import build_edit_alphabets, edit_similarity_boost, em_train
from .errors import CandidateError, ConfigError
from .evaluation import (
    external_scorer_boost,
    load_scorer_table,
    precision_at_1,
    select_scaling_constant,
    write_predictions_tsv,
)
from .numerics import normalize_embeddings
from .ortho_extension import build_ngram_alphabet, extend_embeddings, extension_matrix
from .self_learning import LoopConfig, SimilarityBoost, run_self_learning

logger = logging.getLogger(__name__)

MODES = ("baseline", "ortho-ext", "edit-dist", "external-scorer")
CRITERIA = ("dev-accuracy", "objective")

# 18 scaling constants between 0.05 and 1.4: fine steps where the optimum
# usually falls, coarser ones above.
DEFAULT_GRID = [round(0.05 * i, 2) for i in range(1, 9)] + [
    round(0.5 + 0.1 * i, 2) for i in range(10)
]

# Named sub-streams of the master seed, one per self-learning phase.
_PHASE_MAIN = 0
_PHASE_BOOSTED = 1


def derive_seed(master, phase):
    """Stable per-phase seed so reruns of any mode share their main loop."""
    state = np.random.SeedSequence([int(master), int(phase)]).generate_state(1, np.uint64)
    return int(state[0])


@dataclass
class RunConfig:
    """Every knob of a pipeline run; defaults match the full-scale setup."""

    src_embeddings: str = ""
    tgt_embeddings: str = ""
    output_dir: str | None = None
    mode: str = "baseline"
    scale: float = 0.0
    grid: list = field(default_factory=lambda: list(DEFAULT_GRID))
    seeds: list = field(default_factory=lambda: [0])
    runs_per_c: int = 1
    criterion: str = "dev-accuracy"
    dev_lexicon: str | None = None
    test_lexicon: str | None = None
    scorer_table: str | None = None
    max_vocab: int | None = None
    oov_mode: str = "skip"
    train_cutoff: int = 20_000
    csls_k: int = 10
    stall_window: int = 50
    p_init: float = 0.1
    p_factor: float = 2.0
    objective_eps: float = 1e-6
    max_iterations: int = 10_000
    em_iterations: int = 3
    synth_pairs: int = 5_000
    delete_k: int = 2
    alphabet_k: int = 100
    threads: int | None = None

    def loop_config(self, seed):
        return LoopConfig(
            train_cutoff=self.train_cutoff,
            csls_k=self.csls_k,
            stall_window=self.stall_window,
            p_init=self.p_init,
            p_factor=self.p_factor,
            objective_eps=self.objective_eps,
            rng_seed=seed,
            max_iterations=self.max_iterations,
        )

    def validate(self, for_sweep=False):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}")
        if self.scale < 0:
            raise ConfigError("scale must be non-negative")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be non-negative")
        if self.oov_mode not in ("skip", "count-wrong"):
            raise ConfigError(f"unknown oov_mode {self.oov_mode!r}")
        for name in ("src_embeddings", "tgt_embeddings"):
            path = getattr(self, name)
            if not path:
                raise ConfigError(f"{name} is required")
            if not Path(path).is_file():
                raise ConfigError(f"{name}: no such file: {path}")
        for name in ("dev_lexicon", "test_lexicon", "scorer_table"):
            path = getattr(self, name)
            if path is not None and not Path(path).is_file():
                raise ConfigError(f"{name}: no such file: {path}")
        if self.mode == "external-scorer" and not self.scorer_table:
            raise ConfigError("external-scorer mode requires a scorer table")
        if min(self.em_iterations, self.synth_pairs, self.alphabet_k) < 1:
            raise ConfigError("em_iterations, synth_pairs and alphabet_k must be positive")
        if self.delete_k < 0:
            raise ConfigError("delete_k must be non-negative")
        if self.max_vocab is not None and self.max_vocab < 2:
            raise ConfigError("max_vocab must be at least 2")
        try:
            self.loop_config(self.seeds[0])
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if for_sweep:
            if not self.grid:
                raise ConfigError("sweep requires a non-empty grid")
            if self.criterion not in CRITERIA:
                raise ConfigError(f"unknown criterion {self.criterion!r}")
            if self.criterion == "dev-accuracy" and not self.dev_lexicon:
                raise ConfigError("dev-accuracy selection requires a dev lexicon")
            if self.runs_per_c < 1:
                raise ConfigError("runs_per_c must be at least 1")

    def to_manifest(self):
        manifest = dataclasses.asdict(self)
        manifest["package_version"] = __version__
        return manifest

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(mapping) - known - {"package_version"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**{k: v for k, v in mapping.items() if k in known})


@dataclass
class PipelineResult:
    """In-memory outcome of one run."""

    predictions: dict
    mean_cosine: float
    result: object
    src_vocab: object
    tgt_vocab: object
    eval_report: object = None
    extras: dict = field(default_factory=dict)


def _run_plain(src_raw, tgt_raw, cfg, seed):
    src = normalize_embeddings(src_raw)
    tgt = normalize_embeddings(tgt_raw)
    loop_cfg = cfg.loop_config(derive_seed(seed, _PHASE_MAIN))
    return run_self_learning(src, tgt, loop_cfg), src, tgt


def _run_extended(src_raw, tgt_raw, cfg, seed, extras):
    cutoff = min(cfg.train_cutoff, len(src_raw.vocab), len(tgt_raw.vocab))
    alphabet = build_ngram_alphabet(
        src_raw.vocab.top(cutoff), tgt_raw.vocab.top(cutoff), cfg.alphabet_k
    )
    extras["alphabet_size"] = len(alphabet)
    src = extend_embeddings(
        src_raw, extension_matrix(src_raw.vocab.words, alphabet, cfg.scale)
    )
    tgt = extend_embeddings(
        tgt_raw, extension_matrix(tgt_raw.vocab.words, alphabet, cfg.scale)
    )
    loop_cfg = cfg.loop_config(derive_seed(seed, _PHASE_MAIN))
    return run_self_learning(src, tgt, loop_cfg, n_extension_cols=len(alphabet))


def _synthetic_pairs(base_result, src_vocab, tgt_vocab, n):
    """Highest-similarity entries of the final induced dictionary, as words."""
    scores = base_result.loop_dictionary_scores
    order = np.argsort(-scores, kind="stable")[:n]
    d = base_result.loop_dictionary
    return [
        (src_vocab.words[int(d.src[k])], tgt_vocab.words[int(d.tgt[k])]) for k in order
    ]


def _run_boosted(src_raw, tgt_raw, cfg, seed, extras):
    base_result, src, tgt = _run_plain(src_raw, tgt_raw, cfg, seed)
    pairs = _synthetic_pairs(base_result, src.vocab, tgt.vocab, cfg.synth_pairs)
    extras["synthetic_pairs"] = len(pairs)

    cutoff = min(cfg.train_cutoff, len(src.vocab), len(tgt.vocab))
    src_words = src.vocab.top(cutoff)
    tgt_words = tgt.vocab.top(cutoff)
    alphabets = build_edit_alphabets(src_words, tgt_words)
    model = em_train(pairs, alphabets, cfg.em_iterations)
    extras["edit_model"] = model
    extras["em_log_likelihoods"] = model.training_stats.log_likelihoods

    cands, skipped = candidate_pairs(src_words, tgt_words, model, cfg.delete_k)
    extras["candidates"] = len(cands)
    extras["untransliterable"] = skipped
    if not cands:
        raise CandidateError("candidate filtering produced no pairs")

    table = load_scorer_table(cfg.scorer_table) if cfg.mode == "external-scorer" else None
    boost_src = []
    boost_tgt = []
    boost_val = []
    for i, j in sorted(cands):
        if cfg.mode == "edit-dist":
            value = edit_similarity_boost(src_words[i], tgt_words[j], model, cfg.scale)
        else:
            value = external_scorer_boost(src_words[i], tgt_words[j], table, cfg.scale)
        if value > 0.0:
            boost_src.append(i)
            boost_tgt.append(j)
            boost_val.append(value)
    extras["boosted_pairs"] = len(boost_val)
    boost = SimilarityBoost(
        np.array(boost_src, np.int64), np.array(boost_tgt, np.int64), np.array(boost_val)
    )
    loop_cfg = cfg.loop_config(derive_seed(seed, _PHASE_BOOSTED))
    return run_self_learning(src, tgt, loop_cfg, boosts=[boost])


def execute_run(cfg, seed):
    """Run the configured mode and return the in-memory outcome."""
    src_raw = load_embeddings(cfg.src_embeddings, cfg.max_vocab)
    tgt_raw = load_embeddings(cfg.tgt_embeddings, cfg.max_vocab)
    extras = {}
    if cfg.mode == "baseline":
        result, _, _ = _run_plain(src_raw, tgt_raw, cfg, seed)
    elif cfg.mode == "ortho-ext":
        result = _run_extended(src_raw, tgt_raw, cfg, seed, extras)
    else:
        result = _run_boosted(src_raw, tgt_raw, cfg, seed, extras)
    src_words = src_raw.vocab.words
    tgt_words = tgt_raw.vocab.words
    predictions = {
        src_words[int(i)]: tgt_words[int(j)]
        for i, j in zip(result.lexicon.src, result.lexicon.tgt)
    }
    return PipelineResult(
        predictions=predictions,
        mean_cosine=float(result.lexicon_cosine.mean()),
        result=result,
        src_vocab=src_raw.vocab,
        tgt_vocab=tgt_raw.vocab,
        extras=extras,
    )


def _ensure_disjoint(dev, test):
    overlap = [
        (s, t) for s, targets in dev.pairs.items() for t in targets
        if t in test.pairs.get(s, ())
    ]
    if overlap:
        raise ConfigError(
            f"dev and test lexicons share {len(overlap)} pairs, e.g. {overlap[0]}"
        )


def _write_trace(trace, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration\tp_keep\tobjective\n")
        for entry in trace:
            fh.write(f"{entry.iteration}\t{entry.p_keep:.10g}\t{entry.objective:.12f}\n")


def run_pipeline(cfg):
    """Validate, run, and write all artifacts into the output directory.

    Artifacts: lexicon.tsv, trace.tsv, manifest.json, edit_model.tsv for the
    boosted modes, and an evaluation report when a test lexicon is given.
    Nothing is written when validation fails.
    """
    cfg.validate()
    if not cfg.output_dir:
        raise ConfigError("output_dir is required")
    dev = test = None
    if cfg.dev_lexicon:
        dev = load_ref_lexicon(cfg.dev_lexicon)
    if cfg.test_lexicon:
        test = load_ref_lexicon(cfg.test_lexicon)
    if dev is not None and test is not None:
        _ensure_disjoint(dev, test)

    seed = cfg.seeds[0]
    outcome = execute_run(cfg, seed)

    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    result = outcome.result
    write_lexicon(
        result.lexicon,
        outcome.src_vocab,
        outcome.tgt_vocab,
        out_dir / "lexicon.tsv",
        scores=result.lexicon_cosine,
    )
    _write_trace(result.trace, out_dir / "trace.tsv")
    model = outcome.extras.pop("edit_model", None)
    if model is not None:
        model.save(out_dir / "edit_model.tsv")
        outcome.extras["edit_model_path"] = str(out_dir / "edit_model.tsv")

    manifest = cfg.to_manifest()
    manifest["seed_used"] = seed
    manifest["iterations"] = result.state.iteration
    manifest["final_objective"] = result.state.objective
    manifest["mean_cosine"] = outcome.mean_cosine
    manifest.update(
        {k: v for k, v in outcome.extras.items() if isinstance(v, (int, float, str))}
    )

    if test is not None:
        report = precision_at_1(outcome.predictions, test, cfg.oov_mode)
        outcome.eval_report = report
        manifest["test_p_at_1"] = report.p_at_1
        with open(out_dir / "eval_summary.txt", "w", encoding="utf-8") as fh:
            fh.write(report.summary() + "\n")
        write_predictions_tsv(report, out_dir / "predictions.tsv")
        logger.info("test %s", report.summary())

    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return outcome


def sweep_seeds(cfg):
    """Seeds for the averaged runs, extending the list when it is short."""
    seeds = list(cfg.seeds)
    while len(seeds) < cfg.runs_per_c:
        seeds.append(seeds[-1] + 1)
    return seeds


def run_sweep(cfg):
    """Select the scaling constant over the grid and write a report."""
    cfg.validate(for_sweep=True)
    if not cfg.output_dir:
        raise ConfigError("output_dir is required")
    dev = load_ref_lexicon(cfg.dev_lexicon) if cfg.dev_lexicon else None

    def runner(scale, seed):
        return execute_run(replace(cfg, scale=scale), seed)

    best, points = select_scaling_constant(
        runner,
        cfg.grid,
        cfg.criterion,
        runs_per_c=cfg.runs_per_c,
        seeds=sweep_seeds(cfg),
        dev=dev,
    )
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "sweep_report.tsv", "w", encoding="utf-8") as fh:
        fh.write("scale\tmean\truns\n")
        for point in points:
            runs = ",".join(f"{v:.6f}" for v in point.values)
            fh.write(f"{point.scale:g}\t{point.mean:.6f}\t{runs}\n")
    manifest = cfg.to_manifest()
    manifest["selected_scale"] = best
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    logger.info("selected scaling constant c=%g by %s", best, cfg.criterion)
    return best, points
