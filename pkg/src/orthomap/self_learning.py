"""Iterative mapping/induction loop.

One iteration solves the orthogonal maps for the current dictionary, builds
the rescaled similarity matrix over the training cutoff, and induces a new
bidirectional dictionary from it, zeroing entries stochastically to force
exploration. The keep probability starts small and doubles whenever the
objective stalls; once it reaches 1 and stalls again, a modified final
iteration with whitening produces the output maps and lexicon.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .corpus_io import SparseDictionary
from .errors import ConvergenceError
from .numerics import compute_whitening, normalize_rows, weighted_cross_svd
from .ortho_extension import strip_extension

logger = logging.getLogger(__name__)

_ROW_BLOCK = 1024


@dataclass
class LoopConfig:
    """Constants of the self-learning loop."""

    train_cutoff: int = 20_000
    csls_k: int = 10
    stall_window: int = 50
    p_init: float = 0.1
    p_factor: float = 2.0
    objective_eps: float = 1e-6
    rng_seed: int = 0
    max_iterations: int = 10_000

    def __post_init__(self):
        if min(self.train_cutoff, self.csls_k, self.stall_window, self.max_iterations) < 1:
            raise ValueError("loop counts must be positive")
        if not 0.0 < self.p_init <= 1.0:
            raise ValueError("p_init must lie in (0, 1]")
        if self.p_factor <= 1.0:
            raise ValueError("p_factor must exceed 1")
        if self.objective_eps <= 0.0:
            raise ValueError("objective_eps must be positive")
        if self.rng_seed < 0:
            raise ValueError("rng_seed must be non-negative")


@dataclass
class TrainState:
    """Mutable loop state; the induction step reads it for seeding."""

    p_keep: float
    rng_seed: int
    iteration: int = 0
    stall_counter: int = 0
    objective: float = float("-inf")
    dictionary: SparseDictionary | None = None


@dataclass
class TraceEntry:
    iteration: int
    p_keep: float
    objective: float


@dataclass
class SimilarityBoost:
    """Sparse additive adjustment to similarity entries (boosted pairs)."""

    src: np.ndarray
    tgt: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.src = np.ascontiguousarray(self.src, dtype=np.int64)
        self.tgt = np.ascontiguousarray(self.tgt, dtype=np.int64)
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        order = np.argsort(self.src, kind="stable")
        self.src = self.src[order]
        self.tgt = self.tgt[order]
        self.values = self.values[order]

    def __len__(self):
        return len(self.src)

    @classmethod
    def merge(cls, boosts):
        """Sum several boosts into one, combining duplicate pairs."""
        boosts = [b for b in boosts if len(b)]
        if not boosts:
            return cls(np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0))
        src = np.concatenate([b.src for b in boosts])
        tgt = np.concatenate([b.tgt for b in boosts])
        val = np.concatenate([b.values for b in boosts])
        codes = src * (tgt.max() + 1) + tgt
        uniq, first, inverse = np.unique(codes, return_index=True, return_inverse=True)
        summed = np.zeros(len(uniq))
        np.add.at(summed, inverse, val)
        return cls(src[first], tgt[first], summed)

    def restricted(self, n_src, n_tgt):
        keep = (self.src < n_src) & (self.tgt < n_tgt)
        return SimilarityBoost(self.src[keep], self.tgt[keep], self.values[keep])

    def row_supplier(self, n_cols):
        """Callable mapping a row range to a dense addend block."""
        src, tgt, values = self.src, self.tgt, self.values

        def rows(lo, hi):
            block = np.zeros((hi - lo, n_cols))
            a = np.searchsorted(src, lo)
            b = np.searchsorted(src, hi)
            if b > a:
                np.add.at(block, (src[a:b] - lo, tgt[a:b]), values[a:b])
            return block

        return rows


def topk_row_mean(sim, k):
    """Mean of the k largest entries of each row."""
    k = min(k, sim.shape[1])
    return np.partition(sim, -k, axis=1)[:, -k:].mean(axis=1)


def csls_means(sim, k):
    """Per-source and per-target nearest-neighbour mean similarities."""
    return topk_row_mean(sim, k), topk_row_mean(sim.T, k)


def csls_adjust(block, row_means, col_means):
    """Hubness-corrected similarities: 2*S(i,j) - row_mean_i - col_mean_j."""
    return 2.0 * block - row_means[:, None] - col_means[None, :]


def _keep_mask(seed, iteration, row, n, p_keep):
    # Counter-based generator keyed per (seed, iteration, row): results do
    # not depend on how rows are grouped into blocks. The 128-bit key packs
    # iteration and row into the second word (both stay far below 2**32).
    key = np.array(
        [seed & 0xFFFFFFFFFFFFFFFF, (iteration << 32) | row], dtype=np.uint64
    )
    gen = np.random.Generator(np.random.Philox(key=key))
    return gen.random(n) < p_keep


def induce_dictionary(sim_rows, shape, state, boost_rows=None):
    """Bidirectional dictionary from adjusted similarity rows.

    ``sim_rows(lo, hi)`` must yield the rescaled, boost-augmented block for
    source rows [lo, hi). Entries are zeroed with probability 1 - p_keep
    (seeded per row); each source picks its best kept target and vice versa,
    and mutual choices get weight 2.
    """
    n_src, n_tgt = shape
    if n_src == 0 or n_tgt == 0:
        raise ValueError("empty vocabulary")
    forward = np.full(n_src, -1, np.int64)
    col_best = np.full(n_tgt, -np.inf)
    backward = np.full(n_tgt, -1, np.int64)
    stochastic = state.p_keep < 1.0
    for lo in range(0, n_src, _ROW_BLOCK):
        hi = min(lo + _ROW_BLOCK, n_src)
        block = np.array(sim_rows(lo, hi), dtype=np.float64)
        if boost_rows is not None:
            block = block + boost_rows(lo, hi)
        if stochastic:
            for r in range(lo, hi):
                keep = _keep_mask(state.rng_seed, state.iteration, r, n_tgt, state.p_keep)
                block[r - lo, ~keep] = -np.inf
        row_max = block.max(axis=1)
        valid = row_max > -np.inf
        forward[lo:hi][valid] = block[valid].argmax(axis=1)
        blk_arg = block.argmax(axis=0)
        blk_max = block[blk_arg, np.arange(n_tgt)]
        better = blk_max > col_best
        col_best[better] = blk_max[better]
        backward[better] = blk_arg[better] + lo
    src_fwd = np.nonzero(forward >= 0)[0]
    tgt_bwd = np.nonzero(backward >= 0)[0]
    src = np.concatenate([src_fwd, backward[tgt_bwd]])
    tgt = np.concatenate([forward[src_fwd], tgt_bwd])
    if len(src) == 0:
        raise ValueError("no dictionary entries induced (all similarities zeroed)")
    codes = src * n_tgt + tgt
    uniq, weight = np.unique(codes, return_counts=True)
    return SparseDictionary(uniq // n_tgt, uniq % n_tgt, weight, n_src, n_tgt)


def init_dictionary_unsupervised(src_emb, tgt_emb, cutoff):
    """Seed dictionary assuming the two spaces are approximately isometric.

    Each word is described by the sorted, length-normalized vector of its
    within-language similarities over the top-cutoff words; words are then
    matched across languages by nearest neighbour on these signatures.
    """
    if cutoff < 2:
        raise ValueError("cutoff must be at least 2")
    if cutoff > len(src_emb.vocab) or cutoff > len(tgt_emb.vocab):
        raise ValueError("cutoff exceeds a vocabulary size")
    signatures = []
    for emb in (src_emb, tgt_emb):
        block = emb.data[:cutoff]
        sim = block @ block.T
        sim = np.sort(sim, axis=1)[:, ::-1]
        signatures.append(normalize_rows(sim))
    sim = signatures[0] @ signatures[1].T
    state = TrainState(p_keep=1.0, rng_seed=0, iteration=0)
    return induce_dictionary(lambda lo, hi: sim[lo:hi], (cutoff, cutoff), state)


def objective_value(src_emb, tgt_emb, w_src, w_tgt, dictionary):
    """Weighted mean dot product of mapped dictionary pairs.

    Lies in [-1, 1] for unit rows and orthogonal maps; equals
    trace(Sigma) / total weight right after a Procrustes solve.
    """
    if len(dictionary) == 0:
        raise ValueError("dictionary is empty")
    xs = src_emb.data[dictionary.src] @ w_src
    zs = tgt_emb.data[dictionary.tgt] @ w_tgt
    dots = np.einsum("ij,ij->i", xs, zs)
    return float((dots * dictionary.weight).sum() / dictionary.weight_sum)


def run_schedule(cfg, step_fn, seed=None):
    """Drive the keep-probability schedule until convergence.

    ``step_fn(state)`` performs one iteration and returns its objective.
    The keep probability multiplies by p_factor whenever the best objective
    fails to improve by objective_eps within stall_window iterations; the
    run ends when the stall fires with p_keep already at 1.
    """
    state = TrainState(
        p_keep=cfg.p_init,
        rng_seed=cfg.rng_seed if seed is None else seed,
    )
    trace = []
    best = -np.inf
    while True:
        state.iteration += 1
        if state.iteration > cfg.max_iterations:
            raise ConvergenceError(
                f"no convergence within {cfg.max_iterations} iterations"
            )
        objective = step_fn(state)
        state.objective = objective
        trace.append(TraceEntry(state.iteration, state.p_keep, objective))
        if objective - best >= cfg.objective_eps:
            best = objective
            state.stall_counter = 0
            continue
        state.stall_counter += 1
        if state.stall_counter >= cfg.stall_window:
            if state.p_keep >= 1.0:
                break
            state.p_keep = min(1.0, state.p_keep * cfg.p_factor)
            state.stall_counter = 0
            logger.debug(
                "iteration %d: objective stalled, p_keep -> %.4g",
                state.iteration,
                state.p_keep,
            )
    return state, trace


@dataclass
class SelfLearningResult:
    """Everything a caller needs after a completed run."""

    w_src: np.ndarray
    w_tgt: np.ndarray
    lexicon: SparseDictionary
    lexicon_csls: np.ndarray
    lexicon_cosine: np.ndarray
    trace: list
    loop_dictionary: SparseDictionary
    loop_dictionary_scores: np.ndarray
    state: TrainState = field(repr=False, default=None)


def _adjusted_similarity(x_cut, z_cut, w_src, w_tgt, cfg, boost_rows):
    sim = (x_cut @ w_src) @ (z_cut @ w_tgt).T
    row_means, col_means = csls_means(sim, cfg.csls_k)
    adjusted = csls_adjust(sim, row_means, col_means)
    if boost_rows is not None:
        adjusted += boost_rows(0, adjusted.shape[0])
    return adjusted


def run_self_learning(src_emb, tgt_emb, cfg, *, n_extension_cols=0, boosts=(), loop_seed=None):
    """Full unsupervised run: init, loop to convergence, whitened final pass.

    ``n_extension_cols`` trailing columns are stripped from both matrices
    before the final iteration (0 when no orthographic extension is active).
    ``boosts`` are sparse similarity addends over the cutoff block.
    """
    n_src = len(src_emb.vocab)
    n_tgt = len(tgt_emb.vocab)
    cutoff = min(cfg.train_cutoff, n_src, n_tgt)
    x = src_emb.data
    z = tgt_emb.data
    x_cut = x[:cutoff]
    z_cut = z[:cutoff]

    boost = SimilarityBoost.merge(boosts).restricted(cutoff, cutoff) if boosts else None
    boost_rows = boost.row_supplier(cutoff) if boost is not None and len(boost) else None

    holder = {
        "dict": init_dictionary_unsupervised(src_emb, tgt_emb, cutoff),
        "maps": None,
    }

    def step(state):
        d = holder["dict"]
        u, s, vt = weighted_cross_svd(x, z, d)
        w_src, w_tgt = u, vt.T
        objective = float(s.sum() / d.weight_sum)
        sim = (x_cut @ w_src) @ (z_cut @ w_tgt).T
        row_means, col_means = csls_means(sim, cfg.csls_k)
        adjusted = csls_adjust(sim, row_means, col_means)
        new_d = induce_dictionary(
            lambda lo, hi: adjusted[lo:hi],
            (cutoff, cutoff),
            state,
            boost_rows=boost_rows,
        )
        holder["dict"] = new_d
        holder["maps"] = (w_src, w_tgt)
        state.dictionary = new_d
        return objective

    state, trace = run_schedule(cfg, step, seed=loop_seed)
    loop_dict = holder["dict"]
    loop_w_src, loop_w_tgt = holder["maps"]
    adjusted = _adjusted_similarity(x_cut, z_cut, loop_w_src, loop_w_tgt, cfg, boost_rows)
    loop_scores = adjusted[loop_dict.src, loop_dict.tgt].copy()
    del adjusted

    # Modified final iteration: strip any extension, whiten both sides over
    # the training rows, solve, reweight by sqrt of the singular values and
    # undo the whitening on each side.
    src_final = strip_extension(src_emb, n_extension_cols)
    tgt_final = strip_extension(tgt_emb, n_extension_cols)
    wh_src = compute_whitening(src_final, slice(0, cutoff))
    wh_tgt = compute_whitening(tgt_final, slice(0, cutoff))
    u, s, vt = weighted_cross_svd(
        src_final.data @ wh_src.forward, tgt_final.data @ wh_tgt.forward, loop_dict
    )
    v = vt.T
    root = np.sqrt(s)
    w_src = wh_src.forward @ ((u * root) @ u.T) @ wh_src.inverse @ u
    w_tgt = wh_tgt.forward @ ((v * root) @ v.T) @ wh_tgt.inverse @ v

    lexicon, csls_scores, cosines = retrieve_lexicon(
        src_final, tgt_final, w_src, w_tgt, cfg, boost=boost
    )
    logger.info(
        "converged after %d iterations, final objective %.6f",
        state.iteration,
        state.objective,
    )
    return SelfLearningResult(
        w_src=w_src,
        w_tgt=w_tgt,
        lexicon=lexicon,
        lexicon_csls=csls_scores,
        lexicon_cosine=cosines,
        trace=trace,
        loop_dictionary=loop_dict,
        loop_dictionary_scores=loop_scores,
        state=state,
    )


def retrieve_lexicon(src_emb, tgt_emb, w_src, w_tgt, cfg, boost=None):
    """Nearest-neighbour retrieval over the full vocabularies.

    Neighbourhood statistics for the hubness correction come from the top
    train_cutoff words of the other language; ranking covers every target.
    Mapped rows are length-normalized so scores are cosines.
    """
    xm = normalize_rows(src_emb.data @ w_src)
    zm = normalize_rows(tgt_emb.data @ w_tgt)
    n_src, n_tgt = xm.shape[0], zm.shape[0]
    cutoff = min(cfg.train_cutoff, n_src, n_tgt)
    k = min(cfg.csls_k, cutoff)

    x_cut = xm[:cutoff]
    col_means = np.empty(n_tgt)
    for lo in range(0, n_tgt, _ROW_BLOCK):
        hi = min(lo + _ROW_BLOCK, n_tgt)
        col_means[lo:hi] = topk_row_mean((x_cut @ zm[lo:hi].T).T, k)

    boost_rows = boost.row_supplier(n_tgt) if boost is not None and len(boost) else None
    z_cut_t = zm[:cutoff].T
    tgt_idx = np.empty(n_src, np.int64)
    csls_scores = np.empty(n_src)
    cosines = np.empty(n_src)
    for lo in range(0, n_src, _ROW_BLOCK):
        hi = min(lo + _ROW_BLOCK, n_src)
        sim = xm[lo:hi] @ zm.T
        row_means = topk_row_mean(xm[lo:hi] @ z_cut_t, k)
        scores = 2.0 * sim - col_means[None, :]
        if boost_rows is not None:
            scores += boost_rows(lo, hi)
        arg = scores.argmax(axis=1)
        rows = np.arange(hi - lo)
        tgt_idx[lo:hi] = arg
        cosines[lo:hi] = sim[rows, arg]
        csls_scores[lo:hi] = scores[rows, arg] - row_means
    lexicon = SparseDictionary(
        np.arange(n_src), tgt_idx, np.ones(n_src, np.int64), n_src, n_tgt
    )
    return lexicon, csls_scores, cosines
