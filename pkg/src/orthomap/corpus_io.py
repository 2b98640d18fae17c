"""Embedding and lexicon file I/O, pivot dictionary construction, lexicon output.

Embedding files follow the common text format: a "count dim" header line,
then one word per line followed by `dim` decimal numbers. Lexicon files are
"source target" pairs, one per line, whitespace separated.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InputFormatError

logger = logging.getLogger(__name__)


class Vocabulary:
    """Ordered word list with O(1) word -> position lookup.

    Order is preserved exactly from the source file, which lists words by
    descending frequency; all cutoff-based selection relies on that order.
    """

    __slots__ = ("words", "index")

    def __init__(self, words):
        self.words = list(words)
        self.index = {w: i for i, w in enumerate(self.words)}
        if len(self.index) != len(self.words):
            raise ValueError("vocabulary words must be unique")

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.index

    def __getitem__(self, i):
        return self.words[i]

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.words == other.words

    def top(self, n):
        """First n words (the n most frequent ones)."""
        return self.words[:n]


@dataclass
class EmbeddingMatrix:
    """Row-per-word embedding matrix together with its vocabulary."""

    vocab: Vocabulary
    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("embedding data must be a 2-d matrix")
        if self.data.shape[0] != len(self.vocab):
            raise ValueError(
                f"row count {self.data.shape[0]} != vocabulary size {len(self.vocab)}"
            )
        if self.data.shape[1] < 1:
            raise ValueError("embedding dimension must be positive")
        if not np.isfinite(self.data).all():
            raise ValueError("embedding data contains non-finite entries")

    @property
    def dim(self):
        return self.data.shape[1]


class SparseDictionary:
    """Sparse set of weighted translation pairs.

    Weights are 1 for one-directional nearest neighbours and 2 for mutual
    ones; they act as multiplicities wherever the dictionary enters a sum.
    """

    __slots__ = ("src", "tgt", "weight")

    def __init__(self, src, tgt, weight, n_src=None, n_tgt=None, validate=True):
        self.src = np.ascontiguousarray(src, dtype=np.int64)
        self.tgt = np.ascontiguousarray(tgt, dtype=np.int64)
        self.weight = np.ascontiguousarray(weight, dtype=np.int64)
        if validate:
            self._validate(n_src, n_tgt)

    def _validate(self, n_src, n_tgt):
        if not (self.src.shape == self.tgt.shape == self.weight.shape):
            raise ValueError("entry arrays must have identical shape")
        if self.src.ndim != 1:
            raise ValueError("entry arrays must be 1-d")
        if len(self.src) == 0:
            return
        if self.src.min() < 0 or self.tgt.min() < 0:
            raise ValueError("negative dictionary index")
        if n_src is not None and self.src.max() >= n_src:
            raise ValueError("source index out of bounds")
        if n_tgt is not None and self.tgt.max() >= n_tgt:
            raise ValueError("target index out of bounds")
        bad = ~np.isin(self.weight, (1, 2))
        if bad.any():
            raise ValueError("dictionary weights must be 1 or 2")
        span = int(self.tgt.max()) + 1
        codes = self.src * span + self.tgt
        if len(np.unique(codes)) != len(codes):
            raise ValueError("duplicate (source, target) pair")

    @classmethod
    def from_pairs(cls, pairs, n_src=None, n_tgt=None):
        pairs = list(pairs)
        if pairs:
            src, tgt, weight = zip(*pairs)
        else:
            src, tgt, weight = (), (), ()
        return cls(src, tgt, weight, n_src=n_src, n_tgt=n_tgt)

    def __len__(self):
        return len(self.src)

    def __eq__(self, other):
        return (
            isinstance(other, SparseDictionary)
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.tgt, other.tgt)
            and np.array_equal(self.weight, other.weight)
        )

    @property
    def weight_sum(self):
        return int(self.weight.sum())

    def pairs(self):
        """Iterate (source index, target index, weight) tuples."""
        for i, j, w in zip(self.src, self.tgt, self.weight):
            yield int(i), int(j), int(w)


@dataclass
class RefLexicon:
    """Reference translations grouped by source word.

    ``flagged_sources`` lists source words that were absent from the
    embedding vocabulary at load time; evaluation decides how to count them.
    """

    pairs: dict
    flagged_sources: set = field(default_factory=set)

    def __len__(self):
        return len(self.pairs)


def load_embeddings(path, max_vocab=None):
    """Read a text embedding file into an EmbeddingMatrix.

    At most min(header count, max_vocab) rows are consumed; duplicated words
    keep their first occurrence and later ones are dropped with a warning.
    """
    if max_vocab is not None and max_vocab < 1:
        raise ValueError("max_vocab must be positive")
    with open(path, encoding="utf-8", errors="surrogateescape") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise InputFormatError(f"{path}: malformed header {header!r}")
        try:
            count, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise InputFormatError(f"{path}: malformed header {header!r}") from None
        if count < 1 or dim < 1:
            raise InputFormatError(f"{path}: non-positive header counts")
        limit = count if max_vocab is None else min(count, max_vocab)

        words = []
        seen = set()
        data = np.empty((limit, dim))
        kept = 0
        duplicates = 0
        rows_read = 0
        for lineno, line in enumerate(fh, start=2):
            if rows_read == limit:
                break
            rows_read += 1
            tokens = line.split()
            if not tokens:
                raise InputFormatError(f"{path}:{lineno}: empty line")
            if len(tokens) != dim + 1:
                raise InputFormatError(
                    f"{path}:{lineno}: expected {dim} values, found {len(tokens) - 1}"
                )
            word = tokens[0]
            if word in seen:
                duplicates += 1
                continue
            try:
                vec = np.array(tokens[1:], dtype=np.float64)
            except ValueError:
                raise InputFormatError(f"{path}:{lineno}: non-numeric entry") from None
            if not np.isfinite(vec).all():
                raise InputFormatError(f"{path}:{lineno}: non-finite entry")
            seen.add(word)
            words.append(word)
            data[kept] = vec
            kept += 1
    if not words:
        raise InputFormatError(f"{path}: no embedding rows")
    if duplicates:
        logger.warning("%s: dropped %d duplicate words", path, duplicates)
    return EmbeddingMatrix(Vocabulary(words), data[:kept])


def write_embeddings(emb, path):
    """Write an EmbeddingMatrix in the text format read by load_embeddings.

    Values are printed with 17 significant digits so a read/write cycle is
    lossless for float64.
    """
    with open(path, "w", encoding="utf-8", errors="surrogateescape") as fh:
        fh.write(f"{len(emb.vocab)} {emb.dim}\n")
        for word, row in zip(emb.vocab.words, emb.data):
            fh.write(word + " " + " ".join(format(v, ".17g") for v in row) + "\n")


def load_ref_lexicon(path, src_vocab=None, tgt_vocab=None):
    """Read a reference lexicon, grouping translations by source word.

    Entries whose source word is missing from src_vocab are kept but
    recorded in ``flagged_sources``. Duplicate lines collapse to one entry.
    """
    pairs = {}
    flagged = set()
    with open(path, encoding="utf-8", errors="surrogateescape") as fh:
        for lineno, line in enumerate(fh, start=1):
            tokens = line.split()
            if not tokens:
                continue
            if len(tokens) != 2:
                raise InputFormatError(
                    f"{path}:{lineno}: expected 2 fields, found {len(tokens)}"
                )
            src, tgt = tokens
            pairs.setdefault(src, set()).add(tgt)
            if src_vocab is not None and src not in src_vocab:
                flagged.add(src)
    return RefLexicon(pairs, flagged)


def build_pivot_lexicon(x_to_e, e_to_z):
    """Compose two lexicons through a shared pivot language.

    A pair (x, z) is emitted iff x has exactly one pivot translation k and
    k translates to z. The single-pivot restriction limits composition noise;
    the pivot-to-target fan-out is unrestricted.
    """
    if not x_to_e.pairs or not e_to_z.pairs:
        raise ValueError("both lexicons must be non-empty")
    out = {}
    for x, pivots in x_to_e.pairs.items():
        if len(pivots) != 1:
            continue
        (pivot,) = pivots
        targets = e_to_z.pairs.get(pivot)
        if targets:
            out[x] = set(targets)
    return RefLexicon(out)


def write_lexicon(dictionary, src_vocab, tgt_vocab, path, scores=None):
    """Write dictionary entries as TSV, sorted by source then target index.

    Each line is "source<TAB>target<TAB>weight" plus a score column when
    per-entry scores are given.
    """
    if scores is not None and len(scores) != len(dictionary):
        raise ValueError("scores length must match dictionary size")
    order = np.lexsort((dictionary.tgt, dictionary.src))
    with open(path, "w", encoding="utf-8", errors="surrogateescape") as fh:
        for k in order:
            i = int(dictionary.src[k])
            j = int(dictionary.tgt[k])
            line = f"{src_vocab.words[i]}\t{tgt_vocab.words[j]}\t{int(dictionary.weight[k])}"
            if scores is not None:
                line += f"\t{scores[k]:.6f}"
            fh.write(line + "\n")


def read_lexicon_tsv(path):
    """Read a written lexicon back as a source -> target mapping.

    Keeps the first target per source; induced lexicons have exactly one.
    """
    out = {}
    with open(path, encoding="utf-8", errors="surrogateescape") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            if len(fields) < 2:
                raise InputFormatError(f"{path}:{lineno}: expected >= 2 fields")
            out.setdefault(fields[0], fields[1])
    return out
