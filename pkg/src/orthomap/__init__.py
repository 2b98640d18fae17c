"""Unsupervised bilingual lexicon induction from monolingual embeddings,
with orthographic signals that work across writing systems."""

__version__ = "0.1.0"

from .corpus_io import (  # noqa: F401
    EmbeddingMatrix,
    RefLexicon,
    SparseDictionary,
    Vocabulary,
    build_pivot_lexicon,
    load_embeddings,
    load_ref_lexicon,
    write_embeddings,
    write_lexicon,
)
from .self_learning import LoopConfig, run_self_learning  # noqa: F401
