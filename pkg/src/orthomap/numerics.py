"""Dense linear-algebra primitives behind the mapping loop.

Conventions: embeddings are row vectors, maps multiply on the right
(mapped = E @ W). Orthogonal map pairs come from the SVD of the weighted
cross-covariance X^T D Z; whitening transforms are symmetric inverse
square roots of uncentered second-moment matrices.
"""

import logging
from dataclasses import dataclass

import numpy as np

from .corpus_io import EmbeddingMatrix

logger = logging.getLogger(__name__)


def normalize_rows(matrix):
    """Scale each row to unit Euclidean length; zero rows are left alone."""
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    safe = np.where(norms > 0.0, norms, 1.0)
    return matrix / safe


def normalize_embeddings(emb, center=True):
    """Mean-center every dimension, then length-normalize every row.

    Rows that become zero after centering (duplicates of the mean) stay
    zero and are reported with a warning.
    """
    if len(emb.vocab) == 0:
        raise ValueError("empty embedding matrix")
    data = np.array(emb.data, dtype=np.float64)
    if center:
        data -= data.mean(axis=0)
    norms = np.linalg.norm(data, axis=1)
    zero_rows = int((norms == 0.0).sum())
    if zero_rows:
        logger.warning("%d rows have zero norm after centering", zero_rows)
    return EmbeddingMatrix(emb.vocab, normalize_rows(data))


@dataclass
class WhiteningPair:
    """Symmetric whitening transform and its inverse.

    forward = C^(-1/2) and inverse = C^(+1/2) for the uncentered second
    moment C of the selected rows, with eigenvalues clamped below at
    eigen_floor for numerical safety.
    """

    forward: np.ndarray
    inverse: np.ndarray
    eigen_floor: float


# Relative clamp applied to covariance eigenvalues before the root.
EIGEN_FLOOR_RATIO = 1e-9


def compute_whitening(emb, rows=None):
    """Whitening pair for the selected rows of an embedding matrix.

    Applying ``forward`` gives the selected rows unit variance and zero
    covariance across dimensions (up to the eigenvalue clamp).
    """
    data = emb.data if isinstance(emb, EmbeddingMatrix) else np.asarray(emb)
    selected = data if rows is None else data[rows]
    n = selected.shape[0]
    if n == 0 or not np.any(selected):
        raise ValueError("whitening requires a non-zero row selection")
    cov = selected.T @ selected / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    floor = EIGEN_FLOOR_RATIO * float(eigvals[-1])
    if floor <= 0.0:
        raise ValueError("covariance has no positive eigenvalue")
    clamped = np.maximum(eigvals, floor)
    forward = (eigvecs * clamped**-0.5) @ eigvecs.T
    inverse = (eigvecs * clamped**0.5) @ eigvecs.T
    return WhiteningPair(forward, inverse, floor)


def weighted_cross_svd(x, z, dictionary):
    """SVD of sum_(i,j,w) w * x_i^T z_j over the dictionary entries."""
    if len(dictionary) == 0:
        raise ValueError("dictionary is empty")
    xs = x[dictionary.src] * dictionary.weight[:, None]
    m = xs.T @ z[dictionary.tgt]
    u, s, vt = np.linalg.svd(m)
    return u, s, vt


def procrustes_solve(src_emb, tgt_emb, dictionary):
    """Orthogonal maps maximizing the weighted sum of mapped dot products.

    Returns (w_src, w_tgt); the optimum value equals the trace of the
    singular values of the weighted cross-covariance.
    """
    u, _, vt = weighted_cross_svd(src_emb.data, tgt_emb.data, dictionary)
    return u, vt.T


def similarity_block(src_emb, w_src, tgt_emb, w_tgt, row_range, col_range):
    """Exact block of the mapped similarity matrix for the given ranges.

    Ranges are (start, stop) pairs; the full matrix never needs to exist.
    """
    r0, r1 = row_range
    c0, c1 = col_range
    if not (0 <= r0 <= r1 <= src_emb.data.shape[0]):
        raise ValueError(f"row range {row_range} out of bounds")
    if not (0 <= c0 <= c1 <= tgt_emb.data.shape[0]):
        raise ValueError(f"column range {col_range} out of bounds")
    return (src_emb.data[r0:r1] @ w_src) @ (tgt_emb.data[c0:c1] @ w_tgt).T
