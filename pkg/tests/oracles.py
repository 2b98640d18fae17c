"""Independent brute-force oracles used to derive expected test values.

Everything here deliberately avoids the dynamic programs and index
structures it checks: probabilities come from explicit path enumeration,
transliterations from enumerating segmentations, candidate pairs from the
quadratic definition.
"""

import math

import numpy as np


def enumerate_edit_probability(x, z, theta, max_src_len, max_tgt_len):
    """Joint probability as an explicit sum over complete operation sequences."""
    total = 0.0

    def extend(n, m, acc):
        nonlocal total
        if n == len(x) and m == len(z):
            total += acc
            return
        for j in range(0, max_src_len + 1):
            if n + j > len(x):
                break
            for k in range(0, max_tgt_len + 1):
                if j == 0 and k == 0:
                    continue
                if m + k > len(z):
                    break
                p = theta.get((x[n : n + j], z[m : m + k]), 0.0)
                if p > 0.0:
                    extend(n + j, m + k, acc * p)

    extend(0, 0, 1.0)
    return total


def enumerate_posterior_stats(x, z, theta, max_src_len, max_tgt_len):
    """Posterior operation counts and expected path length by enumeration."""
    paths = []

    def extend(n, m, acc, ops):
        if n == len(x) and m == len(z):
            paths.append((acc, list(ops)))
            return
        for j in range(0, max_src_len + 1):
            if n + j > len(x):
                break
            for k in range(0, max_tgt_len + 1):
                if j == 0 and k == 0:
                    continue
                if m + k > len(z):
                    break
                op = (x[n : n + j], z[m : m + k])
                p = theta.get(op, 0.0)
                if p > 0.0:
                    ops.append(op)
                    extend(n + j, m + k, acc * p, ops)
                    ops.pop()

    extend(0, 0, 1.0, [])
    total = sum(p for p, _ in paths)
    counts = {}
    expected_ops = 0.0
    for p, ops in paths:
        posterior = p / total
        expected_ops += posterior * len(ops)
        for op in ops:
            counts[op] = counts.get(op, 0.0) + posterior
    return counts, expected_ops, total


def enumerate_transliteration_score(x, theta, src_items, tgt_items, max_src_len):
    """Best segmentation score by enumerating all segmentations of x."""
    best = -math.inf

    def best_substitution(segment):
        top = -math.inf
        for a_tgt in list(tgt_items) + [""]:
            p = theta.get((segment, a_tgt), 0.0)
            if p > 0.0:
                top = max(top, math.log(p))
        return top

    def split(pos, acc):
        nonlocal best
        if pos == len(x):
            best = max(best, acc)
            return
        for j in range(1, max_src_len + 1):
            if pos + j > len(x):
                break
            segment = x[pos : pos + j]
            if segment not in src_items:
                continue
            score = best_substitution(segment)
            if score == -math.inf:
                continue
            split(pos + j, acc + score)

    split(0, 0.0)
    return best


def brute_force_candidates(translits, tgt_words, k):
    """Quadratic deletion-intersection check over all word pairs."""
    from orthomap.candidates import delete_variants

    tgt_variants = [delete_variants(w, k) for w in tgt_words]
    pairs = set()
    for i, rendered in enumerate(translits):
        if rendered is None:
            continue
        mine = delete_variants(rendered, k)
        for j, theirs in enumerate(tgt_variants):
            if not mine.isdisjoint(theirs):
                pairs.add((i, j))
    return pairs


def random_orthogonal(rng, dim):
    """Haar-distributed orthogonal matrix via QR with sign fixing."""
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def random_theta(rng, alphabets):
    """Random normalized operation table over the full operation set."""
    from orthomap.edit_model import edit_operations

    ops = list(edit_operations(alphabets))
    raw = rng.random(len(ops)) + 1e-3
    raw /= raw.sum()
    return dict(zip(ops, raw))
