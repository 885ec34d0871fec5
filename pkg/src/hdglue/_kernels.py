"""Hot inner loops for equal-weight majority voting over packed words.

The compiled path counts votes in bit-sliced planes: plane k holds bit k of
the running count for all 64 lanes of a word at once, so a majority over n
terms costs O(n log n) word ops instead of unpacking anything. The numpy
fallback unpacks and sums; both produce identical bits and the tests hold
them to that.

Counts are compared against the term count by scanning 2*count vs n from
the high bit down; exact ties defer to the caller's tiebreak word.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


_PLANES = 34  # supports counts below 2**34


@njit(cache=True)
def _majority_words(term_words, tiebreak_words, out):  # pragma: no cover - compiled
    n_terms, n_w = term_words.shape
    planes = np.empty(_PLANES, dtype=np.uint64)
    n = np.uint64(n_terms)
    zero = np.uint64(0)
    one = np.uint64(1)
    full = ~zero
    for j in range(n_w):
        for k in range(_PLANES):
            planes[k] = zero
        for i in range(n_terms):
            carry = term_words[i, j]
            k = 0
            while carry != zero:
                t = planes[k] & carry
                planes[k] ^= carry
                carry = t
                k += 1
        # Lanewise compare 2*count with n; bit k of 2*count is planes[k-1].
        gt = zero
        eq = full
        for k in range(_PLANES - 1, -1, -1):
            pk = planes[k - 1] if k >= 1 else zero
            ck = full if (n >> np.uint64(k)) & one else zero
            gt |= eq & pk & ~ck
            eq &= ~(pk ^ ck)
        out[j] = gt | (eq & tiebreak_words[j])
    return out


@njit(cache=True)
def _majority_bound(level_words, level_idx, pos_words, tiebreak_words, out):  # pragma: no cover
    n_terms, n_w = pos_words.shape
    planes = np.empty(_PLANES, dtype=np.uint64)
    n = np.uint64(n_terms)
    zero = np.uint64(0)
    one = np.uint64(1)
    full = ~zero
    for j in range(n_w):
        for k in range(_PLANES):
            planes[k] = zero
        for i in range(n_terms):
            carry = level_words[level_idx[i], j] ^ pos_words[i, j]
            k = 0
            while carry != zero:
                t = planes[k] & carry
                planes[k] ^= carry
                carry = t
                k += 1
        gt = zero
        eq = full
        for k in range(_PLANES - 1, -1, -1):
            pk = planes[k - 1] if k >= 1 else zero
            ck = full if (n >> np.uint64(k)) & one else zero
            gt |= eq & pk & ~ck
            eq &= ~(pk ^ ck)
        out[j] = gt | (eq & tiebreak_words[j])
    return out


def _unpack_rows(words: np.ndarray, dim: int) -> np.ndarray:
    flat = np.unpackbits(words.view(np.uint8), axis=-1, bitorder="little")
    return flat[..., :dim]


def _pack_row(bits: np.ndarray, n_words: int) -> np.ndarray:
    full = np.zeros(n_words * 64, dtype=np.uint8)
    full[: bits.shape[0]] = bits
    return np.packbits(full, bitorder="little").view(np.uint64)


def _majority_words_np(term_words, tiebreak_words, dim):
    n_terms = term_words.shape[0]
    counts = _unpack_rows(term_words, dim).sum(axis=0, dtype=np.int64)
    tb = _unpack_rows(tiebreak_words, dim)
    bits = ((2 * counts > n_terms) | ((2 * counts == n_terms) & (tb == 1))).astype(np.uint8)
    return _pack_row(bits, term_words.shape[1])


def majority_words(term_words: np.ndarray, tiebreak_words: np.ndarray, dim: int) -> np.ndarray:
    """Majority bit per position over rows of packed words; ties take the tiebreak bit."""
    if term_words.shape[0] >= 1 << 32:
        raise ValueError("too many terms for the counting planes")
    if HAVE_NUMBA:
        out = np.empty(term_words.shape[1], dtype=np.uint64)
        return _majority_words(
            np.ascontiguousarray(term_words),
            np.ascontiguousarray(tiebreak_words),
            out,
        )
    return _majority_words_np(term_words, tiebreak_words, dim)


def majority_bound_words(
    level_words: np.ndarray,
    level_idx: np.ndarray,
    pos_words: np.ndarray,
    tiebreak_words: np.ndarray,
    dim: int,
) -> np.ndarray:
    """Majority over terms ``level_words[level_idx[i]] ^ pos_words[i]`` without
    materializing the bound terms."""
    if HAVE_NUMBA:
        out = np.empty(pos_words.shape[1], dtype=np.uint64)
        return _majority_bound(
            np.ascontiguousarray(level_words),
            np.ascontiguousarray(level_idx, dtype=np.int64),
            np.ascontiguousarray(pos_words),
            np.ascontiguousarray(tiebreak_words),
            out,
        )
    terms = level_words[level_idx] ^ pos_words
    return _majority_words_np(terms, tiebreak_words, dim)


def hamming_matrix(a_words: np.ndarray, b_words: np.ndarray) -> np.ndarray:
    """Pairwise hamming counts between row sets of packed words: (n, m) int64."""
    n = a_words.shape[0]
    out = np.empty((n, b_words.shape[0]), dtype=np.int64)
    # Chunk rows of a so the broadcast XOR stays in cache-friendly sizes.
    step = max(1, (1 << 22) // max(1, b_words.size * 8))
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        x = a_words[lo:hi, None, :] ^ b_words[None, :, :]
        out[lo:hi] = np.bitwise_count(x).sum(axis=2, dtype=np.int64)
    return out
