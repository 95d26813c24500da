"""Numba-compiled inner loops.

Embedding training performs tens of millions of sequential vector updates
per bootstrapping epoch; candidate featurization needs large batches of
edit distances.  Both loops live here, single-threaded so that results are
reproducible for a fixed seed.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    z = np.exp(x)
    return z / (1.0 + z)


@njit(cache=True, inline="always")
def _bisect_right(arr, value):
    lo, hi = 0, arr.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if value < arr[mid]:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True, inline="always")
def _in_sorted(arr, lo, hi, value):
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] == value:
            return True
        if arr[mid] < value:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True, inline="always")
def _pair_step(vectors, a, b, g, ua, ub):
    # Ascent step g on log-sigmoid(+/- dot); both rows move using the
    # pre-update value of the other.
    d = vectors.shape[1]
    for j in range(d):
        ua[j] = g * vectors[b, j]
        ub[j] = g * vectors[a, j]
    for j in range(d):
        vectors[a, j] += ua[j]
        vectors[b, j] += ub[j]


@njit(cache=True, inline="always")
def _dot_rows(vectors, a, b):
    s = 0.0
    for j in range(vectors.shape[1]):
        s += vectors[a, j] * vectors[b, j]
    return s


@njit(cache=True)
def train_embeddings(
    vectors,
    pos_entities,
    pos_patterns,
    ent_indptr,
    ent_indices,
    neg_cum,
    k_neg,
    pool_items,
    pool_indptr,
    n_epochs,
    lr_start,
    lr_floor,
    seed,
):
    """Sequential ascent sweeps over positive pairs, attract pairs, and
    repel pairs.

    ``vectors`` is the stacked (entities then patterns) parameter matrix and
    is updated in place.  Returns -1 on success, else the index of the first
    sweep that produced a non-finite component.
    """
    np.random.seed(seed)
    n_entities = ent_indptr.shape[0] - 1
    n_patterns = neg_cum.shape[0]
    n_pairs = pos_entities.shape[0]
    n_cats = pool_indptr.shape[0] - 1
    d = vectors.shape[1]

    order = np.arange(n_pairs)
    ua = np.empty(d)
    ub = np.empty(d)
    drawn = np.empty(max(k_neg, 1), dtype=np.int64)

    for epoch in range(n_epochs):
        if n_epochs > 1:
            lr = lr_start + (lr_floor - lr_start) * epoch / (n_epochs - 1)
        else:
            lr = lr_start

        for i in range(n_pairs - 1, 0, -1):
            j = np.random.randint(i + 1)
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp

        for t in range(n_pairs):
            e = pos_entities[order[t]]
            p = pos_patterns[order[t]]
            b = n_entities + p

            s = _dot_rows(vectors, e, b)
            _pair_step(vectors, e, b, lr * _sigmoid(-s), ua, ub)

            row_lo = ent_indptr[e]
            row_hi = ent_indptr[e + 1]
            n_eligible = n_patterns - (row_hi - row_lo)
            if n_eligible <= 0 or k_neg <= 0:
                continue
            if n_eligible <= k_neg:
                # Few eligible negatives: use all of them.
                for q in range(n_patterns):
                    if _in_sorted(ent_indices, row_lo, row_hi, q):
                        continue
                    nb = n_entities + q
                    s = _dot_rows(vectors, e, nb)
                    _pair_step(vectors, e, nb, -lr * _sigmoid(s), ua, ub)
            else:
                n_drawn = 0
                while n_drawn < k_neg:
                    r = np.random.random()
                    q = _bisect_right(neg_cum, r)
                    if q >= n_patterns:
                        q = n_patterns - 1
                    if _in_sorted(ent_indices, row_lo, row_hi, q):
                        continue
                    duplicate = False
                    for z in range(n_drawn):
                        if drawn[z] == q:
                            duplicate = True
                            break
                    if duplicate:
                        continue
                    drawn[n_drawn] = q
                    n_drawn += 1
                    nb = n_entities + q
                    s = _dot_rows(vectors, e, nb)
                    _pair_step(vectors, e, nb, -lr * _sigmoid(s), ua, ub)

        for c in range(n_cats):
            lo = pool_indptr[c]
            hi = pool_indptr[c + 1]
            for i in range(lo, hi - 1):
                a = pool_items[i]
                for t in range(i + 1, hi):
                    b2 = pool_items[t]
                    s = _dot_rows(vectors, a, b2)
                    _pair_step(vectors, a, b2, lr * _sigmoid(-s), ua, ub)

        for c1 in range(n_cats):
            for c2 in range(n_cats):
                if c1 == c2:
                    continue
                for i in range(pool_indptr[c1], pool_indptr[c1 + 1]):
                    a = pool_items[i]
                    for t in range(pool_indptr[c2], pool_indptr[c2 + 1]):
                        b2 = pool_items[t]
                        s = _dot_rows(vectors, a, b2)
                        _pair_step(vectors, a, b2, -lr * _sigmoid(s), ua, ub)

        for i in range(vectors.shape[0]):
            for j in range(d):
                if not np.isfinite(vectors[i, j]):
                    return epoch
    return -1


@njit(cache=True)
def _levenshtein(a, length_a, b, length_b, prev_row, curr_row):
    if length_a == 0:
        return length_b
    if length_b == 0:
        return length_a
    for j in range(length_b + 1):
        prev_row[j] = j
    for i in range(1, length_a + 1):
        curr_row[0] = i
        ca = a[i - 1]
        for j in range(1, length_b + 1):
            cost = 0 if ca == b[j - 1] else 1
            best = prev_row[j - 1] + cost
            if prev_row[j] + 1 < best:
                best = prev_row[j] + 1
            if curr_row[j - 1] + 1 < best:
                best = curr_row[j - 1] + 1
            curr_row[j] = best
        for j in range(length_b + 1):
            prev_row[j] = curr_row[j]
    return curr_row[length_b]


@njit(cache=True)
def edit_distance_matrix(cand_codes, cand_lengths, pool_codes, pool_lengths):
    """Pairwise Levenshtein distances normalized by max string length.

    Inputs are padded character-code matrices.  Identical empty strings get
    distance 0.
    """
    n_cand = cand_codes.shape[0]
    n_pool = pool_codes.shape[0]
    out = np.empty((n_cand, n_pool))
    max_len = pool_codes.shape[1]
    if cand_codes.shape[1] > max_len:
        max_len = cand_codes.shape[1]
    prev_row = np.empty(max_len + 1, dtype=np.int64)
    curr_row = np.empty(max_len + 1, dtype=np.int64)
    for i in range(n_cand):
        la = cand_lengths[i]
        for t in range(n_pool):
            lb = pool_lengths[t]
            dist = _levenshtein(cand_codes[i], la, pool_codes[t], lb, prev_row, curr_row)
            denom = la if la > lb else lb
            out[i, t] = dist / denom if denom > 0 else 0.0
    return out


def encode_strings(strings: list[str]) -> tuple[np.ndarray, np.ndarray]:
    """Pad strings into an int32 code-point matrix plus a length vector."""
    lengths = np.array([len(s) for s in strings], dtype=np.int64)
    width = int(lengths.max()) if len(strings) else 0
    codes = np.zeros((len(strings), max(width, 1)), dtype=np.int32)
    for i, s in enumerate(strings):
        for j, ch in enumerate(s):
            codes[i, j] = ord(ch)
    return codes, lengths
