"""Hot inner loops, each with a numba and a pure-numpy implementation.

The public names (:func:`subset_extremes`, :func:`toeplitz_hash`) dispatch to
the numba versions unless ``PLSLAB_DISABLE_NUMBA`` is set; both variants stay
importable under ``*_numba`` / ``*_numpy`` for tests and benchmarks.
"""

import numpy as np

from plslab._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# 0/1 subset DP over integer costs
#
# For every integer cost v in [0, size) the DP keeps the largest and the
# smallest true weight over all subsets whose integer costs sum to v, and the
# bit mask of one subset attaining each.  Items beyond bit 63 are rejected
# by the caller.


@njit
def _subset_extremes_numba(costs, weights, size):
    hi = np.full(size, -np.inf)
    lo = np.full(size, np.inf)
    hi_mask = np.zeros(size, dtype=np.uint64)
    lo_mask = np.zeros(size, dtype=np.uint64)
    hi[0] = 0.0
    lo[0] = 0.0
    for j in range(costs.shape[0]):
        c = costs[j]
        w = weights[j]
        bit = np.uint64(1) << np.uint64(j)
        if c >= size:
            continue
        if c == 0:
            for v in range(size):
                if hi[v] > -np.inf:
                    hi[v] += w
                    hi_mask[v] |= bit
            continue
        for v in range(size - 1, c - 1, -1):
            src = v - c
            if hi[src] > -np.inf:
                cand = hi[src] + w
                if cand > hi[v]:
                    hi[v] = cand
                    hi_mask[v] = hi_mask[src] | bit
            if lo[src] < np.inf:
                cand = lo[src] + w
                if cand < lo[v]:
                    lo[v] = cand
                    lo_mask[v] = lo_mask[src] | bit
    return hi, hi_mask, lo, lo_mask


def _subset_extremes_numpy(costs, weights, size):
    hi = np.full(size, -np.inf)
    lo = np.full(size, np.inf)
    hi_mask = np.zeros(size, dtype=np.uint64)
    lo_mask = np.zeros(size, dtype=np.uint64)
    hi[0] = 0.0
    lo[0] = 0.0
    for j, (c, w) in enumerate(zip(np.asarray(costs), np.asarray(weights))):
        c = int(c)
        bit = np.uint64(1) << np.uint64(j)
        if c >= size:
            continue
        if c == 0:
            live = hi > -np.inf
            hi[live] += w
            hi_mask[live] |= bit
            continue
        cand = hi[: size - c] + w
        better = cand > hi[c:]
        idx = np.nonzero(better)[0]
        new_mask = hi_mask[: size - c][idx] | bit
        hi[c:][idx] = cand[idx]
        hi_mask[c:][idx] = new_mask

        cand = lo[: size - c] + w
        better = cand < lo[c:]
        idx = np.nonzero(better)[0]
        new_mask = lo_mask[: size - c][idx] | bit
        lo[c:][idx] = cand[idx]
        lo_mask[c:][idx] = new_mask
    return hi, hi_mask, lo, lo_mask


def subset_extremes(costs, weights, size):
    """Per-cost extreme subset weights.

    Parameters
    ----------
    costs : int64 array, shape (N,)
        Non-negative integer cost of each item, N <= 64.
    weights : float64 array, shape (N,)
        True weight of each item.
    size : int
        Table length; subsets costing ``size`` or more are not tracked.

    Returns
    -------
    hi, hi_mask, lo, lo_mask : ndarray
        ``hi[v]`` is the largest total weight of a subset with cost ``v``
        (``-inf`` when unreachable) and ``hi_mask[v]`` a subset achieving it;
        ``lo``/``lo_mask`` likewise for the smallest weight (``+inf``).
    """
    costs = np.ascontiguousarray(costs, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if costs.shape[0] > 64:
        raise ValueError("subset DP tracks at most 64 items")
    if USE_NUMBA:
        return _subset_extremes_numba(costs, weights, int(size))
    return _subset_extremes_numpy(costs, weights, int(size))


subset_extremes_numba = _subset_extremes_numba
subset_extremes_numpy = _subset_extremes_numpy


# ---------------------------------------------------------------------------
# Toeplitz universal hashing over GF(2)
#
# y[i] = sum_j seed[i - j + m - 1] * x[j] mod 2, with len(seed) = m + t - 1.


@njit
def _toeplitz_hash_numba(bits, seed, out_len):
    m = bits.shape[0]
    out = np.zeros(out_len, dtype=np.uint8)
    for i in range(out_len):
        acc = 0
        for j in range(m):
            acc ^= seed[i - j + m - 1] & bits[j]
        out[i] = acc
    return out


def _toeplitz_hash_numpy(bits, seed, out_len):
    m = bits.shape[0]
    full = np.convolve(seed.astype(np.int64), bits.astype(np.int64))
    return (full[m - 1: m - 1 + out_len] & 1).astype(np.uint8)


def toeplitz_hash(bits, seed, out_len):
    """Multiply ``bits`` by the Toeplitz matrix generated by ``seed`` (GF(2))."""
    bits = np.ascontiguousarray(bits, dtype=np.uint8)
    seed = np.ascontiguousarray(seed, dtype=np.uint8)
    if seed.shape[0] != bits.shape[0] + out_len - 1:
        raise ValueError("seed length must be len(bits) + out_len - 1")
    if USE_NUMBA:
        return _toeplitz_hash_numba(bits, seed, int(out_len))
    return _toeplitz_hash_numpy(bits, seed, int(out_len))


toeplitz_hash_numba = _toeplitz_hash_numba
toeplitz_hash_numpy = _toeplitz_hash_numpy
