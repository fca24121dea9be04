"""Compiled inner loops for the sampler and the per-sample cycle statistics.

One chain step consumes exactly 2n uniforms from its stream: entries
0..n-1 drive the cutoff draws (place p uses entry p-1, turned into an
exponential by inversion), and entry n + (n - k) drives the uniform
choice for symbol k.  The Python-level API in `sampler` consumes streams
in the same order, so the two paths produce identical output from
identical generator state.

Placement keeps the eligible places in a Fenwick tree of 0/1 weights.
A place p becomes eligible when the symbol counter k drops to floor(b_p)
(capped at n), so activations are bucketed once per step instead of
re-scanning or sorting.
"""

import numpy as np
from numba import njit

__all__ = [
    "place_from_bounds",
    "chain_block",
    "one_step_batch",
    "batch_cycle_stats",
    "batch_top_lengths",
]


@njit(cache=True, nogil=True)
def _place(b, u_place, y, sigma):
    """Fill y and sigma by placing symbols n..1 uniformly among eligible places.

    b: float64[n] cutoffs with b[p-1] >= p; u_place: float64[n] uniforms,
    u_place[n - k] used for symbol k; y[k-1] = place of symbol k (one-based);
    sigma[p-1] = symbol at place p.
    """
    n = b.shape[0]
    bucket_head = np.zeros(n + 1, dtype=np.int64)
    bucket_next = np.zeros(n + 1, dtype=np.int64)
    fen = np.zeros(n + 1, dtype=np.int64)
    for p in range(1, n + 1):
        kp = int(b[p - 1])
        if kp > n:
            kp = n
        bucket_next[p] = bucket_head[kp]
        bucket_head[kp] = p
    top = 1
    while top * 2 <= n:
        top *= 2
    cnt = 0
    for k in range(n, 0, -1):
        p = bucket_head[k]
        while p != 0:
            j = p
            while j <= n:
                fen[j] += 1
                j += j & (-j)
            cnt += 1
            p = bucket_next[p]
        r = int(u_place[n - k] * cnt)
        if r >= cnt:
            r = cnt - 1
        idx = 0
        rem = r + 1
        half = top
        while half > 0:
            nxt = idx + half
            if nxt <= n and fen[nxt] < rem:
                idx = nxt
                rem -= fen[idx]
            half >>= 1
        pl = idx + 1
        j = pl
        while j <= n:
            fen[j] -= 1
            j += j & (-j)
        cnt -= 1
        y[k - 1] = pl
        sigma[pl - 1] = k
    return


@njit(cache=True, nogil=True)
def place_from_bounds(b, u_place):
    """Placement pass returning (y, sigma); see _place for conventions."""
    n = b.shape[0]
    y = np.empty(n, dtype=np.int64)
    sigma = np.empty(n, dtype=np.int64)
    _place(b, u_place, y, sigma)
    return y, sigma


@njit(cache=True, nogil=True)
def _step(sigma, u_row, two_beta, b, y):
    """One in-place chain step from sigma, consuming u_row (length 2n)."""
    n = sigma.shape[0]
    for p in range(1, n + 1):
        m = p if p >= sigma[p - 1] else sigma[p - 1]
        b[p - 1] = m - np.log1p(-u_row[p - 1]) / two_beta
    _place(b, u_row[n:], y, sigma)
    return


@njit(cache=True, nogil=True)
def chain_block(sigma, u_block, two_beta, emit_steps, out):
    """Advance sigma through u_block.shape[0] steps, copying states into out.

    emit_steps: sorted int64 step offsets (within this block) to emit;
    out: int64[len(emit_steps), n].  sigma is modified in place.
    """
    n = sigma.shape[0]
    b = np.empty(n, dtype=np.float64)
    y = np.empty(n, dtype=np.int64)
    e = 0
    for t in range(u_block.shape[0]):
        _step(sigma, u_block[t], two_beta, b, y)
        if e < emit_steps.shape[0] and emit_steps[e] == t:
            out[e, :] = sigma
            e += 1
    return e


@njit(cache=True, nogil=True)
def one_step_batch(starts, u_batch, two_beta, out):
    """Apply one independent step to each row of starts (for stationarity tests)."""
    n = starts.shape[1]
    b = np.empty(n, dtype=np.float64)
    y = np.empty(n, dtype=np.int64)
    for i in range(starts.shape[0]):
        out[i, :] = starts[i, :]
        _step(out[i], u_batch[i], two_beta, b, y)
    return


@njit(cache=True, nogil=True)
def batch_cycle_stats(states, s):
    """Per-row cycle statistics for a matrix of one-based image rows.

    Returns (len_s, diam_s, l1, largest, sumsq): length and max-min extent
    of the cycle through place s, the L1 distance to the identity, the
    longest cycle length, and the sum of squared cycle lengths.
    """
    m, n = states.shape
    len_s = np.empty(m, dtype=np.int64)
    diam_s = np.empty(m, dtype=np.int64)
    l1 = np.empty(m, dtype=np.int64)
    largest = np.empty(m, dtype=np.int64)
    sumsq = np.empty(m, dtype=np.int64)
    visited = np.zeros(n + 1, dtype=np.uint8)
    for i in range(m):
        row = states[i]
        acc = 0
        for p in range(1, n + 1):
            d = row[p - 1] - p
            acc += d if d >= 0 else -d
            visited[p] = 0
        l1[i] = acc
        # cycle through s
        j = s
        ln = 0
        mn = s
        mx = s
        while True:
            j = row[j - 1]
            ln += 1
            if j < mn:
                mn = j
            if j > mx:
                mx = j
            if j == s:
                break
        len_s[i] = ln
        diam_s[i] = mx - mn
        big = 0
        sq = 0
        for start in range(1, n + 1):
            if visited[start]:
                continue
            j = start
            ln = 0
            while not visited[j]:
                visited[j] = 1
                ln += 1
                j = row[j - 1]
            sq += ln * ln
            if ln > big:
                big = ln
        largest[i] = big
        sumsq[i] = sq
    return len_s, diam_s, l1, largest, sumsq


@njit(cache=True, nogil=True)
def batch_top_lengths(states, k):
    """Per-row top-k cycle lengths in descending order, zero padded."""
    m, n = states.shape
    out = np.zeros((m, k), dtype=np.int64)
    visited = np.zeros(n + 1, dtype=np.uint8)
    lengths = np.empty(n, dtype=np.int64)
    for i in range(m):
        row = states[i]
        for p in range(1, n + 1):
            visited[p] = 0
        c = 0
        for start in range(1, n + 1):
            if visited[start]:
                continue
            j = start
            ln = 0
            while not visited[j]:
                visited[j] = 1
                ln += 1
                j = row[j - 1]
            lengths[c] = ln
            c += 1
        cyc = np.sort(lengths[:c])[::-1]
        top = k if k < c else c
        for t in range(top):
            out[i, t] = cyc[t]
    return out
