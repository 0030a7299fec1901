"""Compiled kernels: counter-based randomness, tape construction, event sweep.

All randomness is counter-based so that every draw is a pure function of
(master seed, site, draw index).  A Philox-4x32-10 block keys each site
stream; draws inside a stream come from the splitmix64 finalizer applied to
golden-ratio-spaced counters.  Nothing here keeps generator state, which is
what makes shared-tape coupling and window extension exact.
"""

import math

import numpy as np
from numba import njit

U64 = np.uint64
I64 = np.int64

_M32 = U64(0xFFFFFFFF)
_PHILOX_M0 = U64(0xD2511F53)
_PHILOX_M1 = U64(0xCD9E8D57)
_PHILOX_W0 = U64(0x9E3779B9)
_PHILOX_W1 = U64(0xBB67AE85)

_SM_GAMMA = U64(0x9E3779B97F4A7C15)
_SM_M1 = U64(0xBF58476D1CE4E5B9)
_SM_M2 = U64(0x94D049BB133111EB)

_TWO_NEG53 = 2.0 ** -53

# Domain tags keep site streams, replica-seed derivation and count draws
# from ever sharing a Philox counter block.
TAG_SITE = U64(0x5349544553)      # "SITES"
TAG_SEED = U64(0x5345454453)      # "SEEDS"

# Counter offset separating the Poisson-count draws of a site stream from
# its ring-time draws (ring times use counters 1..K, counts use these).
_CTR_COUNTS = U64(1) << U64(62)

# Sweep status codes.
SWEEP_OK = 0
SWEEP_TRUNCATED = 1

ABSORBED_POS = np.int64(1) << np.int64(62)


@njit(cache=True, inline="always")
def _philox_block(c0, c1, c2, c3, k0, k1):
    for _ in range(10):
        p0 = _PHILOX_M0 * c0
        p1 = _PHILOX_M1 * c2
        n0 = (p1 >> U64(32)) ^ c1 ^ k0
        n1 = p1 & _M32
        n2 = (p0 >> U64(32)) ^ c3 ^ k1
        n3 = p0 & _M32
        c0, c1, c2, c3 = n0, n1, n2, n3
        k0 = (k0 + _PHILOX_W0) & _M32
        k1 = (k1 + _PHILOX_W1) & _M32
    return c0, c1, c2, c3


@njit(cache=True)
def _keyed_u64(seed, word, tag):
    """Philox output word 0|1 for counter (word, tag) under key `seed`."""
    k0 = seed & _M32
    k1 = (seed >> U64(32)) & _M32
    c0 = word & _M32
    c1 = (word >> U64(32)) & _M32
    c2 = tag & _M32
    c3 = (tag >> U64(32)) & _M32
    r0, r1, r2, r3 = _philox_block(c0, c1, c2, c3, k0, k1)
    return (r0 << U64(32)) | r1


@njit(cache=True, inline="always")
def _site_key(seed, site):
    return _keyed_u64(seed, U64(site), TAG_SITE)


@njit(cache=True, inline="always")
def _u01(key, ctr):
    """Uniform in (0, 1): splitmix64 finalizer at counter `ctr` of a stream."""
    z = key + (ctr + U64(1)) * _SM_GAMMA
    z = (z ^ (z >> U64(30))) * _SM_M1
    z = (z ^ (z >> U64(27))) * _SM_M2
    z = z ^ (z >> U64(31))
    return (np.float64(z >> U64(11)) + 0.5) * _TWO_NEG53


@njit(cache=True)
def _poisson_count(key, lam):
    """Exact Poisson(lam) draw from the count range of a site stream.

    Inversion by uniform products below lam=10, Hormann's PTRS rejection
    above; both consume counters starting at _CTR_COUNTS.
    """
    if lam <= 0.0:
        return I64(0)
    ctr = _CTR_COUNTS
    if lam < 10.0:
        target = math.exp(-lam)
        prod = 1.0
        k = I64(-1)
        while prod > target:
            prod *= _u01(key, ctr)
            ctr += U64(1)
            k += 1
        return k
    slam = math.sqrt(lam)
    loglam = math.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    inv_alpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    while True:
        u = _u01(key, ctr) - 0.5
        v = _u01(key, ctr + U64(1))
        ctr += U64(2)
        us = 0.5 - abs(u)
        k = I64(math.floor((2.0 * a / us + b) * u + lam + 0.43))
        if us >= 0.07 and v <= vr:
            return k
        if k < 0 or (us < 0.013 and v > us):
            continue
        if (math.log(v * inv_alpha / (a / (us * us) + b))
                <= k * loglam - lam - math.lgamma(k + 1.0)):
            return k


@njit(cache=True)
def _site_counts(seed, left, right, horizon, keys, counts):
    for i in range(right - left + 1):
        key = _site_key(seed, I64(left + i))
        keys[i] = key
        counts[i] = _poisson_count(key, horizon)


@njit(cache=True)
def _fill_site_times(key, n, horizon, out, start):
    for i in range(n):
        out[start + i] = _u01(key, U64(i)) * horizon


@njit(cache=True)
def _insertion_block(out_t, out_s, lo, hi):
    for i in range(lo + 1, hi):
        t = out_t[i]
        s = out_s[i]
        j = i - 1
        while j >= lo and (out_t[j] > t or (out_t[j] == t and out_s[j] > s)):
            out_t[j + 1] = out_t[j]
            out_s[j + 1] = out_s[j]
            j -= 1
        out_t[j + 1] = t
        out_s[j + 1] = s


@njit(cache=True)
def _sort_events(times, sites, horizon, scratch_t, scratch_s):
    """Two-level radix sort by time, site-ascending tie-break, exact-duplicate
    drop.  Coarse pass keeps the scatter cache-friendly; each coarse block is
    then finely bucketed and insertion-sorted in cache.

    Returns the deduplicated event count; sorted data is written back into
    the input arrays.  scratch arrays must be at least as long as the input.
    """
    n = times.shape[0]
    if n == 0:
        return 0
    k1 = n // 16384 + 1
    scale1 = k1 / horizon
    counts = np.zeros(k1 + 1, np.int64)
    for i in range(n):
        b = I64(times[i] * scale1)
        if b >= k1:
            b = k1 - 1
        counts[b + 1] += 1
    for b in range(k1):
        counts[b + 1] += counts[b]
    out_t = scratch_t[:n]
    out_s = scratch_s[:n]
    cursor = counts[:k1].copy()
    for i in range(n):
        b = I64(times[i] * scale1)
        if b >= k1:
            b = k1 - 1
        j = cursor[b]
        out_t[j] = times[i]
        out_s[j] = sites[i]
        cursor[b] += 1
    # refine each coarse block in cache, writing back into times/sites
    max_blk = 0
    for b in range(k1):
        w = counts[b + 1] - counts[b]
        if w > max_blk:
            max_blk = w
    nf_cap = max_blk // 6 + 2
    fine = np.empty(nf_cap, np.int64)
    for b in range(k1):
        lo = counts[b]
        hi = counts[b + 1]
        w = hi - lo
        if w <= 0:
            continue
        if w <= 32:
            _insertion_block(out_t, out_s, lo, hi)
            continue
        t_lo = horizon * b / k1
        t_hi = horizon * (b + 1) / k1
        nf = w // 6 + 1
        scale2 = nf / (t_hi - t_lo)
        fine[:nf + 1] = 0
        for i in range(lo, hi):
            f = I64((out_t[i] - t_lo) * scale2)
            if f >= nf:
                f = nf - 1
            elif f < 0:
                f = 0
            fine[f + 1] += 1
        for f in range(nf):
            fine[f + 1] += fine[f]
        cur = fine[:nf].copy()
        for i in range(lo, hi):
            f = I64((out_t[i] - t_lo) * scale2)
            if f >= nf:
                f = nf - 1
            elif f < 0:
                f = 0
            j = lo + cur[f]
            times[j] = out_t[i]
            sites[j] = out_s[i]
            cur[f] += 1
        for f in range(nf):
            _insertion_block(times, sites, lo + fine[f], lo + fine[f + 1])
        for i in range(lo, hi):
            out_t[i] = times[i]
            out_s[i] = sites[i]
    m = 0
    for i in range(n):
        if i > 0 and out_t[i] == out_t[i - 1] and out_s[i] == out_s[i - 1]:
            continue
        times[m] = out_t[i]
        sites[m] = out_s[i]
        m += 1
    return m


@njit(cache=True)
def _fill_tape(keys, counts, left, horizon, times, sites, scratch_t, scratch_s):
    nsites = counts.shape[0]
    pos = I64(0)
    for i in range(nsites):
        k = counts[i]
        _fill_site_times(keys[i], k, horizon, times, pos)
        for j in range(k):
            sites[pos + j] = np.int32(left + i)
        pos += k
    return _sort_events(times[:pos], sites[:pos], horizon, scratch_t, scratch_s)


@njit(cache=True)
def _sweep(times, sites, i0, i1, left, right, pos, occ, absorb_right,
           record_log, log_t, log_lab, record_moves, mv_t, mv_lab):
    """Time-ordered pass over tape events against one occupancy state.

    A ring at site j moves the particle there one step right when j+1 is
    free, else logs a suppression (time, particle index).  Particles moving
    into the two-site guard band at the right edge either abort the sweep
    (status SWEEP_TRUNCATED) or, with absorb_right, leave the system.

    Returns (status, n_log, n_moves, n_absorbed).
    """
    nlog = I64(0)
    nmv = I64(0)
    nabs = I64(0)
    guard = right - 1
    for e in range(i0, i1):
        j = I64(sites[e])
        idx = occ[j - left]
        if idx < 0:
            continue
        if j + 1 > right:
            return SWEEP_TRUNCATED, nlog, nmv, nabs
        tgt = occ[j + 1 - left]
        if tgt < 0:
            if j + 1 >= guard:
                if absorb_right:
                    occ[j - left] = -1
                    pos[idx] = ABSORBED_POS
                    nabs += 1
                    continue
                return SWEEP_TRUNCATED, nlog, nmv, nabs
            occ[j - left] = -1
            occ[j + 1 - left] = idx
            pos[idx] = j + 1
            if record_moves:
                mv_t[nmv] = times[e]
                mv_lab[nmv] = np.int32(idx)
                nmv += 1
        else:
            if record_log:
                log_t[nlog] = times[e]
                log_lab[nlog] = np.int32(idx)
                nlog += 1
    return SWEEP_OK, nlog, nmv, nabs


@njit(cache=True)
def _reconstruct(log_t, log_lab, start_label, min_label):
    """Backwards label walk: scan suppressions in decreasing time; when the
    current particle's jump was the one suppressed, step down to its blocker.

    Returns (break_times, break_labels, final_label) with times decreasing;
    break k happened at break_times[k] while the walk was at break_labels[k]
    (the walk continues at break_labels[k] - 1 below that time).
    """
    n_entries = log_t.shape[0]
    cap = start_label - min_label + 1
    if cap < 1:
        cap = 1
    if cap > n_entries:
        cap = n_entries + 1
    bt = np.empty(cap, np.float64)
    bl = np.empty(cap, np.int64)
    cur = start_label
    m = 0
    for e in range(n_entries - 1, -1, -1):
        if log_lab[e] == cur:
            bt[m] = log_t[e]
            bl[m] = cur
            m += 1
            cur -= 1
            if cur < min_label:
                break
    return bt[:m].copy(), bl[:m].copy(), cur


@njit(cache=True)
def _position_trace(mv_t, mv_lab, log_t, log_lab, start_label, t_end, x_end):
    """Walk moves and suppressions backwards from (start_label, t_end, x_end).

    Emits the piecewise-constant trajectory of the backwards walk as arrays
    (u, label, x) in decreasing u: entry (u_k, l_k, x_k) is the state just
    below u_k, with the leading entry carrying the terminal state at t_end.
    A move of the current particle lowers x by one (looking back); a
    suppression of the current particle hands the walk to the blocker, one
    site to the right.
    """
    n_mv = mv_t.shape[0]
    n_log = log_t.shape[0]
    cap = n_mv + n_log + 2
    out_u = np.empty(cap, np.float64)
    out_l = np.empty(cap, np.int64)
    out_x = np.empty(cap, np.int64)
    cur = start_label
    x = x_end
    out_u[0] = t_end
    out_l[0] = cur
    out_x[0] = x
    m = 1
    im = n_mv - 1
    il = n_log - 1
    while im >= 0 or il >= 0:
        tm = mv_t[im] if im >= 0 else -1.0
        tl = log_t[il] if il >= 0 else -1.0
        if tm >= tl:
            if tm > t_end:
                im -= 1
                continue
            if mv_lab[im] == cur:
                x -= 1
                out_u[m] = tm
                out_l[m] = cur
                out_x[m] = x
                m += 1
            im -= 1
        else:
            if tl > t_end:
                il -= 1
                continue
            if log_lab[il] == cur:
                cur -= 1
                x += 1
                out_u[m] = tl
                out_l[m] = cur
                out_x[m] = x
                m += 1
            il -= 1
    return out_u[:m].copy(), out_l[:m].copy(), out_x[:m].copy()
