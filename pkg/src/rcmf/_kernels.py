"""Jitted kernels for the hot paths.

Randomness inside kernels comes from an explicit xoshiro256** state: a 4-word
uint64 array passed in and mutated in place, seeded by the caller from its
RngStream (see RngStream.kernel_state). Keeping the generator inline lets whole
trajectories run inside a single jitted call, which is what makes the large-n
experiments feasible on one core.

G(m,p) percolation uses Batagelj-Brandes geometric skip sampling over the
linear pair index, so the cost is O(m + edges examined), never O(m^2).
"""

import math

import numpy as np
from numba import njit

_U64_1 = np.uint64(1)
_TWO53_INV = 1.1102230246251565e-16  # 2^-53


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << k) | (x >> (np.uint64(64) - k))


@njit(cache=True, inline="always")
def _next_u64(s):
    # xoshiro256** next(); s is uint64[4], mutated in place
    result = _rotl(s[1] * np.uint64(5), np.uint64(7)) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], np.uint64(45))
    return result


@njit(cache=True, inline="always")
def _next_unit(s):
    # uniform on (0, 1]; never 0, so log() is safe
    return (np.float64(_next_u64(s) >> np.uint64(11)) + 1.0) * _TWO53_INV


@njit(cache=True, inline="always")
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True, inline="always")
def _union_sz(parent, csize, a, b):
    ra = _find(parent, a)
    rb = _find(parent, b)
    if ra != rb:
        if csize[ra] < csize[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        csize[ra] += csize[rb]


@njit(cache=True, inline="always")
def _pair_decode(k, m):
    # invert the lexicographic pair index: S(u) = u(2m-u-1)/2 <= k < S(u+1)
    a = 2.0 * m - 1.0
    u = np.int64((a - math.sqrt(a * a - 8.0 * np.float64(k))) / 2.0)
    if u < 0:
        u = 0
    while u > 0 and k < (u * (2 * m - u - 1)) // 2:
        u -= 1
    while k >= ((u + 1) * (2 * m - u - 2)) // 2:
        u += 1
    v = k - (u * (2 * m - u - 1)) // 2 + u + 1
    return u, v


@njit(cache=True, inline="always")
def _binom_skip(ntrials, prob, s):
    """Exact Binomial(ntrials, prob) draw in O(successes + 1)."""
    if prob <= 0.0 or ntrials <= 0:
        return 0
    if prob >= 1.0:
        return ntrials
    log1mp = math.log1p(-prob)
    count = 0
    i = np.int64(-1)
    while True:
        g = math.log(_next_unit(s)) / log1mp
        if g >= 1e18:
            break
        i += 1 + np.int64(g)
        if i >= ntrials:
            break
        count += 1
    return count


@njit(cache=True)
def _percolate(m, p, s, parent, csize):
    """Union-find over a skip-sampled G(m, p) on vertices 0..m-1."""
    for i in range(m):
        parent[i] = i
        csize[i] = 1
    if m < 2 or p <= 0.0:
        return
    if p >= 1.0:
        for i in range(1, m):
            _union_sz(parent, csize, 0, i)
        return
    total = (m * (m - 1)) // 2
    log1mp = math.log1p(-p)
    k = np.int64(-1)
    while True:
        g = math.log(_next_unit(s)) / log1mp
        if g >= 1e18:
            break
        k += 1 + np.int64(g)
        if k >= total:
            break
        u, v = _pair_decode(k, m)
        _union_sz(parent, csize, u, v)


@njit(cache=True)
def gnp_sizes(m, p, s):
    """Component sizes of G(m,p): (unsorted array of sizes >= 2, singleton count)."""
    parent = np.empty(m, dtype=np.int64)
    csize = np.empty(m, dtype=np.int64)
    _percolate(m, p, s, parent, csize)
    big = np.empty(m // 2 + 1, dtype=np.int64)
    w = 0
    singles = 0
    for i in range(m):
        if parent[i] == i:
            if csize[i] >= 2:
                big[w] = csize[i]
                w += 1
            else:
                singles += 1
    return big[:w].copy(), singles


@njit(cache=True)
def gnp_edges(m, p, s, eu, ev):
    """Sampled edge list of G(m,p) into eu/ev; returns count or -1 on overflow."""
    if m < 2 or p <= 0.0:
        return 0
    cap = eu.size
    w = 0
    if p >= 1.0:
        for u in range(m):
            for v in range(u + 1, m):
                if w >= cap:
                    return -1
                eu[w] = u
                ev[w] = v
                w += 1
        return w
    total = (m * (m - 1)) // 2
    log1mp = math.log1p(-p)
    k = np.int64(-1)
    while True:
        g = math.log(_next_unit(s)) / log1mp
        if g >= 1e18:
            break
        k += 1 + np.int64(g)
        if k >= total:
            break
        u, v = _pair_decode(k, m)
        if w >= cap:
            return -1
        eu[w] = u
        ev[w] = v
        w += 1
    return w


@njit(cache=True)
def component_sizes_arrays(n, eu, ev):
    """Component sizes of the graph (n vertices, given edges)."""
    parent = np.arange(n)
    csize = np.ones(n, dtype=np.int64)
    for k in range(eu.size):
        _union_sz(parent, csize, eu[k], ev[k])
    big = np.empty(n // 2 + 1, dtype=np.int64)
    w = 0
    singles = 0
    for i in range(n):
        if parent[i] == i:
            if csize[i] >= 2:
                big[w] = csize[i]
                w += 1
            else:
                singles += 1
    return big[:w].copy(), singles


@njit(cache=True)
def component_labels_arrays(n, eu, ev):
    """Per-vertex component label (the union-find root index)."""
    parent = np.arange(n)
    csize = np.ones(n, dtype=np.int64)
    for k in range(eu.size):
        _union_sz(parent, csize, eu[k], ev[k])
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        labels[i] = _find(parent, i)
    return labels


@njit(cache=True, inline="always")
def _l1_scan(big, nbig, nsing):
    if nbig == 0:
        return 1 if nsing > 0 else 0
    best = big[0]
    for i in range(1, nbig):
        if big[i] > best:
            best = big[i]
    return best


@njit(cache=True)
def cm_step_arrays(n, p, act_p, s, big, nbig, nsing, parent, csize):
    """One CM step on the packed state (big[:nbig], nsing), in place.

    big must have capacity >= n//2 + 1 and parent/csize capacity >= n.
    Returns (nbig', nsing', active_count, giant_active). The tracked giant is
    the first index attaining the maximum size (a singleton when nbig == 0).
    """
    gidx = np.int64(0)
    if nbig > 0:
        best = big[0]
        for i in range(1, nbig):
            if big[i] > best:
                best = big[i]
                gidx = i

    active = np.int64(0)
    giant_active = False
    w = np.int64(0)
    for i in range(nbig):
        if _next_unit(s) < act_p:
            active += big[i]
            if i == gidx:
                giant_active = True
        else:
            big[w] = big[i]
            w += 1
    k = _binom_skip(nsing, act_p, s)
    active += k
    nsing2 = nsing - k
    if nbig == 0:
        giant_active = k > 0

    if active >= 2:
        _percolate(active, p, s, parent, csize)
        for i in range(active):
            if parent[i] == i:
                if csize[i] >= 2:
                    big[w] = csize[i]
                    w += 1
                else:
                    nsing2 += 1
    else:
        nsing2 += active
    return w, nsing2, active, giant_active


@njit(cache=True)
def cm_step_giant_forced(n, p, act_p, s, big, nbig, nsing, parent, csize):
    """CM step conditioned on the giant being activated, by literal rejection:
    the whole activation phase is redrawn until the giant's coin comes up.

    Returns (nbig', nsing', active_count, attempts).
    """
    gidx = np.int64(0)
    best = big[0]
    for i in range(1, nbig):
        if big[i] > best:
            best = big[i]
            gidx = i

    mask = np.empty(nbig, dtype=np.uint8)
    attempts = 0
    k = 0
    while True:
        attempts += 1
        for i in range(nbig):
            mask[i] = 1 if _next_unit(s) < act_p else 0
        k = _binom_skip(nsing, act_p, s)
        if mask[gidx] == 1:
            break

    active = np.int64(k)
    nsing2 = nsing - k
    w = np.int64(0)
    for i in range(nbig):
        if mask[i] == 1:
            active += big[i]
        else:
            big[w] = big[i]
            w += 1
    if active >= 2:
        _percolate(active, p, s, parent, csize)
        for i in range(active):
            if parent[i] == i:
                if csize[i] >= 2:
                    big[w] = csize[i]
                    w += 1
                else:
                    nsing2 += 1
    else:
        nsing2 += active
    return w, nsing2, active, attempts


@njit(cache=True)
def cm_run_record_l1(n, p, act_p, s, big, nbig, nsing, parent, csize, t_max, out):
    """Run t_max CM steps, recording L1 into out[0..t_max] (out[0] = start)."""
    out[0] = _l1_scan(big, nbig, nsing)
    for t in range(1, t_max + 1):
        nbig, nsing, _, _ = cm_step_arrays(n, p, act_p, s, big, nbig, nsing, parent, csize)
        out[t] = _l1_scan(big, nbig, nsing)
    return nbig, nsing


@njit(cache=True)
def cm_escape_run(n, p, act_p, s, big, nbig, nsing, parent, csize, exit_lo, exit_hi, max_steps):
    """First step t at which L1/n leaves (exit_lo, exit_hi]; -1 if never."""
    th = _l1_scan(big, nbig, nsing) / n
    if th <= exit_lo or th > exit_hi:
        return 0
    for t in range(1, max_steps + 1):
        nbig, nsing, _, _ = cm_step_arrays(n, p, act_p, s, big, nbig, nsing, parent, csize)
        th = _l1_scan(big, nbig, nsing) / n
        if th <= exit_lo or th > exit_hi:
            return t
    return -1


@njit(cache=True)
def binomial_coupling_trials(m, r, y, s, xout, yout, succ):
    """Walk coupling of Bin(m, r) with y + Bin(m, r), xout.size trials.

    Coordinates are drawn pairwise-independently while the running difference
    D has not hit y, then identically; O(1) memory per trial.
    """
    for t in range(xout.size):
        x = 0
        y_sum = 0
        d = 0
        hit = y == 0
        for _ in range(m):
            if hit:
                b = 1 if _next_unit(s) < r else 0
                x += b
                y_sum += b
            else:
                xb = 1 if _next_unit(s) < r else 0
                yb = 1 if _next_unit(s) < r else 0
                x += xb
                y_sum += yb
                d += xb - yb
                if d == y:
                    hit = True
        xout[t] = x
        yout[t] = y_sum
        succ[t] = 1 if hit else 0
