"""Exhaustive small-n verification: exact measures, transition matrices,
the labeling/edge-update operator decomposition, and spectral quantities.

Edge configurations are bitmasks over the lexicographic pair list; the joint
space indexes (sigma, A) as sigma * 2^m + A with sigma a bitmask of active
vertices. Everything is dense: the joint space at n = 4 has 2^4 * 2^6 = 1024
states, so exactness is cheap.
"""

import math
from functools import lru_cache

import numpy as np

from .core import EdgeConfig

MAX_N_ENUM = 5  # 2^10 edge states
MAX_N_JOINT = 4  # 2^4 * 2^6 joint states


class StateIndex:
    """Bijective ordering of edge subsets (and joint states) at size n."""

    def __init__(self, n):
        if n < 2:
            raise ValueError("need at least two vertices")
        self.n = int(n)
        self.pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        self.m = len(self.pairs)
        self.num_edge = 1 << self.m
        self.num_sigma = 1 << self.n
        self.num_joint = self.num_sigma * self.num_edge

    def config(self, a):
        return EdgeConfig(self.n, [self.pairs[k] for k in range(self.m) if a >> k & 1])

    def index(self, cfg):
        a = 0
        for k, e in enumerate(self.pairs):
            if e in cfg.edges:
                a |= 1 << k
        return a

    def joint(self, sigma, a):
        return sigma * self.num_edge + a

    def split_joint(self, j):
        return j // self.num_edge, j % self.num_edge

    def components(self, a):
        """Vertex bitmasks of the components of edge subset a."""
        return _components(self.n, a)


@lru_cache(maxsize=None)
def _components(n, a):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    k = 0
    for u in range(n):
        for v in range(u + 1, n):
            if a >> k & 1:
                ru, rv = find(u), find(v)
                if ru != rv:
                    parent[ru] = rv
            k += 1
    comps = {}
    for v in range(n):
        comps.setdefault(find(v), 0)
        comps[find(v)] |= 1 << v
    return tuple(sorted(comps.values()))


def _check_enum_size(n, limit):
    if n > limit:
        raise ValueError("exact enumeration supports n <= %d, got n = %d" % (limit, n))


def exact_mu(n, params):
    """Normalized random-cluster measure over all 2^{C(n,2)} edge subsets."""
    _check_enum_size(n, MAX_N_ENUM)
    idx = StateIndex(n)
    p, q = params.p, params.q
    logw = np.empty(idx.num_edge)
    for a in range(idx.num_edge):
        na = bin(a).count("1")
        c = len(idx.components(a))
        logw[a] = na * math.log(p) + (idx.m - na) * math.log1p(-p) + c * math.log(q)
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def _subset_bits(positions, pattern):
    mask = 0
    for i, k in enumerate(positions):
        if pattern >> i & 1:
            mask |= 1 << k
    return mask


def build_P_cm(n, params):
    """Exact CM transition matrix by enumerating activation subsets and all
    percolation outcomes on the active pair set."""
    _check_enum_size(n, MAX_N_JOINT)
    idx = StateIndex(n)
    p, q = params.p, params.q
    P = np.zeros((idx.num_edge, idx.num_edge))
    for a in range(idx.num_edge):
        comps = idx.components(a)
        c = len(comps)
        for act in range(1 << c):
            nact = bin(act).count("1")
            w_act = (1.0 / q) ** nact * (1.0 - 1.0 / q) ** (c - nact)
            active = 0
            for i in range(c):
                if act >> i & 1:
                    active |= comps[i]
            live = [
                k
                for k, (u, v) in enumerate(idx.pairs)
                if active >> u & 1 and active >> v & 1
            ]
            live_mask = _subset_bits(live, (1 << len(live)) - 1)
            base = a & ~live_mask
            for pat in range(1 << len(live)):
                ne = bin(pat).count("1")
                w = w_act * p**ne * (1.0 - p) ** (len(live) - ne)
                P[a, base | _subset_bits(live, pat)] += w
    return P


def _connected_in(n, a, u, v, idx):
    for comp in idx.components(a):
        if comp >> u & 1:
            return bool(comp >> v & 1)
    return False


def build_P_hb(n, params):
    """Exact heat-bath matrix: one uniform pair resampled from its
    conditional law (cut edges join at p/(p+q(1-p)), cycle edges at p)."""
    _check_enum_size(n, MAX_N_ENUM)
    idx = StateIndex(n)
    p, q = params.p, params.q
    r_cut = p / (p + q * (1.0 - p))
    P = np.zeros((idx.num_edge, idx.num_edge))
    for a in range(idx.num_edge):
        for k, (u, v) in enumerate(idx.pairs):
            bit = 1 << k
            r = p if _connected_in(n, a & ~bit, u, v, idx) else r_cut
            P[a, a | bit] += r / idx.m
            P[a, a & ~bit] += (1.0 - r) / idx.m
    return P


def build_P_su(n, params):
    """Exact Single-Update matrix, built directly from its definition
    (independently of the operator decomposition)."""
    _check_enum_size(n, MAX_N_ENUM)
    idx = StateIndex(n)
    p, q = params.p, params.q
    P = np.zeros((idx.num_edge, idx.num_edge))
    for a in range(idx.num_edge):
        comps = idx.components(a)
        c = len(comps)
        for act in range(1 << c):
            nact = bin(act).count("1")
            w_act = (1.0 / q) ** nact * (1.0 - 1.0 / q) ** (c - nact)
            active = 0
            for i in range(c):
                if act >> i & 1:
                    active |= comps[i]
            for k, (u, v) in enumerate(idx.pairs):
                bit = 1 << k
                if active >> u & 1 and active >> v & 1:
                    P[a, a | bit] += w_act * p / idx.m
                    P[a, a & ~bit] += w_act * (1.0 - p) / idx.m
                else:
                    P[a, a] += w_act / idx.m
    return P


def _sigma_consistent(idx, a):
    """All (sigma, weight-exponent) pairs consistent with edge subset a:
    sigma constant on components, weight (q-1)^{#inactive comps} q^{-c}."""
    comps = idx.components(a)
    c = len(comps)
    out = []
    for act in range(1 << c):
        sigma = 0
        for i in range(c):
            if act >> i & 1:
                sigma |= comps[i]
        out.append((sigma, c - bin(act).count("1"), c))
    return out


def build_M(n, params):
    """Labeling operator: M(B,(sigma,A)) = 1(A=B) 1(A subseteq E(sigma))
    (q-1)^{f(sigma,A)} q^{-c(A)}, f = number of inactive components."""
    _check_enum_size(n, MAX_N_JOINT)
    idx = StateIndex(n)
    q = params.q
    M = np.zeros((idx.num_edge, idx.num_joint))
    for a in range(idx.num_edge):
        for sigma, f_in, c in _sigma_consistent(idx, a):
            M[a, idx.joint(sigma, a)] = (q - 1.0) ** f_in / q**c
    return M


def adjoint_M(n, params):
    """Label-dropping operator M*((sigma,A),B) = 1(A=B)."""
    _check_enum_size(n, MAX_N_JOINT)
    idx = StateIndex(n)
    Ms = np.zeros((idx.num_joint, idx.num_edge))
    for sigma in range(idx.num_sigma):
        for a in range(idx.num_edge):
            Ms[idx.joint(sigma, a), a] = 1.0
    return Ms


def build_Te(e, n, params):
    """Single-edge update operator on the joint space.

    With both endpoints active the edge is resampled at rate p; with any
    endpoint inactive the joint state is left alone. Labels never change.
    """
    _check_enum_size(n, MAX_N_JOINT)
    idx = StateIndex(n)
    p = params.p
    u, v = idx.pairs[e]
    bit = 1 << e
    T = np.zeros((idx.num_joint, idx.num_joint))
    for sigma in range(idx.num_sigma):
        both = sigma >> u & 1 and sigma >> v & 1
        for a in range(idx.num_edge):
            j = idx.joint(sigma, a)
            if both:
                T[j, idx.joint(sigma, a | bit)] += p
                T[j, idx.joint(sigma, a & ~bit)] += 1.0 - p
            else:
                T[j, j] = 1.0
    return T


def exact_nu(n, params):
    """Edwards-Sokal joint measure: nu(sigma,A) proportional to
    (p/(1-p))^{|A|} (q-1)^{f(sigma,A)} 1(A subseteq E(sigma))."""
    _check_enum_size(n, MAX_N_JOINT)
    idx = StateIndex(n)
    p, q = params.p, params.q
    w = np.zeros(idx.num_joint)
    for a in range(idx.num_edge):
        na = bin(a).count("1")
        for sigma, f_in, _ in _sigma_consistent(idx, a):
            w[idx.joint(sigma, a)] = (p / (1.0 - p)) ** na * (q - 1.0) ** f_in
    return w / w.sum()


def verify_decomposition(n, params):
    """Max-abs entrywise residual of P_CM minus M (prod_e T_e) M*."""
    _check_enum_size(n, MAX_N_JOINT)
    idx = StateIndex(n)
    prod = np.eye(idx.num_joint)
    for e in range(idx.m):
        prod = prod @ build_Te(e, n, params)
    lhs = build_P_cm(n, params)
    rhs = build_M(n, params) @ prod @ adjoint_M(n, params)
    return float(np.max(np.abs(lhs - rhs)))


def build_P_su_decomposed(n, params):
    """M ((1/m) sum_e T_e) M*, for comparison against build_P_su."""
    _check_enum_size(n, MAX_N_JOINT)
    idx = StateIndex(n)
    avg = np.zeros((idx.num_joint, idx.num_joint))
    for e in range(idx.m):
        avg += build_Te(e, n, params)
    avg /= idx.m
    return build_M(n, params) @ avg @ adjoint_M(n, params)


def reversibility_residual(P, mu):
    """Max-abs residual of detailed balance mu(x)P(x,y) = mu(y)P(y,x)."""
    F = mu[:, None] * P
    return float(np.max(np.abs(F - F.T)))


def spectral_gap(P, mu, tol=1e-10):
    """1 - max(|lambda_2|, |lambda_min|) of a mu-reversible chain.

    Reversibility is checked first; the spectrum is then taken from the
    symmetrization D^{1/2} P D^{-1/2}, which shares it.
    """
    mu = np.asarray(mu, dtype=float)
    if reversibility_residual(P, mu) > tol:
        raise ValueError("matrix is not reversible w.r.t. the given measure")
    d = np.sqrt(mu)
    S = (d[:, None] * P) / d[None, :]
    S = 0.5 * (S + S.T)
    ev = np.linalg.eigvalsh(S)
    return float(1.0 - max(abs(ev[0]), abs(ev[-2])))


def mixing_bounds(P, mu, tol=1e-10):
    """Standard gap-to-mixing sandwich: (1/gap - 1, log(2e/pi_min)/gap)."""
    gap = spectral_gap(P, mu, tol)
    if gap <= 0.0:
        return float("inf"), float("inf")
    pi_min = float(np.min(mu))
    return 1.0 / gap - 1.0, math.log(2.0 * math.e / pi_min) / gap


def sandwich_alpha(params):
    """alpha = (q(1-p)+p)/q^2 from the SU-vs-HB gap sandwich."""
    p, q = params.p, params.q
    return (q * (1.0 - p) + p) / q**2
