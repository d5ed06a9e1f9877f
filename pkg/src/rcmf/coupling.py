"""Executable couplings: the binomial coupling (two constructions) and the
bijection-based identity coupling.

The binomial coupling pairs two Binomial(m, r) variables so that X - Y = y
with high probability. Two constructions are provided:

- "maximal": the overlap (quantile) coupling between the law of X and the
  law of Y + y; success probability 1 - d_TV(Bin(m,r), y + Bin(m,r)), the
  optimum over all couplings. This is the default.
- "walk": coordinates drawn pairwise-independently until the running
  difference D_k hits y, identically afterwards; success probability equals
  the chance that the lazy symmetric difference walk reaches y within the m
  coordinate draws (for r = 1/2: 2 P[B > m+y] + P[B = m+y], B ~ Bin(2m, 1/2)).

Both satisfy the same 1 - O(y/sqrt(m)) success bound; "maximal" attains it
with the best constant. On success X - Y = y exactly under either method.

The identity coupling evolves two CM chains with the same component-size
multiset through a vertex bijection B that maps components of one copy onto
equal-size components of the other. Matched components activate on shared
coins, vertices active in both copies become fixed points of B forever, and
the percolation phase reuses one set of edge coins through B, so the copies'
component structures stay identical and their labeled configurations agree
once every vertex is fixed and has been refreshed.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import EdgeConfig, component_labels
from .gnp import sample_gnp_edges

_MAX_TABLE_CACHE = {}


def _maximal_tables(m, r, y):
    """Sampling tables for the overlap coupling of Bin(m,r) vs y + Bin(m,r).

    Returns (ov, cdf_ov, cdf_ex_x, cdf_ex_y): the overlap mass (success
    probability) and inverse-CDF tables for the overlap measure and the two
    normalized excess measures (X in X-coordinates, Y in Y-coordinates).
    """
    key = (m, r, y)
    hit = _MAX_TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    ks = np.arange(m + 1)
    lg = np.array([math.lgamma(k + 1.0) for k in range(m + 1)])
    logpmf = lg[m] - lg - lg[::-1] + ks * math.log(r) + (m - ks) * math.log1p(-r)
    pmf = np.exp(logpmf)
    pmf /= pmf.sum()
    ov_mass = np.zeros(m + 1)
    if y <= m:
        ov_mass[y:] = np.minimum(pmf[y:], pmf[: m + 1 - y])
    ov = float(ov_mass.sum())
    ex_x = pmf - ov_mass
    ex_y = pmf.copy()
    if y <= m:
        ex_y[: m + 1 - y] -= ov_mass[y:]
    if ov > 1.0 - 1e-12:
        # overlap certain up to rounding; the excess masses are float dust
        out = (1.0, np.cumsum(ov_mass) / ov, None, None)
    else:
        out = (
            ov,
            np.cumsum(ov_mass) / ov if ov > 0.0 else None,
            np.cumsum(ex_x) / ex_x.sum(),
            np.cumsum(ex_y) / ex_y.sum(),
        )
    if len(_MAX_TABLE_CACHE) > 64:
        _MAX_TABLE_CACHE.clear()
    _MAX_TABLE_CACHE[key] = out
    return out


def _maximal_batch(m, r, y, trials, rng):
    ov, cdf_ov, cdf_ex_x, cdf_ex_y = _maximal_tables(m, r, y)
    succ = rng.random(trials) < ov
    xout = np.empty(trials, dtype=np.int64)
    yout = np.empty(trials, dtype=np.int64)
    ns = int(succ.sum())
    if ns:
        k = np.searchsorted(cdf_ov, rng.random(ns))
        xout[succ] = k
        yout[succ] = k - y
    nf = trials - ns
    if nf:
        xout[~succ] = np.searchsorted(cdf_ex_x, rng.random(nf))
        yout[~succ] = np.searchsorted(cdf_ex_y, rng.random(nf))
    return xout, yout, succ


def binomial_coupling_batch(m, r, y, trials, rng, method="maximal"):
    """Run the coupling `trials` times; returns (X, Y, success) arrays."""
    m = int(m)
    y = int(y)
    if m < 1:
        raise ValueError("m must be positive")
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")
    if y < 0:
        raise ValueError("y must be non-negative")
    if method == "maximal":
        return _maximal_batch(m, float(r), y, int(trials), rng)
    if method != "walk":
        raise ValueError("method must be 'maximal' or 'walk'")
    xout = np.empty(int(trials), dtype=np.int64)
    yout = np.empty(int(trials), dtype=np.int64)
    succ = np.empty(int(trials), dtype=np.uint8)
    _kernels.binomial_coupling_trials(m, float(r), y, rng.kernel_state(), xout, yout, succ)
    return xout, yout, succ.astype(bool)


def binomial_coupling_sample(m, r, y, rng, method="maximal"):
    """One coupled draw (X, Y, success); marginally both Binomial(m, r)."""
    x, yv, s = binomial_coupling_batch(m, r, y, 1, rng, method=method)
    return int(x[0]), int(yv[0]), bool(s[0])


@dataclass(frozen=True)
class CoupledPair:
    """Two edge configurations plus the coupling bookkeeping.

    bij maps each component of x onto an equal-size component of y; fixed
    marks vertices already pinned to themselves (bij[v] = v forever).
    """

    x: EdgeConfig
    y: EdgeConfig
    fixed: np.ndarray
    bij: np.ndarray

    @property
    def num_fixed(self):
        return int(self.fixed.sum())


def _comp_order(labels):
    # per-vertex component rank, largest component first, ties by root label
    roots, inv, counts = np.unique(labels, return_inverse=True, return_counts=True)
    order = np.lexsort((roots, -counts))
    pos = np.empty_like(order)
    pos[order] = np.arange(order.shape[0])
    return pos[inv], counts[order]


def make_pair(x, y):
    """Initial CoupledPair; components matched largest-first, vertices within
    a matched pair mapped in ascending order."""
    if x.n != y.n:
        raise ValueError("coupled configurations must share n")
    n = x.n
    rank_x, sizes_x = _comp_order(component_labels(x))
    rank_y, sizes_y = _comp_order(component_labels(y))
    if not np.array_equal(sizes_x, sizes_y):
        raise ValueError("component-size multisets differ; identity coupling undefined")
    vx = np.lexsort((np.arange(n), rank_x))
    vy = np.lexsort((np.arange(n), rank_y))
    bij = np.empty(n, dtype=np.int64)
    bij[vx] = vy
    return CoupledPair(x, y, np.zeros(n, dtype=bool), bij)


def identity_coupling_step(pair, params, rng):
    """One coupled CM round.

    Activation coins are drawn per x-component and transported to the matched
    y-component through bij; a vertex active in both copies becomes fixed;
    still-unmatched active vertices are re-paired in ascending order; one
    G(k, p) draw supplies the percolation edges of both copies through bij.
    """
    x, y = pair.x, pair.y
    n = x.n
    if n != params.n:
        raise ValueError("pair and params disagree on n")
    labels = component_labels(x)
    roots, inv = np.unique(labels, return_inverse=True)
    coins = rng.random(roots.shape[0]) < 1.0 / params.q
    ax = coins[inv]
    ay = np.zeros(n, dtype=bool)
    ay[pair.bij[ax]] = True

    both = ax & ay
    fixed = pair.fixed | both
    bij = pair.bij.copy()
    idx = np.flatnonzero(both)
    bij[idx] = idx
    onlyx = np.flatnonzero(ax & ~both)
    onlyy = np.flatnonzero(ay & ~both)
    if onlyx.shape[0] != onlyy.shape[0]:
        raise RuntimeError("activation transport lost vertices; bijection corrupt")
    bij[onlyx] = onlyy

    av = np.flatnonzero(ax)
    iu, iv = sample_gnp_edges(av.shape[0], params.p, rng)
    xu, xv = av[iu], av[iv]
    yu, yv = bij[xu], bij[xv]
    x_edges = [e for e in x.edges if not ax[e[0]]]
    x_edges.extend(zip(xu.tolist(), xv.tolist()))
    y_edges = [e for e in y.edges if not ay[e[0]]]
    y_edges.extend(
        (a, b) if a < b else (b, a) for a, b in zip(yu.tolist(), yv.tolist())
    )
    if not np.all(fixed >= pair.fixed):
        raise RuntimeError("fixed set decreased")
    return CoupledPair(EdgeConfig(n, x_edges), EdgeConfig(n, y_edges), fixed, bij)


def coupling_time(x0, y0, params, max_steps, rng):
    """First step at which the labeled configurations agree, or None."""
    if x0 == y0:
        return 0
    pair = make_pair(x0, y0)
    for t in range(1, int(max_steps) + 1):
        pair = identity_coupling_step(pair, params, rng)
        if pair.x == pair.y:
            return t
    return None
