"""G(m, p) component sampling and the giant-component root beta(d).

The sampler draws the edge set by geometric skip sampling (inversion via
logarithms) and reduces it with union-find, so the cost is linear in m plus
the number of edges examined. p = 0 and p = 1 are special-cased exactly.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from . import _kernels
from .core import ComponentState, RngStream


@dataclass(frozen=True)
class GnpRequest:
    m: int
    p: float
    rng: RngStream

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be non-negative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")


def sample_gnp_components(req):
    """Component-size multiset of one G(m, p) draw, as a ComponentState."""
    m = int(req.m)
    if m == 0:
        return ComponentState(0, np.empty(0, dtype=np.int64), 0)
    big, singles = _kernels.gnp_sizes(m, float(req.p), req.rng.kernel_state())
    big = np.sort(big)[::-1]
    return ComponentState(m, big, singles, _validate=False)


def sample_gnp_edges(m, p, rng):
    """Edge list of one G(m, p) draw as (eu, ev) int64 arrays.

    Capacity starts at mean + 8 sigma and the draw is replayed from the same
    kernel state if it ever overflows, so the result is deterministic in rng.
    """
    m = int(m)
    if m < 2 or p <= 0.0:
        e = np.empty(0, dtype=np.int64)
        return e, e.copy()
    total = m * (m - 1) // 2
    mean = total * p
    cap = int(mean + 8.0 * math.sqrt(max(mean * (1.0 - p), 1.0)) + 16)
    cap = min(cap, total)
    state = rng.kernel_state()
    while True:
        eu = np.empty(cap, dtype=np.int64)
        ev = np.empty(cap, dtype=np.int64)
        cnt = _kernels.gnp_edges(m, float(p), state.copy(), eu, ev)
        if cnt >= 0:
            return eu[:cnt].copy(), ev[:cnt].copy()
        cap = min(cap * 2, total)


@njit(cache=True)
def _beta_nb(d):
    # bracketing bisection on [1e-12, 1] (excludes the trivial root 0),
    # then Newton; g(x) = e^{-dx} - 1 + x
    if d <= 1.0 + 1e-9:
        return 0.0
    lo = 1e-12
    hi = 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if math.exp(-d * mid) - 1.0 + mid < 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    for _ in range(8):
        gx = math.exp(-d * x) - 1.0 + x
        gp = 1.0 - d * math.exp(-d * x)
        if gp == 0.0:
            break
        step = gx / gp
        x -= step
        if abs(step) < 1e-16:
            break
    if x <= 0.0 or x >= 1.0 or abs(math.exp(-d * x) - 1.0 + x) > 1e-12:
        x = 0.5 * (lo + hi)
    return x


def beta(d):
    """Unique positive root of e^{-d x} = 1 - x, or 0 when d <= 1.

    d in (1, 1 + 1e-9] also reports 0: the root there sits below solver
    resolution and "no giant" is the conservative reading. The residual
    |e^{-d x} - (1 - x)| of a nonzero return is at most 1e-12.
    """
    if d < 0:
        raise ValueError("d must be non-negative")
    return float(_beta_nb(float(d)))
