"""Headline experiments: TV mixing proxy from extreme starts, metastable
escape times, slow-start activation times, and one-step drift validation.

All replica work runs CM through the jitted kernels; replica r of any
experiment draws from rng.split(r), so aggregation is order-independent.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, phase
from .core import ComponentState


@dataclass(frozen=True)
class TvEstimate:
    """TV distance between the binned L1/n laws of two chains at step t."""

    t: int
    tv: float
    replicas: int
    bins: int


def resolve_start(n, start):
    """'full' / 'empty' / ComponentState -> ComponentState."""
    if isinstance(start, ComponentState):
        return start
    if start == "full":
        return ComponentState.single_component(n)
    if start == "empty":
        return ComponentState.all_singletons(n)
    raise ValueError("unknown start %r" % (start,))


def _cm_buffers(n):
    return (
        np.empty(n // 2 + 2, dtype=np.int64),
        np.empty(n, dtype=np.int64),
        np.empty(n, dtype=np.int64),
    )


def tv_mixing_estimate(params, start_a, start_b, t_max, replicas, rng, bins=None):
    """Per-step TV estimates between the L1/n histograms of two start laws.

    Histograms use sqrt(replicas) equal-width bins on [0, 1] unless bins is
    given. Replica r runs both chains on rng.split(r)'s child streams.
    """
    n = params.n
    if replicas < 1:
        raise ValueError("need at least one replica")
    if bins is None:
        bins = max(int(math.isqrt(int(replicas))), 1)
    sa = resolve_start(n, start_a)
    sb = resolve_start(n, start_b)
    counts_a = np.zeros((t_max + 1, bins), dtype=np.int64)
    counts_b = np.zeros((t_max + 1, bins), dtype=np.int64)
    big, parent, csize = _cm_buffers(n)
    out = np.empty(t_max + 1, dtype=np.int64)
    trange = np.arange(t_max + 1)
    act_p = 1.0 / params.q
    for r in range(int(replicas)):
        stream = rng.split(r)
        for start, counts, child in ((sa, counts_a, 0), (sb, counts_b, 1)):
            nbig = start.big.shape[0]
            big[:nbig] = start.big
            s = stream.split(child).kernel_state()
            _kernels.cm_run_record_l1(
                n, params.p, act_p, s, big, nbig, start.singletons,
                parent, csize, int(t_max), out,
            )
            idx = np.minimum(out * bins // n, bins - 1)
            counts[trange, idx] += 1
    est = []
    for t in range(t_max + 1):
        tv = 0.5 * np.abs(counts_a[t] - counts_b[t]).sum() / replicas
        est.append(TvEstimate(int(t), float(tv), int(replicas), int(bins)))
    return est


def mixing_proxy(estimates, threshold=0.25):
    """First recorded t with TV below threshold, or None (budget exhausted)."""
    for e in estimates:
        if e.tv < threshold:
            return e.t
    return None


def escape_time(params, theta0, exit_band, max_steps, rng):
    """First step at which L1/n leaves exit_band, starting from one component
    of size round(theta0 n) plus singletons; None on timeout."""
    n = params.n
    lo, hi = float(exit_band[0]), float(exit_band[1])
    if not 0.0 <= lo < hi <= 1.0:
        raise ValueError("exit_band must satisfy 0 <= lo < hi <= 1")
    giant = int(round(theta0 * n))
    state = ComponentState.giant_plus_singletons(n, giant)
    big, parent, csize = _cm_buffers(n)
    nbig = state.big.shape[0]
    big[:nbig] = state.big
    t = _kernels.cm_escape_run(
        n, params.p, 1.0 / params.q, rng.kernel_state(), big, nbig,
        state.singletons, parent, csize, lo, hi, int(max_steps),
    )
    return None if t < 0 else int(t)


def escape_times(params, theta0, exit_band, max_steps, replicas, rng):
    """escape_time over split replica streams; a list with None for timeouts."""
    return [
        escape_time(params, theta0, exit_band, max_steps, rng.split(r))
        for r in range(int(replicas))
    ]


def censored_median(times, max_steps):
    """Median with timeouts counted as max_steps; None when the median
    itself is censored (at least half the replicas timed out)."""
    vals = np.array([max_steps if t is None else t for t in times], dtype=np.int64)
    if np.sum(vals >= max_steps) * 2 >= len(vals):
        return None
    return float(np.median(vals))


def slow_start_time(params, component_size, rng):
    """Steps until every initial component has activated at least once, for a
    start of n // size components of that size plus remainder singletons.
    Activation of a component is geometric at rate 1/q, so this is the max of
    iid geometrics over the components."""
    n = params.n
    size = int(component_size)
    if size < 1 or size > n:
        raise ValueError("component_size must lie in [1, n]")
    k = n // size
    comps = k + (n - k * size)
    draws = rng.geometric(1.0 / params.q, size=comps)
    return int(draws.max())


def drift_validation(params, theta_grid, replicas, rng):
    """Conditional one-step drift at each theta: start from one component of
    size theta n plus singletons, force the giant's activation by rejection,
    and average L1/n after one CM round.

    Returns rows (theta, empirical mean, phi(theta), empirical - phi).
    """
    n = params.n
    pp = phase.PhaseParams(params.q, params.lam)
    big, parent, csize = _cm_buffers(n)
    rows = []
    for i, theta in enumerate(theta_grid):
        giant = int(round(float(theta) * n))
        if giant < 2:
            raise ValueError("theta n must be at least 2")
        nsing0 = n - giant
        stream = rng.split(i)
        total = 0.0
        for r in range(int(replicas)):
            big[0] = giant
            s = stream.split(r).kernel_state()
            nbig, nsing, _, _ = _kernels.cm_step_giant_forced(
                n, params.p, 1.0 / params.q, s, big, 1, nsing0, parent, csize
            )
            l1 = big[:nbig].max() if nbig > 0 else (1 if nsing > 0 else 0)
            total += l1 / n
        emp = total / replicas
        ph = phase.phi(float(theta), pp)
        rows.append((float(theta), emp, ph, emp - ph))
    return np.array(rows, dtype=np.float64)
