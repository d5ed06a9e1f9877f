"""Shared test utilities: pooled chi-square tests and tolerance helpers."""

import math

import numpy as np
from scipy import stats


def chisq_pooled(observed, probs, min_expected=5.0):
    """Chi-square p-value of observed counts against probabilities.

    Every category whose expected count falls below min_expected is pooled
    into one bucket, and the bucket is grown by the next-smallest kept
    categories until it clears min_expected itself, so the chi-square
    approximation stays valid. Zero-probability categories are not accepted
    here: assert them separately before calling.
    """
    observed = np.asarray(observed, dtype=float)
    probs = np.asarray(probs, dtype=float)
    if np.any(probs <= 0.0):
        raise ValueError("zero-probability categories must be handled separately")
    total = observed.sum()
    expected = probs / probs.sum() * total
    order = np.argsort(expected)
    k = int(np.sum(expected < min_expected))
    if k > 0:
        while k < len(order) and expected[order[:k]].sum() < min_expected:
            k += 1
        pool = order[:k]
        keep = order[k:]
        obs = np.concatenate([[observed[pool].sum()], observed[keep]])
        exp = np.concatenate([[expected[pool].sum()], expected[keep]])
    else:
        obs, exp = observed, expected
    if len(obs) < 2:
        raise ValueError("need at least two categories after pooling")
    assert np.all(exp >= min_expected * 0.999), "pooling failed to reach min_expected"
    return float(stats.chisquare(obs, exp).pvalue)


def binom_sigma(p_true, trials, k=4.0):
    """k-sigma tolerance for an empirical frequency of a known Bernoulli."""
    return k * math.sqrt(p_true * (1.0 - p_true) / trials)


def fit_loglog_slope(ns, values):
    """Least-squares slope of log(values) against log(ns)."""
    x = np.log(np.asarray(ns, dtype=float))
    y = np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


def multiset_key(state):
    """Canonical component-size multiset of a ComponentState."""
    return tuple(sorted(state.sizes.tolist()))


def theta_star_by_bisection(phase, q, lam):
    """Zero of f' on (theta_min, 1): f is convex, so f' crosses once."""
    pp = phase.PhaseParams(q, lam)
    lo = phase.theta_min(q, lam) + 1e-6
    hi = 1.0
    assert phase.f_prime(lo, pp) < 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phase.f_prime(mid, pp) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
