"""Drift apparatus for the activated-percolation map.

Everything here is driven by two scalar equations in theta:

  Eq. root:   e^{-lam x} = 1 - q x / (1 + (q-1) theta)   (largest root = phi)
  Eq. fixed:  e^{-lam x} = 1 - q x / (1 + (q-1) x)       (largest root = theta_r)

Substituting x = s y with s = (1 + (q-1) theta)/q turns the first equation
into e^{-(lam s) y} = 1 - y, so phi(theta) = s * beta(lam * s). The drift of
the giant-component density under one round is f(theta) = theta - phi(theta);
its sign structure over lam yields the window edges lambda_s and lambda_S
around the static transition lambda_c.
"""

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import SolverError
from .gnp import _beta_nb

_EPS_EDGE = 1e-9  # grid offset above theta_min; phi degenerates at the edge


@dataclass(frozen=True)
class PhaseParams:
    """Carrier for (q, lam) when no graph size is in play."""

    q: float
    lam: float

    def __post_init__(self):
        if not self.q > 1.0:
            raise ValueError("q must exceed 1")
        if not self.lam > 0.0:
            raise ValueError("lam must be positive")


def _qlam(params):
    return float(params.q), float(params.lam)


def lambda_c(q):
    """Static transition point: q up to q=2, else 2 (q-1)/(q-2) log(q-1)."""
    q = float(q)
    if not q > 1.0:
        raise ValueError("q must exceed 1")
    if q <= 2.0:
        return q
    return 2.0 * (q - 1.0) / (q - 2.0) * math.log(q - 1.0)


def theta_min(q, lam):
    """Lower edge of the phi domain: max{(q-lam)/(lam(q-1)), 0}."""
    q = float(q)
    lam = float(lam)
    return max((q - lam) / (lam * (q - 1.0)), 0.0)


@njit(cache=True)
def _phi_nb(theta, q, lam):
    s = (1.0 + (q - 1.0) * theta) / q
    return s * _beta_nb(lam * s)


@njit(cache=True)
def _phi_prime_from_phi(ph, q, lam):
    if ph <= 0.0:
        return 0.0
    w = math.exp(-lam * ph)
    one = 1.0 - w
    den = one - lam * ph * w
    if den <= 0.0:
        return 0.0
    return (q - 1.0) / q * one * one / den


@njit(cache=True)
def _f_grid(thetas, q, lam):
    g = thetas.shape[0]
    phis = np.empty(g)
    fvals = np.empty(g)
    fprimes = np.empty(g)
    for i in range(g):
        ph = _phi_nb(thetas[i], q, lam)
        phis[i] = ph
        fvals[i] = thetas[i] - ph
        fprimes[i] = 1.0 - _phi_prime_from_phi(ph, q, lam)
    return phis, fvals, fprimes


def _check_domain(theta, q, lam):
    tmin = theta_min(q, lam)
    if not tmin < theta <= 1.0:
        raise ValueError(
            "theta=%g outside (%g, 1] for q=%g, lam=%g" % (theta, tmin, q, lam)
        )


def phi(theta, params):
    """Largest root of e^{-lam x} = 1 - q x/(1+(q-1)theta).

    Computed as s * beta(lam * s) with s = (1+(q-1)theta)/q; the residual of
    the defining equation is <= 1e-12 whenever the value is nonzero.
    """
    q, lam = _qlam(params)
    _check_domain(theta, q, lam)
    return float(_phi_nb(theta, q, lam))


def phi_prime(theta, params):
    """d phi/d theta = ((q-1)/q)(1-w)^2 / (1-w-lam phi w), w = e^{-lam phi}."""
    q, lam = _qlam(params)
    _check_domain(theta, q, lam)
    return float(_phi_prime_from_phi(_phi_nb(theta, q, lam), q, lam))


def f(theta, params):
    """One-round drift of the giant density: theta - phi(theta)."""
    q, lam = _qlam(params)
    _check_domain(theta, q, lam)
    return float(theta - _phi_nb(theta, q, lam))


def f_prime(theta, params):
    """1 - phi'(theta)."""
    return 1.0 - phi_prime(theta, params)


def theta_r(params):
    """Largest positive root of e^{-lam x} = 1 - qx/(1+(q-1)x), or None.

    Found as the rightmost sign change of f on a 10^4-point grid over
    (theta_min + eps, 1], refined by bisection to width 1e-12. Absence of a
    root (all of f positive on the domain) returns None.
    """
    q, lam = _qlam(params)
    lo_edge = theta_min(q, lam) + _EPS_EDGE
    if lo_edge >= 1.0:
        return None
    thetas = np.linspace(lo_edge, 1.0, 10000)
    _, fv, _ = _f_grid(thetas, q, lam)
    idx = -1
    for i in range(len(thetas) - 2, -1, -1):
        if fv[i] == 0.0:
            return float(thetas[i])
        if (fv[i] < 0.0) != (fv[i + 1] < 0.0):
            idx = i
            break
    if idx < 0:
        return None
    a, b = float(thetas[idx]), float(thetas[idx + 1])
    fa = float(fv[idx])
    while b - a > 1e-12:
        mid = 0.5 * (a + b)
        fm = mid - float(_phi_nb(mid, q, lam))
        if fm == 0.0:
            return mid
        if (fa < 0.0) != (fm < 0.0):
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


@njit(cache=True)
def _min_f(q, lam, grid):
    # min of f over a theta grid; used to bracket the tangency lambda
    tmin = max((q - lam) / (lam * (q - 1.0)), 0.0)
    lo = tmin + 1e-6
    best = 1e300
    barg = lo
    for i in range(grid):
        th = lo + (1.0 - lo) * i / (grid - 1.0)
        val = th - _phi_nb(th, q, lam)
        if val < best:
            best = val
            barg = th
    return best, barg


def _fp_pair(th, q, lam):
    ph = float(_phi_nb(th, q, lam))
    return th - ph, 1.0 - float(_phi_prime_from_phi(ph, q, lam))


def lambda_s(q):
    """Lower window edge: the lam at which f first develops a root.

    Equals q for q <= 2. For q > 2 the tangency system f = f' = 0 is solved
    by damped two-dimensional Newton in (theta, lam), seeded from a bisection
    on lam of the grid minimum of f (min f is nonincreasing in lam).
    """
    q = float(q)
    if not q > 1.0:
        raise ValueError("q must exceed 1")
    if q <= 2.0:
        return q
    lc = lambda_c(q)
    lam_lo, lam_hi = 2.0, lc
    m_lo, _ = _min_f(q, lam_lo, 400)
    m_hi, _ = _min_f(q, lam_hi, 400)
    if not (m_lo > 0.0 and m_hi < 0.0):
        raise SolverError(
            "tangency bracket failed for q=%g: min f = %g at lam=%g, %g at lam=%g"
            % (q, m_lo, lam_lo, m_hi, lam_hi)
        )
    th0 = 0.5
    for _ in range(40):
        mid = 0.5 * (lam_lo + lam_hi)
        val, arg = _min_f(q, mid, 400)
        if val < 0.0:
            lam_hi = mid
            th0 = arg
        else:
            lam_lo = mid
    x = np.array([th0, 0.5 * (lam_lo + lam_hi)])

    def resid(v):
        th, lam = v
        tmin = theta_min(q, lam)
        th = min(max(th, tmin + _EPS_EDGE), 1.0)
        fv, fp = _fp_pair(th, q, lam)
        return np.array([fv, fp])

    F = resid(x)
    norm = float(np.max(np.abs(F)))
    h = 1e-7
    for _ in range(200):
        if norm <= 1e-12:
            break
        J = np.empty((2, 2))
        for j in range(2):
            dv = np.zeros(2)
            dv[j] = h
            J[:, j] = (resid(x + dv) - resid(x - dv)) / (2.0 * h)
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            raise SolverError("singular Jacobian in tangency solve for q=%g" % q)
        scale = 1.0
        for _ in range(40):
            xn = x + scale * step
            xn[0] = min(max(xn[0], theta_min(q, xn[1]) + _EPS_EDGE), 1.0)
            Fn = resid(xn)
            nn = float(np.max(np.abs(Fn)))
            if nn < norm or nn <= 1e-12:
                x, F, norm = xn, Fn, nn
                break
            scale *= 0.5
        else:
            break
    if norm > 1e-10:
        raise SolverError(
            "tangency solve for q=%g stalled at residual %g" % (q, norm)
        )
    return float(x[1])


def lambda_S(q):
    """Upper window edge; identically q (the drift root survives to lam = q)."""
    q = float(q)
    if not q > 1.0:
        raise ValueError("q must exceed 1")
    return q


def lambda_S_scan(q, lam=None, grid=2000):
    """Definition-based self-test for lambda_S = q.

    Checks f(theta) (theta - theta_r) > 0 on a grid just above lam = q,
    i.e. f is negative strictly below its largest root and positive above.
    Returns True when the sign pattern holds everywhere on the grid.
    """
    q = float(q)
    lam = q + 1e-6 if lam is None else float(lam)
    params = PhaseParams(q, lam)
    tr = theta_r(params)
    if tr is None:
        return False
    lo = theta_min(q, lam) + _EPS_EDGE
    thetas = np.linspace(lo, 1.0, grid)
    _, fv, _ = _f_grid(thetas, q, lam)
    sel = np.abs(thetas - tr) > 1e-4  # skip the root's own neighborhood
    return bool(np.all(fv[sel] * (thetas[sel] - tr) > 0.0))


@dataclass(frozen=True)
class DriftScan:
    """Tabulated (theta, phi, f, f') over a uniform grid in (theta_min, 1]."""

    q: float
    lam: float
    thetas: np.ndarray
    phis: np.ndarray
    fvals: np.ndarray
    fprimes: np.ndarray

    @property
    def rows(self):
        return np.column_stack([self.thetas, self.phis, self.fvals, self.fprimes])

    def sign_changes(self):
        """Number of sign changes of f along the grid."""
        s = np.sign(self.fvals)
        s = s[s != 0.0]
        return int(np.sum(s[1:] != s[:-1]))


def drift_scan(params, grid_size=1000):
    """Evaluate the drift apparatus on a uniform theta grid."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    q, lam = _qlam(params)
    lo = theta_min(q, lam) + _EPS_EDGE
    thetas = np.linspace(lo, 1.0, int(grid_size))
    phis, fv, fp = _f_grid(thetas, q, lam)
    return DriftScan(q, lam, thetas, phis, fv, fp)


@dataclass(frozen=True)
class CriticalPoints:
    """All window edges and roots for one (q, lam) pair.

    theta_min, theta_r and theta_S_threshold are lam-specific and None when
    no lam was supplied; theta_r is additionally None when f has no root.
    """

    q: float
    lam: object
    lambda_c: float
    lambda_s: float
    lambda_S: float
    theta_min: object
    theta_r: object
    theta_S_threshold: object


def critical_points(q, lam=None):
    """Assemble CriticalPoints for q, optionally resolving roots at lam."""
    q = float(q)
    lc = lambda_c(q)
    ls = lambda_s(q)
    lS = lambda_S(q)
    tmin = trr = tS = None
    if lam is not None:
        lam = float(lam)
        tmin = theta_min(q, lam)
        trr = theta_r(PhaseParams(q, lam))
        tS = 1.0 - q / lam
    return CriticalPoints(q, lam, lc, ls, lS, tmin, trr, tS)
