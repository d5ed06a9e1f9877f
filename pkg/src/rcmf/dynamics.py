"""One-step dynamics and trajectory running.

Four steppers share the same measure: CM on component states (the fast
path, all heavy lifting in numba kernels), CM on edge configurations (a
literal cross-check), heat-bath and Single-Update on edge configurations.
Traces record (t, L1, L2, I, chi, active, giant_active); the activation
columns hold -1 where the stepper does not report them.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core import ComponentState, EdgeConfig, ModelParams, component_labels
from .gnp import sample_gnp_edges

TRACE_COLUMNS = ("t", "L1", "L2", "I", "chi", "active", "giant_active")


def _cm_buffers(n):
    big = np.empty(n // 2 + 2, dtype=np.int64)
    parent = np.empty(max(n, 1), dtype=np.int64)
    csize = np.empty(max(n, 1), dtype=np.int64)
    return big, parent, csize


def _pack_state(state, big):
    nbig = state.big.shape[0]
    big[:nbig] = state.big
    return nbig, state.singletons


def _unpack_state(n, big, nbig, nsing):
    sizes = np.sort(big[:nbig])[::-1].copy()
    return ComponentState(n, sizes, int(nsing), _validate=False)


def cm_step(state, params, rng):
    """One CM round on a ComponentState.

    Each component activates independently with probability 1/q (singletons
    through one binomial draw), the active vertices are re-percolated as one
    G(active, p), inactive components carry over.
    """
    st, _, _ = cm_step_info(state, params, rng)
    return st


def cm_step_info(state, params, rng):
    """cm_step plus (active_count, giant_active) for trace columns."""
    n = state.n
    if n != params.n:
        raise ValueError("state and params disagree on n")
    big, parent, csize = _cm_buffers(n)
    nbig, nsing = _pack_state(state, big)
    s = rng.kernel_state()
    nbig, nsing, active, giant_active = _kernels.cm_step_arrays(
        n, params.p, 1.0 / params.q, s, big, nbig, nsing, parent, csize
    )
    return _unpack_state(n, big, nbig, nsing), int(active), bool(giant_active)


def _active_mask(cfg, q, rng):
    # one activation coin per component, transported to vertices
    labels = component_labels(cfg)
    roots, inv = np.unique(labels, return_inverse=True)
    coins = rng.random(roots.shape[0]) < 1.0 / q
    return coins[inv]


def cm_step_edges(cfg, params, rng):
    """Literal edge-level CM round: activate components, drop all edges among
    active vertices, re-sample each active pair independently at rate p."""
    n = cfg.n
    if n != params.n:
        raise ValueError("cfg and params disagree on n")
    active = _active_mask(cfg, params.q, rng)
    kept = [e for e in cfg.edges if not active[e[0]]]
    av = np.flatnonzero(active)
    iu, iv = sample_gnp_edges(av.shape[0], params.p, rng)
    fresh = zip(av[iu].tolist(), av[iv].tolist())
    return EdgeConfig(n, kept + [(min(u, v), max(u, v)) for u, v in fresh])


def _connected_without(cfg, u, v):
    # is u still connected to v in cfg minus the edge (u, v)?
    adj = {}
    for a, b in cfg.edges:
        adj.setdefault(a, []).append(b)
        adj.setdefault(b, []).append(a)
    seen = {u}
    stack = [u]
    while stack:
        x = stack.pop()
        for y in adj.get(x, ()):
            if x == u and y == v or x == v and y == u:
                continue
            if y == v:
                return True
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return False


def hb_step(cfg, params, rng):
    """Heat-bath: resample one uniform pair from its conditional law.

    The pair joins with probability p/(p + q(1-p)) when it is a cut edge of
    (V, A + e), i.e. its endpoints are not otherwise connected, else p.
    """
    n = cfg.n
    if n != params.n:
        raise ValueError("cfg and params disagree on n")
    m = n * (n - 1) // 2
    k = int(rng.integers(m))
    u, v = _decode_pair(k, n)
    cut = not _connected_without(cfg, u, v)
    r = params.p / (params.p + params.q * (1.0 - params.p)) if cut else params.p
    return cfg.with_edge(u, v, bool(rng.random() < r))


def su_step(cfg, params, rng):
    """Single-Update: activate components at rate 1/q, pick one uniform pair,
    and resample it at rate p only when both endpoints are active."""
    n = cfg.n
    if n != params.n:
        raise ValueError("cfg and params disagree on n")
    active = _active_mask(cfg, params.q, rng)
    m = n * (n - 1) // 2
    k = int(rng.integers(m))
    u, v = _decode_pair(k, n)
    if active[u] and active[v]:
        return cfg.with_edge(u, v, bool(rng.random() < params.p))
    return cfg


def _decode_pair(k, n):
    # k-th pair in lexicographic order over 0 <= u < v < n
    u = 0
    row = n - 1
    while k >= row:
        k -= row
        u += 1
        row -= 1
    return u, u + 1 + k


@dataclass(frozen=True)
class Trace:
    """Recorded observables of one trajectory, one row per recorded step."""

    kind: str
    params: ModelParams
    rows: np.ndarray  # (k, 7) float64, columns TRACE_COLUMNS
    columns: tuple = field(default=TRACE_COLUMNS, repr=False)

    def column(self, name):
        return self.rows[:, self.columns.index(name)]

    def to_csv(self, fh, provenance=None):
        if provenance:
            fh.write("# %s\n" % provenance)
        fh.write(",".join(self.columns) + "\n")
        for row in self.rows:
            fh.write(",".join("%d" % x for x in row) + "\n")


def _observe(state, t, active, giant_active):
    return (
        float(t),
        float(state.L1),
        float(state.L2),
        float(state.isolated),
        float(state.chi),
        float(active),
        float(giant_active),
    )


def run_trajectory(kind, init, params, steps, rng, record_every=1):
    """Run `steps` steps of the chosen dynamics, recording every record_every
    steps (t = 0 and the final step always included). Deterministic in
    (kind, init, params, seed)."""
    if steps < 0:
        raise ValueError("steps must be non-negative")
    if record_every < 1:
        raise ValueError("record_every must be positive")
    if kind == "cm":
        if not isinstance(init, ComponentState):
            raise TypeError("cm trajectories run on ComponentState")
        return _run_cm(init, params, steps, rng, record_every)
    if kind in ("cm_edges", "hb", "su"):
        if not isinstance(init, EdgeConfig):
            raise TypeError("%s trajectories run on EdgeConfig" % kind)
        stepper = {"cm_edges": cm_step_edges, "hb": hb_step, "su": su_step}[kind]
        rows = [_observe(_edge_observables(init), 0, -1, -1)]
        cfg = init
        for t in range(1, steps + 1):
            cfg = stepper(cfg, params, rng)
            if t % record_every == 0 or t == steps:
                rows.append(_observe(_edge_observables(cfg), t, -1, -1))
        return Trace(kind, params, np.array(rows, dtype=np.float64))
    raise ValueError("unknown dynamics kind %r" % (kind,))


def _edge_observables(cfg):
    from .core import component_sizes

    return component_sizes(cfg)


def _run_cm(init, params, steps, rng, record_every):
    n = init.n
    if n != params.n:
        raise ValueError("init and params disagree on n")
    big, parent, csize = _cm_buffers(n)
    nbig, nsing = _pack_state(init, big)
    s = rng.kernel_state()
    rows = [_observe(init, 0, -1, -1)]
    for t in range(1, steps + 1):
        nbig, nsing, active, giant_active = _kernels.cm_step_arrays(
            n, params.p, 1.0 / params.q, s, big, nbig, nsing, parent, csize
        )
        if t % record_every == 0 or t == steps:
            st = _unpack_state(n, big, nbig, nsing)
            rows.append(_observe(st, t, active, giant_active))
    return Trace("cm", params, np.array(rows, dtype=np.float64))
