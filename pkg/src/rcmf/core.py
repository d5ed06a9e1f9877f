"""Model parameters, state representations, weights and the RNG contract.

Two state representations are used throughout: ComponentState (the multiset of
component sizes, sufficient statistic for the CM dynamics) and EdgeConfig (an
explicit edge subset of the complete graph, used by the HB/SU/exact chains).
Randomness flows from RngStream, a counter-based splittable stream, so that
replica r of any experiment can use split(root, r) and run independently.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels


class SolverError(RuntimeError):
    """A numerical solve failed to reach its residual target."""


@dataclass(frozen=True)
class ModelParams:
    """Parameter triple (n, q, lambda) of the mean-field random-cluster model.

    The edge probability p = lambda/n is derived, never stored. The model's
    standing assumptions are enforced: q > 1, lambda > 0, and 0 < p < 1.
    """

    n: int
    q: float
    lam: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be a positive integer")
        if not self.q > 1:
            raise ValueError("q must exceed 1 (standing assumption)")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not 0 < self.lam / self.n < 1:
            raise ValueError("p = lambda/n must lie in (0, 1)")

    @property
    def p(self):
        return self.lam / self.n


class ComponentState:
    """Multiset of component sizes summing to n.

    Sizes >= 2 are kept in a non-increasing array `big`; size-1 components are
    only counted (`singletons`), which keeps states compact when most
    components are isolated vertices and makes L1/L2/I constant-time.
    """

    __slots__ = ("n", "big", "singletons")

    def __init__(self, n, big, singletons, _validate=True):
        big = np.asarray(big, dtype=np.int64)
        if _validate:
            if big.size and (np.any(np.diff(big) > 0) or big[-1] < 2):
                raise ValueError("big sizes must be non-increasing and >= 2")
            if int(big.sum()) + int(singletons) != n or singletons < 0:
                raise ValueError("component sizes must sum to n")
        self.n = int(n)
        self.big = big
        self.singletons = int(singletons)

    @classmethod
    def from_sizes(cls, n, sizes):
        sizes = np.sort(np.asarray(list(sizes), dtype=np.int64))[::-1]
        if sizes.size and sizes[-1] < 1:
            raise ValueError("every component size must be >= 1")
        nbig = int(np.searchsorted(-sizes, -1))  # first index with size < 2
        return cls(n, sizes[:nbig].copy(), int(sizes.size - nbig))

    @classmethod
    def all_singletons(cls, n):
        return cls(n, np.empty(0, dtype=np.int64), n)

    @classmethod
    def single_component(cls, n):
        if n == 1:
            return cls.all_singletons(1)
        return cls(n, np.array([n], dtype=np.int64), 0)

    @classmethod
    def giant_plus_singletons(cls, n, giant):
        """One component of size `giant`, everything else isolated."""
        giant = int(giant)
        if giant < 2:
            return cls.all_singletons(n)
        return cls(n, np.array([giant], dtype=np.int64), n - giant)

    @property
    def sizes(self):
        """Full non-increasing multiset, materialized."""
        return np.concatenate([self.big, np.ones(self.singletons, dtype=np.int64)])

    @property
    def num_components(self):
        return self.big.size + self.singletons

    @property
    def L1(self):
        if self.big.size:
            return int(self.big[0])
        return 1 if self.singletons else 0

    @property
    def L2(self):
        if self.big.size >= 2:
            return int(self.big[1])
        if self.big.size == 1:
            return 1 if self.singletons else 0
        return 1 if self.singletons >= 2 else 0

    @property
    def isolated(self):
        return self.singletons

    @property
    def chi(self):
        """Susceptibility without the largest component: sum_{i>=2} L_i^2."""
        if self.big.size:
            return int(np.sum(self.big[1:].astype(np.float64) ** 2)) + self.singletons
        return max(self.singletons - 1, 0)

    def __eq__(self, other):
        return (
            isinstance(other, ComponentState)
            and self.n == other.n
            and self.singletons == other.singletons
            and np.array_equal(self.big, other.big)
        )

    def __hash__(self):
        return hash((self.n, self.singletons, self.big.tobytes()))

    def __repr__(self):
        head = ",".join(str(s) for s in self.big[:6])
        if self.big.size > 6:
            head += ",..."
        return f"ComponentState(n={self.n}, big=[{head}], singletons={self.singletons})"

    def to_text(self):
        """Serialize as 'n count' header plus one non-increasing line of sizes."""
        sizes = " ".join(str(s) for s in self.sizes)
        return f"{self.n} {self.num_components}\n{sizes}\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        n, count = (int(tok) for tok in lines[0].split())
        sizes = [int(tok) for tok in lines[1].split()] if count else []
        if len(sizes) != count:
            raise ValueError("component count does not match header")
        return cls.from_sizes(n, sizes)


class EdgeConfig:
    """Edge subset of the complete graph on n vertices.

    Pairs are canonically ordered (min, max); the set is immutable so configs
    can be hashed, compared and shared between chains.
    """

    __slots__ = ("n", "edges")

    def __init__(self, n, edges=()):
        n = int(n)
        canon = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError("self-loops are not allowed")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError("edge endpoint out of range")
            canon.add((u, v) if u < v else (v, u))
        self.n = n
        self.edges = frozenset(canon)

    @classmethod
    def empty(cls, n):
        return cls(n)

    @classmethod
    def complete(cls, n):
        return cls(n, [(u, v) for u in range(n) for v in range(u + 1, n)])

    @property
    def num_edges(self):
        return len(self.edges)

    def edge_arrays(self):
        """Edges as two int64 arrays (sorted lexicographically)."""
        if not self.edges:
            e = np.empty(0, dtype=np.int64)
            return e, e.copy()
        pairs = np.array(sorted(self.edges), dtype=np.int64)
        return pairs[:, 0].copy(), pairs[:, 1].copy()

    def with_edge(self, u, v, present):
        e = (u, v) if u < v else (v, u)
        if present:
            if e in self.edges:
                return self
            new = set(self.edges)
            new.add(e)
        else:
            if e not in self.edges:
                return self
            new = set(self.edges)
            new.discard(e)
        out = EdgeConfig.__new__(EdgeConfig)
        out.n = self.n
        out.edges = frozenset(new)
        return out

    def __eq__(self, other):
        return (
            isinstance(other, EdgeConfig)
            and self.n == other.n
            and self.edges == other.edges
        )

    def __hash__(self):
        return hash((self.n, self.edges))

    def __repr__(self):
        return f"EdgeConfig(n={self.n}, edges={sorted(self.edges)})"

    def to_text(self):
        lines = [f"{self.n} {self.num_edges}"]
        lines.extend(f"{u} {v}" for u, v in sorted(self.edges))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        n, count = (int(tok) for tok in lines[0].split())
        pairs = []
        for ln in lines[1 : 1 + count]:
            u, v = (int(tok) for tok in ln.split())
            if not u < v:
                raise ValueError("serialized edges must satisfy u < v")
            pairs.append((u, v))
        if len(pairs) != count:
            raise ValueError("edge count does not match header")
        return cls(n, pairs)


@dataclass(frozen=True)
class RngStream:
    """Deterministic splittable random stream.

    Backed by numpy's Philox counter-based generator keyed on
    SeedSequence(seed, spawn_key=path): identical (seed, path) gives an
    identical draw sequence everywhere, and split(i) is O(1).
    """

    seed: int
    path: tuple = ()
    _gen: object = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self._gen is None:
            ss = np.random.SeedSequence(self.seed, spawn_key=self.path)
            object.__setattr__(self, "_gen", np.random.Generator(np.random.Philox(ss)))

    def split(self, child_index):
        return RngStream(self.seed, self.path + (int(child_index),))

    # Convenience delegates; all draws advance this stream only.
    def random(self, *args, **kwargs):
        return self._gen.random(*args, **kwargs)

    def integers(self, *args, **kwargs):
        return self._gen.integers(*args, **kwargs)

    def binomial(self, n, p):
        return int(self._gen.binomial(n, p))

    def geometric(self, p, size=None):
        return self._gen.geometric(p, size=size)

    def shuffle(self, x):
        self._gen.shuffle(x)

    def kernel_state(self):
        """Fresh 4-word uint64 state for the jitted xoshiro kernels."""
        s = self._gen.integers(0, 2**64, size=4, dtype=np.uint64)
        if not s.any():
            s[0] = np.uint64(1)
        return s


def make_rng(seed):
    """Root stream for a run; replica r should use split(root, r)."""
    return RngStream(int(seed))


def split(stream, child_index):
    return stream.split(child_index)


def component_sizes(cfg):
    """Connected-component sizes of an EdgeConfig as a ComponentState."""
    eu, ev = cfg.edge_arrays()
    big, singles = _kernels.component_sizes_arrays(cfg.n, eu, ev)
    big = np.sort(big)[::-1]
    return ComponentState(cfg.n, big, singles, _validate=False)


def component_labels(cfg):
    """Root label per vertex (vertices in one component share a label)."""
    eu, ev = cfg.edge_arrays()
    return _kernels.component_labels_arrays(cfg.n, eu, ev)


def log_weight(cfg, params):
    """Unnormalized log random-cluster weight of an edge configuration.

    |A| log p + (|E|-|A|) log(1-p) + c(A) log q with |E| = n(n-1)/2. Kept in
    log space because q^{c(A)} overflows quickly.
    """
    if cfg.n != params.n:
        raise ValueError("configuration and parameters disagree on n")
    p = params.p
    total_pairs = params.n * (params.n - 1) // 2
    na = cfg.num_edges
    c = component_sizes(cfg).num_components
    return na * math.log(p) + (total_pairs - na) * math.log1p(-p) + c * math.log(params.q)
