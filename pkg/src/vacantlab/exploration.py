"""The walk-that-builds-the-graph process: a random-walk-like exploration
that samples edges of the random graph the first time they are looked at,
jumping to a uniform vertex whenever the current component is exhausted.

The unvisited vertices of this process carry a fresh random-graph law on
their untouched pairs (the spatial Markov property), which
``vacant_snapshot`` materializes and ``er_law_check`` verifies
statistically.

Performance notes: the unvisited set is an array with swap-removal plus a
position index for O(1) deletion and uniform sampling; per-step edge
exploration skips over the unvisited array with geometric gaps, so one
step costs O(newly opened edges) amortized. A vertex explores all its
pending edges the first time it becomes current, and every visited vertex
has been current, so pending edges at the current vertex are exactly
those toward currently-unvisited vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from . import critical, walk
from ._gof import chisq_pvalue_counts_vs_probs
from .engine import as_generator, ks_uniform_pvalue
from .random_graph import Graph, sample_er

_BLOCK = 1 << 13


class _Uniforms:
    """Buffered scalar uniforms from a numpy generator."""

    __slots__ = ("_gen", "_buf", "_pos")

    def __init__(self, gen: np.random.Generator):
        self._gen = gen
        self._buf: list[float] = []
        self._pos = 0

    def next(self) -> float:
        if self._pos == len(self._buf):
            self._buf = self._gen.random(_BLOCK).tolist()
            self._pos = 0
        v = self._buf[self._pos]
        self._pos += 1
        return v


@dataclass
class ExplorationState:
    """Live state of the exploring process at time ``step``."""

    n: int
    p: float
    step: int
    current: int
    visited: np.ndarray
    explored_adjacency: list
    frontier_count: int
    jumps: int
    covered: bool
    _unvisited: list = field(repr=False)
    _position: list = field(repr=False)
    _frontier_flag: list = field(repr=False)
    _explored: list = field(repr=False)
    _draw: _Uniforms = field(repr=False)
    _log1mp: float = field(repr=False, default=0.0)

    @property
    def unvisited_count(self) -> int:
        return len(self._unvisited)

    def unvisited_vertices(self) -> np.ndarray:
        return np.array(sorted(self._unvisited), dtype=np.int64)


def _remove_unvisited(state: ExplorationState, v: int) -> None:
    pos = state._position[v]
    last = state._unvisited[-1]
    state._unvisited[pos] = last
    state._position[last] = pos
    state._unvisited.pop()
    state._position[v] = -1
    if state._frontier_flag[v]:
        state._frontier_flag[v] = False
        state.frontier_count -= 1


def _mark_visited(state: ExplorationState, v: int) -> None:
    if not state.visited[v]:
        state.visited[v] = True
        _remove_unvisited(state, v)


def _explore_current(state: ExplorationState) -> None:
    """Sample the pending edges at the current vertex: one Bernoulli(p)
    per currently-unvisited vertex, via geometric gap skipping."""
    v = state.current
    if state._explored[v]:
        return
    state._explored[v] = True
    unvisited = state._unvisited
    count = len(unvisited)
    if count == 0 or state.p <= 0.0:
        return
    adj = state.explored_adjacency
    flags = state._frontier_flag
    if state.p >= 1.0:
        hits = list(unvisited)
    else:
        hits = []
        log1mp = state._log1mp
        draw = state._draw.next
        i = -1
        while True:
            i += 1 + int(math.log(1.0 - draw()) / log1mp)
            if i >= count:
                break
            hits.append(unvisited[i])
    for w in hits:
        adj[v].append(w)
        adj[w].append(v)
        if not flags[w]:
            flags[w] = True
            state.frontier_count += 1


def new_exploration(n: int, rho: float, rng) -> ExplorationState:
    """Fresh exploration: a uniform starting vertex, marked visited, with
    its edges becoming explorable on the first advance."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if rho > n:
        raise ValueError("edge probability exceeds 1")
    gen = as_generator(rng)
    p = rho / n
    draw = _Uniforms(gen)
    start = int(gen.integers(0, n))
    visited = np.zeros(n, dtype=bool)
    visited[start] = True
    unvisited = [v for v in range(n) if v != start]
    position = list(range(n))
    position[start] = -1
    for pos, v in enumerate(unvisited):
        position[v] = pos
    state = ExplorationState(
        n=n,
        p=p,
        step=0,
        current=start,
        visited=visited,
        explored_adjacency=[[] for _ in range(n)],
        frontier_count=0,
        jumps=0,
        covered=(n == 1),
        _unvisited=unvisited,
        _position=position,
        _frontier_flag=[False] * n,
        _explored=[False] * n,
        _draw=draw,
        _log1mp=math.log1p(-p) if 0.0 < p < 1.0 else 0.0,
    )
    _explore_current(state)
    return state


def advance(state: ExplorationState) -> bool:
    """One step: explore pending edges at the current vertex, then either
    move to a uniform open neighbor (marking it visited) or, when the
    current vertex has no open neighbor or no unvisited vertex touches an
    open edge, jump to a uniform vertex. Returns False as a no-op flag
    when the state is already covered."""
    if state.covered:
        return False
    _explore_current(state)
    neighbors = state.explored_adjacency[state.current]
    draw = state._draw
    if neighbors and state.frontier_count > 0:
        nxt = neighbors[int(draw.next() * len(neighbors))]
    else:
        nxt = int(draw.next() * state.n)
        state.jumps += 1
    _mark_visited(state, nxt)
    state.current = nxt
    state.step += 1
    _explore_current(state)
    if len(state._unvisited) == 0:
        state.covered = True
    return True


def run_to(state: ExplorationState, t: int) -> ExplorationState:
    """Advance until step == t or the state is covered."""
    if t < state.step:
        raise ValueError("cannot advance backwards")
    while state.step < t and not state.covered:
        advance(state)
    return state


@dataclass(frozen=True)
class VacantGraphSnapshot:
    """Unvisited vertices at snapshot time with freshly materialized
    edges; conditionally on its vertex count, the graph is a plain
    random graph at the exploration's edge probability."""

    vertices: np.ndarray
    graph: Graph
    t: int


def vacant_snapshot(state: ExplorationState, rng) -> VacantGraphSnapshot:
    """Materialize the vacant graph on the unvisited vertices.

    Edges between unvisited vertices are provably unexplored, so each is
    drawn independently at the exploration's edge probability, from the
    dedicated stream given here: the exploration's own randomness is
    untouched and its trajectory does not depend on snapshots taken.
    Repeated snapshots are independent materializations; a snapshot is
    not fed back into continued exploration.
    """
    verts = state.unvisited_vertices()
    k = len(verts)
    if k == 0:
        sub = Graph(n=0, indptr=np.zeros(1, dtype=np.int64), indices=np.zeros(0, dtype=np.int64), m=0)
    else:
        sub = sample_er(k, state.p * k, rng)
    return VacantGraphSnapshot(vertices=verts, graph=sub, t=state.step)


def default_burn_in(n: int) -> int:
    """Extra steps run beyond the nominal walk time before snapshotting:
    ceil(log^3 n), which dominates the walk's mixing time yet is o(n)."""
    return int(math.ceil(math.log(max(n, 2)) ** 3))


@dataclass(frozen=True)
class ErLawReport:
    ks_pvalue_edges: float | None
    degree_chisq_pvalue: float | None
    mean_vacant_fraction: float
    mean_vacant_mean_degree: float
    n_trials: int
    edge_test_skipped: bool
    note: str = ""


def _binomial_pit(k: int, m: int, p: float, unif: float) -> float:
    """Randomized probability integral transform of a binomial count:
    P[K > k] + U * P[K = k], exactly Uniform[0,1] under the null."""
    sf = float(binom.sf(k, m, p))
    pmf = float(binom.pmf(k, m, p))
    return min(1.0, max(0.0, sf + unif * pmf))


def er_law_check(n: int, rho: float, u: float, n_trials: int, rng,
                 burn_in: int | None = None) -> ErLawReport:
    """Statistical check that the vacant graph is a fresh random graph.

    Runs ``n_trials`` explorations to walk_time(u) + burn_in, snapshots
    each, and tests (i) per-trial edge counts against their binomial law,
    pooled through a randomized PIT into a KS-uniformity p-value, and
    (ii) the pooled degree histogram against the per-trial binomial
    degree mixture by chi-square. Also reports the mean vacant vertex
    fraction and the mean vacant-graph degree, the quantity whose
    crossing of 1 locates the critical intensity.
    """
    if n_trials < 50:
        raise ValueError("need at least 50 trials")
    gen = as_generator(rng)
    if rho > 1.0:
        xi = critical.solve_xi(rho)
        t = walk.walk_time(u, rho, xi, n) + (default_burn_in(n) if burn_in is None else burn_in)
    else:
        t = default_burn_in(n) if burn_in is None else burn_in
    p = rho / n
    pit_values = []
    sizes = []
    degree_hist = np.zeros(1, dtype=np.int64)
    degree_mix = []  # per-trial vertex counts for the expected degree mixture
    for _ in range(n_trials):
        state = new_exploration(n, rho, gen)
        run_to(state, t)
        snap = vacant_snapshot(state, gen)
        big_n = len(snap.vertices)
        sizes.append(big_n)
        if p > 0.0 and big_n >= 2:
            pairs = big_n * (big_n - 1) // 2
            pit_values.append(_binomial_pit(snap.graph.m, pairs, p, float(gen.random())))
            degs = snap.graph.degrees()
            hi = int(degs.max(initial=0))
            if hi + 1 > len(degree_hist):
                degree_hist = np.concatenate([degree_hist, np.zeros(hi + 1 - len(degree_hist), dtype=np.int64)])
            degree_hist[: hi + 1] += np.bincount(degs, minlength=hi + 1)[: len(degree_hist)]
            degree_mix.append(big_n)
    mean_fraction = float(np.mean(sizes)) / n
    mean_degree = mean_fraction * rho
    if p <= 0.0 or not pit_values:
        return ErLawReport(ks_pvalue_edges=None, degree_chisq_pvalue=None,
                           mean_vacant_fraction=mean_fraction,
                           mean_vacant_mean_degree=mean_degree,
                           n_trials=n_trials, edge_test_skipped=True,
                           note="edge test skipped: p=0")
    ks_p = ks_uniform_pvalue(pit_values)
    kmax = len(degree_hist) - 1
    ks_grid = np.arange(kmax + 1)
    probs = np.zeros(kmax + 1)
    total_vertices = float(sum(degree_mix))
    for big_n in degree_mix:
        probs += (big_n / total_vertices) * binom.pmf(ks_grid, big_n - 1, p)
    chi_p = chisq_pvalue_counts_vs_probs(degree_hist, probs)
    return ErLawReport(ks_pvalue_edges=ks_p, degree_chisq_pvalue=chi_p,
                       mean_vacant_fraction=mean_fraction,
                       mean_vacant_mean_degree=mean_degree,
                       n_trials=n_trials, edge_test_skipped=False)
