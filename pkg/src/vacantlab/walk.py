"""Simple random walk on a fixed connected component: stationary starts,
vacant-set tracking at the model's time scaling, hitting-time and escape
probability estimation, and a dense-solve spectral gap diagnostic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh
from scipy.sparse.linalg import eigsh

from .engine import EstimateCI, aggregate, as_generator
from .random_graph import ComponentLabeling, Graph, components, graph_from_edges

DENSE_SPECTRAL_CAP = 5000
_BLOCK = 1 << 15


def walk_time(u: float, rho: float, xi: float, n: int) -> int:
    """Number of walk steps carrying intensity u: round(u*rho*(2-xi)*xi*n).

    Round-to-nearest keeps the scaling symmetric and reproducible.
    """
    if u < 0:
        raise ValueError("u must be nonnegative")
    if not (0.0 < xi < 1.0):
        raise ValueError("xi must lie in (0, 1)")
    if rho <= 1.0:
        raise ValueError("rho must exceed 1")
    if n < 0:
        raise ValueError("n must be nonnegative")
    return int(math.floor(u * rho * (2.0 - xi) * xi * n + 0.5))


@dataclass(frozen=True)
class WalkConfig:
    """Walk experiment parameters at the model's time scaling."""

    u: float
    rho: float
    xi: float
    n: int

    def __post_init__(self):
        walk_time(self.u, self.rho, self.xi, self.n)  # validates ranges

    def steps(self) -> int:
        return walk_time(self.u, self.rho, self.xi, self.n)


def default_ball_radius(n: int, rho: float) -> int:
    """Ball radius used by the escape / vacancy diagnostics.

    The radius must balance two errors: a walk on the boundary must
    rarely return to the center (return probability decays like
    (rho*xi)^-r, so r >= log(50)/log(rho*xi) pushes it below ~2%), while
    the ball must stay a vanishing fraction of the component (its size
    grows like rho^r, capped at 5% of the giant). Both limits are
    measured choices: radius 2 from the coupling-style r = gamma*log(n)
    scaling biases the vacancy prediction by 0.06-0.1 at n = 5e4, far
    beyond the diagnostic bands, while radii in the 6-12 range keep it
    near 0.01.
    """
    from . import critical

    if rho <= 1.0:
        raise ValueError("rho must exceed 1")
    xi = critical.solve_xi(rho)
    cap = math.floor(math.log(max(0.05 * xi * n, 8.0)) / math.log(rho))
    growth = rho * xi
    want = math.ceil(math.log(50.0) / math.log(growth)) if growth > 1.0 else cap
    return max(3, min(want, cap))


@dataclass(frozen=True)
class VacantSet:
    """Unvisited-vertex mask over a host component after a walk segment."""

    component: np.ndarray
    membership: np.ndarray
    size: int

    def vacant_vertices(self) -> np.ndarray:
        return self.component[self.membership]


@dataclass(frozen=True)
class EscapeEstimate:
    vertex: int
    radius: int
    p_escape: EstimateCI
    pi_x: float
    boundary_empty: bool = False


@dataclass(frozen=True)
class HittingTailEstimate:
    vertex: int
    ts: np.ndarray
    tail: np.ndarray
    mean_hitting: float
    censored_fraction: float
    n_walks: int


@dataclass(frozen=True)
class VacancyCheck:
    vertex: int
    t: int
    empirical: float
    predicted: float
    p_escape: EscapeEstimate


def _component_weights(g: Graph, component: np.ndarray) -> np.ndarray:
    return g.degrees()[component].astype(np.float64)


def stationary_pi(g: Graph, component: np.ndarray, x: int) -> float:
    """Stationary weight of x on its component: degree(x) / sum of degrees."""
    total = float(g.degrees()[component].sum())
    return g.degree(x) / total


def stationary_start(g: Graph, component: np.ndarray, rng) -> int:
    """Vertex drawn with probability proportional to its degree
    (prefix-sum inversion of the degree-weighted distribution)."""
    if len(component) == 0:
        raise ValueError("component is empty")
    if len(component) == 1:
        return int(component[0])
    gen = as_generator(rng)
    weights = _component_weights(g, component)
    total = weights.sum()
    if total <= 0:
        raise ValueError("component of size > 1 with all degrees 0: disconnected input")
    cum = np.cumsum(weights)
    idx = int(np.searchsorted(cum, gen.random() * total, side="right"))
    return int(component[min(idx, len(component) - 1)])


def _walk_visit(g: Graph, start: int, t: int, gen) -> np.ndarray:
    """Vertices visited by a t-step walk from ``start`` (start included)."""
    visited_flag = np.zeros(g.n, dtype=bool)
    visited_flag[start] = True
    if t <= 0 or g.degree(start) == 0:
        return visited_flag
    indptr = g.indptr.tolist()
    indices = g.indices.tolist()
    flags = visited_flag
    cur = int(start)
    remaining = t
    while remaining > 0:
        block = gen.random(min(_BLOCK, remaining)).tolist()
        for unif in block:
            lo = indptr[cur]
            cur = indices[lo + int(unif * (indptr[cur + 1] - lo))]
            flags[cur] = True
        remaining -= len(block)
    return visited_flag


def run_walk_vacant(g: Graph, component: np.ndarray, t: int, rng) -> VacantSet:
    """Run a stationary-start walk for t uniform-neighbor steps and return
    the unvisited mask; the starting vertex counts as visited."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    gen = as_generator(rng)
    start = stationary_start(g, component, gen)
    visited = _walk_visit(g, start, t, gen)
    membership = ~visited[component]
    return VacantSet(component=np.asarray(component), membership=membership,
                     size=int(membership.sum()))


def run_walk_first_visits(g: Graph, component: np.ndarray, t: int, rng) -> np.ndarray:
    """First-visit times of a single t-step stationary-start walk, -1 for
    vertices never visited. Walk prefixes nest, so one run yields the
    vacant set at every earlier time: vacant(s) = (times < 0) | (times > s).
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    gen = as_generator(rng)
    start = stationary_start(g, component, gen)
    times = np.full(g.n, -1, dtype=np.int64)
    times[start] = 0
    if t == 0 or g.degree(start) == 0:
        return times
    indptr = g.indptr.tolist()
    indices = g.indices.tolist()
    tl = times
    cur = int(start)
    step = 0
    remaining = t
    while remaining > 0:
        block = gen.random(min(_BLOCK, remaining)).tolist()
        for unif in block:
            step += 1
            lo = indptr[cur]
            cur = indices[lo + int(unif * (indptr[cur + 1] - lo))]
            if tl[cur] < 0:
                tl[cur] = step
        remaining -= len(block)
    return times


def vacant_from_first_visits(component: np.ndarray, times: np.ndarray, s: int) -> VacantSet:
    """Vacant set at time s derived from recorded first-visit times."""
    tv = times[component]
    membership = (tv < 0) | (tv > s)
    return VacantSet(component=np.asarray(component), membership=membership,
                     size=int(membership.sum()))


def vacant_components(g: Graph, v: VacantSet) -> ComponentLabeling:
    """Connected components of the subgraph induced by the vacant vertices."""
    vac = v.vacant_vertices()
    k = len(vac)
    if k == 0:
        return components(graph_from_edges(0, np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)))
    lookup = np.full(g.n, -1, dtype=np.int64)
    lookup[vac] = np.arange(k)
    eu, ev = g.edge_arrays()
    keep = (lookup[eu] >= 0) & (lookup[ev] >= 0)
    sub = graph_from_edges(k, lookup[eu[keep]], lookup[ev[keep]])
    return components(sub)


def _stationary_starts(g: Graph, component: np.ndarray, n_walks: int, gen) -> np.ndarray:
    weights = _component_weights(g, component)
    cum = np.cumsum(weights)
    draws = gen.random(n_walks) * cum[-1]
    idx = np.minimum(np.searchsorted(cum, draws, side="right"), len(component) - 1)
    return component[idx].astype(np.int64)


def _step_all(g_indptr, g_indices, deg, cur, gen) -> np.ndarray:
    offs = (gen.random(len(cur)) * deg[cur]).astype(np.int64)
    return g_indices[g_indptr[cur] + offs]


def estimate_hitting_tail(g: Graph, component: np.ndarray, x: int, ts, n_walks: int, rng) -> HittingTailEstimate:
    """Empirical P[H_x > t] on the given time grid from stationary-start
    walks, plus the censored-exponential estimate of E[H_x].

    Walks are capped at max(ts); capped walks enter the mean as censored
    observations (total observed time / number of hits) and their
    fraction is reported.
    """
    if n_walks < 1:
        raise ValueError("n_walks must be positive")
    ts = np.asarray(sorted(int(t) for t in ts), dtype=np.int64)
    if len(ts) == 0:
        raise ValueError("need at least one time point")
    gen = as_generator(rng)
    cap = int(ts[-1])
    starts = _stationary_starts(g, component, n_walks, gen)
    hit_time = np.full(n_walks, cap + 1, dtype=np.int64)
    hit_time[starts == x] = 0
    active = hit_time > cap
    cur = starts[active]
    alive_idx = np.flatnonzero(active)
    indptr, indices, deg = g.indptr, g.indices, g.degrees()
    step = 0
    while step < cap and len(alive_idx) > 0:
        step += 1
        cur = _step_all(indptr, indices, deg, cur, gen)
        hits = cur == x
        if hits.any():
            hit_time[alive_idx[hits]] = step
            keep = ~hits
            alive_idx = alive_idx[keep]
            cur = cur[keep]
    tail = np.array([(hit_time > t).mean() for t in ts])
    censored = hit_time > cap
    n_hits = int((~censored).sum())
    observed = np.minimum(hit_time, cap).sum()
    mean_hit = float(observed / n_hits) if n_hits > 0 else math.inf
    return HittingTailEstimate(vertex=int(x), ts=ts, tail=tail, mean_hitting=mean_hit,
                               censored_fraction=float(censored.mean()), n_walks=n_walks)


def ball(g: Graph, x: int, r: int) -> tuple[np.ndarray, bool]:
    """Vertices within graph distance r of x (BFS), and whether the ball
    already covers the whole component (empty boundary)."""
    dist = {int(x): 0}
    frontier = [int(x)]
    depth = 0
    has_boundary = False
    while frontier and depth < r:
        depth += 1
        nxt = []
        for v in frontier:
            for w in g.neighbors(v).tolist():
                if w not in dist:
                    dist[w] = depth
                    nxt.append(w)
        frontier = nxt
    # one more level decides whether the boundary is empty
    for v in frontier:
        for w in g.neighbors(v).tolist():
            if w not in dist:
                has_boundary = True
                break
        if has_boundary:
            break
    members = np.fromiter(dist.keys(), dtype=np.int64)
    return members, not has_boundary


def escape_probability(g: Graph, component: np.ndarray, x: int, r: int, n_walks: int, rng) -> EscapeEstimate:
    """Monte Carlo estimate of the probability that a walk from x leaves
    the radius-r ball around x before returning to x. If the ball covers
    the whole component the estimate is 0 with the boundary flag set."""
    if r < 1:
        raise ValueError("r must be at least 1")
    if n_walks < 1:
        raise ValueError("n_walks must be positive")
    gen = as_generator(rng)
    pi_x = stationary_pi(g, component, x)
    members, covers = ball(g, x, r)
    if covers:
        return EscapeEstimate(vertex=int(x), radius=r, p_escape=aggregate([0.0] * n_walks),
                              pi_x=pi_x, boundary_empty=True)
    in_ball = np.zeros(g.n, dtype=bool)
    in_ball[members] = True
    indptr = g.indptr.tolist()
    indices = g.indices.tolist()
    in_ball_l = in_ball.tolist()
    outcomes = np.zeros(n_walks)
    block: list = []
    x = int(x)
    for i in range(n_walks):
        cur = x
        while True:
            if not block:
                block = gen.random(_BLOCK).tolist()
            unif = block.pop()
            lo = indptr[cur]
            cur = indices[lo + int(unif * (indptr[cur + 1] - lo))]
            if cur == x:
                break
            if not in_ball_l[cur]:
                outcomes[i] = 1.0
                break
    return EscapeEstimate(vertex=x, radius=r, p_escape=aggregate(outcomes),
                          pi_x=pi_x, boundary_empty=False)


def vacancy_prediction_check(g: Graph, component: np.ndarray, x: int, r: int, t: int,
                             n_walks: int, rng) -> VacancyCheck:
    """Compare the empirical probability that x is unvisited at time t
    against exp(-t * p_escape * pi(x)), the local tree-model prediction."""
    gen = as_generator(rng)
    esc = escape_probability(g, component, x, r, n_walks, gen)
    predicted = math.exp(-t * esc.p_escape.mean * esc.pi_x)
    starts = _stationary_starts(g, component, n_walks, gen)
    hit = starts == x
    cur = starts.copy()
    indptr, indices, deg = g.indptr, g.indices, g.degrees()
    alive_idx = np.flatnonzero(~hit)
    cur = cur[alive_idx]
    for _ in range(t):
        if len(alive_idx) == 0:
            break
        cur = _step_all(indptr, indices, deg, cur, gen)
        hits = cur == x
        if hits.any():
            hit[alive_idx[hits]] = True
            keep = ~hits
            alive_idx = alive_idx[keep]
            cur = cur[keep]
    empirical = float(1.0 - hit.mean())
    return VacancyCheck(vertex=int(x), t=int(t), empirical=empirical,
                        predicted=predicted, p_escape=esc)


def spectral_gap(g: Graph, component: np.ndarray, dense_cap: int = DENSE_SPECTRAL_CAP) -> float:
    """Smallest nonconstant eigenvalue of I - P on the component, where P
    is the walk transition operator: 1 minus the second largest eigenvalue
    of P. Computed on the degree-symmetrized operator; bipartite
    components legitimately report values above 1.
    """
    k = len(component)
    if k > dense_cap:
        raise ValueError("component too large for dense spectral solve")
    if k == 1:
        raise ValueError("spectral gap undefined on a single vertex")
    comp = np.asarray(component, dtype=np.int64)
    lookup = np.full(g.n, -1, dtype=np.int64)
    lookup[comp] = np.arange(k)
    eu, ev = g.edge_arrays()
    keep = (lookup[eu] >= 0) & (lookup[ev] >= 0)
    a, b = lookup[eu[keep]], lookup[ev[keep]]
    deg = g.degrees()[comp].astype(np.float64)
    dinv = 1.0 / np.sqrt(deg)
    if k <= 600:
        s = np.zeros((k, k))
        s[a, b] = dinv[a] * dinv[b]
        s[b, a] = s[a, b]
        evals = eigh(s, eigvals_only=True)
        second = evals[-2]
    else:
        from scipy.sparse import csr_matrix

        data = np.concatenate([dinv[a] * dinv[b], dinv[a] * dinv[b]])
        rows = np.concatenate([a, b])
        cols = np.concatenate([b, a])
        s = csr_matrix((data, (rows, cols)), shape=(k, k))
        evals = eigsh(s, k=2, which="LA", tol=1e-10, return_eigenvectors=False)
        second = np.sort(evals)[0]
    return float(1.0 - second)
