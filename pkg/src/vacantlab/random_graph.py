"""Sparse random graph sampling (edge probability rho/n), connected
components with a deterministic tie-break, and the typicality checks used
to qualify a sampled instance before walk experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components as _cc

from . import critical
from .engine import as_generator

DEFAULT_SMALL_COMPONENT_CONSTANT = 30.0

_GAP_CHUNK = 1 << 14


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph in compressed adjacency form.

    ``indices[indptr[x]:indptr[x+1]]`` is the sorted neighbor list of x.
    Symmetric, loop-free, duplicate-free; sum of degrees equals 2m.
    """

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    m: int

    def degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degree(self, x: int) -> int:
        return int(self.indptr[x + 1] - self.indptr[x])

    def neighbors(self, x: int) -> np.ndarray:
        return self.indices[self.indptr[x] : self.indptr[x + 1]]

    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Edges as (u, v) arrays with u < v."""
        owners = np.repeat(np.arange(self.n, dtype=np.int64), self.degrees())
        keep = owners < self.indices
        return owners[keep], self.indices[keep].astype(np.int64)

    def to_sparse(self) -> csr_matrix:
        data = np.ones(len(self.indices), dtype=np.int8)
        return csr_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))


def graph_from_edges(n: int, u: np.ndarray, v: np.ndarray) -> Graph:
    """Build a Graph from endpoint arrays of distinct undirected edges."""
    u = np.asarray(u, dtype=np.int64)
    v = np.asarray(v, dtype=np.int64)
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    order = np.lexsort((cols, rows))
    rows = rows[order]
    cols = cols[order]
    deg = np.bincount(rows, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=indptr[1:])
    return Graph(n=n, indptr=indptr, indices=cols, m=len(u))


@dataclass(frozen=True)
class ComponentLabeling:
    """Connected components in canonical order: ids are assigned by
    decreasing size, ties broken by the smallest contained vertex, so
    component 0 is always the giant under the documented tie-break."""

    label: np.ndarray
    sizes: np.ndarray
    members: list = field(repr=False)

    @property
    def n_components(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class TypicalityReport:
    giant_size_ok: bool
    small_components_ok: bool
    max_degree_ok: bool
    giant_size: int
    xi_n: float
    max_degree: int
    largest_small_component: int

    @property
    def all_ok(self) -> bool:
        return self.giant_size_ok and self.small_components_ok and self.max_degree_ok


def _pair_from_index(k: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Decode lexicographic pair indices k in [0, n(n-1)/2) to (i, j), i<j.

    Row i starts at offset S(i) = i*(2n-i-1)/2; invert with an integer
    sqrt and correct the off-by-one cases exactly.
    """
    k = k.astype(np.int64)
    twon1 = 2 * n - 1
    disc = twon1 * twon1 - 8 * k
    i = (twon1 - np.sqrt(disc.astype(np.float64)).astype(np.int64)) // 2
    # float sqrt can be off by one near row boundaries; fix both directions
    for _ in range(2):
        start = i * (2 * n - i - 1) // 2
        too_big = start > k
        i = np.where(too_big, i - 1, i)
        start = i * (2 * n - i - 1) // 2
        next_start = (i + 1) * (2 * n - i - 2) // 2
        too_small = k >= next_start
        i = np.where(too_small, i + 1, i)
    start = i * (2 * n - i - 1) // 2
    j = i + 1 + (k - start)
    return i, j


def sample_er(n: int, rho: float, rng) -> Graph:
    """Sample the n-vertex random graph with every edge present
    independently with probability rho/n.

    Generation skips over the lexicographic edge enumeration with
    geometric gaps, so cost is O(n + m) rather than O(n^2).
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if rho < 0:
        raise ValueError("rho must be nonnegative")
    if rho > n:
        raise ValueError("edge probability exceeds 1")
    gen = as_generator(rng)
    p = rho / n
    total = n * (n - 1) // 2
    if p <= 0.0 or total == 0:
        empty = np.zeros(0, dtype=np.int64)
        return graph_from_edges(n, empty, empty)
    if p >= 1.0:
        k = np.arange(total, dtype=np.int64)
        i, j = _pair_from_index(k, n)
        return graph_from_edges(n, i, j)
    hits = []
    pos = -1
    # expected remaining hits plus slack, so tiny graphs do not pay for a
    # full-size chunk of geometric draws
    chunk = int(min(_GAP_CHUNK, total * p * 1.25 + 16))
    while True:
        gaps = gen.geometric(p, size=chunk)
        jumps = np.cumsum(gaps)
        ks = pos + jumps
        inside = ks < total
        if not inside.all():
            hits.append(ks[inside])
            break
        hits.append(ks)
        pos = int(ks[-1])
        chunk = min(_GAP_CHUNK, chunk * 2)
    k = np.concatenate(hits) if hits else np.zeros(0, dtype=np.int64)
    i, j = _pair_from_index(k, n)
    return graph_from_edges(n, i, j)


def components(g: Graph) -> ComponentLabeling:
    """Exact connected components, relabeled canonically (size-descending,
    ties by smallest contained vertex)."""
    if g.n == 0:
        return ComponentLabeling(np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64), [])
    _, raw = _cc(g.to_sparse(), directed=False)
    raw_sizes = np.bincount(raw)
    n_comp = len(raw_sizes)
    # scipy labels components by smallest contained vertex order already;
    # reorder by (-size, label) which is exactly (-size, min vertex).
    order = np.lexsort((np.arange(n_comp), -raw_sizes))
    relabel = np.empty(n_comp, dtype=np.int64)
    relabel[order] = np.arange(n_comp)
    label = relabel[raw]
    sizes = raw_sizes[order]
    by_vertex = np.argsort(label, kind="stable")
    bounds = np.cumsum(sizes)
    members = np.split(by_vertex, bounds[:-1])
    return ComponentLabeling(label=label, sizes=sizes, members=members)


def giant(labeling: ComponentLabeling) -> int:
    """Id of the largest component under the canonical tie-break."""
    if labeling.n_components == 0:
        raise ValueError("empty labeling")
    return 0


def giant_vertices(labeling: ComponentLabeling) -> np.ndarray:
    return labeling.members[giant(labeling)]


def typicality(
    g: Graph,
    labeling: ComponentLabeling,
    rho: float,
    small_comp_constant: float = DEFAULT_SMALL_COMPONENT_CONSTANT,
) -> TypicalityReport:
    """Check the three typical-instance predicates: giant size within
    n^(3/4) of xi*n, all other components simple (edges <= vertices) and
    of size at most small_comp_constant * log(n), and max degree at most
    log(n). Logs are natural.
    """
    if g.n < 2:
        raise ValueError("n must be at least 2")
    xi = critical.solve_xi(rho)
    xi_n = xi * g.n
    giant_size = int(labeling.sizes[0])
    giant_size_ok = abs(giant_size - xi_n) <= g.n ** 0.75
    degrees = g.degrees()
    max_degree = int(degrees.max()) if g.n else 0
    max_degree_ok = max_degree <= math.log(g.n)
    small_cap = small_comp_constant * math.log(g.n)
    small_ok = True
    largest_small = 0
    # half the degree sum of a whole component is its edge count
    comp_degree_sum = np.bincount(labeling.label, weights=degrees.astype(np.float64))
    for cid in range(1, labeling.n_components):
        size = int(labeling.sizes[cid])
        largest_small = max(largest_small, size)
        if size > small_cap or comp_degree_sum[cid] / 2 > size:
            small_ok = False
    return TypicalityReport(
        giant_size_ok=bool(giant_size_ok),
        small_components_ok=bool(small_ok),
        max_degree_ok=bool(max_degree_ok),
        giant_size=giant_size,
        xi_n=xi_n,
        max_degree=max_degree,
        largest_small_component=largest_small,
    )


def mean_giant_degree(g: Graph, labeling: ComponentLabeling) -> float:
    """Average degree over the giant component's vertices."""
    verts = giant_vertices(labeling)
    if len(verts) == 0:
        raise ValueError("giant component is empty")
    return float(g.degrees()[verts].sum()) / len(verts)


def dump_edge_list(g: Graph, path) -> None:
    """Write the graph as text: header "n m", then one "u v" line per edge."""
    u, v = g.edge_arrays()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{g.n} {g.m}\n")
        for a, b in zip(u.tolist(), v.tolist()):
            fh.write(f"{a} {b}\n")


def load_edge_list(path) -> Graph:
    """Read a graph written by dump_edge_list."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        n, m = int(header[0]), int(header[1])
        us = np.empty(m, dtype=np.int64)
        vs = np.empty(m, dtype=np.int64)
        for i in range(m):
            a, b = fh.readline().split()
            us[i], vs[i] = int(a), int(b)
    return graph_from_edges(n, us, vs)
