"""Composite experiments: intensity sweeps of the vacant component
structure, the exploration-vs-walk size relation, second-component
scaling, and the per-vertex vacancy / hitting-tail diagnostics.

Every experiment is a pure function of (parameters, root stream); trials
parallelize through engine.run_trials and stay byte-identical across
worker counts.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import critical, exploration, gw, walk
from .engine import RngStream, as_generator, run_trials
from .random_graph import components, giant_vertices, sample_er

DEFAULT_N_TREES = 100_000
DEFAULT_RADIUS = gw.DEFAULT_RADIUS

SWEEP_COLUMNS = [
    "n", "rho", "u", "trial", "seed", "t_steps", "giant_size", "vacant_size",
    "c1_vacant", "c2_vacant", "zeta_predicted", "vacant_fraction_predicted",
]


@dataclass(frozen=True)
class SweepRecord:
    n: int
    rho: float
    u: float
    trial: int
    seed: int
    t_steps: int
    giant_size: int
    vacant_size: int
    c1_vacant: int
    c2_vacant: int
    zeta_predicted: float
    vacant_fraction_predicted: float

    def validate(self) -> None:
        ok = (self.c2_vacant <= self.c1_vacant <= self.vacant_size
              <= self.giant_size <= self.n)
        if not ok:
            raise ValueError(f"ordering invariant violated: {self}")


def sweep_records_to_csv(records: list[SweepRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for rec in records:
        d = asdict(rec)
        writer.writerow([d[c] for c in SWEEP_COLUMNS])
    return buf.getvalue()


def sweep_records_from_csv(text: str) -> list[SweepRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if rows[0] != SWEEP_COLUMNS:
        raise ValueError("unexpected sweep CSV header")
    types = {f.name: f.type for f in fields(SweepRecord)}
    out = []
    for row in rows[1:]:
        kwargs = {}
        for col, val in zip(SWEEP_COLUMNS, row):
            kwargs[col] = float(val) if types[col] == "float" else int(val)
        out.append(SweepRecord(**kwargs))
    return out


@dataclass(frozen=True)
class _SweepTrialConfig:
    n: int
    rho: float
    u_grid: tuple
    t_by_u: tuple
    zeta_by_u: tuple
    fraction_by_u: tuple


def _sweep_trial(cfg: _SweepTrialConfig, stream: RngStream) -> list[tuple]:
    g = sample_er(cfg.n, cfg.rho, stream.substream(0))
    labeling = components(g)
    comp = giant_vertices(labeling)
    giant_size = len(comp)
    t_max = max(cfg.t_by_u)
    times = walk.run_walk_first_visits(g, comp, t_max, stream.substream(1))
    rows = []
    for u, t, zeta_p, frac_p in zip(cfg.u_grid, cfg.t_by_u, cfg.zeta_by_u, cfg.fraction_by_u):
        vac = walk.vacant_from_first_visits(comp, times, t)
        lab = walk.vacant_components(g, vac)
        c1 = int(lab.sizes[0]) if lab.n_components > 0 else 0
        c2 = int(lab.sizes[1]) if lab.n_components > 1 else 0
        rows.append((u, t, giant_size, vac.size, c1, c2, zeta_p, frac_p,
                     stream.root_seed))
    return rows


def shared_capacity_samples(rho: float, root: RngStream, n_trees: int = DEFAULT_N_TREES,
                            radius: int = DEFAULT_RADIUS) -> gw.CapacitySamples:
    """Capacity sample set reused across a whole experiment, so that the
    functional is evaluated with common random numbers at every u."""
    return gw.capacity_samples(rho, radius, n_trees, root.substream(901))


def sweep_vacant_structure(n: int, rho: float, u_grid, n_trials: int, root: RngStream,
                           *, n_trees: int = DEFAULT_N_TREES, radius: int = DEFAULT_RADIUS,
                           caps: gw.CapacitySamples | None = None,
                           max_workers: int | None = None) -> list[SweepRecord]:
    """Per (u, trial): sample a graph, walk its giant component to the
    intensity's time, and record the vacant component structure next to
    the tree-model predictions (functional evaluated once on a shared
    capacity sample set)."""
    u_grid = [float(u) for u in u_grid]
    if any(u < 0 for u in u_grid) or sorted(u_grid) != u_grid:
        raise ValueError("u_grid must be nonnegative and ascending")
    xi = critical.solve_xi(rho)
    if caps is None:
        caps = shared_capacity_samples(rho, root, n_trees, radius)
    zeta_by_u = []
    fraction_by_u = []
    t_by_u = []
    for u in u_grid:
        f_u = caps.functional(u).mean
        mu = rho * (xi * f_u + 1.0 - xi)
        zeta_by_u.append(critical.solve_zeta(u, rho, f_u) if mu > 1.0 else 0.0)
        fraction_by_u.append(xi * f_u)
        t_by_u.append(walk.walk_time(u, rho, xi, n))
    cfg = _SweepTrialConfig(n=n, rho=rho, u_grid=tuple(u_grid), t_by_u=tuple(t_by_u),
                            zeta_by_u=tuple(zeta_by_u), fraction_by_u=tuple(fraction_by_u))
    per_trial = run_trials(cfg, n_trials, _sweep_trial, root=root, max_workers=max_workers)
    records = []
    for ui, u in enumerate(u_grid):
        for trial, rows in enumerate(per_trial):
            (u_, t, giant_size, vac_size, c1, c2, zeta_p, frac_p, seed) = rows[ui]
            rec = SweepRecord(n=n, rho=rho, u=u_, trial=trial, seed=seed, t_steps=t,
                              giant_size=giant_size, vacant_size=vac_size,
                              c1_vacant=c1, c2_vacant=c2, zeta_predicted=zeta_p,
                              vacant_fraction_predicted=frac_p)
            rec.validate()
            records.append(rec)
    return records


@dataclass(frozen=True)
class SizeRelationReport:
    mean_vbar: float
    mean_v: float
    gap: float
    predicted_gap: float
    n: int
    rho: float
    u: float
    n_trials: int


@dataclass(frozen=True)
class _SizeTrialConfig:
    n: int
    rho: float
    t_walk: int
    t_explore: int
    mode: str


def _size_trial(cfg: _SizeTrialConfig, stream: RngStream) -> int:
    if cfg.mode == "explore":
        state = exploration.new_exploration(cfg.n, cfg.rho, stream.substream(0))
        exploration.run_to(state, cfg.t_explore)
        return state.unvisited_count
    g = sample_er(cfg.n, cfg.rho, stream.substream(0))
    comp = giant_vertices(components(g))
    vac = walk.run_walk_vacant(g, comp, cfg.t_walk, stream.substream(1))
    return vac.size


def size_relation_check(n: int, rho: float, u: float, n_trials: int, root: RngStream,
                        *, burn_in: int | None = None,
                        max_workers: int | None = None) -> SizeRelationReport:
    """Independent exploration and walk runs at the same intensity; their
    mean vacant sizes should differ by the mass of the non-giant
    components, (1-xi)*n."""
    xi = critical.solve_xi(rho)
    t = walk.walk_time(u, rho, xi, n)
    extra = exploration.default_burn_in(n) if burn_in is None else burn_in
    cfg_e = _SizeTrialConfig(n=n, rho=rho, t_walk=t, t_explore=t + extra, mode="explore")
    cfg_w = _SizeTrialConfig(n=n, rho=rho, t_walk=t, t_explore=t + extra, mode="walk")
    vbars = run_trials(cfg_e, n_trials, _size_trial, root=root.substream(1), max_workers=max_workers)
    vs = run_trials(cfg_w, n_trials, _size_trial, root=root.substream(2), max_workers=max_workers)
    mean_vbar = float(np.mean(vbars))
    mean_v = float(np.mean(vs))
    return SizeRelationReport(mean_vbar=mean_vbar, mean_v=mean_v,
                              gap=mean_vbar - mean_v, predicted_gap=(1.0 - xi) * n,
                              n=n, rho=rho, u=u, n_trials=n_trials)


@dataclass(frozen=True)
class SecondComponentReport:
    n: int
    rho: float
    u: float
    n_trials: int
    supercritical: bool
    max_tracked: int
    ratio_log7n: float
    ratio_n: float
    max_c1: int
    max_c2: int


def second_component_check(n: int, rho: float, u: float, n_trials: int, root: RngStream,
                           *, n_trees: int = DEFAULT_N_TREES, radius: int = DEFAULT_RADIUS,
                           caps: gw.CapacitySamples | None = None,
                           max_workers: int | None = None) -> SecondComponentReport:
    """Largest small-scale vacant component over trials: the second
    largest below the critical intensity, the largest above it, with its
    ratio to log^7(n) and to n."""
    xi = critical.solve_xi(rho)
    if caps is None:
        caps = shared_capacity_samples(rho, root, n_trees, radius)
    f_u = caps.functional(u).mean
    mu = rho * (xi * f_u + 1.0 - xi)
    supercritical = mu > 1.0
    records = sweep_vacant_structure(n, rho, [u], n_trials, root, caps=caps,
                                     max_workers=max_workers)
    max_c1 = max(r.c1_vacant for r in records)
    max_c2 = max(r.c2_vacant for r in records)
    tracked = max_c2 if supercritical else max_c1
    return SecondComponentReport(n=n, rho=rho, u=u, n_trials=n_trials,
                                 supercritical=supercritical, max_tracked=tracked,
                                 ratio_log7n=tracked / math.log(n) ** 7,
                                 ratio_n=tracked / n, max_c1=max_c1, max_c2=max_c2)


@dataclass(frozen=True)
class VertexVacancyRow:
    vertex: int
    degree: int
    pi_x: float
    p_escape: float
    empirical_vacancy: float
    predicted_vacancy: float
    abs_error: float
    tail_ks_distance: float
    censored_fraction: float


@dataclass(frozen=True)
class HittingVacancyReport:
    n: int
    rho: float
    u: float
    t_steps: int
    radius: int
    rows: list
    mean_abs_error: float


def hitting_and_vacancy_report(n: int, rho: float, u: float, n_vertices_probed: int,
                               root: RngStream, *, n_walks: int = 2000,
                               radius: int | None = None,
                               n_escape_walks: int | None = None) -> HittingVacancyReport:
    """Probe uniformly chosen giant vertices: empirical vacancy at the
    intensity's time versus the escape-probability prediction, plus the
    distance of the hitting tail from its exponential fit over a grid
    inside the probed window."""
    if n > 100_000:
        raise ValueError("n capped at 1e5 for the probing report")
    gen = as_generator(root.substream(3))
    xi = critical.solve_xi(rho)
    t = walk.walk_time(u, rho, xi, n)
    r = walk.default_ball_radius(n, rho) if radius is None else radius
    g = sample_er(n, rho, root.substream(0))
    comp = giant_vertices(components(g))
    chosen = comp[gen.integers(0, len(comp), n_vertices_probed)]
    rows = []
    n_esc = n_walks if n_escape_walks is None else n_escape_walks
    for i, x in enumerate(np.asarray(chosen, dtype=np.int64)):
        sub = root.substream(4, i)
        esc = walk.escape_probability(g, comp, int(x), r, n_esc, sub.substream(0))
        ts = np.unique(np.maximum(1, np.round(np.linspace(t / 10, t, 10)).astype(np.int64)))
        tailres = walk.estimate_hitting_tail(g, comp, int(x), ts, n_walks, sub.substream(1))
        empirical = float(tailres.tail[-1])
        predicted = math.exp(-t * esc.p_escape.mean * esc.pi_x)
        fit = np.exp(-tailres.ts / tailres.mean_hitting)
        ks_dist = float(np.max(np.abs(tailres.tail - fit)))
        rows.append(VertexVacancyRow(
            vertex=int(x), degree=g.degree(int(x)), pi_x=esc.pi_x,
            p_escape=esc.p_escape.mean, empirical_vacancy=empirical,
            predicted_vacancy=predicted,
            abs_error=abs(empirical - predicted),
            tail_ks_distance=ks_dist,
            censored_fraction=tailres.censored_fraction))
    mean_err = float(np.mean([row.abs_error for row in rows])) if rows else 0.0
    return HittingVacancyReport(n=n, rho=rho, u=u, t_steps=t, radius=r, rows=rows,
                                mean_abs_error=mean_err)


@dataclass(frozen=True)
class _CrossingTrialConfig:
    n: int
    rho: float
    t: int


def _crossing_trial(cfg: _CrossingTrialConfig, stream: RngStream) -> int:
    state = exploration.new_exploration(cfg.n, cfg.rho, stream.substream(0))
    exploration.run_to(state, cfg.t)
    return state.unvisited_count


def exploration_mean_degree_at(n: int, rho: float, u: float, n_trials: int,
                               root: RngStream, *, burn_in: int | None = None,
                               max_workers: int | None = None) -> float:
    """Mean vacant-graph degree |unvisited| * rho / n after exploring to
    the intensity's time plus burn-in."""
    xi = critical.solve_xi(rho)
    t = walk.walk_time(u, rho, xi, n) + (exploration.default_burn_in(n) if burn_in is None else burn_in)
    cfg = _CrossingTrialConfig(n=n, rho=rho, t=t)
    sizes = run_trials(cfg, n_trials, _crossing_trial, root=root, max_workers=max_workers)
    return float(np.mean(sizes)) * rho / n


def empirical_u_star_crossing(n: int, rho: float, n_trials: int, root: RngStream,
                              *, tol_u: float = 0.01, u_hi: float = 4.0,
                              burn_in: int | None = None,
                              max_workers: int | None = None) -> float:
    """Intensity at which the exploration's mean vacant degree crosses 1,
    located by bisection with per-point independent trials (the second,
    simulation-only route to the critical intensity)."""
    lo, hi = 0.0, u_hi
    point = 0
    dlo = exploration_mean_degree_at(n, rho, 0.0, n_trials, root.substream(10, point),
                                     burn_in=burn_in, max_workers=max_workers)
    if dlo <= 1.0:
        raise ValueError("vacant degree already below 1 at u=0")
    while hi - lo > tol_u:
        point += 1
        mid = 0.5 * (lo + hi)
        d = exploration_mean_degree_at(n, rho, mid, n_trials, root.substream(10, point),
                                       burn_in=burn_in, max_workers=max_workers)
        if d > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
