"""Deterministic randomness, trial orchestration, and the small set of
statistical aggregations shared by the simulation modules.

Random streams are immutable (root_seed, stream_id) values. A stream is
turned into a private counter-based generator (Philox, keyed through
numpy's SeedSequence entropy mixing) at the point of use, so independent
trials never share generator state and any trial can be replayed from its
stream alone.
"""

from __future__ import annotations

import math
import os
import pickle
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import kolmogorov
from scipy.stats import binomtest

THREADS_ENV_VAR = "VACANTLAB_THREADS"

_UINT64_MASK = (1 << 64) - 1


class TrialError(RuntimeError):
    """A trial function raised; carries the index of the failing trial."""

    def __init__(self, trial_index: int, message: str):
        super().__init__(f"trial {trial_index} failed: {message}")
        self.trial_index = trial_index


@dataclass(frozen=True)
class RngStream:
    """Immutable seed for one independent random stream.

    Distinct (root_seed, stream_id, path) triples map to distinct Philox
    keys via SeedSequence, whose entropy-mixing function is fixed by numpy
    across releases; equal triples always reproduce the same sequence.
    ``path`` holds spawn tags of derived sub-streams.
    """

    root_seed: int
    stream_id: int
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        for name in ("root_seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= v <= _UINT64_MASK):
                raise ValueError(f"{name} must be a 64-bit unsigned integer, got {v}")

    def _seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(
            entropy=self.root_seed, spawn_key=(self.stream_id, *self.path)
        )

    def generator(self) -> np.random.Generator:
        """Fresh private generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(self._seed_sequence()))

    def substream(self, *tags: int) -> "RngStream":
        """Derived stream for an internal purpose; independent of the parent
        and of any sibling with a different tag sequence."""
        return RngStream(self.root_seed, self.stream_id, self.path + tags)

    def entropy64(self) -> int:
        """64-bit digest of this stream's identity (used to key trial families)."""
        return int(self._seed_sequence().generate_state(1, np.uint64)[0])


def derive_stream(root_seed: int, stream_id: int) -> RngStream:
    """Stream for (root_seed, stream_id); same inputs always give the same
    sequence, different inputs give statistically independent sequences."""
    return RngStream(int(root_seed), int(stream_id))


def as_generator(rng: "RngStream | np.random.Generator") -> np.random.Generator:
    """Accept either a stream value or a live generator.

    A stream is instantiated fresh (one-shot operations); a generator is
    returned as-is so stepwise callers keep consuming the same sequence.
    """
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    raise TypeError(f"expected RngStream or numpy Generator, got {type(rng)!r}")


@dataclass(frozen=True)
class EstimateCI:
    """Monte Carlo estimate with a normal-approximation 95% interval."""

    mean: float
    std_error: float
    n_samples: int
    ci95_low: float
    ci95_high: float

    @property
    def degenerate(self) -> bool:
        """True when the interval carries no information (single sample)."""
        return self.n_samples < 2

    def half_width(self) -> float:
        return 1.96 * self.std_error


def aggregate(samples) -> EstimateCI:
    """Mean, standard error (sample sd / sqrt(n)) and 95% normal CI.

    Sums are compensated (math.fsum). A single sample reports std_error 0
    and a degenerate interval rather than NaN.
    """
    xs = [float(x) for x in samples]
    n = len(xs)
    if n == 0:
        raise ValueError("no samples")
    mean = math.fsum(xs) / n
    if n == 1:
        return EstimateCI(mean, 0.0, 1, mean, mean)
    var = math.fsum((x - mean) ** 2 for x in xs) / (n - 1)
    se = math.sqrt(var) / math.sqrt(n)
    return EstimateCI(mean, se, n, mean - 1.96 * se, mean + 1.96 * se)


def ks_uniform_pvalue(samples) -> float:
    """Kolmogorov-Smirnov p-value of the samples against Uniform[0,1],
    using the asymptotic Kolmogorov distribution. Sort-invariant."""
    xs = np.asarray(list(samples), dtype=float)
    if xs.size == 0:
        raise ValueError("no samples")
    if np.any(xs < 0.0) or np.any(xs > 1.0):
        raise ValueError("samples must lie in [0, 1]")
    xs = np.sort(xs)
    n = xs.size
    grid = np.arange(1, n + 1, dtype=float)
    d_plus = np.max(grid / n - xs)
    d_minus = np.max(xs - (grid - 1.0) / n)
    d = max(d_plus, d_minus)
    return float(kolmogorov(math.sqrt(n) * d))


def binomial_two_sided_pvalue(k: int, m: int, p: float, *, exact_threshold: int = 100_000) -> float:
    """Two-sided p-value for k successes in m trials at success rate p.

    Exact (minimum-likelihood) method up to ``exact_threshold`` trials,
    normal approximation with continuity correction above it.
    """
    k = int(k)
    m = int(m)
    if m < 0 or not (0 <= k <= m):
        raise ValueError(f"need 0 <= k <= m, got k={k}, m={m}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"need 0 <= p <= 1, got p={p}")
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    if p == 1.0:
        return 1.0 if k == m else 0.0
    if m == 0:
        return 1.0
    if m <= exact_threshold:
        return float(binomtest(k, m, p).pvalue)
    mu = m * p
    sigma = math.sqrt(m * p * (1.0 - p))
    z = (abs(k - mu) - 0.5) / sigma
    if z <= 0.0:
        return 1.0
    return float(min(1.0, math.erfc(z / math.sqrt(2.0))))


def worker_count(n_trials: int, max_workers: int | None = None) -> int:
    """Effective worker count: capped by VACANTLAB_THREADS when set,
    otherwise all available cores."""
    env = os.environ.get(THREADS_ENV_VAR)
    cap = os.cpu_count() or 1
    if env is not None:
        env_val = int(env)
        if env_val < 1:
            raise ValueError(f"{THREADS_ENV_VAR} must be a positive integer, got {env!r}")
        cap = env_val
    if max_workers is not None:
        cap = min(cap, max_workers)
    return max(1, min(cap, n_trials))


def trial_stream(root: RngStream, trial_index: int) -> RngStream:
    """Stream of one trial in the family keyed by ``root``; stream_id is the
    trial index so trials are replayable individually."""
    return RngStream(root.entropy64(), int(trial_index))


def _run_one(job):
    trial_fn, config, stream, idx = job
    try:
        return ("ok", idx, trial_fn(config, stream))
    except Exception as exc:  # noqa: BLE001 - re-raised with index by caller
        return ("err", idx, exc)


def run_trials(config, n_trials: int, trial_fn, *, root: RngStream, max_workers: int | None = None) -> list:
    """Run ``trial_fn(config, stream)`` for trials 0..n_trials-1.

    The output list is ordered by trial index and is identical for any
    degree of parallelism: trial i always receives the stream
    (entropy64(root), i) regardless of scheduling. On failure the error of
    the smallest failing trial index is raised as TrialError.
    """
    if n_trials < 0:
        raise ValueError("n_trials must be nonnegative")
    if n_trials == 0:
        return []
    jobs = [(trial_fn, config, trial_stream(root, i), i) for i in range(n_trials)]
    workers = worker_count(n_trials, max_workers)
    parallel = workers > 1
    if parallel:
        try:
            pickle.dumps((trial_fn, config))
        except Exception:
            parallel = False  # unpicklable work runs serially; results are identical
    if parallel:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_one, jobs, chunksize=max(1, n_trials // (4 * workers))))
    else:
        outcomes = [_run_one(job) for job in jobs]
    results: list = [None] * n_trials
    first_err: tuple[int, Exception] | None = None
    for status, idx, payload in outcomes:
        if status == "ok":
            results[idx] = payload
        elif first_err is None or idx < first_err[0]:
            first_err = (idx, payload)
    if first_err is not None:
        idx, exc = first_err
        raise TrialError(idx, repr(exc)) from exc
    return results
