"""Scalar fixed-point and root solvers for the branching-process survival
probability, the critical walk intensity, and the predicted vacant giant
fraction, plus the algebraic identities tying them together.

All deterministic equations are solved by bisection: the residuals are
cheap, the brackets are certain, and Monte Carlo noise in the capacity
functional would break derivative-based methods.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class UStarResult:
    """Critical intensity estimate with the interval obtained by re-solving
    at the capacity functional's confidence band endpoints."""

    u_star: float
    ci_low: float
    ci_high: float


@dataclass
class CriticalSolution:
    """Bundle of the solved critical quantities for one mean-degree value."""

    rho: float
    xi: float
    u_star: UStarResult
    functional_at: dict
    solver_tolerance: float


def _bisect(f, lo: float, hi: float, tol: float, max_iter: int = 200) -> float:
    """Root of f on [lo, hi] assuming f(lo) > 0 > f(hi), to bracket width
    and residual at most tol."""
    flo = f(lo)
    fhi = f(hi)
    if flo < 0 or fhi > 0:
        raise ValueError(f"bisection bracket invalid: f({lo})={flo}, f({hi})={fhi}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol and abs(fm) <= tol:
            break
    return 0.5 * (lo + hi)


def solve_xi(rho: float, tol: float = DEFAULT_TOL) -> float:
    """Survival probability of the mean-``rho`` Poisson branching process:
    the unique solution in (0,1) of exp(-rho*x) = 1 - x.

    Raises for rho <= 1 (subcritical: no positive solution).
    """
    if rho <= 1.0:
        raise ValueError("subcritical: no positive solution")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    # g(x) = exp(-rho x) - 1 + x is < 0 on (0, xi) and > 0 on (xi, 1).
    g = lambda x: math.exp(-rho * x) - 1.0 + x
    return _bisect(lambda x: -g(x), 1e-16, 1.0 - 1e-16, tol)


def extinction_probability(rho: float, tol: float = DEFAULT_TOL) -> float:
    """1 - solve_xi(rho): the probability the branching process dies out."""
    return 1.0 - solve_xi(rho, tol)


def offspring_pgf(s: float, rho: float) -> float:
    """Probability generating function of the Poisson(rho) offspring law."""
    return math.exp(rho * (s - 1.0))


def survivor_offspring_pgf(s: float, rho: float, xi: float) -> float:
    """Generating function of the offspring count inside the subtree of
    lines of descent that never die out: (exp(rho*xi*(s-1)) - q)/(1-q)
    with q = exp(-rho*xi)."""
    q = math.exp(-rho * xi)
    return (math.exp(rho * xi * (s - 1.0)) - q) / (1.0 - q)


def survivor_pgf_inverse_derivative(t: float, rho: float, xi: float) -> float:
    """Closed form for the derivative of the inverse of the survivor
    offspring pgf: 1 / (rho*xi*t + rho*(1-xi))."""
    return 1.0 / (rho * xi * t + rho * (1.0 - xi))


def residual(u_functional_value: float, rho: float, xi: float) -> float:
    """rho*xi*E[exp(-u*cap)] + rho*(1-xi) - 1: positive below the critical
    intensity, negative above it."""
    return rho * xi * u_functional_value + rho * (1.0 - xi) - 1.0


def solve_u_star(rho: float, functional, tol_u: float = 1e-6, *, u_max_cap: float = 1024.0) -> UStarResult:
    """Critical intensity: the u at which rho*xi*F(u) + rho*(1-xi) = 1,
    where F(u) is the Monte Carlo capacity functional (an EstimateCI,
    decreasing in u under common random numbers).

    The returned interval re-solves the equation along the functional's
    ci95 band. Raises when the residual never changes sign up to
    ``u_max_cap`` (possible only if the functional is broken: at u=0 the
    residual is rho-1 > 0 and its large-u limit is rho*(1-xi)-1 < 0).
    """
    if rho <= 1.0:
        raise ValueError("subcritical: no critical intensity")
    xi = solve_xi(rho)

    def make_res(pick):
        return lambda u: residual(pick(functional(u)), rho, xi)

    res_mean = make_res(lambda e: e.mean)
    hi = 1.0
    while res_mean(hi) > 0.0:
        hi *= 2.0
        if hi > u_max_cap:
            raise ValueError("no sign change: capacity functional looks broken")
    u_star = _bisect(res_mean, 0.0, hi, tol_u)

    # Underestimated F crosses earlier (low end), overestimated F later (high end).
    res_low = make_res(lambda e: e.ci95_low)
    res_high = make_res(lambda e: e.ci95_high)
    lo_end = _bisect(res_low, 0.0, hi, tol_u)
    hi_end = hi
    while res_high(hi_end) > 0.0:
        hi_end *= 2.0
        if hi_end > u_max_cap:
            raise ValueError("no sign change at upper functional band")
    hi_end = _bisect(res_high, 0.0, hi_end, tol_u)
    ci_low, ci_high = sorted((lo_end, hi_end))
    return UStarResult(u_star=u_star, ci_low=ci_low, ci_high=ci_high)


def solve_zeta(u: float, rho: float, functional_value: float, tol: float = DEFAULT_TOL) -> float:
    """Giant-cluster equation of the vacant graph: the unique solution in
    (0,1) of exp(-zeta*mu) = 1 - zeta with
    mu = rho*xi*functional_value + rho*(1-xi).

    Requires mu > 1 (supercritical vacant graph, u below the critical
    intensity); callers should report 0 in the subcritical regime.
    """
    xi = solve_xi(rho, tol)
    mu = rho * xi * functional_value + rho * (1.0 - xi)
    if mu <= 1.0:
        raise ValueError("subcritical: zeta = 0 regime")
    g = lambda z: math.exp(-mu * z) - 1.0 + z
    return _bisect(lambda z: -g(z), 1e-16, 1.0 - 1e-16, tol)


def vacant_mean_degree(u: float, rho: float, functional_value: float) -> float:
    """Predicted mean degree of the exploration vacant graph:
    rho * (xi*F(u) + 1 - xi). Crosses 1 exactly at the critical intensity."""
    xi = solve_xi(rho)
    return rho * (xi * functional_value + 1.0 - xi)


def predicted_vacant_fraction(u: float, rho: float, functional_value: float) -> float:
    """Predicted walk vacant-set fraction of n: xi * F(u)."""
    if not (0.0 <= functional_value <= 1.0):
        raise ValueError("functional_value must lie in [0, 1]")
    return solve_xi(rho) * functional_value
