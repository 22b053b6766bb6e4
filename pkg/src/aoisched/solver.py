"""Numerical subroutines: target-spacing program, queueing formulas, cost bound.

The target spacing per AoI UE minimises

    sum_l  rho_l/2 * ( T_l + c_l / T_l ),     c_l = (1 - q_l) / q_l**2

subject to  sum_l 1/(p_l T_l) <= zeta  and  T_l >= 1.  The stationarity
condition gives, for multiplier mu >= 0,

    T_l(mu) = max(1, sqrt(c_l + 2 mu / (rho_l p_l)))

and the budget function sum_l 1/(p_l T_l(mu)) is nonincreasing in mu, so a
monotone bisection on mu solves the program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import Scenario, ScenarioError, UeConfig, Variant, validate

# Constraint residual tolerance and mu-interval width for the bisection.
RESIDUAL_TOL = 1e-9
MU_TOL = 1e-12
MAX_ITER = 200


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class TStarSolution:
    t_star: dict[int, float]
    mu: float
    binding: bool


@dataclass(frozen=True)
class LowerBound:
    lb_f1: float
    lb_f2: float

    @property
    def lb(self) -> float:
        return self.lb_f1 + self.lb_f2


def _spacing_at(mu: float, cs: list[float], rhos: list[float], ps: list[float]) -> list[float]:
    return [max(1.0, math.sqrt(c + 2.0 * mu / (rho * p)))
            for c, rho, p in zip(cs, rhos, ps)]


def _budget(ts: list[float], ps: list[float]) -> float:
    return sum(1.0 / (p * t) for p, t in zip(ps, ts))


def _solve_kkt(ids: list[int], cs: list[float], rhos: list[float],
               ps: list[float], zeta: float) -> TStarSolution:
    if zeta <= 0.0:
        raise SolverError(f"attempt budget zeta={zeta} <= 0: no spacing can fit")
    ts0 = _spacing_at(0.0, cs, rhos, ps)
    if _budget(ts0, ps) <= zeta + RESIDUAL_TOL:
        binding = abs(_budget(ts0, ps) - zeta) <= RESIDUAL_TOL
        return TStarSolution(dict(zip(ids, ts0)), mu=0.0, binding=binding)

    hi = 1.0
    for _ in range(MAX_ITER):
        if _budget(_spacing_at(hi, cs, rhos, ps), ps) <= zeta:
            break
        hi *= 2.0
    else:
        raise SolverError("could not bracket the multiplier")

    lo = 0.0
    for _ in range(MAX_ITER):
        mid = 0.5 * (lo + hi)
        g = _budget(_spacing_at(mid, cs, rhos, ps), ps)
        if abs(g - zeta) <= RESIDUAL_TOL or (hi - lo) <= MU_TOL:
            break
        if g > zeta:
            lo = mid
        else:
            hi = mid
    else:
        raise SolverError("bisection did not converge")

    mu = mid
    ts = _spacing_at(mu, cs, rhos, ps)
    if _budget(ts, ps) > zeta + RESIDUAL_TOL:
        # keep the feasible side of the bracket
        mu = hi
        ts = _spacing_at(mu, cs, rhos, ps)
    return TStarSolution(dict(zip(ids, ts)), mu=mu, binding=True)


def compute_t_star(aoi_ues: list[UeConfig] | tuple[UeConfig, ...], zeta: float) -> TStarSolution:
    """Optimal per-UE target spacing under the shared attempt budget."""
    if not aoi_ues:
        raise SolverError("no aoi ues to solve for")
    ids = [u.id for u in aoi_ues]
    cs = [(1.0 - u.q) / (u.q * u.q) for u in aoi_ues]
    rhos = [u.rho for u in aoi_ues]
    ps = [u.p for u in aoi_ues]
    return _solve_kkt(ids, cs, rhos, ps, zeta)


def spacing_objective(aoi_ues, ts: dict[int, float], halve_variance: bool = False) -> float:
    """Objective value of the spacing program at a given point."""
    total = 0.0
    for u in aoi_ues:
        c = (1.0 - u.q) / (u.q * u.q)
        if halve_variance:
            c *= 0.5
        t = ts[u.id]
        total += 0.5 * u.rho * (t + c / t)
    return total


def hier_threshold(t_star: float, q: float) -> int:
    """Slot gap required between successive eligibility counter bumps.

    Rounded before the ceiling so values sitting one ulp above an integer do
    not jump a step.
    """
    return max(0, math.ceil(round(t_star - 1.0 / q, 12)))


def geo_geo1_latency(p: float, q: float) -> float:
    """Average latency of a discrete-time single-server queue.

    Arrivals Bernoulli(q) per slot, service success Bernoulli(p) per slot,
    work-conserving.  Includes the one-slot floor (counting both the arrival
    and the delivery slot).
    """
    if p <= q:
        raise SolverError(f"unstable queue: service rate {p} <= arrival rate {q}")
    return (1.0 - p) / (p - q) + 1.0


def effective_rate_for_beta(q: float, beta: float) -> float:
    """Service rate at which the single-server queue's average latency is beta."""
    if beta < 1.0:
        raise SolverError(f"beta must be at least 1, got {beta}")
    return q + (1.0 - q) / beta


def lower_bound(scenario: Scenario, horizon: int, seed: int, seeds: int = 1) -> LowerBound:
    """Cost floor: optimal spacing bound for AoI UEs plus a simulated
    latency-only floor.

    The first part re-solves the spacing program with the variance constant
    halved (the tightest constant valid for every admissible policy).  The
    second part simulates the latency UEs alone under the weighted-rate rule
    (serve the nonempty queue maximising rho*p/q), which is optimal for the
    weighted-latency objective, and averages the result over ``seeds``
    replicate runs using the standard seed-derivation scheme.
    """
    if scenario.variant is not Variant.LATENCY_WEIGHTED:
        raise ScenarioError("lower_bound applies to latency-weighted scenarios")
    report = validate(scenario)
    if not report.feasible:
        raise ScenarioError(f"infeasible scenario (load={report.load})")

    lb_f1 = 0.0
    aoi = scenario.aoi_ues
    if aoi:
        ids = [u.id for u in aoi]
        cs = [0.5 * (1.0 - u.q) / (u.q * u.q) for u in aoi]
        sol = _solve_kkt(ids, cs, [u.rho for u in aoi], [u.p for u in aoi], report.zeta)
        for u in aoi:
            t = sol.t_star[u.id]
            c = 0.5 * (1.0 - u.q) / (u.q * u.q)
            lb_f1 += 0.5 * u.rho * (t + c / t + 1.0)

    lb_f2 = 0.0
    lat = scenario.latency_ues
    if lat:
        from . import sim  # deferred: sim depends on this module

        sub = Scenario(ues=lat, variant=Variant.LATENCY_WEIGHTED)
        total = 0.0
        for rep in range(seeds):
            config = sim.RunConfig(scenario=sub, policy=sim.PolicySpec("cmu"),
                                   horizon=horizon, seed=sim.derive_seed(seed, 0, rep))
            total += sim.run(config).f2
        lb_f2 = total / seeds

    return LowerBound(lb_f1=lb_f1, lb_f2=lb_f2)
