"""Resource allocation: power/time and rate search for NOMA and TDMA clusters.

Thresholds live on a dB grid; power (or time) on a grid of ``1/dp`` integer
units so budget bookkeeping is exact.  Every throughput computed during a
search increments the solution's ``evaluations`` counter.

Conventions shared by the solvers:

* a rank's coverage only depends on the messages it must decode (its own and
  the weaker ones), so during the rank-descending scans the still-unassigned
  budget is treated as belonging to the stronger UEs;
* ties in a threshold argmax go to the smallest threshold.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from itertools import product

import numpy as np
from scipy.special import comb

from .coverage import decoding_thresholds, evaluator_for, rate
from .model import ClusterSpec, NetworkConfig
from .numerics import DEFAULT_QUAD

__all__ = [
    "Access",
    "AllocationSolution",
    "BetaSweep",
    "BudgetExceeded",
    "ClusterSweep",
    "RateRegionPoint",
    "SearchGrid",
    "ThroughputModel",
    "exhaustive_search",
    "rate_region_n2",
    "solve_symmetric",
    "solve_tmt",
    "sweep_beta",
    "sweep_cluster_size",
]


class Access(Enum):
    NOMA = "noma"
    OMA = "oma"


class BudgetExceeded(RuntimeError):
    """Exhaustive search would exceed its evaluation cap."""


@dataclass(frozen=True)
class SearchGrid:
    theta_lb_db: float = -10.0
    theta_ub_db: float = 22.0
    dtheta_db: float = 1.0
    dp: float = 0.01

    def __post_init__(self):
        if not self.theta_lb_db < self.theta_ub_db:
            raise ValueError("theta_lb_db must be below theta_ub_db")
        if not self.dtheta_db > 0:
            raise ValueError("dtheta_db must be positive")
        if not 0 < self.dp <= 1:
            raise ValueError("dp must lie in (0, 1]")
        if abs(1 / self.dp - round(1 / self.dp)) > 1e-9:
            raise ValueError("1/dp must be an integer")

    @property
    def n_theta(self):
        return int(math.floor((self.theta_ub_db - self.theta_lb_db) / self.dtheta_db + 1e-9)) + 1

    @property
    def units(self):
        """Number of power (time) steps in the unit budget."""
        return int(round(1 / self.dp))

    @property
    def theta_db(self):
        return self.theta_lb_db + self.dtheta_db * np.arange(self.n_theta)

    @property
    def theta(self):
        return 10.0 ** (self.theta_db / 10.0)


@dataclass
class AllocationSolution:
    access: Access
    resources: np.ndarray  # powers (NOMA) or time fractions (OMA), rank order
    thetas: np.ndarray  # linear thresholds
    per_ue_throughput: np.ndarray
    feasible: bool
    evaluations: int
    failed_rank: int | None = None
    symmetric_level: float | None = None
    resource_units: np.ndarray | None = field(default=None, repr=False)

    @property
    def cell_sum_rate(self):
        return float(np.sum(self.per_ue_throughput)) if self.feasible else 0.0

    @property
    def thetas_db(self):
        """Thresholds in dB (rounded to absorb the dB round trip); NaN where unset."""
        with np.errstate(divide="ignore"):
            db = np.round(10.0 * np.log10(self.thetas), 9)
        return np.where(self.thetas > 0, db, np.nan)

    def to_dict(self):
        key = "powers" if self.access is Access.NOMA else "times"
        ok = self.feasible
        return {
            "access": self.access.value,
            key: self.resources.tolist() if ok else None,
            "thetas": self.thetas.tolist() if ok else None,
            "thetas_db": self.thetas_db.tolist() if ok else None,
            "per_ue_throughput": self.per_ue_throughput.tolist() if ok else None,
            "cell_sum_rate": self.cell_sum_rate,
            "feasible": self.feasible,
            "failed_rank": self.failed_rank,
            "symmetric_level": self.symmetric_level,
            "evaluations": self.evaluations,
        }


@dataclass(frozen=True)
class RateRegionPoint:
    p1: float
    r1: float
    r2: float
    theta1: float
    theta2: float


class ThroughputModel:
    """Per-rank throughput of a partial allocation, backed by the shared evaluator.

    ``throughput(i, units, thetas)`` takes the resource units and thresholds
    of ranks ``i..N`` (index 0 is rank ``i``) and returns R_i.  Any object
    with ``rank_coverage(i, m)`` may replace the analytical evaluator, e.g.
    :class:`~poisson_noma.montecarlo.EmpiricalCoverage`.
    """

    def __init__(self, cfg, spec, grid, access, quad=DEFAULT_QUAD, log_base=math.e, evaluator=None):
        self.cfg = cfg
        self.spec = spec
        self.grid = grid
        self.access = access
        self.log_base = log_base
        self.evaluator = evaluator if evaluator is not None else evaluator_for(cfg, spec, quad)
        self.evaluations = 0

    def throughput(self, i, units, thetas):
        self.evaluations += 1
        k = self.grid.units
        share = units[0] / k
        theta_i = thetas[0]
        if share <= 0:
            return 0.0
        if self.access is Access.OMA:
            cov = self.evaluator.rank_coverage(i, theta_i)
            return share * cov * float(rate(theta_i, self.log_base))
        n = self.spec.n_ues
        p = np.zeros(n)
        p[i - 1:] = np.asarray(units, dtype=float) / k
        th = np.zeros(n)
        th[i - 1:] = thetas
        if i > 1:
            p[0] = (k - sum(units)) / k  # stronger ranks' lumped budget
        m = decoding_thresholds(p, th, self.cfg.beta)[i - 1]
        return self.evaluator.rank_coverage(i, m) * float(rate(theta_i, self.log_base))


def _best_theta(tm, i, tail_units, tail_thetas, unit_i):
    """argmax over the threshold grid of R_i (smallest threshold on ties)."""
    best_r, best_t = -1.0, None
    for th in tm.grid.theta:
        r = tm.throughput(i, [unit_i] + tail_units, [th] + tail_thetas)
        if r > best_r:
            best_r, best_t = r, th
    return best_r, best_t


def _min_resource_scan(tm, i, level, units, thetas):
    """Smallest (resource, threshold) grid pair with R_i >= level, or None.

    Power (time) rises from zero in grid steps up to what is left; for each
    step thresholds rise from the lower bound.
    """
    k = tm.grid.units
    left = k - sum(units)
    for u in range(0, left + 1):
        for th in tm.grid.theta:
            r = tm.throughput(i, [u] + units, [th] + thetas)
            if r >= level:
                return u, th, r
    return None


def _finish(tm, units, thetas, rates, feasible, failed=None, level=None):
    n = tm.spec.n_ues
    if not feasible:
        return AllocationSolution(tm.access, np.zeros(n), np.zeros(n), np.zeros(n), False,
                                  tm.evaluations, failed, level)
    u = np.asarray(units)
    return AllocationSolution(tm.access, u / tm.grid.units, np.asarray(thetas, dtype=float),
                              np.asarray(rates, dtype=float), True, tm.evaluations,
                              None, level, u)


def solve_tmt(cfg: NetworkConfig, spec: ClusterSpec, tmt, grid=SearchGrid(), access=Access.NOMA,
              quad=DEFAULT_QUAD, log_base=math.e, evaluator=None):
    """Maximise the cell sum rate subject to every UE reaching ``tmt``.

    Ranks N..2 receive the smallest power (time) and, for it, the smallest
    threshold that reaches ``tmt``; rank 1 takes the remaining budget and
    the threshold maximising its own throughput.  Returns an infeasible
    solution (``failed_rank`` set) when a rank cannot reach ``tmt``.
    """
    tm = ThroughputModel(cfg, spec, grid, access, quad, log_base, evaluator)
    n = spec.n_ues
    units, thetas, rates = [], [], []
    for i in range(n, 1, -1):
        hit = _min_resource_scan(tm, i, tmt, units, thetas)
        if hit is None:
            return _finish(tm, units, thetas, rates, False, failed=i)
        u, th, r = hit
        units.insert(0, u)
        thetas.insert(0, th)
        rates.insert(0, r)
    left = grid.units - sum(units)
    if left <= 0:
        return _finish(tm, units, thetas, rates, False, failed=1)
    r1, th1 = _best_theta(tm, 1, units, thetas, left)
    if r1 < tmt:
        return _finish(tm, units, thetas, rates, False, failed=1)
    return _finish(tm, [left] + units, [th1] + thetas, [r1] + rates, True)


def _symmetric_pass(tm, level):
    """Minimal grid allocation giving every rank ``level``; None if impossible."""
    units, thetas = [], []
    for i in range(tm.spec.n_ues, 0, -1):
        hit = _min_resource_scan(tm, i, level, units, thetas)
        if hit is None:
            return None
        units.insert(0, hit[0])
        thetas.insert(0, hit[1])
    return units, thetas


def solve_symmetric(cfg: NetworkConfig, spec: ClusterSpec, grid=SearchGrid(), access=Access.NOMA,
                    mu0=0.3, a=1.3, conv=0.01, quad=DEFAULT_QUAD, log_base=math.e, max_iter=200,
                    evaluator=None):
    """Largest common throughput ``mu`` reachable by every UE (bisection on mu).

    ``mu`` grows geometrically by ``a`` until a level fails, then bisects
    between the last feasible and infeasible levels until
    ``mu_hi - mu_lo < conv * mu_hi``.  The last feasible assignment is
    returned with rank 1 topped up to the full budget; its
    ``symmetric_level`` is the final ``mu_lo``.
    """
    if a <= 1:
        raise ValueError("growth factor a must exceed 1")
    tm = ThroughputModel(cfg, spec, grid, access, quad, log_base, evaluator)
    mu, mu_hi, mu_lo = float(mu0), math.inf, 0.0
    failed = False
    best = None
    for _ in range(max_iter):
        if not failed:
            mu = a * mu if math.isinf(mu_hi) else 0.5 * (mu_hi + mu)
        else:
            mu = 0.5 * (mu_lo + mu)
        found = _symmetric_pass(tm, mu)
        failed = found is None
        if failed:
            mu_hi = mu
        else:
            mu_lo = mu
            best = found
        if mu_hi - mu_lo < conv * mu_hi:
            break
    else:
        if best is None:
            return _finish(tm, [], [], [], False, failed=spec.n_ues)
    if best is None:
        return _finish(tm, [], [], [], False, failed=spec.n_ues)

    units, thetas = best
    units = list(units)
    units[0] += grid.units - sum(units)
    rates = []
    counted = tm.evaluations
    for i in range(1, spec.n_ues + 1):
        rates.append(tm.throughput(i, units[i - 1:], thetas[i - 1:]))
    tm.evaluations = counted  # the final re-evaluation is bookkeeping, not search
    return _finish(tm, units, thetas, rates, True, level=mu_lo)


def _compositions(total, parts, low):
    """All tuples of ``parts`` integers >= low summing to ``total``."""
    if parts == 1:
        if total >= low:
            yield (total,)
        return
    for first in range(low, total - low * (parts - 1) + 1):
        for rest in _compositions(total - first, parts - 1, low):
            yield (first,) + rest


def exhaustive_search(cfg: NetworkConfig, spec: ClusterSpec, tmt, grid=SearchGrid(), access=Access.NOMA,
                      quad=DEFAULT_QUAD, log_base=math.e, max_evaluations=20_000_000, evaluator=None):
    """Grid-optimal sum rate under the throughput floor ``tmt``.

    Every UE takes a resource in {dp, 2 dp, ..., 1} and a threshold from the
    grid, so the enumeration has ``(n_theta / dp)^N`` combinations, all of
    which are counted; combinations breaking the unit budget are rejected
    without evaluating throughputs.  Ties keep the first combination found
    in lexicographic (rank-1-first) order.
    """
    n = spec.n_ues
    if n > 3:
        raise BudgetExceeded("exhaustive search is limited to N <= 3")
    k = grid.units
    n_th = grid.n_theta
    total = (k * n_th) ** n
    if total > max_evaluations:
        raise BudgetExceeded(f"{total} combinations exceed the cap of {max_evaluations}")
    tm = ThroughputModel(cfg, spec, grid, access, quad, log_base, evaluator)
    thetas = grid.theta
    best = None
    for units in _compositions(k, n, 1):
        for idx in product(range(n_th), repeat=n):
            th = [thetas[j] for j in idx]
            rates = [tm.throughput(i, list(units[i - 1:]), th[i - 1:]) for i in range(1, n + 1)]
            if min(rates) < tmt:
                continue
            s = sum(rates)
            if best is None or s > best[0]:
                best = (s, units, th, rates)
    tm.evaluations = total
    if best is None:
        return _finish(tm, [], [], [], False)
    _, units, th, rates = best
    return _finish(tm, list(units), th, rates, True)


def exhaustive_count(grid, n):
    """Number of combinations the exhaustive search enumerates."""
    return (grid.units * grid.n_theta) ** n


# ---------------------------------------------------------------------------
# rate region and sweeps
# ---------------------------------------------------------------------------


def rate_region_n2(cfg: NetworkConfig, spec: ClusterSpec, grid=SearchGrid(), access=Access.NOMA,
                   beta=None, quad=DEFAULT_QUAD, log_base=math.e, evaluator=None):
    """Boundary points of the two-user rate region, one per resource split.

    NOMA picks UE 2's best threshold for the split first, then UE 1's best
    threshold given it.  TDMA optimises each UE independently.
    """
    if spec.n_ues != 2:
        raise ValueError("rate region is defined for two-user clusters")
    if beta is not None:
        cfg = cfg.with_beta(beta)
    tm = ThroughputModel(cfg, spec, grid, access, quad, log_base, evaluator)
    k = grid.units
    points = []
    for u1 in range(0, k + 1):
        u2 = k - u1
        r2, th2 = _best_theta(tm, 2, [], [], u2)
        r1, th1 = _best_theta(tm, 1, [u2], [th2], u1)
        points.append(RateRegionPoint(u1 / k, r1, r2, th1, th2))
    return points


@dataclass
class ClusterSweep:
    n_values: list
    solutions: list  # AllocationSolution per N

    @property
    def sum_rates(self):
        return [s.cell_sum_rate for s in self.solutions]

    @property
    def feasible(self):
        return [s.feasible for s in self.solutions]

    @property
    def max_supported_n(self):
        ok = [n for n, s in zip(self.n_values, self.solutions) if s.feasible]
        return max(ok) if ok else None

    @property
    def optimum_n(self):
        ok = [(s.cell_sum_rate, -n, n) for n, s in zip(self.n_values, self.solutions) if s.feasible]
        return max(ok)[2] if ok else None

    @property
    def optimum_sum_rate(self):
        n = self.optimum_n
        return None if n is None else self.solutions[self.n_values.index(n)].cell_sum_rate


def _pmap(fn, items, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def sweep_cluster_size(cfg: NetworkConfig, spec: ClusterSpec, n_range, tmt=None, grid=SearchGrid(),
                       access=Access.NOMA, quad=DEFAULT_QUAD, log_base=math.e, workers=1,
                       stop_after_infeasible=False):
    """Solve the TMT problem (or the symmetric one when ``tmt`` is None) per N."""
    n_values = list(n_range)
    if not n_values:
        raise ValueError("n_range is empty")

    def one(n):
        s = spec.with_n(n)
        if tmt is None:
            return solve_symmetric(cfg, s, grid, access, quad=quad, log_base=log_base)
        return solve_tmt(cfg, s, tmt, grid, access, quad, log_base)

    if stop_after_infeasible:
        sols = []
        for n in n_values:
            sols.append(one(n))
            if not sols[-1].feasible:
                break
        n_values = n_values[: len(sols)]
    else:
        sols = _pmap(one, n_values, workers)
    return ClusterSweep(n_values, sols)


@dataclass
class BetaSweep:
    betas: list
    noma: list  # AllocationSolution per beta
    oma: AllocationSolution

    @property
    def noma_sum_rates(self):
        return [s.cell_sum_rate for s in self.noma]

    @property
    def oma_sum_rate(self):
        return self.oma.cell_sum_rate

    @property
    def crossing_beta(self):
        """beta where NOMA falls below OMA, linearly interpolated; None if no crossing."""
        ref = self.oma_sum_rate
        vals = self.noma_sum_rates
        for k in range(1, len(vals)):
            if vals[k - 1] >= ref > vals[k]:
                b0, b1 = self.betas[k - 1], self.betas[k]
                v0, v1 = vals[k - 1], vals[k]
                return b0 + (v0 - ref) * (b1 - b0) / (v0 - v1)
        return None


def sweep_beta(cfg: NetworkConfig, spec: ClusterSpec, tmt, beta_list, grid=SearchGrid(),
               quad=DEFAULT_QUAD, log_base=math.e, workers=1):
    """NOMA sum rate versus the residual-intraference fraction, with the OMA level."""
    betas = [float(b) for b in beta_list]
    if any(not 0 <= b <= 1 for b in betas):
        raise ValueError("beta values must lie in [0, 1]")
    noma = _pmap(lambda b: solve_tmt(cfg.with_beta(b), spec, tmt, grid, Access.NOMA, quad, log_base),
                 betas, workers)
    oma = solve_tmt(cfg, spec, tmt, grid, Access.OMA, quad, log_base)
    return BetaSweep(betas, noma, oma)


def fit_growth_rate(n_values, evaluations):
    """Least-squares c in evaluations ~ A c^N (fit on log scale)."""
    slope, _ = np.polyfit(np.asarray(n_values, dtype=float), np.log(np.asarray(evaluations, dtype=float)), 1)
    return float(math.exp(slope))


def composition_count(k, n):
    """Number of strictly positive unit splits of ``k`` into ``n`` parts."""
    return comb(k - 1, n - 1, exact=True)
