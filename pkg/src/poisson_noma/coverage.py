"""Analytical coverage probability and throughput of NOMA and OMA users.

Coverage of UE ``i`` reduces to the event ``h_i > R_i^eta (I + sigma2) M_i``
where ``M_i`` is the decoding threshold of the SIC chain (see
:func:`decoding_thresholds`).  The analytical evaluators integrate over the
nearest-neighbour distance ``rho`` (outer, truncated at
:func:`~poisson_noma.numerics.rho_upper_limit`) and over the normalised link
distance ``t = 2 r / rho`` in [0, 1] (inner).  Writing the inner variable
this way makes both interference LT factors depend on ``t`` only:

* guard zone: ``exp(-lam * rho^2 * E(M (t/2)^eta, 1 - t/2))``,
* nearest interferer: evaluated at ``s = M (t/2)^eta`` and ``rho = 1``,

so the hypergeometric evaluations are shared by every outer node.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .interference import UnsupportedModel, guard_zone_exponent, lt_intercell, nearest_interferer_lt
from .model import ClusterSpec, Model, NetworkConfig, Ordering, pdf_r_given_rho
from .numerics import DEFAULT_QUAD, QuadratureSpec, integrate, rho_upper_limit

__all__ = [
    "CoverageEvaluator",
    "CoverageReport",
    "EffectivePowers",
    "analyze_noma",
    "cdf_z_given_rho",
    "cdf_zi_given_rho",
    "clear_cache",
    "coverage_noma",
    "coverage_oma",
    "decoding_thresholds",
    "effective_powers",
    "evaluator_for",
    "order_statistic_cdf",
    "rate",
    "sir_intra",
    "throughput_noma",
    "throughput_oma",
]


# ---------------------------------------------------------------------------
# SIC chain algebra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EffectivePowers:
    p_tilde: np.ndarray
    feasible: np.ndarray


def _intra_weights(p, beta):
    """Intraference seen while decoding each message: stronger + beta * weaker."""
    p = np.asarray(p, dtype=float)
    before = np.concatenate([[0.0], np.cumsum(p)[:-1]])
    after = p.sum() - np.cumsum(p)
    return before + beta * after


def effective_powers(p, theta, beta):
    """P~_j = P_j - theta_j (sum_{m<j} P_m + beta sum_{k>j} P_k)."""
    p = np.asarray(p, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if p.shape != theta.shape:
        raise ValueError("power and threshold vectors must have equal length")
    pt = p - theta * _intra_weights(p, beta)
    return EffectivePowers(pt, pt > 0)


def sir_intra(j, p, beta):
    """Signal-to-intraference ratio of message ``j`` (1-based); inf if no intraference."""
    p = np.asarray(p, dtype=float)
    if not 1 <= j <= p.size:
        raise ValueError("rank out of range")
    denom = _intra_weights(p, beta)[j - 1]
    if denom == 0:
        return math.inf
    try:
        return float(p[j - 1]) / float(denom)
    except OverflowError:
        return math.inf


def decoding_thresholds(p, theta, beta):
    """M_i = max_{j >= i} theta_j / P~_j for every rank (inf marks certain outage).

    Messages with zero power are not transmitted and drop out of the SIC
    chain; a UE whose own message has zero power is never covered.
    """
    p = np.asarray(p, dtype=float)
    eff = effective_powers(p, theta, beta)
    theta = np.asarray(theta, dtype=float)
    n = p.size
    sent = p > 0
    ok = sent & eff.feasible
    ratio = np.full(n, -np.inf)
    ratio[ok] = theta[ok] / eff.p_tilde[ok]
    ratio[sent & ~eff.feasible] = np.inf
    m = np.maximum.accumulate(ratio[::-1])[::-1]
    m = np.where(sent, np.maximum(m, 0.0), np.inf)
    return m


def rate(theta, log_base=math.e):
    """Transmission rate log(1 + theta) in the chosen log base (nats by default)."""
    return np.log1p(theta) / math.log(log_base)


def throughput_noma(i, coverage, theta_i, log_base=math.e):
    if not 0.0 <= coverage <= 1.0:
        raise ValueError("coverage must be a probability")
    return float(coverage * rate(theta_i, log_base))


def throughput_oma(i, t_i, coverage, theta_i, log_base=math.e):
    if not 0.0 <= t_i <= 1.0:
        raise ValueError("time fraction must lie in [0, 1]")
    return float(t_i * throughput_noma(i, coverage, theta_i, log_base))


# ---------------------------------------------------------------------------
# ordered-statistic helpers
# ---------------------------------------------------------------------------


def order_statistic_cdf(f, i, n):
    """CDF of the i-th largest of n i.i.d. draws whose common CDF value is f."""
    f = np.asarray(f, dtype=float)
    out = np.zeros_like(f)
    for k in range(n + 1 - i, n + 1):
        out = out + comb(n, k, exact=True) * f**k * (1 - f) ** (n - k)
    return out


def _ordered_t_weights(t, n, model):
    """Densities of the n ordered normalised link distances on [0, 1].

    Returns shape (len(t), n); column i-1 is rank i (i-th closest UE).
    """
    t = np.asarray(t, dtype=float)[:, None]
    i = np.arange(1, n + 1)[None, :]
    c = np.array([comb(n - 1, k - 1, exact=True) for k in range(1, n + 1)], dtype=float)[None, :]
    if model is Model.MODEL3:
        return n * c * t ** (i - 1) * (1 - t) ** (n - i)
    return 2 * n * c * t ** (2 * i - 1) * (1 - t * t) ** (n - i)


def _unordered_t_weight(t, model):
    t = np.asarray(t, dtype=float)
    return np.ones_like(t) if model is Model.MODEL3 else 2 * t


# ---------------------------------------------------------------------------
# the double-integral engine
# ---------------------------------------------------------------------------


class CoverageEvaluator:
    """Coverage of every rank as a function of the decoding threshold M.

    ``coverage(M)`` returns a length-N vector: entry i-1 is the probability
    that UE i (under the cluster's ordering) clears threshold M.  Results are
    memoised per M; the memo is guarded by a lock so the evaluator may be
    shared between threads.
    """

    def __init__(self, cfg: NetworkConfig, spec: ClusterSpec, quad: QuadratureSpec = DEFAULT_QUAD):
        if not spec.analytic:
            raise UnsupportedModel("analytical coverage needs Model 1, 2 or 3")
        self.cfg = cfg
        self.spec = spec
        self.quad = quad
        self.x_max = rho_upper_limit(cfg.lam)
        self._memo = {}
        self._lock = threading.Lock()
        self.integrations = 0

    def _lt_factors(self, t, m):
        eta = self.cfg.eta
        s = m * (0.5 * t) ** eta
        guard = np.asarray(guard_zone_exponent(s, 1.0 - 0.5 * t, eta))
        near = np.asarray(nearest_interferer_lt(s, 1.0, eta, self.spec.model))
        return guard, near, s

    def _inner(self, x, m, weights_fn):
        """Integral over t of the conditional LT for each outer node x.

        ``weights_fn(t)`` gives link-distance weights of shape (nt, k); the
        result has shape (len(x), k).
        """
        lam, eta, sigma2 = self.cfg.lam, self.cfg.eta, self.cfg.sigma2
        x = np.asarray(x, dtype=float)

        def f(t):
            guard, near, s = self._lt_factors(t, m)
            w = weights_fn(t)
            # (nt, nx): LT of interference and noise factor for each (t, x)
            core = np.exp(-lam * np.outer(guard, x * x) - sigma2 * np.outer(s, x**eta)) * near[:, None]
            vals = core[:, :, None] * w[:, None, :]
            return vals.reshape(t.size, -1)

        res = integrate(f, 0.0, 1.0, self.quad)
        return np.asarray(res).reshape(x.size, -1)

    def _compute(self, m):
        n = self.spec.n_ues
        lam = self.cfg.lam
        model = self.spec.model
        self.integrations += 1

        if self.spec.ordering is Ordering.MSP:
            def outer(x):
                h = self._inner(x, m, lambda t: _ordered_t_weights(t, n, model))
                return h * (2 * math.pi * lam * x * np.exp(-math.pi * lam * x * x))[:, None]
        else:
            def outer(x):
                h = self._inner(x, m, lambda t: _unordered_t_weight(t, model)[:, None])[:, 0]
                f_z = np.clip(1.0 - h, 0.0, 1.0)
                ccdf = np.stack([1.0 - order_statistic_cdf(f_z, i, n) for i in range(1, n + 1)], axis=1)
                return ccdf * (2 * math.pi * lam * x * np.exp(-math.pi * lam * x * x))[:, None]

        cov = integrate(outer, 0.0, self.x_max, self.quad, initial_panels=4)
        return np.clip(np.asarray(cov, dtype=float), 0.0, 1.0)

    def coverage(self, m):
        m = float(m)
        n = self.spec.n_ues
        if m <= 0.0:
            return np.ones(n)
        if math.isinf(m):
            return np.zeros(n)
        with self._lock:
            hit = self._memo.get(m)
        if hit is not None:
            return hit
        cov = self._compute(m)
        cov.setflags(write=False)
        with self._lock:
            self._memo.setdefault(m, cov)
        return cov

    def rank_coverage(self, i, m):
        return float(self.coverage(m)[i - 1])

    def cdf_z(self, x_values, rho):
        """Unordered ISINR CDF F_{Z|rho} at several thresholds (engine route)."""
        out = []
        for xv in np.atleast_1d(x_values):
            if xv <= 0:
                out.append(0.0)
                continue
            h = self._inner(np.array([rho]), float(xv), lambda t: _unordered_t_weight(t, self.spec.model)[:, None])
            out.append(float(np.clip(1.0 - h[0, 0], 0.0, 1.0)))
        return np.array(out)


_EVALUATORS = {}
_EVAL_LOCK = threading.Lock()


def evaluator_for(cfg, spec, quad=DEFAULT_QUAD):
    """Shared evaluator (and hence shared memo) for a configuration."""
    key = (cfg, spec.model, spec.n_ues, spec.ordering, quad)
    with _EVAL_LOCK:
        ev = _EVALUATORS.get(key)
        if ev is None:
            ev = _EVALUATORS[key] = CoverageEvaluator(cfg, spec, quad)
    return ev


def clear_cache():
    with _EVAL_LOCK:
        _EVALUATORS.clear()


# ---------------------------------------------------------------------------
# public per-rank API
# ---------------------------------------------------------------------------


def cdf_z_given_rho(x, rho, cfg, model, quad=DEFAULT_QUAD):
    """F_{Z|rho}(x) of the unordered ISINR, by direct quadrature over r."""
    if x < 0 or rho <= 0:
        raise ValueError("need x >= 0 and rho > 0")
    if x == 0:
        return 0.0
    eta = cfg.eta

    def integrand(r):
        s = x * r**eta
        return (
            lt_intercell(s, r, rho, cfg.lam, eta, model)
            * np.exp(-s * cfg.sigma2)
            * pdf_r_given_rho(r, rho, model)
        )

    val = integrate(integrand, 0.0, rho / 2, quad)
    return float(min(max(1.0 - val, 0.0), 1.0))


def cdf_zi_given_rho(x, rho, i, n, cfg, model, quad=DEFAULT_QUAD):
    """F_{Z_i|rho}(x) of the i-th largest ISINR among n UEs."""
    if not 1 <= i <= n:
        raise ValueError("rank must satisfy 1 <= i <= n")
    return float(order_statistic_cdf(cdf_z_given_rho(x, rho, cfg, model, quad), i, n))


def coverage_noma(i, spec, p, theta, cfg, quad=DEFAULT_QUAD):
    """Coverage probability of NOMA UE ``i``; 0 when the SIC chain is infeasible."""
    p = np.asarray(p, dtype=float)
    if p.size != spec.n_ues:
        raise ValueError("allocation length differs from the cluster size")
    m = decoding_thresholds(p, theta, cfg.beta)[i - 1]
    return evaluator_for(cfg, spec, quad).rank_coverage(i, m)


def coverage_oma(i, spec, theta_i, cfg, quad=DEFAULT_QUAD):
    """Coverage probability of OMA (TDMA) UE ``i`` served at full power."""
    if theta_i < 0:
        raise ValueError("threshold must be >= 0")
    return evaluator_for(cfg, spec, quad).rank_coverage(i, theta_i)


@dataclass(frozen=True)
class CoverageReport:
    per_ue_coverage: np.ndarray
    per_ue_throughput: np.ndarray
    method: str = "analytical"
    ci_halfwidth: np.ndarray | None = None

    @property
    def cell_sum_rate(self):
        return float(np.sum(self.per_ue_throughput))


def analyze_noma(spec, p, theta, cfg, quad=DEFAULT_QUAD, log_base=math.e):
    theta = np.asarray(theta, dtype=float)
    cov = np.array([coverage_noma(i, spec, p, theta, cfg, quad) for i in range(1, spec.n_ues + 1)])
    return CoverageReport(cov, cov * rate(theta, log_base))
