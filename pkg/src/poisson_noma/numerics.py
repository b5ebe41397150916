"""Special functions and adaptive quadrature used by the analytical evaluators.

Everything here works on numpy arrays: the hypergeometric function is
evaluated elementwise and :func:`integrate` hands whole node vectors to the
integrand, so an integrand may return either shape ``(n,)`` or ``(n, m)``
(vector-valued integrals share one panel refinement).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import rgamma

__all__ = [
    "NumericalFailure",
    "QuadratureSpec",
    "gauss_2f1",
    "integrate",
    "rho_upper_limit",
]


class NumericalFailure(ArithmeticError):
    """A series or quadrature did not reach its tolerance.

    ``estimate`` holds the best available value and ``detail`` the term count
    or error bound at the point of failure.
    """

    def __init__(self, message, estimate=None, detail=None):
        super().__init__(message)
        self.estimate = estimate
        self.detail = detail


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-8
    rel_tol: float = 1e-8
    max_subdivisions: int = 200

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be strictly positive")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_QUAD = QuadratureSpec()

# --------------------------------------------------------------------------
# Gauss hypergeometric function on the negative real axis
# --------------------------------------------------------------------------

_SERIES_EPS = 1e-16
_MAX_TERMS = 20000
# Above this Pfaff-mapped argument the series about 1 - w is used instead.
_W_SWITCH = 0.6


def _is_nonpos_int(v):
    return v <= 0 and float(v).is_integer()


def _series(a, b, c, w, max_terms=_MAX_TERMS):
    """Power series of 2F1(a, b; c; w) for 0 <= w < 1, elementwise."""
    w = np.asarray(w, dtype=float)
    total = np.ones_like(w)
    term = np.ones_like(w)
    active = np.ones(w.shape, dtype=bool)
    for n in range(max_terms):
        ratio = (a + n) * (b + n) / ((c + n) * (n + 1.0))
        term = np.where(active, term * ratio * w, 0.0)
        total = total + term
        # stop once a term is negligible and the terms have started shrinking
        shrinking = np.abs(ratio * w) < 1.0
        done = (np.abs(term) <= _SERIES_EPS * np.abs(total)) & shrinking
        active &= ~done
        if not active.any():
            return total
    raise NumericalFailure(
        "2F1 series did not converge", estimate=total, detail=max_terms
    )


def gauss_2f1(a, b, c, z):
    """Gauss hypergeometric function 2F1(a, b; c; z) for real z <= 0.

    The Pfaff transformation maps z onto w = z / (z - 1) in [0, 1).  Small w
    are summed directly; for w close to 1 the connection formula about
    1 - w is used (needs c - a - b non-integer after the transform, which
    holds for every family used in this package), otherwise the direct
    series is summed to convergence.

    Returns a float for scalar input and an ndarray otherwise.
    """
    if _is_nonpos_int(c):
        raise ValueError("c must not be a non-positive integer")
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr > 0):
        raise ValueError("gauss_2f1 is only defined here for z <= 0")
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)

    w = z_arr / (z_arr - 1.0)
    one_minus_w = 1.0 / (1.0 - z_arr)  # exact complement, avoids 1 - w cancellation
    pref = (1.0 - z_arr) ** (-b)
    a2, b2 = c - a, b  # Pfaff: 2F1(a,b;c;z) = (1-z)^-b 2F1(c-a,b;c;w)
    out = np.empty_like(w)

    gap = c - a2 - b2
    terminating = _is_nonpos_int(a2) or _is_nonpos_int(b2)
    # near-integer gaps make the two connection terms cancel; sum directly instead
    near_int = abs(gap - round(gap)) < 1e-3
    use_conn = (w > _W_SWITCH) & (not terminating) & (not near_int)
    direct = ~use_conn
    if direct.any():
        out[direct] = _series(a2, b2, c, w[direct])
    if use_conn.any():
        v = one_minus_w[use_conn]
        g, rg = math.gamma, rgamma  # rgamma vanishes at the poles of gamma
        c1 = g(c) * g(gap) * rg(c - a2) * rg(c - b2)
        c2 = g(c) * g(-gap) * rg(a2) * rg(b2)
        out[use_conn] = c1 * _series(a2, b2, 1.0 - gap, v) + c2 * v**gap * _series(
            c - a2, c - b2, 1.0 + gap, v
        )
    out *= pref
    return float(out[0]) if scalar else out


# --------------------------------------------------------------------------
# Adaptive Gauss-Kronrod (7/15) quadrature
# --------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# full 15-node layout on [-1, 1]
_NODES = np.concatenate([-_XGK[:-1], [0.0], _XGK[:-1][::-1]])
_KW = np.concatenate([_WGK[:-1], [_WGK[-1]], _WGK[:-1][::-1]])
_GW = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae (xgk[1], xgk[3], xgk[5], 0)
_GW[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], [_WG[-1]], _WG[:-1][::-1]])


def _gk_panels(f, lo, hi):
    """Apply the 15-point rule to each panel in the 1-D arrays lo, hi."""
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = (mid[:, None] + half[:, None] * _NODES[None, :]).ravel()
    fx = np.asarray(f(x), dtype=float)
    fx = fx.reshape((lo.size, 15) + fx.shape[1:])
    kron = np.tensordot(_KW, fx, axes=([0], [1])) * _expand(half, fx.ndim - 2)
    gauss = np.tensordot(_GW, fx, axes=([0], [1])) * _expand(half, fx.ndim - 2)
    err = np.abs(kron - gauss)
    if not np.all(np.isfinite(kron)):
        raise NumericalFailure("integrand is not finite on the interval")
    return kron, err


def _expand(v, extra):
    return v.reshape(v.shape + (1,) * extra)


def integrate(f, lo, hi, spec=DEFAULT_QUAD, initial_panels=1):
    """Adaptive Gauss-Kronrod integral of ``f`` over [lo, hi].

    ``f`` receives a 1-D array of abscissae and returns values of shape
    ``(n,)`` or ``(n, m)``; in the vector case every component must meet
    ``max(abs_tol, rel_tol * |I_k|)``.  The panel with the largest scaled
    error is bisected until the summed error estimate meets the tolerance.
    """
    if hi < lo:
        raise ValueError("integrate requires lo <= hi")
    if hi == lo:
        probe = np.asarray(f(np.array([lo])), dtype=float)
        return 0.0 if probe.ndim == 1 else np.zeros(probe.shape[1:])

    edges = np.linspace(lo, hi, int(initial_panels) + 1)
    vals, errs = _gk_panels(f, edges[:-1], edges[1:])
    # heap entries: (-score, counter, lo, hi, value, error)
    panels = []
    for k in range(len(edges) - 1):
        panels.append([edges[k], edges[k + 1], vals[k], errs[k]])
    total = vals.sum(axis=0)
    total_err = errs.sum(axis=0)

    def tol_of(tot):
        return np.maximum(spec.abs_tol, spec.rel_tol * np.abs(tot))

    def score(err, tol):
        return float(np.max(err / tol))

    tol = tol_of(total)
    heap = [(-score(p[3], tol), k, p) for k, p in enumerate(panels)]
    heapq.heapify(heap)
    counter = len(heap)
    splits = 0
    while np.any(total_err > tol):
        if splits >= spec.max_subdivisions:
            raise NumericalFailure(
                "subdivision budget exhausted",
                estimate=total,
                detail=total_err,
            )
        _, _, (a, b, v, e) = heapq.heappop(heap)
        m = 0.5 * (a + b)
        nv, ne = _gk_panels(f, np.array([a, m]), np.array([m, b]))
        total = total - v + nv[0] + nv[1]
        total_err = total_err - e + ne[0] + ne[1]
        tol = tol_of(total)
        for (pa, pb), pv, pe in (((a, m), nv[0], ne[0]), ((m, b), nv[1], ne[1])):
            heapq.heappush(heap, (-score(pe, tol), counter, (pa, pb, pv, pe)))
            counter += 1
        splits += 1
    if np.ndim(total) == 0:
        return float(total)
    return total


def rho_upper_limit(lam):
    """Distance beyond which the nearest-neighbour tail mass is below 1e-12."""
    return math.sqrt(12.0 * math.log(10.0) / (math.pi * lam))
