"""Laplace transform of the intercell interference seen by a cluster UE.

The transform conditioned on the UE link distance ``r`` and the
nearest-interferer distance ``rho`` factors into a guard-zone term (all
interferers beyond ``u = rho - r`` from the UE, a PPP) and a term for the
interferer nearest to the serving BS, approximated per clustering model.

All functions broadcast over numpy arrays.  For eta = 4 the closed forms are
used automatically; pass ``closed_form=False`` to force the hypergeometric
route (or ``True`` to force the closed form, which requires eta = 4).
"""

from __future__ import annotations

import math

import numpy as np

from .model import Model
from .numerics import gauss_2f1, integrate, QuadratureSpec

__all__ = [
    "UnsupportedModel",
    "guard_zone_exponent",
    "guard_zone_lt",
    "lt_intercell",
    "lt_nearest_interferer_exact",
    "mean_nearest_interferer_distance",
    "model3_bracket",
    "nearest_interferer_lt",
]

_TINY_S = 1e-300


class UnsupportedModel(ValueError):
    """No analytical Laplace transform exists for this clustering model."""


def _use_closed(eta, closed_form):
    if closed_form is None:
        return abs(eta - 4.0) < 1e-12
    if closed_form and abs(eta - 4.0) >= 1e-12:
        raise ValueError("closed forms are only available for eta = 4")
    return bool(closed_form)


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def guard_zone_exponent(s, u, eta, closed_form=None):
    """``E`` with guard-zone LT = exp(-lam * E); scales as E(s k^eta, u k) = k^2 E."""
    s = np.asarray(s, dtype=float)
    u = np.asarray(u, dtype=float)
    if _use_closed(eta, closed_form):
        rs = np.sqrt(s)
        return _out(math.pi * rs * np.arctan(rs / u**2))
    delta = 2.0 / eta
    s, u = np.broadcast_arrays(s, u)
    f = gauss_2f1(1.0, 1.0 - delta, 2.0 - delta, np.atleast_1d(-s / u**eta))
    e = 2 * math.pi * s / ((eta - 2) * u ** (eta - 2)) * f.reshape(s.shape)
    return _out(e)


def guard_zone_lt(s, u, lam, eta, closed_form=None):
    return _out(np.exp(-lam * np.asarray(guard_zone_exponent(s, u, eta, closed_form))))


def _quartic_2f1(a):
    """2F1(1, 1/4; 5/4; -a) from the elementary antiderivative of 1/(1+y^4)."""
    y = a**0.25
    r2 = math.sqrt(2.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        integral = np.log((y * y + r2 * y + 1) / (y * y - r2 * y + 1)) / (4 * r2) + (
            np.arctan(r2 * y + 1) + np.arctan(r2 * y - 1)
        ) / (2 * r2)
        return integral / y


def model3_bracket(s, rho, eta, closed_form=None):
    """E[(1 + s z^-eta)^-1] for z uniform on [rho, 1.5 rho].

    Equals 1 - 3 F(-a1) + 2 F(-a2) with F = 2F1(1, 1/eta; 1 + 1/eta; .),
    a1 = (1.5 rho)^eta / s and a2 = rho^eta / s; defined as 1 at s = 0.
    """
    s, rho = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(rho, dtype=float))
    out = np.ones(s.shape)
    live = s > _TINY_S
    if not live.any():
        return _out(out)
    sl, rl = s[live], rho[live]
    a1 = (1.5 * rl) ** eta / sl
    a2 = rl**eta / sl
    if _use_closed(eta, closed_form):
        # the elementary form loses digits for small a; the series is exact there
        def f(a):
            res = np.empty_like(a)
            small = a < 1e-4
            res[~small] = _quartic_2f1(a[~small])
            if small.any():
                res[small] = gauss_2f1(1.0, 0.25, 1.25, -a[small])
            return res
    else:
        def f(a):
            return gauss_2f1(1.0, 1.0 / eta, 1.0 + 1.0 / eta, -a)
    out[live] = 1.0 - 3.0 * f(a1) + 2.0 * f(a2)
    return _out(out)


def nearest_interferer_lt(s, rho, eta, model, closed_form=None):
    """Approximate LT factor of the interferer nearest to the serving BS."""
    s = np.asarray(s, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if model is Model.MODEL1:
        return _out(1.0 / (1.0 + s * rho ** (-eta)))
    if model is Model.MODEL2:
        return _out(1.0 / (1.0 + s * (1.25 * rho) ** (-eta)))
    if model is Model.MODEL3:
        return model3_bracket(s, rho, eta, closed_form)
    raise UnsupportedModel(f"no analytical Laplace transform for {model}")


def lt_intercell(s, r, rho, lam, eta, model, closed_form=None):
    """Conditional LT of the intercell interference at a UE at distance r.

    ``s`` is the transform argument, ``rho`` the serving BS's nearest-neighbour
    distance and the guard distance is ``u = rho - r``.
    """
    if model not in (Model.MODEL1, Model.MODEL2, Model.MODEL3):
        raise UnsupportedModel(f"no analytical Laplace transform for {model}")
    s = np.asarray(s, dtype=float)
    u = np.asarray(rho, dtype=float) - np.asarray(r, dtype=float)
    if np.any(u <= 0):
        raise ValueError("guard distance rho - r must be positive")
    guard = np.exp(-lam * np.asarray(guard_zone_exponent(s, u, eta, closed_form)))
    near = nearest_interferer_lt(s, rho, eta, model, closed_form)
    return _out(guard * near)


# ---------------------------------------------------------------------------
# exact nearest-interferer term (validation oracle)
# ---------------------------------------------------------------------------


def _angle_range(model):
    # angle between the UE direction and the direction of the nearest interferer
    if model is Model.MODEL1:
        return 0.0, 2 * math.pi
    if model is Model.MODEL2:
        return 0.5 * math.pi, 1.5 * math.pi
    raise UnsupportedModel(model)


def lt_nearest_interferer_exact(s, r, rho, eta, model, quad=QuadratureSpec(1e-12, 1e-12)):
    """E_z[(1 + s z^-eta)^-1] with z the true UE-to-nearest-interferer distance.

    The UE sits at distance ``r`` from the serving BS at a uniformly random
    bearing within its clustering sector; the expectation over the bearing is
    done by quadrature.  In Model 3 the UE is collinear, so z = r + rho.
    """
    if model is Model.MODEL3:
        return 1.0 / (1.0 + s * (r + rho) ** (-eta))
    lo, hi = _angle_range(model)

    def integrand(psi):
        z2 = r * r + rho * rho - 2 * r * rho * np.cos(psi)
        return 1.0 / (1.0 + s * z2 ** (-eta / 2))

    return integrate(integrand, lo, hi, quad, initial_panels=4) / (hi - lo)


def mean_nearest_interferer_distance(rho, model, n_samples=1_000_000, seed=0):
    """Monte Carlo estimate of E[z | rho] under the model's UE placement."""
    rng = np.random.default_rng(seed)
    if model is Model.MODEL3:
        r = 0.5 * rho * rng.random(n_samples)
        return float(np.mean(r + rho))
    r = 0.5 * rho * np.sqrt(rng.random(n_samples))
    lo, hi = _angle_range(model)
    psi = lo + (hi - lo) * rng.random(n_samples)
    z = np.sqrt(r * r + rho * rho - 2 * r * rho * np.cos(psi))
    return float(np.mean(z))
