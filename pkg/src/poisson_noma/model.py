"""Network configuration, clustering models and the geometry densities.

Ranks are 1-based throughout: UE 1 is the strongest user of the cluster.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.special import comb

__all__ = [
    "ClusterSpec",
    "ConfigError",
    "Model",
    "NetworkConfig",
    "Ordering",
    "PowerAllocation",
    "RateAllocation",
    "TimeAllocation",
    "db_to_linear",
    "dbm_to_linear",
    "load_config",
    "noma_served_fraction",
    "parse_config",
    "pdf_r_given_rho",
    "pdf_rho",
    "pdf_ri_given_rho",
]


class ConfigError(ValueError):
    """Invalid configuration value or document."""


class Model(Enum):
    MODEL1 = "model1"
    MODEL2 = "model2"
    MODEL3 = "model3"
    SECTOR = "sector"


class Ordering(Enum):
    MSP = "msp"
    ISINR = "isinr"


_MODEL_PHI = {Model.MODEL1: 2 * math.pi, Model.MODEL2: math.pi, Model.MODEL3: 0.0}
ANALYTIC_MODELS = (Model.MODEL1, Model.MODEL2, Model.MODEL3)


def dbm_to_linear(dbm):
    """Power in dBm to watts (unit transmit power is 1 W)."""
    return 10.0 ** (dbm / 10.0) * 1e-3


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class NetworkConfig:
    """Physical parameters; ``sigma2`` is linear, relative to unit power."""

    lam: float = 10.0
    eta: float = 4.0
    sigma2: float = 1e-12
    beta: float = 0.0
    total_power: float = 1.0

    def __post_init__(self):
        if not self.lam > 0:
            raise ConfigError("lambda must be > 0")
        if not self.eta > 2:
            raise ConfigError("eta must be > 2")
        if not 0.0 <= self.beta <= 1.0:
            raise ConfigError("beta must lie in [0, 1]")
        if not self.sigma2 >= 0:
            raise ConfigError("sigma2 must be >= 0")
        if self.total_power != 1.0:
            raise ConfigError("total power is fixed at 1")

    @property
    def delta(self):
        return 2.0 / self.eta

    @classmethod
    def from_dbm(cls, lam=10.0, eta=4.0, sigma2_dbm=-90.0, beta=0.0):
        return cls(lam=lam, eta=eta, sigma2=dbm_to_linear(sigma2_dbm), beta=beta)

    def with_beta(self, beta):
        return NetworkConfig(self.lam, self.eta, self.sigma2, beta)


@dataclass(frozen=True)
class ClusterSpec:
    """UE clustering: placement model, cluster size and ordering scheme.

    ``phi`` is only read for ``Model.SECTOR``; the named models carry their
    own sector angle (2*pi, pi and 0).
    """

    model: Model = Model.MODEL1
    n_ues: int = 2
    ordering: Ordering = Ordering.MSP
    phi: float | None = None

    def __post_init__(self):
        if int(self.n_ues) != self.n_ues or self.n_ues < 1:
            raise ConfigError("n_ues must be a positive integer")
        if self.model is Model.SECTOR:
            if self.phi is None or not 0.0 < self.phi < 2 * math.pi:
                raise ConfigError("sector model needs phi in (0, 2*pi)")

    @property
    def sector_angle(self):
        if self.model is Model.SECTOR:
            return float(self.phi)
        return _MODEL_PHI[self.model]

    @property
    def analytic(self):
        return self.model in ANALYTIC_MODELS

    def with_n(self, n):
        return ClusterSpec(self.model, n, self.ordering, self.phi)


def _vector(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D vector")
    if np.any(arr < 0):
        raise ValueError(f"{name} entries must be >= 0")
    return arr


@dataclass(frozen=True)
class PowerAllocation:
    p: np.ndarray = field()

    def __post_init__(self):
        arr = _vector(self.p, "power allocation")
        if arr.sum() > 1.0 + 1e-12:
            raise ValueError("powers exceed the unit budget")
        object.__setattr__(self, "p", arr)


@dataclass(frozen=True)
class RateAllocation:
    theta: np.ndarray = field()

    def __post_init__(self):
        object.__setattr__(self, "theta", _vector(self.theta, "thresholds"))

    @property
    def rates(self):
        return np.log1p(self.theta)


@dataclass(frozen=True)
class TimeAllocation:
    t: np.ndarray = field()

    def __post_init__(self):
        arr = _vector(self.t, "time allocation")
        if arr.sum() > 1.0 + 1e-12:
            raise ValueError("time fractions exceed the unit slot")
        object.__setattr__(self, "t", arr)


# ---------------------------------------------------------------------------
# densities
# ---------------------------------------------------------------------------


def pdf_rho(x, lam):
    """Density of the distance from a BS to its nearest neighbour."""
    x = np.asarray(x, dtype=float)
    out = 2 * math.pi * lam * x * np.exp(-math.pi * lam * x**2)
    out = np.where(x >= 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def _check_rho(rho):
    if not rho > 0:
        raise ValueError("rho must be positive")


def pdf_r_given_rho(r, rho, model):
    """Link distance density of one UE placed uniformly in the in-disk sector."""
    _check_rho(rho)
    r = np.asarray(r, dtype=float)
    inside = (r >= 0) & (r <= rho / 2)
    if model is Model.MODEL3:
        out = np.where(inside, 2.0 / rho, 0.0)
    else:
        out = np.where(inside, 8.0 * r / rho**2, 0.0)
    return float(out) if out.ndim == 0 else out


def pdf_ri_given_rho(r, rho, i, n, model):
    """Density of the i-th smallest of n i.i.d. link distances."""
    _check_rho(rho)
    if not (int(i) == i and int(n) == n and 1 <= i <= n):
        raise ValueError("rank must satisfy 1 <= i <= n")
    r = np.asarray(r, dtype=float)
    inside = (r >= 0) & (r <= rho / 2)
    rc = np.clip(r, 0.0, rho / 2)
    if model is Model.MODEL3:
        cdf = 2 * rc / rho
        base = 2.0 / rho
    else:
        cdf = 4 * rc**2 / rho**2
        base = 8.0 * rc / rho**2
    out = comb(n - 1, i - 1, exact=True) * n * base * cdf ** (i - 1) * (1 - cdf) ** (n - i)
    out = np.where(inside, out, 0.0)
    return float(out) if out.ndim == 0 else out


def noma_served_fraction(phi):
    """Area fraction of the plane covered by BS-centred in-disk sectors."""
    if not 0.0 <= phi <= 2 * math.pi:
        raise ValueError("phi must lie in [0, 2*pi]")
    return phi / (8 * math.pi)


# ---------------------------------------------------------------------------
# JSON configuration
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {"lambda", "eta", "sigma2_dbm", "beta", "model", "n_ues", "ordering"}


def _parse_model(value):
    if isinstance(value, dict):
        if set(value) != {"sector"}:
            raise ConfigError("key 'model': object form must be {\"sector\": phi}")
        return Model.SECTOR, float(value["sector"])
    try:
        return Model(str(value).lower()), None
    except ValueError:
        raise ConfigError(f"key 'model': unknown model {value!r}") from None


def parse_config(doc):
    """Build ``(NetworkConfig, ClusterSpec)`` from a decoded JSON mapping.

    Missing keys fall back to the package defaults (lambda=10, eta=4,
    sigma2=-90 dBm, beta=0, model1, two UEs, MSP ordering).
    """
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = set(doc) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration key(s): {sorted(unknown)}")
    try:
        cfg = NetworkConfig.from_dbm(
            lam=float(doc.get("lambda", 10.0)),
            eta=float(doc.get("eta", 4.0)),
            sigma2_dbm=float(doc.get("sigma2_dbm", -90.0)),
            beta=float(doc.get("beta", 0.0)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"network parameters: {exc}") from None
    model, phi = _parse_model(doc.get("model", "model1"))
    try:
        ordering = Ordering(str(doc.get("ordering", "msp")).lower())
    except ValueError:
        raise ConfigError(f"key 'ordering': unknown ordering {doc.get('ordering')!r}") from None
    n = doc.get("n_ues", 2)
    if not isinstance(n, int) or isinstance(n, bool):
        raise ConfigError("key 'n_ues': must be an integer")
    return cfg, ClusterSpec(model=model, n_ues=n, ordering=ordering, phi=phi)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return parse_config(doc)
