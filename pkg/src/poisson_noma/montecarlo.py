"""Monte Carlo simulator of the typical cell.

A realization places interfering BSs as a PPP of intensity ``lam`` in a disk
around the typical BS at the origin, puts N UEs in the in-disk sector that
faces away from the nearest interferer, and draws unit-mean exponential
fading for the serving link and for every (interferer, UE) pair.

Trials are generated in fixed-size blocks.  Block ``b`` draws from
``SeedSequence(seed, spawn_key=(b,))`` split into three streams: the BS
process inside the reference radius ``6/sqrt(lam)``, the BS process in any
extension annulus, and the UE placement/fading.  Blocks are therefore
independent of evaluation order, and enlarging the window only adds far
interferers on top of an unchanged core realization.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .model import ClusterSpec, Model, NetworkConfig, Ordering

__all__ = [
    "BLOCK_SIZE",
    "EmpiricalCoverage",
    "LinkSample",
    "McEstimate",
    "NetworkRealization",
    "default_window",
    "estimate_noma_coverage",
    "estimate_noma_coverage_sweep",
    "estimate_oma_coverage",
    "estimate_oma_coverage_sweep",
    "estimate_served_fraction",
    "estimate_unordered_z_cdf",
    "sample_realization",
    "simulate_links",
]

BLOCK_SIZE = 1000


def default_window(lam):
    return 6.0 / math.sqrt(lam)


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    n_trials: int
    seed: int

    @classmethod
    def from_indicators(cls, hits, n, seed):
        """Build from a hit count (Bernoulli trials)."""
        mean = hits / n
        std = math.sqrt(mean * (1 - mean) * n / (n - 1)) if n > 1 else 0.0
        return cls(mean, std / math.sqrt(n), n, seed)


@dataclass
class NetworkRealization:
    bs_points: np.ndarray  # (K, 2) interferers
    rho: float
    nearest: int  # row of bs_points nearest to the origin
    ue_positions: np.ndarray  # (N, 2), unordered
    fading_serving: np.ndarray  # (N,)
    fading_interferers: np.ndarray  # (N, K)

    def to_json(self):
        return json.dumps(
            {
                "schema": "poisson_noma.realization/1",
                "rho": self.rho,
                "nearest_interferer": self.bs_points[self.nearest].tolist(),
                "bs_points": self.bs_points.tolist(),
                "ue_positions": self.ue_positions.tolist(),
            },
            sort_keys=True,
        )


@dataclass
class LinkSample:
    """Per-trial link statistics of a batch of realizations (unordered UEs)."""

    rho: np.ndarray  # (B,)
    r: np.ndarray  # (B, N) link distances
    z_nearest: np.ndarray  # (B, N) UE to the interferer nearest the origin
    signal: np.ndarray  # (B, N) h R^-eta
    interference: np.ndarray  # (B, N)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _block_streams(seed, block):
    ss = np.random.SeedSequence(seed, spawn_key=(block,))
    return [np.random.default_rng(s) for s in ss.spawn(3)]


def _disk_points(rng, b, lam, r_in, r_out):
    """PPP in the annulus r_in < |x| < r_out for b trials, padded; returns (pts, mask)."""
    area = math.pi * (r_out**2 - r_in**2)
    counts = rng.poisson(lam * area, size=b)
    kmax = int(counts.max()) if b else 0
    u = rng.random((b, kmax))
    ang = 2 * math.pi * rng.random((b, kmax))
    rad = np.sqrt(r_in**2 + (r_out**2 - r_in**2) * u)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)
    mask = np.arange(kmax)[None, :] < counts[:, None]
    return pts, mask


def _bs_process(streams, b, lam, window):
    """Interferer points (B, K, 2) and validity mask; the first ``n_core`` columns lie in the core disk."""
    core_rng, halo_rng, _ = streams
    r0 = default_window(lam)
    pts, mask = _disk_points(core_rng, b, lam, 0.0, r0)
    n_core = pts.shape[1]
    if window < r0:
        mask &= np.hypot(pts[..., 0], pts[..., 1]) < window
    elif window > r0:
        hp, hm = _disk_points(halo_rng, b, lam, r0, window)
        pts = np.concatenate([pts, hp], axis=1)
        mask = np.concatenate([mask, hm], axis=1)
    if not mask.any(axis=1).all():
        raise RuntimeError("simulation window too small: a trial has no interferer")
    return pts, mask, n_core


def _place_ues(rng, rho, nearest_xy, n, spec):
    """UE coordinates (B, N, 2) in the in-disk sector facing away from the nearest BS."""
    b = rho.size
    away = np.arctan2(-nearest_xy[:, 1], -nearest_xy[:, 0])
    phi = spec.sector_angle
    v = rng.random((b, n))
    u = rng.random((b, n))
    ang = away[:, None] + phi * (v - 0.5)
    if phi > 0:
        rad = 0.5 * rho[:, None] * np.sqrt(u)
    else:
        rad = 0.5 * rho[:, None] * u
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)


def _links(streams, b, cfg, spec, window, keep_raw=False):
    pts, mask, n_core = _bs_process(streams, b, cfg.lam, window)
    ue_rng = streams[2]
    dist = np.where(mask, np.hypot(pts[..., 0], pts[..., 1]), np.inf)
    nearest = np.argmin(dist, axis=1)
    rho = dist[np.arange(b), nearest]
    nearest_xy = pts[np.arange(b), nearest]
    n = spec.n_ues
    ue = _place_ues(ue_rng, rho, nearest_xy, n, spec)
    h = ue_rng.exponential(size=(b, n))
    # halo fading comes from the halo stream so core draws do not depend on the window
    g = ue_rng.exponential(size=(b, n, n_core))
    if pts.shape[1] > n_core:
        g = np.concatenate([g, streams[1].exponential(size=(b, n, pts.shape[1] - n_core))], axis=2)
    d = np.hypot(pts[:, None, :, 0] - ue[..., 0:1], pts[:, None, :, 1] - ue[..., 1:2])
    with np.errstate(divide="ignore"):
        gain = np.where(mask[:, None, :], g * d ** (-cfg.eta), 0.0)
    interference = gain.sum(axis=2)
    r = np.hypot(ue[..., 0], ue[..., 1])
    z_near = np.hypot(ue[..., 0] - nearest_xy[:, None, 0], ue[..., 1] - nearest_xy[:, None, 1])
    sample = LinkSample(rho, r, z_near, h * r ** (-cfg.eta), interference)
    if keep_raw:
        return sample, (pts, mask, nearest, ue, h, g)
    return sample


def _run_blocks(fn, n_trials, seed, workers=1):
    """Apply ``fn(streams, size)`` to every block and return results in block order."""
    sizes = [BLOCK_SIZE] * (n_trials // BLOCK_SIZE)
    if n_trials % BLOCK_SIZE:
        sizes.append(n_trials % BLOCK_SIZE)

    def job(k):
        return fn(_block_streams(seed, k), sizes[k])

    if workers and workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, range(len(sizes))))
    return [job(k) for k in range(len(sizes))]


def sample_realization(cfg: NetworkConfig, spec: ClusterSpec, seed: int, window=None):
    """One network realization (block 0 of ``seed`` with a single trial)."""
    window = window or default_window(cfg.lam)
    _, raw = _links(_block_streams(seed, 0), 1, cfg, spec, window, keep_raw=True)
    pts, mask, nearest, ue, h, g = raw
    keep = mask[0]
    idx = np.flatnonzero(keep)
    return NetworkRealization(
        bs_points=pts[0, keep],
        rho=float(np.hypot(*pts[0, nearest[0]])),
        nearest=int(np.searchsorted(idx, nearest[0])),
        ue_positions=ue[0],
        fading_serving=h[0],
        fading_interferers=g[0][:, keep],
    )


def simulate_links(cfg, spec, n_trials, seed, window=None, workers=1):
    """Concatenated :class:`LinkSample` over ``n_trials`` realizations."""
    window = window or default_window(cfg.lam)
    parts = _run_blocks(lambda st, b: _links(st, b, cfg, spec, window), n_trials, seed, workers)
    return LinkSample(*(np.concatenate([getattr(p, f) for p in parts]) for f in LinkSample.__dataclass_fields__))


# ---------------------------------------------------------------------------
# coverage events
# ---------------------------------------------------------------------------


def _ordered(sample, cfg, spec):
    """Signal and interference columns sorted from the strongest UE to the weakest."""
    if spec.ordering is Ordering.MSP:
        key = sample.r
    else:
        key = -sample.signal / (sample.interference + cfg.sigma2)
    idx = np.argsort(key, axis=1, kind="stable")
    return (np.take_along_axis(sample.signal, idx, axis=1),
            np.take_along_axis(sample.interference, idx, axis=1))


def _noma_hits(sig, intf, p, theta, beta, sigma2):
    """Covered indicator (B, N): UE i decodes every message j >= i that is sent."""
    n = p.size
    before = np.concatenate([[0.0], np.cumsum(p)[:-1]])
    after = p.sum() - np.cumsum(p)
    weight = before + beta * after
    noise = intf + sigma2
    covered = np.empty(sig.shape, dtype=bool)
    for i in range(n):
        ok = np.full(sig.shape[0], p[i] > 0)
        s_i = sig[:, i]
        for j in range(i, n):
            if p[j] <= 0:
                continue
            ok &= s_i * p[j] > theta[j] * (s_i * weight[j] + noise[:, i])
        covered[:, i] = ok
    return covered


def _coverage_sweep(cfg, spec, rows, n_trials, seed, window, workers, event):
    """Shared driver: ``event(sig, intf, row)`` -> (B, N) booleans for each row."""
    window = window or default_window(cfg.lam)

    def block(streams, b):
        sig, intf = _ordered(_links(streams, b, cfg, spec, window), cfg, spec)
        return np.stack([event(sig, intf, row).sum(axis=0) for row in rows])

    hits = sum(_run_blocks(block, n_trials, seed, workers))
    out = [[McEstimate.from_indicators(int(h), n_trials, seed) for h in row] for row in hits]
    return out


def estimate_noma_coverage_sweep(cfg, spec, p, thetas, n_trials, seed, window=None, workers=1):
    """NOMA coverage estimates for several threshold vectors on shared realizations.

    ``thetas`` is a sequence of length-N threshold vectors; the result is a
    list (one entry per vector) of per-rank :class:`McEstimate` lists.
    """
    p = np.asarray(p, dtype=float)
    rows = [np.asarray(t, dtype=float) for t in thetas]

    def event(sig, intf, theta):
        return _noma_hits(sig, intf, p, theta, cfg.beta, cfg.sigma2)

    return _coverage_sweep(cfg, spec, rows, n_trials, seed, window, workers, event)


def estimate_noma_coverage(cfg, spec, p, theta, n_trials, seed, window=None, workers=1):
    return estimate_noma_coverage_sweep(cfg, spec, p, [theta], n_trials, seed, window, workers)[0]


def estimate_oma_coverage_sweep(cfg, spec, thetas, n_trials, seed, window=None, workers=1):
    rows = [np.asarray(t, dtype=float) for t in thetas]

    def event(sig, intf, theta):
        return sig > theta[None, :] * (intf + cfg.sigma2)

    return _coverage_sweep(cfg, spec, rows, n_trials, seed, window, workers, event)


def estimate_oma_coverage(cfg, spec, theta, n_trials, seed, window=None, workers=1):
    return estimate_oma_coverage_sweep(cfg, spec, [theta], n_trials, seed, window, workers)[0]


class EmpiricalCoverage:
    """Simulated stand-in for the analytical coverage evaluator.

    Rank i clears a decoding threshold M exactly when its ratio
    ``signal / (interference + noise)`` exceeds M, so one sorted sample per
    rank answers every query.  A fixed seed gives common random numbers to a
    whole allocation search.
    """

    def __init__(self, cfg: NetworkConfig, spec: ClusterSpec, n_trials, seed, window=None, workers=1):
        sample = simulate_links(cfg, spec, n_trials, seed, window, workers)
        sig, intf = _ordered(sample, cfg, spec)
        self.spec = spec
        self.n_trials = int(n_trials)
        self.seed = seed
        self._sorted = np.sort(sig / (intf + cfg.sigma2), axis=0)

    def coverage(self, m):
        m = float(m)
        n = self.spec.n_ues
        if m <= 0.0:
            return np.ones(n)
        if math.isinf(m):
            return np.zeros(n)
        below = np.array([np.searchsorted(self._sorted[:, k], m, side="right") for k in range(n)])
        return 1.0 - below / self.n_trials

    def rank_coverage(self, i, m):
        return float(self.coverage(m)[i - 1])


# ---------------------------------------------------------------------------
# conditioned and geometric checks
# ---------------------------------------------------------------------------


def estimate_unordered_z_cdf(cfg, model, rho, x, n_trials, seed, window=None, phi=None):
    """Empirical P(Z <= x) for one UE, with the nearest interferer fixed at ``rho``.

    The nearest interferer is placed at distance ``rho`` in a uniform
    direction and the remaining BSs form a PPP outside b(o, rho).  ``x`` may
    be a scalar (returns one estimate) or a sequence (returns a list).
    """
    window = window or default_window(cfg.lam)
    if window <= rho:
        raise ValueError("window must exceed rho")
    spec = ClusterSpec(model=model, n_ues=1, phi=phi)
    xs = np.atleast_1d(np.asarray(x, dtype=float))

    def block(streams, b):
        core, _, ue_rng = streams
        pts, mask = _disk_points(core, b, cfg.lam, rho, window)
        a = 2 * math.pi * core.random(b)
        near = np.stack([rho * np.cos(a), rho * np.sin(a)], axis=-1)
        pts = np.concatenate([near[:, None, :], pts], axis=1)
        mask = np.concatenate([np.ones((b, 1), dtype=bool), mask], axis=1)
        ue = _place_ues(ue_rng, np.full(b, rho), near, 1, spec)[:, 0, :]
        h = ue_rng.exponential(size=b)
        g = ue_rng.exponential(size=pts.shape[:2])
        d = np.hypot(pts[..., 0] - ue[:, None, 0], pts[..., 1] - ue[:, None, 1])
        intf = np.where(mask, g * d ** (-cfg.eta), 0.0).sum(axis=1)
        z = h * np.hypot(ue[:, 0], ue[:, 1]) ** (-cfg.eta) / (intf + cfg.sigma2)
        return (z[None, :] <= xs[:, None]).sum(axis=1)

    hits = sum(_run_blocks(block, n_trials, seed))
    est = [McEstimate.from_indicators(int(h), n_trials, seed) for h in hits]
    return est[0] if np.ndim(x) == 0 else est


def estimate_served_fraction(cfg, phi, n_trials, seed, window=None):
    """Fraction of the plane inside some BS's in-disk sector of angle ``phi``.

    A typical location (the origin) is covered only by its nearest BS x, and
    only if |x| <= rho_x / 2 and the origin lies within the sector facing
    away from x's own nearest neighbour.
    """
    window = window or default_window(cfg.lam)

    def block(streams, b):
        pts, mask, _ = _bs_process(streams, b, cfg.lam, window)
        rad = np.where(mask, np.hypot(pts[..., 0], pts[..., 1]), np.inf)
        k = np.argmin(rad, axis=1)
        rows = np.arange(b)
        x = pts[rows, k]
        d = np.hypot(pts[..., 0] - x[:, None, 0], pts[..., 1] - x[:, None, 1])
        d = np.where(mask, d, np.inf)
        d[rows, k] = np.inf
        nn = np.argmin(d, axis=1)
        rho_x = d[rows, nn]
        y = pts[rows, nn]
        inside = rad[rows, k] <= rho_x / 2
        # angle between (origin - x) and the sector axis (x - y)
        v = -x
        axis = x - y
        cosang = np.sum(v * axis, axis=1) / (np.hypot(*v.T) * np.hypot(*axis.T))
        within = np.arccos(np.clip(cosang, -1.0, 1.0)) <= phi / 2
        return int(np.sum(inside & within))

    hits = sum(_run_blocks(block, n_trials, seed))
    return McEstimate.from_indicators(hits, n_trials, seed)
