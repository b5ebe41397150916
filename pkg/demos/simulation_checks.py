"""
Simulation sanity checks
========================

Fraction of cells whose in-disk contains the whole sector, and one dumped
network realization for inspection.
"""

import math

from poisson_noma import ClusterSpec, Model, NetworkConfig, Ordering, sample_realization
from poisson_noma.montecarlo import estimate_served_fraction

cfg = NetworkConfig()
for phi in (2 * math.pi, math.pi):
    est = estimate_served_fraction(cfg, phi, 20000, seed=7)
    print(f"phi={phi:.3f}: served fraction {est.mean:.4f} +- {est.stderr:.4f}")

real = sample_realization(cfg, ClusterSpec(Model.MODEL1, 3, Ordering.MSP), seed=7)
print(real.to_json()[:400], "...")
