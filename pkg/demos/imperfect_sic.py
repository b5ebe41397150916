"""
Residual interference after imperfect SIC
=========================================

A fraction beta of every cancelled message stays behind. The sweep shows
where NOMA stops paying off against OMA for a three-UE cluster.
"""

import numpy as np

from poisson_noma import ClusterSpec, Model, NetworkConfig, Ordering, SearchGrid, sweep_beta

cfg = NetworkConfig()
spec = ClusterSpec(Model.MODEL1, 3, Ordering.MSP)
bs = sweep_beta(cfg, spec, 0.3, np.round(np.linspace(0, 0.1, 11), 12), SearchGrid(dtheta_db=2, dp=0.02))

print(f"oma sum rate: {bs.oma_sum_rate:.4f}")
for beta, sol in zip(bs.betas, bs.noma):
    print(f"beta={beta:5.2f}  noma={sol.cell_sum_rate:.4f}  feasible={sol.feasible}")
print(f"noma falls below oma near beta = {bs.crossing_beta}")
