"""
How many UEs should share one NOMA cluster?
===========================================

Sum rate of the greedy allocation under a minimum per-UE throughput, for
growing cluster size and the three UE placement models, with OMA alongside.
"""

from poisson_noma import Access, ClusterSpec, Model, NetworkConfig, Ordering, SearchGrid, sweep_cluster_size

cfg = NetworkConfig()
grid = SearchGrid(dtheta_db=2, dp=0.02)
tmt = 0.3

for model in (Model.MODEL1, Model.MODEL2, Model.MODEL3):
    spec = ClusterSpec(model, 1, Ordering.MSP)
    noma = sweep_cluster_size(cfg, spec, range(1, 10), tmt, grid, stop_after_infeasible=True)
    oma = sweep_cluster_size(cfg, spec, noma.n_values, tmt, grid, Access.OMA)
    print(f"\n{model.value}:  n   noma    oma")
    for n, a, b in zip(noma.n_values, noma.solutions, oma.solutions):
        print(f"{n:>10}  {a.cell_sum_rate:5.3f}  {b.cell_sum_rate:5.3f}")
    print(f"largest feasible n = {noma.max_supported_n}, best n = {noma.optimum_n}")
