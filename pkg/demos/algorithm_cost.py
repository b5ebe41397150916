"""
Cost of the greedy allocation versus brute force
================================================

Counts throughput evaluations of the greedy solver for growing cluster size
and compares them with the size of the full grid search.
"""

from poisson_noma import ClusterSpec, Model, NetworkConfig, Ordering, SearchGrid, solve_tmt
from poisson_noma.allocation import exhaustive_count, fit_growth_rate

cfg = NetworkConfig()
grid = SearchGrid()
ns = [2, 3, 4, 5]
evals = [solve_tmt(cfg, ClusterSpec(Model.MODEL1, n, Ordering.MSP), 0.2, grid).evaluations for n in ns]
for n, e in zip(ns, evals):
    print(f"n={n}: greedy {e:>6} evaluations, grid search {exhaustive_count(grid, n):.3e}")
print(f"greedy growth fits evaluations ~ n^{fit_growth_rate(ns, evals):.2f}")
