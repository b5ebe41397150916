"""
Two-UE rate region: NOMA against TDMA
=====================================

Sweeps the power (or time) split of a two-UE cluster and reports the
boundary, then the point where both UEs get the same throughput.
"""

from poisson_noma import Access, ClusterSpec, Model, NetworkConfig, Ordering, SearchGrid, rate_region_n2

cfg = NetworkConfig()
spec = ClusterSpec(Model.MODEL1, 2, Ordering.MSP)
grid = SearchGrid(dp=0.05)


def equal_rate_point(pts):
    d = [q.r1 - q.r2 for q in pts]
    k = next(i for i in range(1, len(pts)) if d[i - 1] < 0 <= d[i])
    w = -d[k - 1] / (d[k] - d[k - 1])
    return pts[k - 1].r1 + w * (pts[k].r1 - pts[k - 1].r1)


for access in Access:
    pts = rate_region_n2(cfg, spec, grid, access)
    print(f"\n{access.value}:  share1     r1     r2")
    for q in pts[::4]:
        print(f"{q.p1:>12.2f} {q.r1:6.3f} {q.r2:6.3f}")
    print(f"equal-throughput point: {equal_rate_point(pts):.4f} nats/s/Hz per UE")
