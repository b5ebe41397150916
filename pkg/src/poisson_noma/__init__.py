"""Coverage, throughput and resource allocation for NOMA clusters in Poisson cellular networks."""

from .allocation import (
    Access,
    AllocationSolution,
    BetaSweep,
    BudgetExceeded,
    ClusterSweep,
    RateRegionPoint,
    SearchGrid,
    exhaustive_search,
    rate_region_n2,
    solve_symmetric,
    solve_tmt,
    sweep_beta,
    sweep_cluster_size,
)
from .coverage import (
    CoverageEvaluator,
    CoverageReport,
    analyze_noma,
    cdf_z_given_rho,
    cdf_zi_given_rho,
    coverage_noma,
    coverage_oma,
    decoding_thresholds,
    effective_powers,
    sir_intra,
)
from .interference import UnsupportedModel, lt_intercell, lt_nearest_interferer_exact, model3_bracket
from .model import (
    ClusterSpec,
    ConfigError,
    Model,
    NetworkConfig,
    Ordering,
    PowerAllocation,
    RateAllocation,
    TimeAllocation,
    load_config,
    parse_config,
    pdf_r_given_rho,
    pdf_rho,
    pdf_ri_given_rho,
)
from .montecarlo import (
    EmpiricalCoverage,
    McEstimate,
    NetworkRealization,
    estimate_noma_coverage,
    estimate_oma_coverage,
    sample_realization,
    simulate_links,
)
from .numerics import NumericalFailure, QuadratureSpec, gauss_2f1, integrate

__version__ = "0.1.0"
